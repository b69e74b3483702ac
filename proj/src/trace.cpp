#include "fedbed/trace.hpp"

#include <algorithm>
#include <charconv>

namespace fedbed {

namespace {

bool needsQuoting(const std::string& text) {
    return text.find_first_of(",\"\n\r") != std::string::npos;
}

// Splits one CSV line into fields, honoring quoted fields with doubled
// inner quotes. Returns false on a malformed line.
bool splitCsvLine(const std::string& line, std::vector<std::string>& fields) {
    fields.clear();
    std::string cur;
    bool inQuotes = false;
    size_t i = 0;
    while (i < line.size()) {
        char c = line[i];
        if (inQuotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    i += 2;
                    continue;
                }
                inQuotes = false;
                ++i;
                continue;
            }
            cur += c;
            ++i;
        } else if (c == '"') {
            if (!cur.empty()) return false; // quote inside an unquoted field
            inQuotes = true;
            ++i;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
            ++i;
        } else {
            cur += c;
            ++i;
        }
    }
    if (inQuotes) return false;
    fields.push_back(cur);
    return true;
}

int parseIntField(const std::string& text, bool& ok) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    ok = ec == std::errc() && ptr == text.data() + text.size();
    return value;
}

} // namespace

std::string csvField(const std::string& text) {
    if (!needsQuoting(text)) return text;
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::string formatTraceRow(const TraceRow& row) {
    return std::to_string(row.iter) + "," + std::to_string(row.nodeId) + "," +
           csvField(canonicalText(row.value));
}

TraceWriter::TraceWriter(const std::string& path) : path_(path), out_(path, std::ios::trunc) {
    if (!out_) throw TraceFormatError("cannot open trace file " + path + " for writing");
    out_ << kTraceHeader << '\n';
    out_.flush();
}

void TraceWriter::append(const TraceRow& row) {
    out_ << formatTraceRow(row) << '\n';
    out_.flush();
}

TraceTable readTraceFile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TraceFormatError("cannot open trace file " + path);

    TraceTable rows;
    std::string line;
    int lineNo = 0;
    std::vector<std::string> fields;
    while (std::getline(in, line)) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineNo == 1) {
            if (line != kTraceHeader)
                throw TraceFormatError(path + ":1: expected header \"" +
                                       std::string(kTraceHeader) + "\"");
            continue;
        }
        if (line.empty()) continue;
        std::string where = path + ":" + std::to_string(lineNo);
        if (!splitCsvLine(line, fields) || fields.size() != 3)
            throw TraceFormatError(where + ": malformed row");
        TraceRow row;
        bool ok = false;
        row.iter = parseIntField(fields[0], ok);
        if (!ok) throw TraceFormatError(where + ": non-numeric iter \"" + fields[0] + "\"");
        row.nodeId = parseIntField(fields[1], ok);
        if (!ok) throw TraceFormatError(where + ": non-numeric nodeId \"" + fields[1] + "\"");
        try {
            row.value = parseValue(fields[2]);
        } catch (const DecodeError& e) {
            throw TraceFormatError(where + ": bad value field: " + e.what());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string traceTableCsv(const TraceTable& table) {
    std::string out = kTraceHeader;
    out += '\n';
    for (const auto& row : table) {
        out += formatTraceRow(row);
        out += '\n';
    }
    return out;
}

void sortTrace(TraceTable& table) {
    std::stable_sort(table.begin(), table.end(), [](const TraceRow& a, const TraceRow& b) {
        if (a.iter != b.iter) return a.iter < b.iter;
        return a.nodeId < b.nodeId;
    });
}

} // namespace fedbed
