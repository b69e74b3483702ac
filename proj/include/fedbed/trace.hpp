#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "fedbed/value.hpp"

namespace fedbed {

// One convergence-trace record: a node's local data after an iteration.
struct TraceRow {
    int iter = 0;
    int nodeId = 0;
    FLValue value;
};

using TraceTable = std::vector<TraceRow>;

inline const char* kTraceHeader = "iter,nodeId,value";

// CSV field quoting: quote when the text contains a comma, quote or
// newline; inner quotes are doubled.
std::string csvField(const std::string& text);

// Formats one row; the value uses its canonical text form.
std::string formatTraceRow(const TraceRow& row);

// Streams rows into a trace CSV file, header first.
class TraceWriter {
public:
    explicit TraceWriter(const std::string& path);
    void append(const TraceRow& row);
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
};

// Parses one trace file. Throws TraceFormatError naming the file and line
// on a bad header or malformed row.
TraceTable readTraceFile(const std::string& path);

// Renders a table back to CSV text (single header), e.g. for merged traces.
std::string traceTableCsv(const TraceTable& table);

// Sorts rows by (iter, nodeId); stable for equal keys.
void sortTrace(TraceTable& table);

} // namespace fedbed
