#include "fedbed/value.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>

namespace fedbed {

namespace {

bool validUtf8(std::string_view s) {
    size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        size_t len;
        uint32_t cp;
        if (c < 0x80) { i += 1; continue; }
        else if ((c & 0xe0) == 0xc0) { len = 2; cp = c & 0x1f; }
        else if ((c & 0xf0) == 0xe0) { len = 3; cp = c & 0x0f; }
        else if ((c & 0xf8) == 0xf0) { len = 4; cp = c & 0x07; }
        else return false;
        if (i + len > s.size()) return false;
        for (size_t k = 1; k < len; ++k) {
            unsigned char cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xc0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3f);
        }
        // overlong forms, surrogates and out-of-range code points
        if (len == 2 && cp < 0x80) return false;
        if (len == 3 && (cp < 0x800 || (cp >= 0xd800 && cp <= 0xdfff))) return false;
        if (len == 4 && (cp < 0x10000 || cp > 0x10ffff)) return false;
        i += len;
    }
    return true;
}

void appendEscaped(std::string& out, std::string_view s) {
    if (!validUtf8(s)) throw EncodeError("string is not valid UTF-8");
    out += '"';
    for (char ch : s) {
        unsigned char c = static_cast<unsigned char>(ch);
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\b': out += "\\b"; break;
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            case '\f': out += "\\f"; break;
            case '\r': out += "\\r"; break;
            default:
                if (c < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += ch;
                }
        }
    }
    out += '"';
}

void appendInt(std::string& out, int64_t v) {
    char buf[24];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

void appendFloat(std::string& out, double v) {
    if (!std::isfinite(v)) throw EncodeError("non-finite float cannot be encoded");
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string_view text(buf, static_cast<size_t>(res.ptr - buf));
    out += text;
    if (text.find('.') == std::string_view::npos &&
        text.find('e') == std::string_view::npos) {
        out += ".0"; // keep the float kind visible on the wire
    }
}

int64_t checkedInt(const FLValue& v) {
    if (v.is_number_unsigned()) {
        uint64_t u = v.get<uint64_t>();
        if (u > static_cast<uint64_t>(std::numeric_limits<int64_t>::max()))
            throw EncodeError("integer exceeds the 64-bit signed range");
        return static_cast<int64_t>(u);
    }
    return v.get<int64_t>();
}

void walkEncodable(const FLValue& v) {
    switch (v.type()) {
        case FLValue::value_t::null:
        case FLValue::value_t::boolean:
            return;
        case FLValue::value_t::number_integer:
            return;
        case FLValue::value_t::number_unsigned:
            checkedInt(v);
            return;
        case FLValue::value_t::number_float:
            if (!std::isfinite(v.get<double>()))
                throw EncodeError("non-finite float cannot be encoded");
            return;
        case FLValue::value_t::string:
            if (!validUtf8(v.get_ref<const std::string&>()))
                throw EncodeError("string is not valid UTF-8");
            return;
        case FLValue::value_t::array:
            for (const auto& item : v) walkEncodable(item);
            return;
        case FLValue::value_t::object:
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (!validUtf8(it.key()))
                    throw EncodeError("map key is not valid UTF-8");
                walkEncodable(it.value());
            }
            return;
        default:
            throw EncodeError("value kind outside the data model");
    }
}

// Converts unsigned numbers into the signed kind so parsed values compare
// kind-strictly with constructed ones. Rejects numbers outside the model.
void normalizeDecoded(FLValue& v) {
    switch (v.type()) {
        case FLValue::value_t::number_unsigned: {
            uint64_t u = v.get<uint64_t>();
            if (u > static_cast<uint64_t>(std::numeric_limits<int64_t>::max()))
                throw DecodeError("integer exceeds the 64-bit signed range");
            v = static_cast<int64_t>(u);
            return;
        }
        case FLValue::value_t::number_float:
            if (!std::isfinite(v.get<double>()))
                throw DecodeError("non-finite float in input");
            return;
        case FLValue::value_t::array:
            for (auto& item : v) normalizeDecoded(item);
            return;
        case FLValue::value_t::object:
            for (auto& [key, item] : v.items()) { (void)key; normalizeDecoded(item); }
            return;
        case FLValue::value_t::null:
        case FLValue::value_t::boolean:
        case FLValue::value_t::number_integer:
        case FLValue::value_t::string:
            return;
        default:
            throw DecodeError("value kind outside the data model");
    }
}

FLValue::value_t kindOf(const FLValue& v) {
    auto t = v.type();
    if (t == FLValue::value_t::number_unsigned) return FLValue::value_t::number_integer;
    return t;
}

} // namespace

void appendCanonicalText(std::string& out, const FLValue& v) {
    switch (v.type()) {
        case FLValue::value_t::null:
            out += "null";
            return;
        case FLValue::value_t::boolean:
            out += v.get<bool>() ? "true" : "false";
            return;
        case FLValue::value_t::number_integer:
        case FLValue::value_t::number_unsigned:
            appendInt(out, checkedInt(v));
            return;
        case FLValue::value_t::number_float:
            appendFloat(out, v.get<double>());
            return;
        case FLValue::value_t::string:
            appendEscaped(out, v.get_ref<const std::string&>());
            return;
        case FLValue::value_t::array: {
            out += '[';
            bool first = true;
            for (const auto& item : v) {
                if (!first) out += ',';
                first = false;
                appendCanonicalText(out, item);
            }
            out += ']';
            return;
        }
        case FLValue::value_t::object: {
            // nlohmann objects iterate in lexicographic key order already
            out += '{';
            bool first = true;
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (!first) out += ',';
                first = false;
                appendEscaped(out, it.key());
                out += ':';
                appendCanonicalText(out, it.value());
            }
            out += '}';
            return;
        }
        default:
            throw EncodeError("value kind outside the data model");
    }
}

std::string canonicalText(const FLValue& v) {
    std::string out;
    appendCanonicalText(out, v);
    return out;
}

FLValue parseValue(std::string_view text) {
    FLValue v;
    try {
        v = FLValue::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError(std::string("malformed value text: ") + e.what());
    }
    normalizeDecoded(v);
    return v;
}

void requireEncodable(const FLValue& v) {
    walkEncodable(v);
}

bool strictEqual(const FLValue& a, const FLValue& b) {
    if (kindOf(a) != kindOf(b)) return false;
    switch (kindOf(a)) {
        case FLValue::value_t::array: {
            if (a.size() != b.size()) return false;
            for (size_t i = 0; i < a.size(); ++i)
                if (!strictEqual(a[i], b[i])) return false;
            return true;
        }
        case FLValue::value_t::object: {
            if (a.size() != b.size()) return false;
            auto ia = a.begin();
            auto ib = b.begin();
            for (; ia != a.end(); ++ia, ++ib) {
                if (ia.key() != ib.key()) return false;
                if (!strictEqual(ia.value(), ib.value())) return false;
            }
            return true;
        }
        default:
            return a == b;
    }
}

} // namespace fedbed
