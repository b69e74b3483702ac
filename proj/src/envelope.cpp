#include "fedbed/envelope.hpp"

#include <cstdint>
#include <limits>

namespace fedbed {

namespace {

constexpr size_t kMaxBody = 0x7fffffff;

bool seqMatchesType(MsgType t, int seq) {
    if (t == MsgType::Decentral) return seq == 1 || seq == 2;
    return seq == 0;
}

MsgType parseTypeName(const std::string& name) {
    if (name == "HELLO") return MsgType::Hello;
    if (name == "CENTRAL_DATA") return MsgType::CentralData;
    if (name == "DECENTRAL") return MsgType::Decentral;
    throw DecodeError("unknown message type \"" + name + "\"");
}

int intField(const FLValue& obj, const char* key) {
    const auto& v = obj.at(key);
    if (!(v.is_number_integer() || v.is_number_unsigned()) || v.is_boolean())
        throw DecodeError(std::string("field \"") + key + "\" must be an integer");
    int64_t n = v.is_number_unsigned() ? static_cast<int64_t>(v.get<uint64_t>())
                                       : v.get<int64_t>();
    if (n < std::numeric_limits<int>::min() || n > std::numeric_limits<int>::max())
        throw DecodeError(std::string("field \"") + key + "\" out of range");
    return static_cast<int>(n);
}

} // namespace

std::string_view msgTypeName(MsgType t) {
    switch (t) {
        case MsgType::Hello: return "HELLO";
        case MsgType::CentralData: return "CENTRAL_DATA";
        case MsgType::Decentral: return "DECENTRAL";
    }
    return "HELLO";
}

bool operator==(const Envelope& a, const Envelope& b) {
    return a.type == b.type && a.seq == b.seq && a.iter == b.iter &&
           a.src == b.src && strictEqual(a.data, b.data);
}

void validateEnvelope(const Envelope& e, int noNodes) {
    if (e.seq < 0 || e.seq > 2)
        throw ProtocolError("seq must be 0, 1 or 2");
    if (!seqMatchesType(e.type, e.seq))
        throw ProtocolError("seq " + std::to_string(e.seq) + " is invalid for type " +
                            std::string(msgTypeName(e.type)));
    if (e.iter < 0)
        throw ProtocolError("iter must be non-negative");
    if (e.src < 0)
        throw ProtocolError("src must be non-negative");
    if (noNodes > 0 && e.src >= noNodes)
        throw ProtocolError("src " + std::to_string(e.src) + " out of range for " +
                            std::to_string(noNodes) + " nodes");
}

std::string encodeBody(const Envelope& e) {
    validateEnvelope(e);
    std::string out;
    out += "{\"type\":\"";
    out += msgTypeName(e.type);
    out += "\",\"seq\":";
    out += std::to_string(e.seq);
    out += ",\"iter\":";
    out += std::to_string(e.iter);
    out += ",\"src\":";
    out += std::to_string(e.src);
    out += ",\"data\":";
    appendCanonicalText(out, e.data);
    out += '}';
    return out;
}

std::string encode(const Envelope& e) {
    std::string body = encodeBody(e);
    if (body.size() > kMaxBody)
        throw EncodeError("message body exceeds the frame size limit");
    uint32_t n = static_cast<uint32_t>(body.size());
    std::string frame;
    frame.reserve(4 + body.size());
    frame += static_cast<char>((n >> 24) & 0xff);
    frame += static_cast<char>((n >> 16) & 0xff);
    frame += static_cast<char>((n >> 8) & 0xff);
    frame += static_cast<char>(n & 0xff);
    frame += body;
    return frame;
}

Envelope decodeBody(std::string_view body, int noNodes) {
    FLValue obj = parseValue(body);
    if (!obj.is_object())
        throw DecodeError("message body is not a map");
    static const char* kKeys[] = {"type", "seq", "iter", "src", "data"};
    if (obj.size() != 5)
        throw DecodeError("message body must have exactly 5 fields");
    for (const char* key : kKeys)
        if (!obj.contains(key))
            throw DecodeError(std::string("missing field \"") + key + "\"");
    if (!obj.at("type").is_string())
        throw DecodeError("field \"type\" must be a string");

    Envelope e;
    e.type = parseTypeName(obj.at("type").get<std::string>());
    e.seq = intField(obj, "seq");
    e.iter = intField(obj, "iter");
    e.src = intField(obj, "src");
    e.data = std::move(obj.at("data"));
    validateEnvelope(e, noNodes);
    return e;
}

Envelope decode(std::string_view frame, int noNodes) {
    if (frame.size() < 4)
        throw FrameError("frame shorter than the 4-byte length header");
    uint32_t n = (static_cast<uint32_t>(static_cast<unsigned char>(frame[0])) << 24) |
                 (static_cast<uint32_t>(static_cast<unsigned char>(frame[1])) << 16) |
                 (static_cast<uint32_t>(static_cast<unsigned char>(frame[2])) << 8) |
                 static_cast<uint32_t>(static_cast<unsigned char>(frame[3]));
    if (n > kMaxBody)
        throw FrameError("declared body length exceeds the frame size limit");
    if (frame.size() - 4 < n)
        throw FrameError("truncated frame: body shorter than declared");
    if (frame.size() - 4 > n)
        throw FrameError("trailing bytes after the declared body");
    return decodeBody(frame.substr(4), noNodes);
}

} // namespace fedbed
