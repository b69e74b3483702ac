#pragma once

#include <string>
#include <string_view>

#include "fedbed/value.hpp"

namespace fedbed {

enum class MsgType { Hello, CentralData, Decentral };

std::string_view msgTypeName(MsgType t);

// The wire message. seq is 0 for Hello and CentralData; 1 (phase-1 local
// data) or 2 (phase-2 reply) for Decentral. iter is the sender's iteration
// counter, 0 during the startup handshake.
struct Envelope {
    MsgType type = MsgType::Hello;
    int seq = 0;
    int iter = 0;
    int src = 0;
    FLValue data;
};

bool operator==(const Envelope& a, const Envelope& b);

// Checks the envelope invariants (seq/type pairing, non-negative iter,
// src range when noNodes is known). Throws ProtocolError on violation.
void validateEnvelope(const Envelope& e, int noNodes = -1);

// Canonical body text: {"type":T,"seq":S,"iter":I,"src":R,"data":D},
// exactly those keys in that order, no whitespace.
std::string encodeBody(const Envelope& e);

// Full frame: 4-byte big-endian body length, then the body bytes.
// Throws EncodeError (non-finite floats, oversized body) and
// ProtocolError (invariant violations).
std::string encode(const Envelope& e);

// Decodes a body without its frame header.
Envelope decodeBody(std::string_view body, int noNodes = -1);

// Inverse of encode on complete frames. Throws FrameError on length
// problems, DecodeError on malformed text or wrong field types, and
// ProtocolError on envelope-invariant violations.
Envelope decode(std::string_view frame, int noNodes = -1);

} // namespace fedbed
