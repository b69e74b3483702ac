#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "fedbed/errors.hpp"

namespace fedbed {

// Application datum exchanged between nodes: a tree of null / bool /
// 64-bit signed integer / finite 64-bit float / UTF-8 string / list / map.
// Integers and floats are distinct kinds and stay distinct on the wire.
using FLValue = nlohmann::json;

// Serializes a value to its canonical text form: map keys in lexicographic
// byte order, no insignificant whitespace, floats in the shortest
// round-tripping form always containing '.' or 'e', strings with minimal
// escaping (only '"', '\' and control characters).
// Throws EncodeError for values outside the model (non-finite floats,
// integers beyond int64, invalid UTF-8, binary blobs).
std::string canonicalText(const FLValue& v);

// Appends the canonical form of v to out. Same error contract.
void appendCanonicalText(std::string& out, const FLValue& v);

// Parses a value from text and normalizes it into the model
// (non-negative integers become signed). Throws DecodeError on malformed
// text or on numbers outside the model.
FLValue parseValue(std::string_view text);

// Validates that v lies within the value model; throws EncodeError if not.
void requireEncodable(const FLValue& v);

// Kind-strict deep equality: an integer never equals a float even when
// numerically equal. Both arguments must be encodable.
bool strictEqual(const FLValue& a, const FLValue& b);

} // namespace fedbed
