#pragma once

// Random value and envelope generators for property tests.

#include <random>
#include <string>

#include "fedbed/envelope.hpp"

namespace gen {

using fedbed::Envelope;
using fedbed::FLValue;
using fedbed::MsgType;

inline std::string randomString(std::mt19937_64& rng) {
    static const char* alphabet =
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 _-\"\\\n\t,{}[]:\xc3\xa9";
    std::uniform_int_distribution<size_t> len(0, 12);
    std::uniform_int_distribution<size_t> pick(0, std::char_traits<char>::length(alphabet) - 2);
    std::string s;
    size_t target = len(rng);
    while (s.size() < target) {
        size_t i = pick(rng);
        if ((alphabet[i] & 0x80) != 0) { // keep the two-byte sequence together
            s += '\xc3';
            s += '\xa9';
        } else {
            s += alphabet[i];
        }
    }
    return s;
}

inline FLValue randomValue(std::mt19937_64& rng, int depth = 0) {
    std::uniform_int_distribution<int> kind(0, depth >= 3 ? 4 : 6);
    switch (kind(rng)) {
        case 0: return FLValue();
        case 1: return FLValue(std::uniform_int_distribution<int>(0, 1)(rng) == 1);
        case 2: {
            std::uniform_int_distribution<long long> d(-1'000'000'000'000LL, 1'000'000'000'000LL);
            return FLValue(static_cast<int64_t>(d(rng)));
        }
        case 3: {
            std::uniform_real_distribution<double> d(-1e6, 1e6);
            std::uniform_int_distribution<int> special(0, 9);
            switch (special(rng)) {
                case 0: return FLValue(0.0);
                case 1: return FLValue(-0.0);
                case 2: return FLValue(1e-300);
                case 3: return FLValue(12345678901234568.0);
                default: return FLValue(d(rng));
            }
        }
        case 4: return FLValue(randomString(rng));
        case 5: {
            FLValue arr = FLValue::array();
            std::uniform_int_distribution<size_t> len(0, 4);
            size_t m = len(rng);
            for (size_t i = 0; i < m; ++i) arr.push_back(randomValue(rng, depth + 1));
            return arr;
        }
        default: {
            FLValue obj = FLValue::object();
            std::uniform_int_distribution<size_t> len(0, 4);
            size_t m = len(rng);
            for (size_t i = 0; i < m; ++i) obj[randomString(rng)] = randomValue(rng, depth + 1);
            return obj;
        }
    }
}

inline Envelope randomEnvelope(std::mt19937_64& rng, int noNodes = 8) {
    std::uniform_int_distribution<int> typePick(0, 2);
    std::uniform_int_distribution<int> iter(0, 40);
    std::uniform_int_distribution<int> src(0, noNodes - 1);
    Envelope e;
    switch (typePick(rng)) {
        case 0:
            e.type = MsgType::Hello;
            e.seq = 0;
            e.data = FLValue();
            break;
        case 1:
            e.type = MsgType::CentralData;
            e.seq = 0;
            e.data = randomValue(rng);
            break;
        default:
            e.type = MsgType::Decentral;
            e.seq = std::uniform_int_distribution<int>(1, 2)(rng);
            e.data = randomValue(rng);
            break;
    }
    e.iter = iter(rng);
    e.src = src(rng);
    return e;
}

} // namespace gen
