#pragma once

#include <charconv>
#include <cstdint>
#include <string>

namespace admitlab {

// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string format_int(std::int64_t v) { return std::to_string(v); }

}  // namespace admitlab
