#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

namespace poolcore {

/// Shortest text that parses back to the same double.
inline std::string format_shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// printf-style %.{digits}g; non-finite values print as inf, -inf, nan.
inline std::string format_sig(double v, int digits = 17) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

}  // namespace poolcore
