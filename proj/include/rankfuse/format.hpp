#pragma once

#include <cstdio>
#include <string>

namespace rankfuse {

// Round-trip-exact rendering used in every machine-readable artifact:
// 17 significant digits recover the exact double on re-parse.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string format_fixed(double x, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, x);
    return buf;
}

// Shortest form for labels and map keys (alpha levels, C values).
inline std::string format_short(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", x);
    return buf;
}

}  // namespace rankfuse
