#pragma once

#include <charconv>
#include <string>

namespace liberation {

// Decimal with 17 significant digits: round-trips any finite double.
inline std::string fmt17(double x) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

}  // namespace liberation
