#pragma once

#include <charconv>
#include <cstdio>
#include <string>
#include <system_error>

namespace lsm::detail {

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline bool parse_double(const std::string& tok, double& out) {
    const char* begin = tok.c_str();
    const char* end = begin + tok.size();
    auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end;
}

inline bool parse_int(const std::string& tok, long& out) {
    const char* begin = tok.c_str();
    const char* end = begin + tok.size();
    if (begin != end && *begin == '+') ++begin; // from_chars rejects leading '+'
    auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end && begin != end;
}

} // namespace lsm::detail
