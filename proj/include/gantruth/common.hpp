#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gantruth {

// All recoverable failures surface as gantruth::Error. The CLI maps
// UsageError to exit code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& msg) : Error(msg) {}
};

// Non-finite or out-of-range values inside a loss evaluation. Trainers
// convert this into an abort that names the offending term.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

namespace detail {
inline void format_into(std::ostringstream&) {}
template <typename A, typename... Rest>
void format_into(std::ostringstream& os, const A& a, const Rest&... rest) {
    os << a;
    format_into(os, rest...);
}
} // namespace detail

template <typename... Args>
std::string cat(const Args&... args) {
    std::ostringstream os;
    detail::format_into(os, args...);
    return os.str();
}

template <typename... Args>
[[noreturn]] void fail(const Args&... args) {
    throw Error(cat(args...));
}

#define GT_REQUIRE(cond, ...)                        \
    do {                                             \
        if (!(cond)) ::gantruth::fail(__VA_ARGS__);  \
    } while (0)

// FNV-1a, used for dataset/checkpoint provenance hashes and parameter
// checksums. Stability across runs matters here, cryptography does not.
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const uint8_t*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t fnv1a64(const std::vector<uint8_t>& v) { return fnv1a64(v.data(), v.size()); }

inline std::string hex64(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[size_t(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

} // namespace gantruth
