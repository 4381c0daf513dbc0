#pragma once

#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace swag {

inline constexpr const char* kVersion = "1.0.0";

// Error taxonomy. The CLI maps these to exit codes:
// ConfigError -> 2, NumericError -> 3, IoError/ParseError -> 4.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration or API misuse (shape mismatch, unknown name, invalid flag).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Non-finite values, divergence. Message carries the op/tap identity.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

// Filesystem failures (missing file, short write).
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Malformed input bytes. Carries the offset where parsing stopped.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t byte_offset)
        : Error(msg + " (byte " + std::to_string(byte_offset) + ")"), offset(byte_offset) {}
    std::size_t offset;
};

namespace detail {

inline int thread_count() {
    static const int n = [] {
        if (const char* env = std::getenv("SWAG_THREADS")) {
            int v = std::atoi(env);
            if (v >= 1) return v;
        }
        unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1 : static_cast<int>(hw);
    }();
    return n;
}

// Splits [begin, end) into contiguous chunks, one per worker. Each index is
// processed by exactly one worker, so results do not depend on the thread
// count as long as per-index work is independent.
template <typename Fn>
void parallel_for(std::int64_t begin, std::int64_t end, Fn&& fn, std::int64_t serial_grain = 1) {
    const std::int64_t n = end - begin;
    if (n <= 0) return;
    int workers = thread_count();
    if (workers <= 1 || n < serial_grain) {
        fn(begin, end);
        return;
    }
    if (static_cast<std::int64_t>(workers) > n) workers = static_cast<int>(n);
    const std::int64_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers - 1));
    for (int t = 1; t < workers; ++t) {
        const std::int64_t lo = begin + t * chunk;
        if (lo >= end) break;
        const std::int64_t hi = std::min(end, lo + chunk);
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    fn(begin, std::min(end, begin + chunk));
    for (auto& th : pool) th.join();
}

// CRC-32 (IEEE 802.3 polynomial, reflected), as used by PNG and zlib.
inline std::uint32_t crc32_update(std::uint32_t crc, const void* bytes, std::size_t len) {
    static const auto table = [] {
        std::vector<std::uint32_t> t(256);
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    const auto* p = static_cast<const unsigned char*>(bytes);
    crc ^= 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ p[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

inline std::uint32_t crc32(const void* bytes, std::size_t len) {
    return crc32_update(0, bytes, len);
}

}  // namespace detail
}  // namespace swag
