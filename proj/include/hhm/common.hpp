// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hhm {

/// Failure categories. The CLI maps them onto distinct exit codes.
enum class ErrorKind {
    Config = 2,
    Data = 3,
    Model = 4,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void config_error(const std::string& msg) { throw Error(ErrorKind::Config, msg); }
[[noreturn]] inline void data_error(const std::string& msg) { throw Error(ErrorKind::Data, msg); }
[[noreturn]] inline void model_error(const std::string& msg) { throw Error(ErrorKind::Model, msg); }

/// Axis-aligned box in pixel coordinates, half-open on the right/bottom edge.
struct BBox {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
    bool valid() const { return x2 > x1 && y2 > y1; }
    double cx() const { return 0.5 * (x1 + x2); }
    double cy() const { return 0.5 * (y1 + y2); }

    friend bool operator==(const BBox&, const BBox&) = default;
};

/// splitmix64 step; used to derive independent seeds from a root seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) { return mix_seed(mix_seed(a) ^ (b * 0xd1342543de82ef95ULL)); }

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Number of worker threads used by parallel_for. Honors HHM_THREADS.
int worker_count();

/// Runs fn(i) for i in [0, n) across worker threads. Each index is visited
/// exactly once; callers write results into per-index slots so the outcome
/// does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Leveled logging routed through a replaceable sink (the C API installs one).
enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3 };
using LogSink = std::function<void(LogLevel, const std::string&)>;
void set_log_sink(LogSink sink);
/// Writes info and above to stderr.
LogSink default_log_sink();
void log(LogLevel level, const std::string& msg);

}  // namespace hhm
