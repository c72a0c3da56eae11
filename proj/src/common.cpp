// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "hhm/common.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

namespace hhm {

int worker_count() {
    if (const char* env = std::getenv("HHM_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

namespace {
thread_local bool t_in_parallel = false;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(worker_count()));
    // Nested calls run inline on the calling worker.
    if (workers <= 1 || t_in_parallel) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto body = [&] {
        const bool outer = t_in_parallel;
        t_in_parallel = true;
        struct Restore {
            bool v;
            ~Restore() { t_in_parallel = v; }
        } restore{outer};
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

namespace {

std::mutex& sink_mutex() {
    static std::mutex mu;
    return mu;
}

LogSink& sink() {
    static LogSink s = default_log_sink();
    return s;
}

}  // namespace

LogSink default_log_sink() {
    return [](LogLevel level, const std::string& msg) {
        static const char* names[] = {"debug", "info", "warn", "error"};
        if (level == LogLevel::Debug) return;
        std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << '\n';
    };
}

void set_log_sink(LogSink s) {
    std::lock_guard lock(sink_mutex());
    sink() = std::move(s);
}

void log(LogLevel level, const std::string& msg) {
    std::lock_guard lock(sink_mutex());
    if (sink()) sink()(level, msg);
}

}  // namespace hhm
