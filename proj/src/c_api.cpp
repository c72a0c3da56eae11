// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "hhm/hhm.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <new>
#include <sstream>
#include <streambuf>

#include "hhm/pipeline.hpp"
#include "json.hpp"

struct hhm_config {
    hhm::PipelineConfig cfg;
};

namespace {

thread_local std::string g_last_error;

hhm_status fail(hhm_status status, const char* what) {
    g_last_error = what;
    return status;
}

template <typename F>
hhm_status guarded(F&& fn) {
    g_last_error.clear();
    try {
        fn();
        return HHM_OK;
    } catch (const hhm::Error& e) {
        return fail(static_cast<hhm_status>(e.kind()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(HHM_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(HHM_ERR_INTERNAL, e.what());
    }
}

/// Forwards stage output to a C callback line by line.
class CallbackBuf : public std::streambuf {
public:
    CallbackBuf(hhm_write_fn fn, void* user) : fn_(fn), user_(user) {}
    ~CallbackBuf() override { flush(); }

protected:
    int_type overflow(int_type ch) override {
        if (ch == traits_type::eof()) return 0;
        buf_.push_back(static_cast<char>(ch));
        if (ch == '\n') flush();
        return ch;
    }
    std::streamsize xsputn(const char* s, std::streamsize n) override {
        for (std::streamsize i = 0; i < n; ++i) overflow(traits_type::to_int_type(s[i]));
        return n;
    }
    int sync() override {
        flush();
        return 0;
    }

private:
    void flush() {
        if (buf_.empty()) return;
        if (fn_) {
            fn_(buf_.c_str(), user_);
        } else {
            std::fputs(buf_.c_str(), stdout);
            std::fflush(stdout);
        }
        buf_.clear();
    }

    hhm_write_fn fn_;
    void* user_;
    std::string buf_;
};

template <typename F>
hhm_status run_stage(const hhm_config* cfg, hhm_write_fn write, void* user, F&& fn) {
    if (!cfg) return fail(HHM_ERR_ARGUMENT, "config is NULL");
    return guarded([&] {
        CallbackBuf buf(write, user);
        std::ostream out(&buf);
        fn(cfg->cfg, out);
        out.flush();
    });
}

}  // namespace

extern "C" {

const char* hhm_version(void) { return "1.0.0"; }

const char* hhm_last_error(void) { return g_last_error.c_str(); }

void hhm_set_log_callback(hhm_log_fn fn, void* user) {
    if (!fn) {
        hhm::set_log_sink(hhm::default_log_sink());
        return;
    }
    hhm::set_log_sink([fn, user](hhm::LogLevel level, const std::string& msg) {
        fn(static_cast<hhm_log_level>(level), msg.c_str(), user);
    });
}

hhm_status hhm_config_new(hhm_config** out) {
    if (!out) return fail(HHM_ERR_ARGUMENT, "out is NULL");
    return guarded([&] { *out = new hhm_config{}; });
}

hhm_status hhm_config_load(const char* path, hhm_config** out) {
    if (!path || !out) return fail(HHM_ERR_ARGUMENT, "path or out is NULL");
    return guarded([&] { *out = new hhm_config{hhm::PipelineConfig::load(path)}; });
}

void hhm_config_free(hhm_config* cfg) { delete cfg; }

hhm_status hhm_config_patch(hhm_config* cfg, const char* json) {
    if (!cfg || !json) return fail(HHM_ERR_ARGUMENT, "config or json is NULL");
    return guarded([&] {
        nlohmann::json base = nlohmann::json::parse(cfg->cfg.to_json());
        nlohmann::json patch;
        try {
            patch = nlohmann::json::parse(json);
        } catch (const std::exception& e) {
            hhm::config_error(std::string("config patch: ") + e.what());
        }
        if (!patch.is_object()) hhm::config_error("config patch must be a JSON object");
        // An explicit net replaces the whole spec.
        if (patch.contains("net")) base.erase("net");
        base.merge_patch(patch);
        cfg->cfg = hhm::PipelineConfig::from_json(base.dump());
    });
}

hhm_status hhm_config_set_seed(hhm_config* cfg, uint64_t seed) {
    if (!cfg) return fail(HHM_ERR_ARGUMENT, "config is NULL");
    cfg->cfg.seed = seed;
    return HHM_OK;
}

hhm_status hhm_config_seed(const hhm_config* cfg, uint64_t* out) {
    if (!cfg || !out) return fail(HHM_ERR_ARGUMENT, "config or out is NULL");
    *out = cfg->cfg.seed;
    return HHM_OK;
}

hhm_status hhm_config_to_json(const hhm_config* cfg, char** out) {
    if (!cfg || !out) return fail(HHM_ERR_ARGUMENT, "config or out is NULL");
    return guarded([&] {
        const std::string s = cfg->cfg.to_json();
        char* p = static_cast<char*>(std::malloc(s.size() + 1));
        if (!p) throw std::bad_alloc();
        std::memcpy(p, s.c_str(), s.size() + 1);
        *out = p;
    });
}

void hhm_string_free(char* s) { std::free(s); }

hhm_status hhm_run_gen(const hhm_config* cfg, int force, hhm_write_fn write, void* user) {
    return run_stage(cfg, write, user, [&](const auto& c, std::ostream& out) { hhm::run_gen(c, force != 0, out); });
}

hhm_status hhm_run_prepare(const hhm_config* cfg, hhm_write_fn write, void* user) {
    return run_stage(cfg, write, user, [](const auto& c, std::ostream& out) { hhm::run_prepare(c, out); });
}

hhm_status hhm_run_flow(const hhm_config* cfg, hhm_write_fn write, void* user) {
    return run_stage(cfg, write, user, [](const auto& c, std::ostream& out) { hhm::run_flow(c, out); });
}

hhm_status hhm_run_train(const hhm_config* cfg, hhm_stream stream, hhm_write_fn write, void* user) {
    if (stream != HHM_STREAM_RGB && stream != HHM_STREAM_FLOW) return fail(HHM_ERR_ARGUMENT, "unknown stream");
    const hhm::Stream s = stream == HHM_STREAM_RGB ? hhm::Stream::Rgb : hhm::Stream::Flow;
    return run_stage(cfg, write, user, [&](const auto& c, std::ostream& out) { hhm::run_train(c, s, out); });
}

hhm_status hhm_run_eval(const hhm_config* cfg, hhm_write_fn write, void* user) {
    return run_stage(cfg, write, user, [](const auto& c, std::ostream& out) { hhm::run_eval(c, out); });
}

hhm_status hhm_run_infer(const hhm_config* cfg, const char* clip_dir, int start, double* score, int* label,
                         hhm_write_fn write, void* user) {
    if (!clip_dir) return fail(HHM_ERR_ARGUMENT, "clip_dir is NULL");
    return run_stage(cfg, write, user, [&](const auto& c, std::ostream& out) {
        const hhm::InferResult r = hhm::run_infer(c, clip_dir, start, out);
        if (score) *score = r.score;
        if (label) *label = r.label;
    });
}

}  // extern "C"
