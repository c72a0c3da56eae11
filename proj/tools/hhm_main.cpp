// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//
// hhm: command-line driver for the hand-hygiene action pipeline.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hhm/hhm.h"

namespace {

constexpr int kUsageExit = HHM_ERR_CONFIG;

int report(hhm_status st) {
    if (st != HHM_OK) std::fprintf(stderr, "hhm: error: %s\n", hhm_last_error());
    return static_cast<int>(st);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hand-hygiene action recognition pipeline", "hhm"};
    app.set_version_flag("--version", std::string(hhm_version()));

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string set_json;
    bool print_config = false;
    app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Global seed (overrides the config)");
    app.add_option("--set", set_json, "JSON object merged over the configuration");
    app.add_flag("--print-config", print_config, "Print the resolved configuration");

    bool force = false;
    auto* gen = app.add_subcommand("gen", "Generate the synthetic dataset");
    gen->add_flag("--force", force, "Overwrite a non-empty dataset directory");
    auto* prepare = app.add_subcommand("prepare", "Extract ROIs, link, smooth, window and split");
    auto* flow = app.add_subcommand("flow", "Compute TV-L1 optical flow for prepared clips");
    std::string stream = "rgb";
    auto* train = app.add_subcommand("train", "Pretrain, inflate and fine-tune one stream");
    train->add_option("--stream", stream, "rgb or flow")->check(CLI::IsMember({"rgb", "flow"}))->required();
    auto* eval = app.add_subcommand("eval", "Evaluate checkpoints on the test split");
    std::string clip_dir;
    int start = 0;
    auto* infer = app.add_subcommand("infer", "Score one 16-frame window of a frame directory");
    infer->add_option("clip_dir", clip_dir, "Frame directory")->required()->check(CLI::ExistingDirectory);
    infer->add_option("--start", start, "First frame of the window")->check(CLI::NonNegativeNumber);
    app.require_subcommand(0, 1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageExit;
    }
    if (app.get_subcommands().empty() && !print_config) {
        std::fputs(app.help().c_str(), stderr);
        return kUsageExit;
    }

    hhm_config* cfg = nullptr;
    hhm_status st = config_path.empty() ? hhm_config_new(&cfg) : hhm_config_load(config_path.c_str(), &cfg);
    if (st != HHM_OK) return report(st);
    struct Free {
        hhm_config* c;
        ~Free() { hhm_config_free(c); }
    } guard{cfg};
    if (!set_json.empty() && (st = hhm_config_patch(cfg, set_json.c_str())) != HHM_OK) return report(st);
    if (seed) hhm_config_set_seed(cfg, *seed);

    if (print_config) {
        char* text = nullptr;
        if ((st = hhm_config_to_json(cfg, &text)) != HHM_OK) return report(st);
        std::printf("%s\n", text);
        hhm_string_free(text);
        if (app.get_subcommands().empty()) return 0;
    }

    if (*gen) return report(hhm_run_gen(cfg, force ? 1 : 0, nullptr, nullptr));
    if (*prepare) return report(hhm_run_prepare(cfg, nullptr, nullptr));
    if (*flow) return report(hhm_run_flow(cfg, nullptr, nullptr));
    if (*train) return report(hhm_run_train(cfg, stream == "flow" ? HHM_STREAM_FLOW : HHM_STREAM_RGB, nullptr, nullptr));
    if (*eval) return report(hhm_run_eval(cfg, nullptr, nullptr));
    if (*infer) return report(hhm_run_infer(cfg, clip_dir.c_str(), start, nullptr, nullptr, nullptr, nullptr));
    return 0;
}
