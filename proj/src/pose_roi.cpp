// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "hhm/pose_roi.hpp"

#include <fmt/core.h>

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace hhm {

namespace {

bool parse_double(const std::string& tok, double& out) {
    const char* end = tok.data() + tok.size();
    auto [p, ec] = std::from_chars(tok.data(), end, out);
    return ec == std::errc() && p == end;
}

}  // namespace

std::vector<PoseFrame> load_poses(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) data_error(fmt::format("cannot open keypoint file {}", path.string()));
    std::map<int, PoseFrame> frames;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::vector<std::string> toks;
        for (std::string t; ss >> t;) toks.push_back(t);
        if (toks.empty() || toks[0][0] == '#') continue;
        std::vector<double> vals(toks.size());
        for (std::size_t i = 0; i < toks.size(); ++i)
            if (!parse_double(toks[i], vals[i]))
                data_error(fmt::format("{}:{}: malformed value '{}'", path.string(), line_no, toks[i]));
        if (toks.size() < 2) data_error(fmt::format("{}:{}: malformed line", path.string(), line_no));
        const int frame_index = static_cast<int>(vals[0]);
        if (static_cast<double>(frame_index) != vals[0] || frame_index < 0)
            data_error(fmt::format("{}:{}: frame index must be a non-negative integer", path.string(), line_no));
        const std::size_t n_vals = toks.size() - 2;
        if (n_vals != 3 * kNumJoints) {
            if (n_vals % 3 == 0)
                data_error(fmt::format("{}:{}: frame {} lists {} joints, expected {}", path.string(), line_no,
                                       frame_index, n_vals / 3, kNumJoints));
            data_error(fmt::format("{}:{}: frame {} has {} joint values, expected {}", path.string(), line_no,
                                   frame_index, n_vals, 3 * kNumJoints));
        }
        PersonPose person;
        person.hint = static_cast<int>(vals[1]);
        for (int j = 0; j < kNumJoints; ++j) {
            Keypoint& k = person.joints[j];
            k.x = vals[2 + 3 * j];
            k.y = vals[3 + 3 * j];
            k.confidence = vals[4 + 3 * j];
            if (!(k.confidence >= 0.0 && k.confidence <= 1.0))
                data_error(fmt::format("{}:{}: joint {} confidence {} outside [0,1]", path.string(), line_no, j,
                                       k.confidence));
        }
        PoseFrame& pf = frames[frame_index];
        pf.frame_index = frame_index;
        pf.persons.push_back(person);
    }
    std::vector<PoseFrame> out;
    out.reserve(frames.size());
    for (auto& [idx, pf] : frames) out.push_back(std::move(pf));
    return out;
}

void save_poses(const std::vector<PoseFrame>& frames, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) data_error(fmt::format("cannot write keypoint file {}", path.string()));
    for (const PoseFrame& pf : frames) {
        for (const PersonPose& p : pf.persons) {
            std::string line = fmt::format("{} {}", pf.frame_index, p.hint);
            for (const Keypoint& k : p.joints) line += fmt::format(" {} {} {}", k.x, k.y, k.confidence);
            out << line << '\n';
        }
    }
    if (!out) data_error(fmt::format("write failed: {}", path.string()));
}

std::optional<BBox> upper_body_roi_unclamped(const Skeleton& joints, const RoiParams& params) {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
    int used = 0;
    for (int j : kArmJoints) {
        const Keypoint& k = joints[j];
        if (k.confidence < params.min_confidence || k.confidence <= 0.0) continue;
        if (used == 0) {
            x1 = x2 = k.x;
            y1 = y2 = k.y;
        } else {
            x1 = std::min(x1, k.x);
            x2 = std::max(x2, k.x);
            y1 = std::min(y1, k.y);
            y2 = std::max(y2, k.y);
        }
        ++used;
    }
    if (used == 0 || used < params.min_joints) return std::nullopt;
    const double mx = params.margin_frac * (x2 - x1);
    const double my = params.margin_frac * (y2 - y1);
    return BBox{x1 - mx, y1 - my, x2 + mx, y2 + my};
}

std::optional<BBox> upper_body_roi(const Skeleton& joints, const RoiParams& params, int frame_w, int frame_h) {
    auto box = upper_body_roi_unclamped(joints, params);
    if (!box) return std::nullopt;
    BBox b{std::clamp(box->x1, 0.0, double(frame_w)), std::clamp(box->y1, 0.0, double(frame_h)),
           std::clamp(box->x2, 0.0, double(frame_w)), std::clamp(box->y2, 0.0, double(frame_h))};
    if (!b.valid()) return std::nullopt;
    return b;
}

}  // namespace hhm
