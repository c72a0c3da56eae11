// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "hhm/linker.hpp"

#include <fmt/core.h>

#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

namespace hhm {

namespace {

const TrackEntry* find_entry(const std::vector<TrackEntry>& v, int frame_index) {
    auto it = std::lower_bound(v.begin(), v.end(), frame_index,
                               [](const TrackEntry& e, int f) { return e.frame_index < f; });
    if (it == v.end() || it->frame_index != frame_index) return nullptr;
    return &*it;
}

void sort_entries(Track& t) {
    std::sort(t.entries.begin(), t.entries.end(),
              [](const TrackEntry& a, const TrackEntry& b) { return a.frame_index < b.frame_index; });
}

}  // namespace

const BBox* Track::smoothed_at(int frame_index) const {
    const TrackEntry* e = find_entry(smoothed, frame_index);
    return e ? &e->box : nullptr;
}

const BBox* Track::raw_at(int frame_index) const {
    const TrackEntry* e = find_entry(entries, frame_index);
    return e ? &e->box : nullptr;
}

void Track::validate() const {
    for (std::size_t i = 1; i < entries.size(); ++i)
        if (entries[i].frame_index <= entries[i - 1].frame_index)
            data_error(fmt::format("track {}: frame {} appears out of order or twice", track_id,
                                   entries[i].frame_index));
    if (smoothed.size() != entries.size())
        data_error(fmt::format("track {}: smoothed list has {} entries, raw has {}", track_id, smoothed.size(),
                               entries.size()));
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (smoothed[i].frame_index != entries[i].frame_index)
            data_error(fmt::format("track {}: smoothed entry {} is misaligned", track_id, i));
}

double iou(const BBox& a, const BBox& b) {
    const double ix = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double iy = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    if (ix <= 0 || iy <= 0) return 0.0;
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return uni > 0 ? inter / uni : 0.0;
}

std::vector<int> link_step(LinkState& state, std::span<const BBox> detections, int frame_index,
                           const LinkParams& params) {
    if (!(params.tau_new >= 0.0 && params.tau_new <= 1.0)) config_error("link_step: tau_new must lie in [0,1]");
    state.closed.resize(state.tracks.size(), false);

    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < state.tracks.size(); ++i) {
        if (state.closed[i]) continue;
        if (frame_index - state.tracks[i].last_frame() > params.max_gap) {
            state.closed[i] = true;
            continue;
        }
        open.push_back(i);
    }

    struct Pair {
        double score;
        int track_id;
        std::size_t track_pos;
        std::size_t det;
    };
    std::vector<Pair> pairs;
    for (std::size_t ti : open) {
        const Track& t = state.tracks[ti];
        if (t.last_frame() >= frame_index) continue;
        const BBox& last = t.entries.back().box;
        for (std::size_t d = 0; d < detections.size(); ++d) {
            double s = iou(last, detections[d]);
            if (s >= params.tau_new && s > 0.0) pairs.push_back({s, t.track_id, ti, d});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        return std::tie(b.score, a.track_id, a.det) < std::tie(a.score, b.track_id, b.det);
    });

    std::vector<int> assigned(detections.size(), -1);
    std::vector<bool> track_used(state.tracks.size(), false);
    for (const Pair& p : pairs) {
        if (assigned[p.det] >= 0 || track_used[p.track_pos]) continue;
        assigned[p.det] = p.track_id;
        track_used[p.track_pos] = true;
        state.tracks[p.track_pos].entries.push_back({frame_index, detections[p.det]});
        state.tracks[p.track_pos].smoothed.push_back({frame_index, detections[p.det]});
    }
    for (std::size_t d = 0; d < detections.size(); ++d) {
        if (assigned[d] >= 0) continue;
        Track t;
        t.track_id = state.next_id++;
        t.entries.push_back({frame_index, detections[d]});
        t.smoothed = t.entries;
        state.tracks.push_back(std::move(t));
        state.closed.push_back(false);
        assigned[d] = state.tracks.back().track_id;
    }
    return assigned;
}

std::vector<Track> link_poses(const std::vector<PoseFrame>& poses, const RoiParams& roi, const LinkParams& link,
                              int frame_w, int frame_h) {
    LinkState state;
    for (const PoseFrame& pf : poses) {
        std::vector<BBox> dets;
        for (const PersonPose& p : pf.persons)
            if (auto b = upper_body_roi(p.joints, roi, frame_w, frame_h)) dets.push_back(*b);
        link_step(state, dets, pf.frame_index, link);
    }
    return std::move(state.tracks);
}

Track smooth_track(const Track& track, int window) {
    if (window < 1) config_error("smoothing window must be >= 1");
    if (track.entries.empty()) data_error(fmt::format("track {} is empty", track.track_id));
    Track out;
    out.track_id = track.track_id;
    out.entries = track.entries;
    out.smoothed.resize(track.entries.size());
    for (std::size_t n = 0; n < track.entries.size(); ++n) {
        const std::size_t count = std::min<std::size_t>(n + 1, static_cast<std::size_t>(window));
        double s[4] = {0, 0, 0, 0};
        for (std::size_t k = 0; k < count; ++k) {
            const BBox& b = track.entries[n - k].box;
            s[0] += b.x1;
            s[1] += b.y1;
            s[2] += b.x2;
            s[3] += b.y2;
        }
        const double inv = 1.0 / static_cast<double>(count);
        out.smoothed[n] = {track.entries[n].frame_index, BBox{s[0] * inv, s[1] * inv, s[2] * inv, s[3] * inv}};
    }
    return out;
}

std::vector<TrackEdit> parse_corrections(const std::string& text) {
    std::vector<TrackEdit> edits;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string verb;
        if (!(ss >> verb) || verb[0] == '#') continue;
        TrackEdit e;
        e.line = line_no;
        bool ok = false;
        if (verb == "move") {
            e.kind = TrackEdit::Kind::Move;
            ok = static_cast<bool>(ss >> e.frame >> e.from >> e.to);
        } else if (verb == "split") {
            e.kind = TrackEdit::Kind::Split;
            ok = static_cast<bool>(ss >> e.from >> e.frame);
        } else if (verb == "merge") {
            e.kind = TrackEdit::Kind::Merge;
            ok = static_cast<bool>(ss >> e.to >> e.from);
        }
        std::string extra;
        if (!ok || (ss >> extra)) data_error(fmt::format("correction line {}: cannot parse '{}'", line_no, line));
        edits.push_back(e);
    }
    return edits;
}

std::vector<TrackEdit> load_corrections(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) data_error(fmt::format("cannot open correction file {}", path.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_corrections(buf.str());
}

namespace {

std::string describe(const TrackEdit& e) {
    switch (e.kind) {
        case TrackEdit::Kind::Move: return fmt::format("move {} {} {}", e.frame, e.from, e.to);
        case TrackEdit::Kind::Split: return fmt::format("split {} {}", e.from, e.frame);
        case TrackEdit::Kind::Merge: return fmt::format("merge {} {}", e.to, e.from);
    }
    return "?";
}

}  // namespace

std::vector<Track> correct_assignment(std::vector<Track> tracks, const std::vector<TrackEdit>& edits) {
    auto find_track = [&](int id, const TrackEdit& e) -> Track& {
        for (Track& t : tracks)
            if (t.track_id == id) return t;
        data_error(fmt::format("correction line {} ({}): track {} does not exist", e.line, describe(e), id));
    };
    auto next_id = [&] {
        int m = -1;
        for (const Track& t : tracks) m = std::max(m, t.track_id);
        return m + 1;
    };

    for (const TrackEdit& e : edits) {
        switch (e.kind) {
            case TrackEdit::Kind::Move: {
                Track& src = find_track(e.from, e);
                Track& dst = find_track(e.to, e);
                auto it = std::find_if(src.entries.begin(), src.entries.end(),
                                       [&](const TrackEntry& x) { return x.frame_index == e.frame; });
                if (it == src.entries.end())
                    data_error(fmt::format("correction line {} ({}): track {} has no detection at frame {}", e.line, describe(e),
                                           e.from, e.frame));
                if (e.from == e.to) break;
                if (find_entry(dst.entries, e.frame))
                    data_error(fmt::format("correction line {} ({}): track {} already has a detection at frame {}", e.line, describe(e),
                                           e.to, e.frame));
                TrackEntry moved = *it;
                src.entries.erase(it);
                dst.entries.push_back(moved);
                sort_entries(dst);
                break;
            }
            case TrackEdit::Kind::Split: {
                Track& src = find_track(e.from, e);
                auto it = std::find_if(src.entries.begin(), src.entries.end(),
                                       [&](const TrackEntry& x) { return x.frame_index == e.frame; });
                if (it == src.entries.end())
                    data_error(fmt::format("correction line {} ({}): track {} has no detection at frame {}", e.line, describe(e),
                                           e.from, e.frame));
                if (it == src.entries.begin())
                    data_error(fmt::format("correction line {} ({}): split at the first frame of track {} is empty",
                                           e.line, describe(e), e.from));
                Track tail;
                tail.track_id = next_id();
                tail.entries.assign(it, src.entries.end());
                src.entries.erase(it, src.entries.end());
                tracks.push_back(std::move(tail));
                break;
            }
            case TrackEdit::Kind::Merge: {
                if (e.from == e.to) data_error(fmt::format("correction line {} ({}): merge of a track with itself", e.line, describe(e)));
                Track& dst = find_track(e.to, e);
                Track& src = find_track(e.from, e);
                for (const TrackEntry& x : src.entries)
                    if (find_entry(dst.entries, x.frame_index))
                        data_error(fmt::format("correction line {} ({}): tracks {} and {} overlap at frame {}", e.line, describe(e),
                                               e.to, e.from, x.frame_index));
                dst.entries.insert(dst.entries.end(), src.entries.begin(), src.entries.end());
                sort_entries(dst);
                src.entries.clear();
                break;
            }
        }
        std::erase_if(tracks, [](const Track& t) { return t.entries.empty(); });
    }
    for (Track& t : tracks) {
        t.smoothed = t.entries;
        t.validate();
    }
    std::sort(tracks.begin(), tracks.end(), [](const Track& a, const Track& b) { return a.track_id < b.track_id; });
    return tracks;
}

void save_tracks(const std::vector<Track>& tracks, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) data_error(fmt::format("cannot write track file {}", path.string()));
    for (const Track& t : tracks) {
        t.validate();
        for (std::size_t i = 0; i < t.entries.size(); ++i) {
            const BBox& r = t.entries[i].box;
            const BBox& s = t.smoothed[i].box;
            out << fmt::format("{} {} {} {} {} {} {} {} {} {}\n", t.track_id, t.entries[i].frame_index, r.x1, r.y1,
                               r.x2, r.y2, s.x1, s.y1, s.x2, s.y2);
        }
    }
    if (!out) data_error(fmt::format("write failed: {}", path.string()));
}

std::vector<Track> load_tracks(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) data_error(fmt::format("cannot open track file {}", path.string()));
    std::map<int, Track> by_id;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        int id, frame;
        BBox r, s;
        if (!(ss >> id >> frame >> r.x1 >> r.y1 >> r.x2 >> r.y2 >> s.x1 >> s.y1 >> s.x2 >> s.y2))
            data_error(fmt::format("{}:{}: malformed track line", path.string(), line_no));
        Track& t = by_id[id];
        t.track_id = id;
        t.entries.push_back({frame, r});
        t.smoothed.push_back({frame, s});
    }
    std::vector<Track> out;
    for (auto& [id, t] : by_id) {
        t.validate();
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace hhm
