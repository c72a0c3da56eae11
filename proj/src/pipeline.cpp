// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "hhm/pipeline.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <fmt/core.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <ostream>
#include <sstream>

#include "hhm/synthgen.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hhm {

// ---------------------------------------------------------------------------
// Configuration

DatasetConfig GenConfig::dataset_config(std::uint64_t seed) const {
    DatasetConfig cfg = simple_dataset_config(rubbing, other, dates, seed);
    cfg.width = width;
    cfg.height = height;
    cfg.fps = fps;
    cfg.n_persons = n_persons;
    cfg.keypoint_dropout = keypoint_dropout;
    for (SceneGroup& g : cfg.groups) {
        g.min_frames = min_frames;
        g.max_frames = max_frames;
    }
    return cfg;
}

const char* stream_name(Stream s) {
    switch (s) {
        case Stream::Rgb: return "rgb";
        case Stream::Flow: return "flow";
        case Stream::Fused: return "fused";
    }
    return "?";
}

Stream parse_stream(const std::string& s) {
    if (s == "rgb") return Stream::Rgb;
    if (s == "flow") return Stream::Flow;
    config_error(fmt::format("unknown stream '{}' (rgb|flow)", s));
}

namespace {

json config_json(const PipelineConfig& c) {
    const auto& p = c.paths;
    const auto& g = c.gen;
    const auto& a = c.augment;
    const auto& f = c.flow;
    return {
        {"seed", c.seed},
        {"paths",
         {{"dataset", p.dataset.string()},
          {"prepared", p.prepared.string()},
          {"checkpoints", p.checkpoints.string()},
          {"reports", p.reports.string()}}},
        {"gen",
         {{"rubbing", g.rubbing},
          {"other", g.other},
          {"dates", g.dates},
          {"width", g.width},
          {"height", g.height},
          {"fps", g.fps},
          {"n_persons", g.n_persons},
          {"keypoint_dropout", g.keypoint_dropout},
          {"min_frames", g.min_frames},
          {"max_frames", g.max_frames}}},
        {"roi",
         {{"margin_frac", c.roi.margin_frac},
          {"min_confidence", c.roi.min_confidence},
          {"min_joints", c.roi.min_joints}}},
        {"link", {{"tau_new", c.link.tau_new}, {"max_gap", c.link.max_gap}}},
        {"smoothing_window", c.smoothing_window},
        {"augment",
         {{"scale_min", a.scale_min},
          {"scale_max", a.scale_max},
          {"flip_prob", a.flip_prob},
          {"brightness_extent", a.brightness_extent},
          {"input_size", a.input_size},
          {"pos_stride", a.pos_stride},
          {"neg_stride", a.neg_stride}}},
        {"split_ratios", c.split_ratios},
        {"flow",
         {{"lambda", f.lambda},
          {"theta", f.theta},
          {"tau", f.tau},
          {"warps", f.warps},
          {"iterations", f.iterations},
          {"min_level_size", f.min_level_size},
          {"level_scale", f.level_scale},
          {"epsilon", f.epsilon},
          {"intensity_scale", f.intensity_scale},
          {"presmooth_sigma", f.presmooth_sigma},
          {"zero_mean", f.zero_mean},
          {"cap", c.flow_cap}}},
        {"net", json::parse(c.net.to_json())},
        {"train",
         {{"learning_rate", c.train.learning_rate},
          {"momentum", c.train.momentum},
          {"batch_size", c.train.batch_size},
          {"epochs", c.train.epochs},
          {"scratch_baseline", c.scratch_baseline}}},
        {"pretrain",
         {{"stills_per_class", c.pretrain.stills_per_class},
          {"width", c.pretrain.width},
          {"height", c.pretrain.height},
          {"learning_rate", c.pretrain.train.learning_rate},
          {"momentum", c.pretrain.train.momentum},
          {"batch_size", c.pretrain.train.batch_size},
          {"epochs", c.pretrain.train.epochs}}},
        {"eval", {{"mode", eval_mode_name(c.eval_mode)}}},
    };
}

void check_keys(const json& user, const json& known, const std::string& where) {
    if (!user.is_object()) return;
    for (const auto& [key, value] : user.items()) {
        const std::string path = where.empty() ? key : where + "." + key;
        if (!known.contains(key)) config_error(fmt::format("config: unknown key '{}'", path));
        if (path == "net") continue;
        if (value.is_object() != known.at(key).is_object())
            config_error(fmt::format("config: '{}' must {}be an object", path, known.at(key).is_object() ? "" : "not "));
        check_keys(value, known.at(key), path);
    }
}

}  // namespace

std::string PipelineConfig::to_json() const { return config_json(*this).dump(2); }

PipelineConfig PipelineConfig::from_json(const std::string& text) {
    json user;
    try {
        user = json::parse(text);
    } catch (const std::exception& e) {
        config_error(fmt::format("config: not valid JSON: {}", e.what()));
    }
    if (!user.is_object()) config_error("config: top level must be an object");
    json j = config_json(PipelineConfig{});
    check_keys(user, j, "");
    if (user.contains("net")) j["net"] = json::object();
    j.merge_patch(user);

    PipelineConfig c;
    try {
        c.seed = j.at("seed").get<std::uint64_t>();
        const json& p = j.at("paths");
        c.paths.dataset = p.at("dataset").get<std::string>();
        c.paths.prepared = p.at("prepared").get<std::string>();
        c.paths.checkpoints = p.at("checkpoints").get<std::string>();
        c.paths.reports = p.at("reports").get<std::string>();
        const json& g = j.at("gen");
        c.gen.rubbing = g.at("rubbing");
        c.gen.other = g.at("other");
        c.gen.dates = g.at("dates");
        c.gen.width = g.at("width");
        c.gen.height = g.at("height");
        c.gen.fps = g.at("fps");
        c.gen.n_persons = g.at("n_persons");
        c.gen.keypoint_dropout = g.at("keypoint_dropout");
        c.gen.min_frames = g.at("min_frames");
        c.gen.max_frames = g.at("max_frames");
        const json& r = j.at("roi");
        c.roi.margin_frac = r.at("margin_frac");
        c.roi.min_confidence = r.at("min_confidence");
        c.roi.min_joints = r.at("min_joints");
        c.link.tau_new = j.at("link").at("tau_new");
        c.link.max_gap = j.at("link").at("max_gap");
        c.smoothing_window = j.at("smoothing_window");
        const json& a = j.at("augment");
        c.augment.scale_min = a.at("scale_min");
        c.augment.scale_max = a.at("scale_max");
        c.augment.flip_prob = a.at("flip_prob");
        c.augment.brightness_extent = a.at("brightness_extent");
        c.augment.input_size = a.at("input_size");
        c.augment.pos_stride = a.at("pos_stride");
        c.augment.neg_stride = a.at("neg_stride");
        c.split_ratios = j.at("split_ratios").get<std::array<int, 3>>();
        const json& f = j.at("flow");
        c.flow.lambda = f.at("lambda");
        c.flow.theta = f.at("theta");
        c.flow.tau = f.at("tau");
        c.flow.warps = f.at("warps");
        c.flow.iterations = f.at("iterations");
        c.flow.min_level_size = f.at("min_level_size");
        c.flow.level_scale = f.at("level_scale");
        c.flow.epsilon = f.at("epsilon");
        c.flow.intensity_scale = f.at("intensity_scale");
        c.flow.presmooth_sigma = f.at("presmooth_sigma");
        c.flow.zero_mean = f.at("zero_mean");
        c.flow_cap = f.at("cap");
        c.net = NetSpec::from_json(j.at("net").dump());
        const json& t = j.at("train");
        c.train.learning_rate = t.at("learning_rate");
        c.train.momentum = t.at("momentum");
        c.train.batch_size = t.at("batch_size");
        c.train.epochs = t.at("epochs");
        c.scratch_baseline = t.at("scratch_baseline");
        const json& pt = j.at("pretrain");
        c.pretrain.stills_per_class = pt.at("stills_per_class");
        c.pretrain.width = pt.at("width");
        c.pretrain.height = pt.at("height");
        c.pretrain.train.learning_rate = pt.at("learning_rate");
        c.pretrain.train.momentum = pt.at("momentum");
        c.pretrain.train.batch_size = pt.at("batch_size");
        c.pretrain.train.epochs = pt.at("epochs");
        c.eval_mode = parse_eval_mode(j.at("eval").at("mode").get<std::string>());
    } catch (const json::exception& e) {
        config_error(fmt::format("config: {}", e.what()));
    }
    c.validate();
    return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) config_error(fmt::format("cannot open config {}", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void PipelineConfig::validate() const {
    gen.dataset_config(seed).validate();
    if (smoothing_window < 1) config_error("config: smoothing_window must be >= 1");
    if (!(roi.margin_frac >= 0)) config_error("config: roi.margin_frac must be >= 0");
    if (roi.min_joints < 1 || roi.min_joints > 6) config_error("config: roi.min_joints must lie in [1,6]");
    if (!(link.tau_new >= 0 && link.tau_new <= 1)) config_error("config: link.tau_new must lie in [0,1]");
    if (link.max_gap < 0) config_error("config: link.max_gap must be >= 0");
    augment.validate();
    flow.validate();
    if (!(flow_cap > 0)) config_error("config: flow.cap must be positive");
    train.validate();
    pretrain.train.validate();
    if (pretrain.stills_per_class < 1) config_error("config: pretrain.stills_per_class must be positive");
    if (net.frames != kClipFrames) config_error(fmt::format("config: net.frames must be {}", kClipFrames));
    if (net.size != augment.input_size)
        config_error(fmt::format("config: net.size {} differs from augment.input_size {}", net.size,
                                 augment.input_size));
    if (net.head_outputs != 1) config_error("config: net.head_outputs must be 1");
    net.shapes();
}

NetSpec PipelineConfig::stream_spec(Stream stream) const {
    NetSpec s = net;
    s.in_channels = stream == Stream::Flow ? 2 : 3;
    return s;
}

TrainConfig PipelineConfig::stream_train(Stream stream) const {
    TrainConfig t = train;
    t.seed = mix_seed(seed, stream == Stream::Flow ? 0xf10 : 0x569);
    return t;
}

PretrainConfig PipelineConfig::resolved_pretrain() const {
    PretrainConfig p = pretrain;
    p.roi = roi;
    p.train.seed = mix_seed(seed, 0x2d2d);
    return p;
}

// ---------------------------------------------------------------------------
// Locking

OutputLock::OutputLock(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) data_error(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
    const fs::path path = dir / ".hhm.lock";
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) data_error(fmt::format("cannot open lock {}: {}", path.string(), std::strerror(errno)));
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
        ::close(fd_);
        fd_ = -1;
        config_error(fmt::format("{} is in use by another hhm command", dir.string()));
    }
}

OutputLock::~OutputLock() {
    if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
}

// ---------------------------------------------------------------------------
// Statistics

std::string dataset_statistics(const SplitResult& split, const AugmentConfig& augment) {
    struct Cell {
        long clips = 0, frames = 0, windows = 0;
    };
    auto cells = [&](const std::vector<AnnotationRecord>& recs) {
        std::array<Cell, 3> c{};  // rubbing, other, synthetic rubbing
        for (const AnnotationRecord& r : recs) {
            Cell& x = c[r.synthetic ? 2 : (r.label == 1 ? 0 : 1)];
            ++x.clips;
            x.frames += r.length();
            x.windows += static_cast<long>(window_starts(r.length(), r.label, augment).size());
        }
        return c;
    };
    auto pair = [](long a, long b) { return fmt::format("{}({})", a, b); };
    std::string out = fmt::format("{:<12}{:<28}{:<28}{:<28}\n", "", "Hand rubbing", "Other actions",
                                  "Synthetic rubbing");
    out += fmt::format("{:<12}{:<14}{:<14}{:<14}{:<14}{:<14}{:<14}\n", "Augment.", "w/o", "w/", "w/o", "w/", "w/o",
                       "w/");
    out += std::string(96, '-') + "\n";
    const std::pair<const char*, const std::vector<AnnotationRecord>*> rows[3] = {
        {"Training", &split.train}, {"Validation", &split.val}, {"Testing", &split.test}};
    for (const auto& [name, recs] : rows) {
        auto c = cells(*recs);
        out += fmt::format("{:<12}", name);
        for (const Cell& x : c)
            out += fmt::format("{:<14}{:<14}", pair(x.clips, x.frames), pair(x.windows, x.windows * kClipFrames));
        out += "\n";
    }
    out += std::string(96, '-') + "\n";
    return out;
}

std::string record_dir_name(const AnnotationRecord& r) {
    return fmt::format("{}_t{}_f{}", r.video_id, r.track_id, r.start_frame);
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) data_error(fmt::format("cannot write {}", path.string()));
    out << text;
    if (!out) data_error(fmt::format("write failed: {}", path.string()));
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) data_error(fmt::format("cannot open {}", path.string()));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool dir_has_entries(const fs::path& dir) {
    if (!fs::exists(dir)) return false;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().filename() != ".hhm.lock") return true;
    return false;
}

// ---------------------------------------------------------------------------
// Prepared state shared by flow, train and eval

struct Prepared {
    std::map<std::string, ManifestEntry> manifest;
    std::vector<AnnotationRecord> records;
    SplitResult split;
    std::map<std::string, std::vector<int>> windows;  // record id -> absolute starts
};

void save_windows(const std::vector<AnnotationRecord>& records, const std::map<std::string, std::vector<int>>& windows,
                  const fs::path& path) {
    std::string text;
    for (const AnnotationRecord& r : records) {
        const auto& w = windows.at(r.id());
        text += fmt::format("{} {} {}", r.id(), r.label, w.size());
        for (int s : w) text += fmt::format(" {}", s);
        text += "\n";
    }
    write_text(path, text);
}

std::map<std::string, std::vector<int>> load_windows(const fs::path& path) {
    std::ifstream in(path);
    if (!in) data_error(fmt::format("cannot open {} (run prepare first)", path.string()));
    std::map<std::string, std::vector<int>> out;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string id;
        int label = 0;
        std::size_t count = 0;
        if (!(ss >> id >> label >> count)) data_error(fmt::format("{}:{}: malformed window line", path.string(), n));
        std::vector<int> starts(count);
        for (int& s : starts)
            if (!(ss >> s)) data_error(fmt::format("{}:{}: expected {} starts", path.string(), n, count));
        out[id] = std::move(starts);
    }
    return out;
}

Prepared load_prepared(const PipelineConfig& cfg) {
    Prepared p;
    for (ManifestEntry& e : load_manifest(cfg.paths.dataset)) p.manifest[e.video_id] = std::move(e);
    const fs::path ann = cfg.paths.prepared / "annotations.csv";
    if (!fs::exists(ann)) data_error(fmt::format("{} not found (run prepare first)", ann.string()));
    p.records = load_annotations(ann);
    p.split = load_split(cfg.paths.prepared / "split.json", p.records);
    p.windows = load_windows(cfg.paths.prepared / "windows.txt");
    for (const AnnotationRecord& r : p.records) {
        if (!p.manifest.count(r.video_id))
            data_error(fmt::format("prepared record {} refers to unknown video {}", r.id(), r.video_id));
        auto it = p.windows.find(r.id());
        if (it == p.windows.end() || it->second.empty())
            data_error(fmt::format("windows.txt has no windows for {}", r.id()));
    }
    return p;
}

Track load_record_track(const PipelineConfig& cfg, const AnnotationRecord& r) {
    const fs::path path = cfg.paths.prepared / "tracks" / (r.video_id + ".txt");
    for (Track& t : load_tracks(path))
        if (t.track_id == r.track_id) return std::move(t);
    data_error(fmt::format("{}: no track {} for record {}", path.string(), r.track_id, r.id()));
}

VideoRegion load_rgb_region(const PipelineConfig& cfg, const ManifestEntry& m, const AnnotationRecord& r,
                            const Track& track) {
    FrameSequence seq = load_sequence(cfg.paths.dataset / m.frames_dir);
    const BBox bounds = sampling_bounds(track, r.start_frame, r.end_frame, cfg.augment.scale_max, seq.width(),
                                        seq.height());
    return cut_region(seq, r.start_frame, r.end_frame, bounds);
}

VideoRegion load_flow_region(const PipelineConfig& cfg, const AnnotationRecord& r) {
    const fs::path dir = cfg.paths.prepared / "flow" / record_dir_name(r);
    if (!fs::exists(dir / "region.json"))
        data_error(fmt::format("no flow for record {} in {} (run flow first)", r.id(), dir.string()));
    VideoRegion v;
    try {
        json j = json::parse(read_text(dir / "region.json"));
        v.first_frame = j.at("first_frame");
        v.x0 = j.at("x0");
        v.y0 = j.at("y0");
        v.full_width = j.at("full_width");
        v.full_height = j.at("full_height");
    } catch (const json::exception& e) {
        data_error(fmt::format("{}: malformed region.json: {}", dir.string(), e.what()));
    }
    v.seq = load_sequence(dir);
    if (v.seq.channels() != 2) data_error(fmt::format("{}: expected 2-channel flow frames", dir.string()));
    if (v.first_frame != r.start_frame || static_cast<int>(v.seq.size()) != r.length())
        data_error(fmt::format("{}: flow covers {} frames from {}, record {} needs {} from {}", dir.string(),
                               v.seq.size(), v.first_frame, r.id(), r.length(), r.start_frame));
    return v;
}

struct StreamData {
    std::vector<VideoRegion> videos;
    std::vector<Track> tracks;
};

StreamData load_stream_data(const PipelineConfig& cfg, const Prepared& p, const std::vector<AnnotationRecord>& recs,
                            Stream stream) {
    StreamData d;
    d.videos.resize(recs.size());
    d.tracks.resize(recs.size());
    parallel_for(recs.size(), [&](std::size_t i) {
        d.tracks[i] = load_record_track(cfg, recs[i]);
        d.videos[i] = stream == Stream::Flow ? load_flow_region(cfg, recs[i])
                                             : load_rgb_region(cfg, p.manifest.at(recs[i].video_id), recs[i], d.tracks[i]);
    });
    return d;
}

/// Training windows drawn from cached regions; augmentation is a pure
/// function of (seed, video, start, epoch) so both streams see the same draw.
class ClipSource : public SampleSource<float> {
public:
    struct Item {
        std::size_t video;
        int start;
        int label;
    };

    ClipSource(const StreamData& data, std::vector<Item> items, AugmentConfig augment)
        : data_(data), items_(std::move(items)), augment_(std::move(augment)) {}

    std::size_t size() const override { return items_.size(); }
    int label(std::size_t i) const override { return items_[i].label; }
    void fill(std::size_t i, int epoch, std::vector<float>& out) const override {
        const Item& it = items_[i];
        const VideoRegion& v = data_.videos[it.video];
        auto rng = sample_rng(augment_.seed, v.seq.video_id, it.start, epoch);
        const AugmentDraw draw = draw_augment(augment_, rng);
        clip_to_input(sample_clip(v, data_.tracks[it.video], it.start, augment_, SampleMode::Train, draw), out);
    }

private:
    const StreamData& data_;
    std::vector<Item> items_;
    AugmentConfig augment_;
};

AugmentConfig resolved_augment(const PipelineConfig& cfg) {
    AugmentConfig a = cfg.augment;
    a.seed = mix_seed(cfg.seed, 0xa06);
    return a;
}

fs::path checkpoint_path(const PipelineConfig& cfg, const std::string& name) {
    return cfg.paths.checkpoints / (name + ".swnet");
}

void save_model(const PipelineConfig& cfg, const std::string& name, const NetSpec& spec,
                const TrainResult<float>& result) {
    save_params(result.params, checkpoint_path(cfg, name));
    spec.save(cfg.paths.checkpoints / (name + ".net.json"));
    std::string curve;
    for (std::size_t e = 0; e < result.loss_curve.size(); ++e)
        curve += fmt::format("{} {:.6f}\n", e + 1, result.loss_curve[e]);
    write_text(cfg.paths.checkpoints / (name + ".loss.txt"), curve);
}

struct Model {
    NetSpec spec;
    ModelParams<float> params;
};

std::optional<Model> load_model(const PipelineConfig& cfg, const std::string& name) {
    const fs::path w = checkpoint_path(cfg, name);
    if (!fs::exists(w)) return std::nullopt;
    Model m{NetSpec::load(cfg.paths.checkpoints / (name + ".net.json")), load_params(w)};
    Network<float>(m.spec).check_params(m.params);
    if (m.spec.size != cfg.augment.input_size)
        model_error(fmt::format("{}: network input {} differs from augment.input_size {}", w.string(), m.spec.size,
                                cfg.augment.input_size));
    return m;
}

double eval_score(const Network<float>& net, const ModelParams<float>& params, const VideoRegion& v,
                  const Track& track, int start, const AugmentConfig& augment) {
    std::vector<float> in;
    clip_to_input(sample_clip(v, track, start, augment, SampleMode::Eval, AugmentDraw{}), in);
    return static_cast<double>(sigmoid(net.logits(params, in.data())[0]));
}

std::string dataset_hash(const PipelineConfig& cfg) {
    std::uint64_t h = fnv1a(read_text(cfg.paths.dataset / "dataset.json"));
    h = fnv1a(read_text(cfg.paths.prepared / "annotations.csv"), h);
    return fmt::format("{:016x}", h);
}

}  // namespace

// ---------------------------------------------------------------------------
// Stages

void run_gen(const PipelineConfig& cfg, bool force, std::ostream& out) {
    cfg.validate();
    const fs::path root = cfg.paths.dataset;
    OutputLock lock(root);
    if (dir_has_entries(root)) {
        if (!force) config_error(fmt::format("{} is not empty; pass --force to overwrite it", root.string()));
        for (const auto& e : fs::directory_iterator(root))
            if (e.path().filename() != ".hhm.lock") fs::remove_all(e.path());
    }
    const DatasetConfig dc = cfg.gen.dataset_config(cfg.seed);
    auto entries = generate_dataset(dc, root);
    out << fmt::format("generated {} scenes ({} rubbing, {} other) over {} dates in {}\n", entries.size(),
                       cfg.gen.rubbing, cfg.gen.other, cfg.gen.dates, root.string());
    const auto records = load_annotations(root / "annotations.csv");
    if (!records.empty())
        out << "\nexpected split\n"
            << dataset_statistics(split_dataset(records, cfg.split_ratios, cfg.seed), cfg.augment);
}

void run_prepare(const PipelineConfig& cfg, std::ostream& out) {
    cfg.validate();
    OutputLock lock(cfg.paths.prepared);
    std::map<std::string, ManifestEntry> manifest;
    for (ManifestEntry& e : load_manifest(cfg.paths.dataset)) manifest[e.video_id] = std::move(e);
    const auto annotations = load_annotations(cfg.paths.dataset / "annotations.csv");

    std::vector<std::string> videos;
    for (const AnnotationRecord& r : annotations) {
        if (!manifest.count(r.video_id))
            data_error(fmt::format("annotation {} refers to video {} missing from dataset.json", r.id(), r.video_id));
        if (videos.empty() || std::find(videos.begin(), videos.end(), r.video_id) == videos.end())
            videos.push_back(r.video_id);
    }
    for (const std::string& v : videos) {
        const fs::path kp = cfg.paths.dataset / manifest.at(v).keypoints_file;
        if (!fs::exists(kp)) data_error(fmt::format("video {}: missing keypoints file {}", v, kp.string()));
    }

    fs::create_directories(cfg.paths.prepared / "tracks");
    std::vector<std::vector<Track>> tracks(videos.size());
    std::vector<int> frame_counts(videos.size());
    parallel_for(videos.size(), [&](std::size_t i) {
        const ManifestEntry& m = manifest.at(videos[i]);
        const SequenceMeta meta = read_meta(cfg.paths.dataset / m.frames_dir);
        auto poses = load_poses(cfg.paths.dataset / m.keypoints_file);
        frame_counts[i] = m.end_frame;
        std::vector<Track> linked = link_poses(poses, cfg.roi, cfg.link, meta.width, meta.height);
        const fs::path corrections = cfg.paths.dataset / "corrections" / (videos[i] + ".txt");
        if (fs::exists(corrections)) linked = correct_assignment(std::move(linked), load_corrections(corrections));
        for (Track& t : linked) t = smooth_track(t, cfg.smoothing_window);
        save_tracks(linked, cfg.paths.prepared / "tracks" / (videos[i] + ".txt"));
        tracks[i] = std::move(linked);
    });

    std::vector<AnnotationRecord> usable;
    std::map<std::string, std::vector<int>> windows;
    int skipped = 0;
    for (const AnnotationRecord& r : annotations) {
        const std::size_t vi = std::find(videos.begin(), videos.end(), r.video_id) - videos.begin();
        const Track* track = nullptr;
        for (const Track& t : tracks[vi])
            if (t.track_id == r.track_id) track = &t;
        std::vector<int> starts;
        if (track)
            for (int s : window_starts(r.length(), r.label, cfg.augment))
                if (track->smoothed_at(r.start_frame + s)) starts.push_back(r.start_frame + s);
        if (starts.empty() || starts.front() != r.start_frame) {
            log(LogLevel::Warn, fmt::format("prepare: skipping {} ({})", r.id(),
                                            !track                  ? "track not found"
                                            : r.length() < kClipFrames ? "shorter than 16 frames"
                                                                       : "no box at the start frame"));
            ++skipped;
            continue;
        }
        usable.push_back(r);
        windows[r.id()] = std::move(starts);
    }
    if (usable.empty()) data_error("prepare: no usable annotated clips");

    const SplitResult split = split_dataset(usable, cfg.split_ratios, cfg.seed);
    save_annotations(usable, cfg.paths.prepared / "annotations.csv");
    save_split(split, cfg.paths.prepared / "split.json");
    save_windows(usable, windows, cfg.paths.prepared / "windows.txt");
    const std::string stats = dataset_statistics(split, cfg.augment);
    write_text(cfg.paths.prepared / "stats.txt", stats);
    out << fmt::format("prepared {} clips from {} videos ({} skipped)\n\n", usable.size(), videos.size(), skipped)
        << stats;
}

void run_flow(const PipelineConfig& cfg, std::ostream& out) {
    cfg.validate();
    OutputLock lock(cfg.paths.prepared);
    const Prepared p = load_prepared(cfg);
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < p.records.size(); ++i) {
        const AnnotationRecord& r = p.records[i];
        const Track track = load_record_track(cfg, r);
        const VideoRegion rgb = load_rgb_region(cfg, p.manifest.at(r.video_id), r, track);
        FrameSequence flow = flow_sequence(rgb.seq, cfg.flow, cfg.flow_cap);
        const fs::path dir = cfg.paths.prepared / "flow" / record_dir_name(r);
        fs::remove_all(dir);
        save_sequence(flow, dir);
        const json region{{"first_frame", rgb.first_frame}, {"x0", rgb.x0},
                          {"y0", rgb.y0},                   {"full_width", rgb.full_width},
                          {"full_height", rgb.full_height}, {"cap", cfg.flow_cap}};
        write_text(dir / "region.json", region.dump(2) + "\n");
        pairs += rgb.seq.size() - 1;
        log(LogLevel::Info, fmt::format("flow {}/{}: {} ({}x{}, {} frames)", i + 1, p.records.size(), r.id(),
                                        rgb.seq.width(), rgb.seq.height(), rgb.seq.size()));
    }
    out << fmt::format("computed {} flow pairs for {} clips\n", pairs, p.records.size());
}

void run_train(const PipelineConfig& cfg, Stream stream, std::ostream& out) {
    cfg.validate();
    if (stream == Stream::Fused) config_error("train: stream must be rgb or flow");
    OutputLock lock(cfg.paths.checkpoints);
    const Prepared p = load_prepared(cfg);
    if (p.split.train.empty()) data_error("train: the training split is empty");
    const StreamData data = load_stream_data(cfg, p, p.split.train, stream);
    std::vector<ClipSource::Item> items;
    for (std::size_t i = 0; i < p.split.train.size(); ++i)
        for (int s : p.windows.at(p.split.train[i].id())) items.push_back({i, s, p.split.train[i].label});
    const ClipSource source(data, std::move(items), resolved_augment(cfg));
    const std::string name = stream_name(stream);
    out << fmt::format("{}: {} training windows from {} clips\n", name, source.size(), p.split.train.size());

    // The pretrained 2D twin is shared by both streams and cached.
    const PretrainConfig pc = cfg.resolved_pretrain();
    const NetSpec rgb_spec = cfg.stream_spec(Stream::Rgb);
    const json key{{"spec", json::parse(pretrain_spec(rgb_spec).to_json())},
                   {"stills_per_class", pc.stills_per_class},
                   {"width", pc.width},
                   {"height", pc.height},
                   {"roi", {pc.roi.margin_frac, pc.roi.min_confidence, pc.roi.min_joints}},
                   {"train", {pc.train.learning_rate, pc.train.momentum, pc.train.batch_size, pc.train.epochs}},
                   {"seed", pc.train.seed}};
    const fs::path key_path = cfg.paths.checkpoints / "pretrain2d.key.json";
    ModelParams<float> pretrained;
    if (fs::exists(key_path) && fs::exists(checkpoint_path(cfg, "pretrain2d")) &&
        json::parse(read_text(key_path)) == key) {
        pretrained = load_params(checkpoint_path(cfg, "pretrain2d"));
        out << "reusing pretrained 2D twin\n";
    } else {
        out << fmt::format("pretraining 2D twin on {} stills\n", 4 * pc.stills_per_class);
        auto result = pretrain_twin(rgb_spec, pc, [&](int epoch, double loss) {
            out << fmt::format("  pretrain epoch {}/{} loss {:.4f}\n", epoch + 1, pc.train.epochs, loss) << std::flush;
        });
        save_model(cfg, "pretrain2d", pretrain_spec(rgb_spec), result);
        write_text(key_path, key.dump(2) + "\n");
        pretrained = std::move(result.params);
    }

    const NetSpec spec = cfg.stream_spec(stream);
    const TrainConfig tc = cfg.stream_train(stream);
    auto report = [&](const std::string& tag) {
        return [&out, tag, epochs = tc.epochs](int epoch, double loss) {
            out << fmt::format("  {} epoch {}/{} loss {:.4f}\n", tag, epoch + 1, epochs, loss) << std::flush;
        };
    };
    auto result = transfer_pretrain_then_finetune(spec, pretrained, source, tc, report(name));
    save_model(cfg, name, spec, result);
    out << fmt::format("saved {}\n", checkpoint_path(cfg, name).string());

    if (stream == Stream::Rgb && cfg.scratch_baseline) {
        auto scratch = scratch_head_finetune(spec, source, tc, report("rgb_scratch"));
        save_model(cfg, "rgb_scratch", spec, scratch);
        out << fmt::format("saved {}\n", checkpoint_path(cfg, "rgb_scratch").string());
    }
}

AblationReport run_eval(const PipelineConfig& cfg, std::ostream& out) {
    cfg.validate();
    OutputLock lock(cfg.paths.reports);
    const Prepared p = load_prepared(cfg);
    const auto& test = p.split.test;
    if (test.empty()) data_error("eval: the test split is empty");

    const auto rgb = load_model(cfg, "rgb");
    const auto flow = load_model(cfg, "flow");
    const auto scratch = load_model(cfg, "rgb_scratch");
    if (!rgb && !flow)
        model_error(fmt::format("eval: no checkpoint for stream rgb ({}) or flow ({})",
                                checkpoint_path(cfg, "rgb").string(), checkpoint_path(cfg, "flow").string()));
    for (const auto& [model, s] : {std::pair{&rgb, "rgb"}, std::pair{&flow, "flow"}})
        if (!*model) {
            log(LogLevel::Warn, fmt::format("eval: no {} checkpoint; its rows are marked absent", s));
            out << fmt::format("warning: no {} checkpoint ({}); dependent rows are absent\n", s,
                               checkpoint_path(cfg, s).string());
        }

    std::vector<EvalItem> items;
    for (const AnnotationRecord& r : test) items.push_back({r.id(), r.label, p.windows.at(r.id())});
    const AugmentConfig augment = resolved_augment(cfg);
    auto score_stream = [&](const Model& m, const StreamData& d) {
        const Network<float> net(m.spec);
        return score_items(items, cfg.eval_mode, [&](std::size_t i, int start) {
            return eval_score(net, m.params, d.videos[i], d.tracks[i], start, augment);
        });
    };

    std::optional<std::vector<double>> rgb_scores, flow_scores, scratch_scores;
    if (rgb || scratch) {
        const StreamData d = load_stream_data(cfg, p, test, Stream::Rgb);
        if (rgb) rgb_scores = score_stream(*rgb, d);
        if (scratch) scratch_scores = score_stream(*scratch, d);
    }
    if (flow) flow_scores = score_stream(*flow, load_stream_data(cfg, p, test, Stream::Flow));

    const auto log_records = combine_scores(items, rgb_scores ? &*rgb_scores : nullptr,
                                            flow_scores ? &*flow_scores : nullptr);
    AblationReport rep = make_ablation(log_records);
    rep.dataset_hash = dataset_hash(cfg);
    rep.seed = cfg.seed;
    rep.mode = eval_mode_name(cfg.eval_mode);
    rep.config_json = cfg.to_json();
    if (rgb_scores && scratch_scores) {
        auto accuracy = [&](const std::vector<double>& s) {
            long correct = 0;
            for (std::size_t i = 0; i < items.size(); ++i) correct += predict_label(s[i]) == items[i].label;
            return double(correct) / double(items.size());
        };
        rep.transfer = TransferComparison{accuracy(*rgb_scores), accuracy(*scratch_scores),
                                          static_cast<long>(items.size())};
    }

    fs::create_directories(cfg.paths.reports);
    const std::string text = render_text(rep);
    write_text(cfg.paths.reports / "ablation.txt", text);
    write_text(cfg.paths.reports / "ablation.json", render_json(rep));
    save_score_log(log_records, cfg.paths.reports / "scores.txt");
    write_text(cfg.paths.reports / "sweep.txt", render_threshold_sweep(log_records));
    out << text;
    return rep;
}

InferResult run_infer(const PipelineConfig& cfg, const fs::path& clip_dir, int start, std::ostream& out) {
    cfg.validate();
    const auto rgb = load_model(cfg, "rgb");
    const auto flow = load_model(cfg, "flow");
    if (!rgb && !flow) model_error("infer: no rgb or flow checkpoint to score with");
    const FrameSequence seq = load_sequence(clip_dir);
    if (seq.channels() != 3) data_error(fmt::format("infer: {} does not hold RGB frames", clip_dir.string()));
    if (start < 0 || start + kClipFrames > static_cast<int>(seq.size()))
        data_error(fmt::format("infer: window [{}, {}) exceeds the {} frames of {}", start, start + kClipFrames,
                               seq.size(), clip_dir.string()));

    std::vector<Track> tracks;
    fs::path kp;
    for (const fs::path& c : {clip_dir / "keypoints.txt", clip_dir.parent_path() / "keypoints.txt"})
        if (kp.empty() && fs::exists(c)) kp = c;
    if (!kp.empty()) {
        for (Track& t : link_poses(load_poses(kp), cfg.roi, cfg.link, seq.width(), seq.height()))
            if (t.smoothed_at(start)) tracks.push_back(smooth_track(t, cfg.smoothing_window));
        if (tracks.empty()) data_error(fmt::format("infer: nobody is visible at frame {} of {}", start, kp.string()));
    } else {
        Track whole;
        for (int i = 0; i < static_cast<int>(seq.size()); ++i)
            whole.entries.push_back({i, {0, 0, double(seq.width()), double(seq.height())}});
        whole.smoothed = whole.entries;
        tracks.push_back(std::move(whole));
    }

    AugmentConfig augment = cfg.augment;
    InferResult res;
    for (const Track& t : tracks) {
        InferTrack it;
        it.track_id = t.track_id;
        const BBox bounds = sampling_bounds(t, start, start + kClipFrames, 1.0, seq.width(), seq.height());
        const VideoRegion region = cut_region(seq, start, start + kClipFrames, bounds);
        if (rgb) it.rgb = eval_score(Network<float>(rgb->spec), rgb->params, region, t, start, augment);
        if (flow) {
            VideoRegion fr = region;
            fr.seq = flow_sequence(region.seq, cfg.flow, cfg.flow_cap);
            it.flow = eval_score(Network<float>(flow->spec), flow->params, fr, t, start, augment);
        }
        if (it.rgb && it.flow) it.fused = fuse_two_stream(*it.rgb, *it.flow);
        it.score = it.fused ? *it.fused : it.rgb ? *it.rgb : *it.flow;
        auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string("NA"); };
        out << fmt::format("track {} rgb {} flow {} fused {}\n", it.track_id, opt(it.rgb), opt(it.flow),
                           opt(it.fused));
        res.tracks.push_back(it);
    }
    for (const InferTrack& it : res.tracks) res.score = std::max(res.score, it.score);
    res.label = predict_label(res.score);
    out << fmt::format("score {:.4f} label {}\n", res.score, res.label);
    return res;
}

}  // namespace hhm
