// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#include "hhm/videoio.hpp"

#include <fmt/core.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <regex>

#include "json.hpp"

namespace fs = std::filesystem;

namespace hhm {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

Frame::Frame(int w, int h, int c, float fill)
    : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

void Frame::validate() const {
    if (width <= 0 || height <= 0) data_error(fmt::format("frame has non-positive size {}x{}", width, height));
    if (channels < 1 || channels > 3) data_error(fmt::format("frame has unsupported channel count {}", channels));
    if (data.size() != pixel_count() * channels)
        data_error(fmt::format("frame buffer holds {} values, expected {}", data.size(), pixel_count() * channels));
}

void FrameSequence::validate() const {
    if (!(fps > 0)) data_error(fmt::format("sequence '{}' has non-positive fps", video_id));
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const Frame& f = frames[i];
        f.validate();
        if (f.width != width() || f.height != height() || f.channels != channels())
            data_error(fmt::format("sequence '{}': frame {} is {}x{}x{}, expected {}x{}x{}", video_id, i, f.width,
                                   f.height, f.channels, width(), height(), channels()));
    }
}

namespace {

std::string read_token(std::istream& in) {
    std::string tok;
    char c;
    while (in.get(c)) {
        if (c == '#') {
            std::string skip;
            std::getline(in, skip);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(c);
    }
    return tok;
}

std::uint8_t quantize(float v) {
    float q = std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f);
    return static_cast<std::uint8_t>(q);
}

}  // namespace

Frame read_pnm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) data_error(fmt::format("cannot open {}", path.string()));
    std::string magic = read_token(in);
    int channels = magic == "P6" ? 3 : magic == "P5" ? 1 : 0;
    if (channels == 0) data_error(fmt::format("{}: not a binary PPM/PGM file", path.string()));
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(read_token(in));
        h = std::stoi(read_token(in));
        maxval = std::stoi(read_token(in));
    } catch (const std::exception&) {
        data_error(fmt::format("{}: malformed header", path.string()));
    }
    if (w <= 0 || h <= 0 || maxval != 255) data_error(fmt::format("{}: unsupported header", path.string()));
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(w) * h * channels);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) data_error(fmt::format("{}: truncated pixel data", path.string()));
    Frame f(w, h, channels);
    for (std::size_t i = 0; i < raw.size(); ++i) f.data[i] = static_cast<float>(raw[i]) / 255.0f;
    return f;
}

void write_pnm(const Frame& frame, const fs::path& path) {
    frame.validate();
    if (frame.channels == 2) data_error("write_pnm: two-channel frames use the flow format");
    std::ofstream out(path, std::ios::binary);
    if (!out) data_error(fmt::format("cannot write {}", path.string()));
    out << (frame.channels == 3 ? "P6" : "P5") << '\n' << frame.width << ' ' << frame.height << "\n255\n";
    std::vector<std::uint8_t> raw(frame.data.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = quantize(frame.data[i]);
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) data_error(fmt::format("write failed: {}", path.string()));
}

Frame read_flo2(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) data_error(fmt::format("cannot open {}", path.string()));
    char magic[4];
    std::uint32_t w = 0, h = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&w), 4);
    in.read(reinterpret_cast<char*>(&h), 4);
    if (!in || std::memcmp(magic, "FLO2", 4) != 0) data_error(fmt::format("{}: bad FLO2 header", path.string()));
    if (w == 0 || h == 0 || w > 65536 || h > 65536) data_error(fmt::format("{}: bad FLO2 dimensions", path.string()));
    const std::size_t n = static_cast<std::size_t>(w) * h;
    std::vector<float> planes(2 * n);
    in.read(reinterpret_cast<char*>(planes.data()), static_cast<std::streamsize>(planes.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(planes.size() * sizeof(float)))
        data_error(fmt::format("{}: truncated flow data", path.string()));
    Frame f(static_cast<int>(w), static_cast<int>(h), 2);
    for (std::size_t i = 0; i < n; ++i) {
        f.data[2 * i] = planes[i];
        f.data[2 * i + 1] = planes[n + i];
    }
    return f;
}

void write_flo2(const Frame& frame, const fs::path& path) {
    frame.validate();
    if (frame.channels != 2) data_error("write_flo2: expected a two-channel frame");
    std::ofstream out(path, std::ios::binary);
    if (!out) data_error(fmt::format("cannot write {}", path.string()));
    const std::uint32_t w = static_cast<std::uint32_t>(frame.width), h = static_cast<std::uint32_t>(frame.height);
    out.write("FLO2", 4);
    out.write(reinterpret_cast<const char*>(&w), 4);
    out.write(reinterpret_cast<const char*>(&h), 4);
    const std::size_t n = frame.pixel_count();
    std::vector<float> planes(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        planes[i] = frame.data[2 * i];
        planes[n + i] = frame.data[2 * i + 1];
    }
    out.write(reinterpret_cast<const char*>(planes.data()), static_cast<std::streamsize>(planes.size() * sizeof(float)));
    if (!out) data_error(fmt::format("write failed: {}", path.string()));
}

std::string frame_file_name(int index, int channels) {
    const char* ext = channels == 3 ? "ppm" : channels == 1 ? "pgm" : "flo2";
    return fmt::format("frame_{:06d}.{}", index, ext);
}

SequenceMeta read_meta(const fs::path& dir) {
    const fs::path meta_path = dir / "meta.json";
    std::ifstream meta_in(meta_path);
    if (!meta_in) data_error(fmt::format("{}: missing meta.json", dir.string()));
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_in);
    } catch (const std::exception& e) {
        data_error(fmt::format("{}: malformed meta.json: {}", dir.string(), e.what()));
    }
    SequenceMeta m;
    try {
        m.width = meta.at("width").get<int>();
        m.height = meta.at("height").get<int>();
        m.fps = meta.at("fps").get<double>();
        m.video_id = meta.value("video_id", std::string{});
        m.date_tag = meta.value("date_tag", std::string{});
        m.channels = meta.value("channels", 3);
    } catch (const std::exception& e) {
        data_error(fmt::format("{}: meta.json field error: {}", dir.string(), e.what()));
    }
    if (m.channels < 1 || m.channels > 3)
        data_error(fmt::format("{}: unsupported channel count {}", dir.string(), m.channels));
    return m;
}

FrameSequence load_sequence(const fs::path& dir) {
    const SequenceMeta meta = read_meta(dir);
    FrameSequence seq;
    seq.fps = meta.fps;
    seq.video_id = meta.video_id;
    seq.date_tag = meta.date_tag;
    const int width = meta.width, height = meta.height, channels = meta.channels;

    static const std::regex pattern(R"(frame_(\d{6})\.(ppm|pgm|flo2))");
    const std::string want_ext = channels == 3 ? "ppm" : channels == 1 ? "pgm" : "flo2";
    std::map<int, fs::path> found;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (!std::regex_match(name, m, pattern) || m[2] != want_ext) continue;
        found.emplace(std::stoi(m[1]), entry.path());
    }
    if (found.empty()) data_error(fmt::format("{}: no frames", dir.string()));
    int expect = 0;
    for (const auto& [index, path] : found) {
        if (index != expect) data_error(fmt::format("{}: missing frame {}", dir.string(), expect));
        ++expect;
    }

    seq.frames.reserve(found.size());
    for (const auto& [index, path] : found) {
        Frame f = channels == 2 ? read_flo2(path) : read_pnm(path);
        if (f.width != width || f.height != height || f.channels != channels)
            data_error(fmt::format("{}: frame {} is {}x{}x{}, meta.json declares {}x{}x{}", dir.string(),
                                   path.filename().string(), f.width, f.height, f.channels, width, height, channels));
        seq.frames.push_back(std::move(f));
    }
    seq.validate();
    return seq;
}

void save_sequence(const FrameSequence& seq, const fs::path& dir) {
    seq.validate();
    if (seq.empty()) data_error(fmt::format("save_sequence: '{}' has no frames", seq.video_id));
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) data_error(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
    nlohmann::json meta = {{"width", seq.width()},       {"height", seq.height()},     {"fps", seq.fps},
                           {"video_id", seq.video_id}, {"date_tag", seq.date_tag}, {"channels", seq.channels()}};
    {
        std::ofstream out(dir / "meta.json");
        if (!out) data_error(fmt::format("cannot write {}", (dir / "meta.json").string()));
        out << meta.dump(2) << '\n';
    }
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const fs::path p = dir / frame_file_name(static_cast<int>(i), seq.channels());
        if (seq.channels() == 2)
            write_flo2(seq.frames[i], p);
        else
            write_pnm(seq.frames[i], p);
    }
}

Frame crop(const Frame& frame, const BBox& box) {
    const int x1 = std::max(0, static_cast<int>(std::floor(box.x1)));
    const int y1 = std::max(0, static_cast<int>(std::floor(box.y1)));
    const int x2 = std::min(frame.width, static_cast<int>(std::ceil(box.x2)));
    const int y2 = std::min(frame.height, static_cast<int>(std::ceil(box.y2)));
    if (x2 <= x1 || y2 <= y1)
        data_error(fmt::format("crop box ({},{},{},{}) does not intersect the {}x{} frame", box.x1, box.y1, box.x2,
                               box.y2, frame.width, frame.height));
    Frame out(x2 - x1, y2 - y1, frame.channels);
    const std::size_t row = static_cast<std::size_t>(out.width) * frame.channels;
    for (int y = y1; y < y2; ++y) {
        const float* src = &frame.data[(static_cast<std::size_t>(y) * frame.width + x1) * frame.channels];
        std::copy(src, src + row, &out.data[static_cast<std::size_t>(y - y1) * row]);
    }
    return out;
}

Frame resize_bilinear(const Frame& frame, int out_w, int out_h) {
    if (out_w < 1 || out_h < 1) data_error(fmt::format("resize target {}x{} must be positive", out_w, out_h));
    if (out_w == frame.width && out_h == frame.height) return frame;
    Frame out(out_w, out_h, frame.channels);
    const int C = frame.channels;
    auto source_coord = [](int i, int n_out, int n_in) {
        if (n_out == 1) return 0.5 * (n_in - 1);
        return static_cast<double>(i) * (n_in - 1) / (n_out - 1);
    };
    std::vector<int> x0(out_w), x1(out_w);
    std::vector<float> fx(out_w);
    for (int x = 0; x < out_w; ++x) {
        double sx = source_coord(x, out_w, frame.width);
        x0[x] = std::min(static_cast<int>(std::floor(sx)), frame.width - 1);
        x1[x] = std::min(x0[x] + 1, frame.width - 1);
        fx[x] = static_cast<float>(sx - x0[x]);
    }
    for (int y = 0; y < out_h; ++y) {
        double sy = source_coord(y, out_h, frame.height);
        int y0 = std::min(static_cast<int>(std::floor(sy)), frame.height - 1);
        int y1 = std::min(y0 + 1, frame.height - 1);
        float fy = static_cast<float>(sy - y0);
        for (int x = 0; x < out_w; ++x) {
            for (int c = 0; c < C; ++c) {
                float a = frame.at(x0[x], y0, c), b = frame.at(x1[x], y0, c);
                float d = frame.at(x0[x], y1, c), e = frame.at(x1[x], y1, c);
                float top = a + (b - a) * fx[x];
                float bottom = d + (e - d) * fx[x];
                out.at(x, y, c) = top + (bottom - top) * fy;
            }
        }
    }
    return out;
}

Frame hflip(const Frame& frame) {
    Frame out(frame.width, frame.height, frame.channels);
    const int C = frame.channels;
    for (int y = 0; y < frame.height; ++y)
        for (int x = 0; x < frame.width; ++x)
            for (int c = 0; c < C; ++c) out.at(frame.width - 1 - x, y, c) = frame.at(x, y, c);
    if (C == 2)
        for (std::size_t i = 0; i < out.data.size(); i += 2) out.data[i] = -out.data[i];
    return out;
}

Frame adjust_brightness(const Frame& frame, float delta) {
    Frame out = frame;
    for (float& v : out.data) v = std::clamp(v + delta, 0.0f, 1.0f);
    return out;
}

Frame to_grayscale(const Frame& frame) {
    if (frame.channels == 1) return frame;
    if (frame.channels != 3) data_error("to_grayscale expects an RGB frame");
    Frame out(frame.width, frame.height, 1);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = 0.299f * frame.data[3 * i] + 0.587f * frame.data[3 * i + 1] + 0.114f * frame.data[3 * i + 2];
    return out;
}

Frame resize_and_center_crop(const Frame& frame, int size) {
    if (size < 1) data_error("resize_and_center_crop: size must be positive");
    int w, h;
    if (frame.width <= frame.height) {
        w = size;
        h = std::max(size, static_cast<int>(std::lround(static_cast<double>(frame.height) * size / frame.width)));
    } else {
        h = size;
        w = std::max(size, static_cast<int>(std::lround(static_cast<double>(frame.width) * size / frame.height)));
    }
    Frame scaled = resize_bilinear(frame, w, h);
    if (w == size && h == size) return scaled;
    const int ox = (w - size) / 2, oy = (h - size) / 2;
    return crop(scaled, BBox{double(ox), double(oy), double(ox + size), double(oy + size)});
}

}  // namespace hhm
