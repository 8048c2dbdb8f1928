// SPDX-License-Identifier: Apache-2.0

#include "radtrack/scene_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace radtrack {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

[[noreturn]] void parse_fail(const std::string& file, const std::string& what) {
    throw std::runtime_error("dataset parse failure in " + file + ": " + what);
}

void gaussian_blur_inplace(std::vector<double>& grid, int h, int w, double sigma) {
    if (sigma <= 1e-9) return;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(static_cast<size_t>(2 * radius + 1));
    double ksum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        kernel[static_cast<size_t>(i + radius)] = v;
        ksum += v;
    }
    for (double& v : kernel) v /= ksum;

    std::vector<double> tmp(grid.size(), 0.0);
    // horizontal pass
    for (int y = 0; y < h; ++y) {
        const double* row = grid.data() + static_cast<int64_t>(y) * w;
        double* out = tmp.data() + static_cast<int64_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            const int lo = std::max(-radius, -x);
            const int hi = std::min(radius, w - 1 - x);
            for (int i = lo; i <= hi; ++i) s += kernel[static_cast<size_t>(i + radius)] * row[x + i];
            out[x] = s;
        }
    }
    // vertical pass
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) {
            double s = 0.0;
            const int lo = std::max(-radius, -y);
            const int hi = std::min(radius, h - 1 - y);
            for (int i = lo; i <= hi; ++i)
                s += kernel[static_cast<size_t>(i + radius)] * tmp[static_cast<size_t>(y + i) * w + x];
            grid[static_cast<size_t>(y) * w + x] = s;
        }
    }
}

bool center_inside(const OrientedBox& box, const SceneConfig& config) {
    return box.cx >= 0.0 && box.cx < config.width && box.cy >= 0.0 && box.cy < config.height;
}

} // namespace

void validate_scene_config(const SceneConfig& config) {
    auto bad = [](const std::string& what) {
        throw std::invalid_argument("scene config: " + what);
    };
    if (config.height < 32 || config.width < 32) bad("image extents must be at least 32");
    if (config.min_objects < 0 || config.max_objects < config.min_objects)
        bad("object count range is empty");
    if (config.max_speed < config.min_speed || config.min_speed < 0.0)
        bad("speed range is empty");
    if (config.max_turn_rate < 0.0) bad("turn rate bound must be non-negative");
    if (config.max_width < config.min_width || config.min_width <= 0.0)
        bad("width range is empty");
    if (config.max_length < config.min_length || config.min_length <= 0.0)
        bad("length range is empty");
    if (config.min_reflectivity <= 0.0 || config.max_reflectivity > 1.0 ||
        config.max_reflectivity < config.min_reflectivity)
        bad("reflectivity range must sit inside (0, 1]");
    if (config.sigma_blur < 0.0 || config.range_blur_gain < 0.0) bad("blur must be non-negative");
    if (config.speckle < 0.0) bad("speckle level must be non-negative");
    if (config.frames < 1) bad("frame count must be positive");
}

std::vector<ObjectState> spawn_objects(const SceneConfig& config, Rng& rng) {
    const int count = static_cast<int>(rng.uniform_int(config.min_objects, config.max_objects));
    std::vector<ObjectState> objects;
    objects.reserve(static_cast<size_t>(count));
    const double margin_x = std::min(config.width / 4.0, 12.0);
    const double margin_y = std::min(config.height / 4.0, 12.0);
    for (int i = 0; i < count; ++i) {
        ObjectState o;
        o.track_id = i;
        const double cx = rng.uniform(margin_x, config.width - margin_x);
        const double cy = rng.uniform(margin_y, config.height - margin_y);
        const double w = rng.uniform(config.min_width, config.max_width);
        const double l = rng.uniform(config.min_length, config.max_length);
        const double theta = rng.uniform(0.0, 360.0);
        o.box = make_oriented_box(cx, cy, w, l, theta);
        const double speed = rng.uniform(config.min_speed, config.max_speed);
        const double heading = rng.uniform(0.0, 2.0 * kPi);
        o.vx = speed * std::cos(heading);
        o.vy = speed * std::sin(heading);
        o.turn_rate = rng.uniform(-config.max_turn_rate, config.max_turn_rate);
        o.reflectivity = rng.uniform(config.min_reflectivity, config.max_reflectivity);
        objects.push_back(o);
    }
    return objects;
}

void propagate_objects(std::vector<ObjectState>& objects, const SceneConfig& config) {
    for (ObjectState& o : objects) {
        o.box.cx += o.vx;
        o.box.cy += o.vy;
        o.box.theta = normalize_angle_deg(o.box.theta + o.turn_rate);
    }
    objects.erase(std::remove_if(objects.begin(), objects.end(),
                                 [&](const ObjectState& o) { return !center_inside(o.box, config); }),
                  objects.end());
}

Tensor render_frame(const std::vector<ObjectState>& objects, const SceneConfig& config, Rng& rng) {
    const int h = config.height, w = config.width;
    std::vector<double> acc(static_cast<size_t>(h) * w, 0.0);
    std::vector<double> layer;
    const double icx = w / 2.0, icy = h / 2.0;
    for (const ObjectState& o : objects) {
        layer.assign(acc.size(), 0.0);
        // filled oriented rectangle sampled at pixel centers
        const auto corners = box_corners(o.box);
        double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
        for (const Vec2& p : corners) {
            lo_x = std::min(lo_x, p.x);
            hi_x = std::max(hi_x, p.x);
            lo_y = std::min(lo_y, p.y);
            hi_y = std::max(hi_y, p.y);
        }
        const int x0 = std::max(0, static_cast<int>(std::floor(lo_x)));
        const int x1 = std::min(w - 1, static_cast<int>(std::ceil(hi_x)));
        const int y0 = std::max(0, static_cast<int>(std::floor(lo_y)));
        const int y1 = std::min(h - 1, static_cast<int>(std::ceil(hi_y)));
        const double rad = o.box.theta * kPi / 180.0;
        const double c = std::cos(rad), s = std::sin(rad);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double dx = x - o.box.cx, dy = y - o.box.cy;
                const double u = dx * c + dy * s;
                const double v = -dx * s + dy * c;
                if (std::abs(u) <= 0.5 * o.box.l && std::abs(v) <= 0.5 * o.box.w)
                    layer[static_cast<size_t>(y) * w + x] = o.reflectivity;
            }
        }
        const double dist = std::hypot(o.box.cx - icx, o.box.cy - icy);
        gaussian_blur_inplace(layer, h, w, config.sigma_blur + config.range_blur_gain * dist);
        for (size_t i = 0; i < acc.size(); ++i) acc[i] = std::max(acc[i], layer[i]);
    }
    if (config.speckle > 0.0) {
        for (double& v : acc) v *= std::max(0.0, 1.0 + config.speckle * rng.normal());
    }
    for (double& v : acc) v = std::clamp(v, 0.0, 1.0);
    return Tensor::from_vector({h, w}, std::move(acc));
}

Sequence simulate_from(std::vector<ObjectState> objects, const SceneConfig& config, Rng& rng,
                       int sequence_id) {
    Sequence frames;
    frames.reserve(static_cast<size_t>(config.frames));
    for (int t = 0; t < config.frames; ++t) {
        RadarFrame frame;
        frame.frame_index = t;
        frame.sequence_id = sequence_id;
        frame.intensity = render_frame(objects, config, rng);
        frame.annotations.reserve(objects.size());
        for (const ObjectState& o : objects) frame.annotations.push_back({o.track_id, o.box});
        frames.push_back(std::move(frame));
        propagate_objects(objects, config);
    }
    return frames;
}

Sequence simulate_sequence(const SceneConfig& config, uint64_t seed, int sequence_id) {
    validate_scene_config(config);
    Rng rng(seed);
    return simulate_from(spawn_objects(config, rng), config, rng, sequence_id);
}

void save_dataset(const Dataset& dataset, const std::string& dir) {
    fs::create_directories(dir);
    {
        std::ofstream m(fs::path(dir) / "manifest.txt", std::ios::trunc);
        if (!m) throw std::runtime_error("cannot write dataset manifest in " + dir);
        m << "format=radtrack-dataset-v1\n";
        m << "sequences=" << dataset.sequences.size() << "\n";
        m << "seed=" << dataset.seed << "\n";
        m << "height=" << dataset.height << "\n";
        m << "width=" << dataset.width << "\n";
    }
    char name[64];
    for (size_t s = 0; s < dataset.sequences.size(); ++s) {
        std::snprintf(name, sizeof(name), "seq_%04zu", s);
        const fs::path seq_dir = fs::path(dir) / name;
        fs::create_directories(seq_dir);
        const Sequence& seq = dataset.sequences[s];
        {
            std::ofstream m(seq_dir / "manifest.txt", std::ios::trunc);
            m << "id=" << s << "\n";
            m << "frames=" << seq.size() << "\n";
            m << "height=" << dataset.height << "\n";
            m << "width=" << dataset.width << "\n";
        }
        for (size_t f = 0; f < seq.size(); ++f) {
            const RadarFrame& frame = seq[f];
            std::snprintf(name, sizeof(name), "frame_%04zu.bin", f);
            {
                std::ofstream bin(seq_dir / name, std::ios::binary | std::ios::trunc);
                bin.write(reinterpret_cast<const char*>(frame.intensity.data()),
                          static_cast<std::streamsize>(frame.intensity.numel() * sizeof(double)));
                if (!bin) throw std::runtime_error("write failed: " + (seq_dir / name).string());
            }
            std::snprintf(name, sizeof(name), "frame_%04zu.txt", f);
            {
                std::ofstream ann(seq_dir / name, std::ios::trunc);
                for (const Annotation& a : frame.annotations) {
                    ann << a.track_id << ' ' << fmt_g17(a.box.cx) << ' ' << fmt_g17(a.box.cy) << ' '
                        << fmt_g17(a.box.w) << ' ' << fmt_g17(a.box.l) << ' ' << fmt_g17(a.box.theta)
                        << '\n';
                }
                if (!ann) throw std::runtime_error("write failed: " + (seq_dir / name).string());
            }
        }
    }
}

namespace {

// key=value manifests; returns the value or fails naming file and key
std::string manifest_value(const std::string& file, const std::string& key) {
    std::ifstream in(file);
    if (!in) parse_fail(file, "cannot open");
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto eq = line.find('=');
        if (eq == std::string::npos) parse_fail(file, "line " + std::to_string(line_no) + " has no '='");
        if (line.substr(0, eq) == key) return line.substr(eq + 1);
    }
    parse_fail(file, "missing key '" + key + "'");
}

int64_t manifest_int(const std::string& file, const std::string& key) {
    const std::string v = manifest_value(file, key);
    try {
        return std::stoll(v);
    } catch (const std::exception&) {
        parse_fail(file, "key '" + key + "' is not an integer: '" + v + "'");
    }
}

} // namespace

Dataset load_dataset(const std::string& dir) {
    const std::string top = (fs::path(dir) / "manifest.txt").string();
    if (manifest_value(top, "format") != "radtrack-dataset-v1")
        parse_fail(top, "unknown format tag");
    Dataset dataset;
    const int64_t n_seq = manifest_int(top, "sequences");
    dataset.seed = static_cast<uint64_t>(manifest_int(top, "seed"));
    dataset.height = static_cast<int>(manifest_int(top, "height"));
    dataset.width = static_cast<int>(manifest_int(top, "width"));
    const int h = dataset.height, w = dataset.width;
    char name[64];
    for (int64_t s = 0; s < n_seq; ++s) {
        std::snprintf(name, sizeof(name), "seq_%04lld", static_cast<long long>(s));
        const fs::path seq_dir = fs::path(dir) / name;
        const std::string seq_manifest = (seq_dir / "manifest.txt").string();
        const int64_t n_frames = manifest_int(seq_manifest, "frames");
        Sequence seq;
        seq.reserve(static_cast<size_t>(n_frames));
        for (int64_t f = 0; f < n_frames; ++f) {
            RadarFrame frame;
            frame.sequence_id = static_cast<int>(s);
            frame.frame_index = static_cast<int>(f);
            std::snprintf(name, sizeof(name), "frame_%04lld.bin", static_cast<long long>(f));
            const std::string bin_path = (seq_dir / name).string();
            {
                std::ifstream bin(bin_path, std::ios::binary);
                if (!bin) parse_fail(bin_path, "cannot open");
                std::vector<double> values(static_cast<size_t>(h) * w);
                bin.read(reinterpret_cast<char*>(values.data()),
                         static_cast<std::streamsize>(values.size() * sizeof(double)));
                if (bin.gcount() != static_cast<std::streamsize>(values.size() * sizeof(double)))
                    parse_fail(bin_path, "truncated at byte offset " + std::to_string(bin.gcount()) +
                                             ", expected " + std::to_string(values.size() * 8));
                frame.intensity = Tensor::from_vector({h, w}, std::move(values));
            }
            std::snprintf(name, sizeof(name), "frame_%04lld.txt", static_cast<long long>(f));
            const std::string ann_path = (seq_dir / name).string();
            {
                std::ifstream ann(ann_path);
                if (!ann) parse_fail(ann_path, "cannot open");
                std::string line;
                int line_no = 0;
                while (std::getline(ann, line)) {
                    ++line_no;
                    if (line.empty()) continue;
                    std::istringstream is(line);
                    Annotation a;
                    double cx, cy, bw, bl, th;
                    if (!(is >> a.track_id >> cx >> cy >> bw >> bl >> th))
                        parse_fail(ann_path, "line " + std::to_string(line_no) + " is malformed");
                    if (!(cx >= 0 && cx < w && cy >= 0 && cy < h))
                        parse_fail(ann_path, "line " + std::to_string(line_no) +
                                                 " center outside the image");
                    a.box = make_oriented_box(cx, cy, bw, bl, th);
                    frame.annotations.push_back(a);
                }
            }
            seq.push_back(std::move(frame));
        }
        dataset.sequences.push_back(std::move(seq));
    }
    return dataset;
}

} // namespace radtrack
