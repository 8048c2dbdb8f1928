// SPDX-License-Identifier: Apache-2.0

#include "radtrack/commands.hpp"

#include "radtrack/checkpoint.hpp"
#include "radtrack/decode_track.hpp"
#include "radtrack/optim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;

namespace radtrack {

namespace {

std::string fmt(const char* spec, double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::string seq_name(int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "seq_%04d", i);
    return buf;
}

bool is_buffer_name(const std::string& name) {
    return name.size() > 13 && (name.rfind(".running_mean") == name.size() - 13 ||
                                name.rfind(".running_var") == name.size() - 12);
}

std::vector<NamedTensor> named_trainable(const DetectorModel& model) {
    std::vector<NamedTensor> out;
    for (NamedTensor& e : const_cast<DetectorModel&>(model).named_entries()) {
        if (!is_buffer_name(e.name)) out.push_back(e);
    }
    return out;
}

void write_training_checkpoint(const std::string& path, DetectorModel& model, Adam& opt) {
    std::vector<NamedTensor> entries = model.named_entries();
    const std::vector<NamedTensor> trainable = named_trainable(model);
    auto& m = opt.first_moments();
    auto& v = opt.second_moments();
    for (size_t i = 0; i < trainable.size(); ++i) {
        entries.push_back({"optim.m." + trainable[i].name, m[i]});
        entries.push_back({"optim.v." + trainable[i].name, v[i]});
    }
    entries.push_back({"trainer.step", Tensor::scalar(static_cast<double>(opt.step_count()))});
    save_checkpoint(path, entries);
}

void restore_training_state(const std::vector<NamedTensor>& entries, DetectorModel& model,
                            Adam& opt) {
    model.load_entries(entries);
    std::map<std::string, const NamedTensor*> by_name;
    for (const NamedTensor& e : entries) by_name[e.name] = &e;
    const std::vector<NamedTensor> trainable = named_trainable(model);
    auto& m = opt.first_moments();
    auto& v = opt.second_moments();
    for (size_t i = 0; i < trainable.size(); ++i) {
        for (auto [prefix, slot] : {std::pair{"optim.m.", &m[i]}, std::pair{"optim.v.", &v[i]}}) {
            auto it = by_name.find(prefix + trainable[i].name);
            if (it == by_name.end()) continue;  // plain model checkpoint: fresh moments
            const Tensor& src = it->second->tensor;
            if (src.shape() != slot->shape())
                throw std::runtime_error("checkpoint optimizer entry '" + it->first +
                                         "' has mismatched shape");
            std::copy(src.data(), src.data() + src.numel(), slot->data());
        }
    }
    auto it = by_name.find("trainer.step");
    if (it != by_name.end()) opt.set_step_count(static_cast<int64_t>(it->second->tensor.item()));
}

std::vector<GtRecord> gather_gt(const Dataset& data, int min_frame) {
    std::vector<GtRecord> out;
    for (const Sequence& seq : data.sequences) {
        for (const RadarFrame& frame : seq) {
            if (frame.frame_index < min_frame) continue;
            for (const Annotation& a : frame.annotations)
                out.push_back({frame.sequence_id, frame.frame_index, a.track_id, a.box});
        }
    }
    return out;
}

} // namespace

void cmd_simulate(const RunConfig& config, const std::string& out_dir) {
    validate_run_config(config);
    Dataset data;
    data.height = config.sim.height;
    data.width = config.sim.width;
    data.seed = config.seed;
    for (int i = 0; i < config.sequences; ++i) {
        data.sequences.push_back(
            simulate_sequence(config.sim, Rng::mix(config.seed, static_cast<uint64_t>(i)), i));
    }
    save_dataset(data, out_dir);
}

TrainResult cmd_train(const RunConfig& config, const std::string& data_dir,
                      const std::string& out_dir, const std::string& resume_checkpoint) {
    validate_run_config(config);
    const Dataset data = load_dataset(data_dir);
    if (data.sequences.empty()) throw std::runtime_error("training dataset is empty: " + data_dir);

    DetectorModel model(config.model, config.seed);
    Adam opt(model.parameters(),
             AdamConfig{config.train.lr, config.train.weight_decay, 0.9, 0.999, 1e-8});
    if (!resume_checkpoint.empty())
        restore_training_state(load_checkpoint(resume_checkpoint), model, opt);

    fs::create_directories(out_dir);
    std::ofstream log(fs::path(out_dir) / "train_log.txt", std::ios::app);
    if (!log) throw std::runtime_error("cannot open training log in " + out_dir);

    std::vector<PairSample> pairs = collect_pairs(data, config.train.gap);
    if (pairs.empty()) throw std::runtime_error("no frame pairs at gap " +
                                                std::to_string(config.train.gap));

    TrainResult result;
    double last_total = 0.0;
    bool stop = false;
    for (int epoch = 0; epoch < config.train.epochs && !stop; ++epoch) {
        // deterministic shuffle per epoch
        Rng shuffle_rng(Rng::mix(config.seed, 7000 + static_cast<uint64_t>(epoch)));
        std::vector<size_t> order(pairs.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1],
                      order[static_cast<size_t>(shuffle_rng.uniform_int(0, static_cast<int64_t>(i) - 1))]);

        for (size_t at = 0; at < order.size() && !stop;
             at += static_cast<size_t>(config.train.batch_size)) {
            std::vector<PairSample> batch;
            for (size_t j = at;
                 j < std::min(order.size(), at + static_cast<size_t>(config.train.batch_size)); ++j)
                batch.push_back(pairs[order[j]]);
            StepRecord rec =
                bidirectional_train_step(model, opt, batch, config.loss, config.train.tracking);
            last_total = rec.total;
            log << "step=" << opt.step_count() << " heatmap=" << fmt("%.6f", rec.heatmap)
                << " pre=" << fmt("%.6f", rec.pre) << " box=" << fmt("%.6f", rec.box)
                << " orientation=" << fmt("%.6f", rec.orientation)
                << " offset=" << fmt("%.6f", rec.offset) << " tracking=" << fmt("%.6f", rec.tracking)
                << " total=" << fmt("%.6f", rec.total) << "\n";
            if (config.train.max_steps > 0 && opt.step_count() >= config.train.max_steps) stop = true;
        }
        char name[48];
        std::snprintf(name, sizeof(name), "ckpt_epoch_%03d.ckpt", epoch + 1);
        write_training_checkpoint((fs::path(out_dir) / name).string(), model, opt);
    }
    result.checkpoint_path = (fs::path(out_dir) / "model.ckpt").string();
    write_training_checkpoint(result.checkpoint_path, model, opt);
    result.steps = opt.step_count();
    result.final_loss = last_total;
    log << "final_loss=" << fmt("%.6f", last_total) << "\n";
    return result;
}

EvalResult cmd_evaluate(const RunConfig& config, const std::string& checkpoint_path,
                        const std::string& data_dir, const std::string& out_dir) {
    validate_run_config(config);
    DetectorModel model(config.model, config.seed);
    model.load_entries(load_checkpoint(checkpoint_path));
    const Dataset data = load_dataset(data_dir);
    const int gap = config.train.gap;

    std::vector<DetectionRecord> dets;
    for (const Sequence& seq : data.sequences) {
        auto per_frame =
            decode_sequence(model, seq, config.det_threshold, config.nms_iou, gap, false);
        for (size_t t = static_cast<size_t>(gap); t < per_frame.size(); ++t) {
            for (const Detection& d : per_frame[t])
                dets.push_back({seq[t].sequence_id, seq[t].frame_index, d.box, d.confidence});
        }
    }
    const std::vector<GtRecord> gts = gather_gt(data, gap);

    EvalResult result;
    result.map30 = average_precision(dets, gts, 0.3);
    result.map50 = average_precision(dets, gts, 0.5);
    result.map70 = average_precision(dets, gts, 0.7);

    fs::create_directories(out_dir);
    auto text = [](const std::optional<double>& v) {
        return v ? fmt("%.6f", *v) : std::string("absent");
    };
    result.report_path = (fs::path(out_dir) / "report.txt").string();
    {
        std::ofstream rep(result.report_path, std::ios::trunc);
        rep << "map@0.30=" << text(result.map30) << "\n";
        rep << "map@0.50=" << text(result.map50) << "\n";
        rep << "map@0.70=" << text(result.map70) << "\n";
        rep << "detections=" << dets.size() << "\n";
        rep << "ground_truth=" << gts.size() << "\n";
    }
    {
        std::ofstream csv(fs::path(out_dir) / "report.csv", std::ios::trunc);
        csv << "threshold,ap\n";
        csv << "0.3," << text(result.map30) << "\n";
        csv << "0.5," << text(result.map50) << "\n";
        csv << "0.7," << text(result.map70) << "\n";
    }
    {
        std::ofstream df(fs::path(out_dir) / "detections.txt", std::ios::trunc);
        for (const DetectionRecord& d : dets) {
            df << d.sequence << ' ' << d.frame << ' ' << fmt("%.17g", d.box.cx) << ' '
               << fmt("%.17g", d.box.cy) << ' ' << fmt("%.17g", d.box.w) << ' '
               << fmt("%.17g", d.box.l) << ' ' << fmt("%.17g", d.box.theta) << ' '
               << fmt("%.17g", d.confidence) << "\n";
        }
    }
    return result;
}

TrackResult cmd_track(const RunConfig& config, const std::string& checkpoint_path,
                      const std::string& data_dir, const std::string& out_dir) {
    validate_run_config(config);
    DetectorModel model(config.model, config.seed);
    model.load_entries(load_checkpoint(checkpoint_path));
    const Dataset data = load_dataset(data_dir);

    TrackerConfig tc;
    tc.det_threshold = config.det_threshold;
    tc.nms_iou = config.nms_iou;
    tc.gap = config.track_gap;
    tc.dist_k = config.track_dist;
    tc.birth_b = config.track_birth;

    fs::create_directories(out_dir);
    std::vector<TrackRecord> records;
    for (const Sequence& seq : data.sequences) {
        auto frames = run_tracker(model, seq, tc);
        const int sid = seq.empty() ? 0 : seq[0].sequence_id;
        std::ofstream tf(fs::path(out_dir) / (seq_name(sid) + ".txt"), std::ios::trunc);
        for (size_t t = 0; t < frames.size(); ++t) {
            for (const TrackedBox& b : frames[t]) {
                records.push_back({sid, static_cast<int>(t), b.id, b.box, b.confidence});
                tf << t << ' ' << b.id << ' ' << fmt("%.17g", b.box.cx) << ' '
                   << fmt("%.17g", b.box.cy) << ' ' << fmt("%.17g", b.box.w) << ' '
                   << fmt("%.17g", b.box.l) << ' ' << fmt("%.17g", b.box.theta) << ' '
                   << fmt("%.17g", b.confidence) << "\n";
            }
        }
    }

    TrackResult result;
    result.metrics = mot_evaluate(records, gather_gt(data, 0), config.mot_iou);
    result.report_path = (fs::path(out_dir) / "mot_report.txt").string();
    const MotMetrics& m = result.metrics;
    {
        std::ofstream rep(result.report_path, std::ios::trunc);
        rep << "mota=" << fmt("%.6f", m.mota) << "\n";
        rep << "motp=" << fmt("%.6f", m.motp) << "\n";
        rep << "idsw=" << m.idsw << "\n";
        rep << "frag=" << m.frag << "\n";
        rep << "fn=" << m.fn << "\n";
        rep << "fp=" << m.fp << "\n";
        rep << "gt=" << m.gt_total << "\n";
        rep << "mt=" << m.mostly_tracked << "\n";
        rep << "pt=" << m.partially_tracked << "\n";
    }
    {
        std::ofstream csv(fs::path(out_dir) / "mot_report.csv", std::ios::trunc);
        csv << "metric,value\n";
        csv << "mota," << fmt("%.6f", m.mota) << "\n";
        csv << "motp," << fmt("%.6f", m.motp) << "\n";
        csv << "idsw," << m.idsw << "\n";
        csv << "frag," << m.frag << "\n";
        csv << "mt," << m.mostly_tracked << "\n";
        csv << "pt," << m.partially_tracked << "\n";
    }
    return result;
}

namespace {

struct Rgb {
    unsigned char r, g, b;
};

void draw_line(std::vector<Rgb>& img, int w, int h, double x0, double y0, double x1, double y1,
               Rgb color) {
    const int steps = std::max(2, static_cast<int>(std::ceil(std::hypot(x1 - x0, y1 - y0) * 2)));
    for (int i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) / steps;
        const int x = static_cast<int>(std::lround(x0 + t * (x1 - x0)));
        const int y = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
        if (x >= 0 && x < w && y >= 0 && y < h) img[static_cast<size_t>(y) * w + x] = color;
    }
}

void draw_box(std::vector<Rgb>& img, int w, int h, const OrientedBox& box, Rgb color) {
    const auto c = box_corners(box);
    for (int i = 0; i < 4; ++i)
        draw_line(img, w, h, c[static_cast<size_t>(i)].x, c[static_cast<size_t>(i)].y,
                  c[static_cast<size_t>((i + 1) % 4)].x, c[static_cast<size_t>((i + 1) % 4)].y,
                  color);
}

Rgb id_color(int id) {
    static const Rgb palette[] = {
        {230, 60, 60},  {60, 120, 230}, {240, 180, 40}, {170, 70, 220},
        {70, 200, 200}, {240, 120, 40}, {120, 220, 60}, {220, 80, 160},
        {90, 90, 240},  {200, 200, 80}, {80, 160, 120}, {160, 100, 60},
    };
    return palette[static_cast<size_t>(id) % (sizeof(palette) / sizeof(palette[0]))];
}

} // namespace

void cmd_render(const RunConfig& config, const std::string& data_dir,
                const std::string& tracks_dir, const std::string& detections_file,
                const std::string& out_dir) {
    validate_run_config(config);
    const Dataset data = load_dataset(data_dir);

    // (sequence, frame) -> tracked boxes
    std::map<std::pair<int, int>, std::vector<TrackRecord>> tracks;
    if (!tracks_dir.empty()) {
        for (const Sequence& seq : data.sequences) {
            const int sid = seq.empty() ? 0 : seq[0].sequence_id;
            const fs::path path = fs::path(tracks_dir) / (seq_name(sid) + ".txt");
            std::ifstream in(path);
            if (!in) throw std::runtime_error("cannot open track file " + path.string());
            std::string line;
            int line_no = 0;
            while (std::getline(in, line)) {
                ++line_no;
                if (line.empty()) continue;
                std::istringstream is(line);
                int frame, id;
                double cx, cy, bw, bl, th, conf;
                if (!(is >> frame >> id >> cx >> cy >> bw >> bl >> th >> conf))
                    throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                             ": malformed track line");
                tracks[{sid, frame}].push_back({sid, frame, id, make_oriented_box(cx, cy, bw, bl, th),
                                                conf});
            }
        }
    }
    std::map<std::pair<int, int>, std::vector<DetectionRecord>> dets;
    if (!detections_file.empty()) {
        std::ifstream in(detections_file);
        if (!in) throw std::runtime_error("cannot open detections file " + detections_file);
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            std::istringstream is(line);
            int sid, frame;
            double cx, cy, bw, bl, th, conf;
            if (!(is >> sid >> frame >> cx >> cy >> bw >> bl >> th >> conf))
                throw std::runtime_error(detections_file + ":" + std::to_string(line_no) +
                                         ": malformed detection line");
            dets[{sid, frame}].push_back({sid, frame, make_oriented_box(cx, cy, bw, bl, th), conf});
        }
    }

    fs::create_directories(out_dir);
    const int h = data.height, w = data.width;
    for (const Sequence& seq : data.sequences) {
        for (const RadarFrame& frame : seq) {
            std::vector<Rgb> img(static_cast<size_t>(h) * w);
            for (int i = 0; i < h * w; ++i) {
                const auto g = static_cast<unsigned char>(
                    std::lround(255.0 * std::clamp(frame.intensity.data()[i], 0.0, 1.0)));
                img[static_cast<size_t>(i)] = {g, g, g};
            }
            for (const Annotation& a : frame.annotations) draw_box(img, w, h, a.box, {0, 255, 0});
            auto dit = dets.find({frame.sequence_id, frame.frame_index});
            if (dit != dets.end()) {
                for (const DetectionRecord& d : dit->second) draw_box(img, w, h, d.box, {255, 0, 0});
            }
            auto tit = tracks.find({frame.sequence_id, frame.frame_index});
            if (tit != tracks.end()) {
                for (const TrackRecord& t : tit->second) draw_box(img, w, h, t.box, id_color(t.id));
            }
            char name[64];
            std::snprintf(name, sizeof(name), "seq_%04d_frame_%04d.ppm", frame.sequence_id,
                          frame.frame_index);
            std::ofstream out(fs::path(out_dir) / name, std::ios::binary | std::ios::trunc);
            out << "P6\n" << w << " " << h << "\n255\n";
            out.write(reinterpret_cast<const char*>(img.data()),
                      static_cast<std::streamsize>(img.size() * 3));
            if (!out) throw std::runtime_error(std::string("cannot write image ") + name);
        }
    }
}

} // namespace radtrack
