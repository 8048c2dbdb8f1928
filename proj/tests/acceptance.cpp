// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Each criterion prints exactly one [PASS]/[FAIL] line;
// the process exits non-zero if any selected criterion fails. Run with no
// arguments for all criteria or with a list of criterion numbers.

#include "oracles.hpp"

#include "radtrack/commands.hpp"
#include "radtrack/decode_track.hpp"
#include "radtrack/losses.hpp"
#include "radtrack/metrics.hpp"
#include "radtrack/relational.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace radtrack;
using radtrack::testing::fd_gradcheck;
using radtrack::testing::make_gradcheck_case;
using radtrack::testing::mc_rotated_iou;
using radtrack::testing::axis_aligned_iou;

namespace {

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path scratch_dir(const std::string& name) {
    fs::path dir = fs::path("acceptance_tmp") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// ---------------------------------------------------------------- criterion 1

bool criterion_gradients(std::string& detail) {
    const double t0 = now_seconds();
    Rng rng(20240517);
    double worst = 0.0;
    std::string worst_kind;
    for (OpKind kind : radtrack::testing::all_op_kinds()) {
        for (int i = 0; i < 20; ++i) {
            auto c = make_gradcheck_case(kind, rng);
            const double err = fd_gradcheck(c, rng, 1e-5);
            if (err > worst) {
                worst = err;
                worst_kind = c.label;
            }
        }
    }
    const double elapsed = now_seconds() - t0;
    std::ostringstream os;
    os << "max rel err " << worst << " (" << worst_kind << "), " << elapsed << "s";
    detail = os.str();
    return worst < 1e-4 && elapsed < 60.0;
}

// ---------------------------------------------------------------- criterion 2

bool criterion_mask(std::string& detail) {
    for (int k : {1, 2, 8}) {
        Tensor m = build_mask(k, -1e10);
        const int n = 2 * k;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const bool same = (i < k) == (j < k);
                const double expect = (same && i != j) ? -1e10 : 0.0;
                if (m.data()[i * n + j] != expect) {
                    detail = "mask mismatch at K=" + std::to_string(k);
                    return false;
                }
            }
        }
    }
    // post-softmax leakage through random attention layers
    Rng rng(77);
    double max_masked = 0.0, max_row_err = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const int k = 8, c = 64, d = 64;
        TemporalAttentionLayer layer = TemporalAttentionLayer::make(c, d, 4, 128, rng);
        Tensor feats = radtrack::testing::random_tensor({2 * k, c}, rng, -2.0, 2.0);
        Tensor pos = radtrack::testing::random_tensor({2 * k, d}, rng, -2.0, 2.0);
        auto result = layer.forward(feats, pos, build_mask(k, -1e10));
        for (const Tensor& attn : result.attention) {
            for (int i = 0; i < 2 * k; ++i) {
                double row = 0.0;
                for (int j = 0; j < 2 * k; ++j) {
                    row += attn.at({i, j});
                    if ((i < k) == (j < k) && i != j)
                        max_masked = std::max(max_masked, attn.at({i, j}));
                }
                max_row_err = std::max(max_row_err, std::abs(row - 1.0));
            }
        }
    }
    std::ostringstream os;
    os << "max masked weight " << max_masked << ", max row-sum err " << max_row_err;
    detail = os.str();
    return max_masked < 1e-8 && max_row_err < 1e-12;
}

// ---------------------------------------------------------------- criterion 3

bool criterion_iou(std::string& detail) {
    const double t0 = now_seconds();
    Rng rng(4242);
    double worst_mc = 0.0, worst_aa = 0.0;
    for (int i = 0; i < 100; ++i) {
        const OrientedBox a = make_oriented_box(rng.uniform(-4, 4), rng.uniform(-4, 4),
                                                rng.uniform(2, 10), rng.uniform(2, 10),
                                                rng.uniform(0, 360));
        const OrientedBox b = make_oriented_box(rng.uniform(-4, 4), rng.uniform(-4, 4),
                                                rng.uniform(2, 10), rng.uniform(2, 10),
                                                rng.uniform(0, 360));
        const double mc = mc_rotated_iou(a, b, 1000000, 9000 + static_cast<uint64_t>(i));
        worst_mc = std::max(worst_mc, std::abs(rotated_iou(a, b) - mc));
    }
    for (int i = 0; i < 100; ++i) {
        OrientedBox a = make_oriented_box(rng.uniform(-4, 4), rng.uniform(-4, 4),
                                          rng.uniform(2, 10), rng.uniform(2, 10), 0.0);
        OrientedBox b = make_oriented_box(rng.uniform(-4, 4), rng.uniform(-4, 4),
                                          rng.uniform(2, 10), rng.uniform(2, 10), 0.0);
        worst_aa = std::max(worst_aa, std::abs(rotated_iou(a, b) - axis_aligned_iou(a, b)));
    }
    const double elapsed = now_seconds() - t0;
    std::ostringstream os;
    os << "max |iou - mc| " << worst_mc << ", max axis-aligned err " << worst_aa << ", " << elapsed
       << "s";
    detail = os.str();
    return worst_mc < 0.005 && worst_aa < 1e-9 && elapsed < 120.0;
}

// ---------------------------------------------------------------- criterion 4

bool criterion_encode_decode(std::string& detail) {
    Rng rng(314159);
    const int s = 4, grid = 16, img = 64;
    int tested = 0;
    double worst_center = 0.0, worst_size = 0.0, worst_angle = 0.0;
    while (tested < 200) {
        // one synthetic frame of well-separated objects
        std::vector<Annotation> objects;
        const int want = static_cast<int>(rng.uniform_int(3, 4));
        int guard = 0;
        while (static_cast<int>(objects.size()) < want && ++guard < 200) {
            const double cx = rng.uniform(6.0, img - 6.0);
            const double cy = rng.uniform(6.0, img - 6.0);
            bool ok = true;
            for (const Annotation& o : objects)
                if (std::hypot(cx - o.box.cx, cy - o.box.cy) < 18.0) ok = false;
            if (!ok) continue;
            objects.push_back({static_cast<int>(objects.size()),
                               make_oriented_box(cx, cy, rng.uniform(4, 14), rng.uniform(4, 14),
                                                 rng.uniform(0, 360))});
        }
        TargetBundle t = make_targets(objects, img, img, s);
        HeadMaps maps;
        maps.heatmap = t.heatmap;
        maps.size = Tensor::full({2, grid, grid}, 1.0);
        maps.angle = Tensor::zeros({2, grid, grid});
        for (int i = 0; i < grid * grid; ++i) maps.angle.data()[grid * grid + i] = 1.0;
        maps.offset = Tensor::zeros({2, grid, grid});
        for (size_t i = 0; i < objects.size(); ++i) {
            const GridCoord cell = t.center_cells[i];
            const int64_t at = static_cast<int64_t>(cell.y) * grid + cell.x;
            maps.size.data()[at] = t.box_targets.data()[i * 2 + 0];
            maps.size.data()[grid * grid + at] = t.box_targets.data()[i * 2 + 1];
            maps.angle.data()[at] = t.angle_targets.data()[i * 2 + 0];
            maps.angle.data()[grid * grid + at] = t.angle_targets.data()[i * 2 + 1];
            maps.offset.data()[at] = t.offset_targets.data()[i * 2 + 0];
            maps.offset.data()[grid * grid + at] = t.offset_targets.data()[i * 2 + 1];
        }
        auto dets = decode_detections(maps, 0.5, 0.1, s);
        if (dets.size() != objects.size()) {
            detail = "decoded " + std::to_string(dets.size()) + " of " +
                     std::to_string(objects.size()) + " encoded objects";
            return false;
        }
        for (const Annotation& o : objects) {
            const Detection* best = nullptr;
            double best_d = 1e300;
            for (const Detection& d : dets) {
                const double dist = std::hypot(d.box.cx - o.box.cx, d.box.cy - o.box.cy);
                if (dist < best_d) {
                    best_d = dist;
                    best = &d;
                }
            }
            worst_center = std::max(worst_center, best_d);
            worst_size = std::max({worst_size, std::abs(best->box.w - o.box.w),
                                   std::abs(best->box.l - o.box.l)});
            double da = std::abs(best->box.theta - o.box.theta);
            da = std::min(da, 360.0 - da);
            worst_angle = std::max(worst_angle, da);
            ++tested;
        }
    }
    std::ostringstream os;
    os << tested << " objects, max center err " << worst_center << " px, size err " << worst_size
       << ", angle err " << worst_angle << " deg";
    detail = os.str();
    return worst_center < 0.51 && worst_size < 1e-6 && worst_angle < 1e-6;
}

// ---------------------------------------------------------------- criterion 5

bool criterion_tracker_fixtures(std::string& detail) {
    // Algorithm-1 trace: one prior track, two competing detections
    TrackState state;
    state.dist_threshold = 5.0;
    state.birth_threshold = 0.3;
    state.live = {{{0.0, 0.0}, 7}};
    state.next_id = 8;
    auto mk = [](double cx, double conf) {
        Detection d;
        d.box = make_oriented_box(cx, 0, 4, 8, 0);
        d.confidence = conf;
        return d;
    };
    auto assoc = greedy_associate(state, {mk(3.0, 0.9), mk(2.0, 0.8)});
    if (assoc.outputs.size() != 2 || assoc.outputs[0].id != 7 || assoc.outputs[1].id != 8) {
        detail = "greedy trace mismatch";
        return false;
    }

    // MOTA fixture: FN=2, FP=1, IDSW=1 over 10 GT
    std::vector<GtRecord> gts;
    std::vector<TrackRecord> preds;
    for (int f = 0; f < 5; ++f) {
        gts.push_back({0, f, 0, make_oriented_box(10, 10, 4, 8, 0)});
        gts.push_back({0, f, 1, make_oriented_box(40, 40, 4, 8, 0)});
        preds.push_back({0, f, f < 3 ? 1 : 9, make_oriented_box(10, 10, 4, 8, 0), 0.9});
        if (f < 3) preds.push_back({0, f, 2, make_oriented_box(40, 40, 4, 8, 0), 0.9});
    }
    preds.push_back({0, 4, 50, make_oriented_box(80, 80, 4, 8, 0), 0.9});
    MotMetrics m = mot_evaluate(preds, gts, 0.5);
    if (m.fn != 2 || m.fp != 1 || m.idsw != 1 || m.gt_total != 10 ||
        std::abs(m.mota - 0.6) > 1e-12) {
        std::ostringstream os;
        os << "mota fixture: fn=" << m.fn << " fp=" << m.fp << " idsw=" << m.idsw
           << " mota=" << m.mota;
        detail = os.str();
        return false;
    }

    // MOTP fixture: matched IoUs 0.8 and 0.6
    std::vector<GtRecord> g2{{0, 0, 0, make_oriented_box(4.5, 0.5, 1, 9, 0)},
                             {0, 0, 1, make_oriented_box(4.0, 20.5, 1, 8, 0)}};
    std::vector<TrackRecord> p2{{0, 0, 1, make_oriented_box(5.5, 0.5, 1, 9, 0), 0.9},
                                {0, 0, 2, make_oriented_box(6.0, 20.5, 1, 8, 0), 0.9}};
    MotMetrics m2 = mot_evaluate(p2, g2, 0.5);
    if (std::abs(m2.motp - 0.7) > 1e-12) {
        detail = "motp fixture: " + std::to_string(m2.motp);
        return false;
    }
    std::ostringstream os;
    os << "trace exact, mota=" << m.mota << ", motp=" << m2.motp;
    detail = os.str();
    return true;
}

// --------------------------------------------------------- criteria 6 and 7

RunConfig trend_config() {
    RunConfig c;
    c.sim.height = 64;
    c.sim.width = 64;
    c.sim.frames = 20;
    c.sim.sigma_blur = 0.7;
    c.sim.range_blur_gain = 0.05;  // range-dependent blur on
    c.sim.speckle = 0.3;
    c.sim.min_reflectivity = 0.35;
    c.sim.max_speed = 2.0;
    c.train.epochs = 2;
    c.train.batch_size = 4;
    c.train.gap = 3;
    return c;
}

struct TrainedEval {
    std::optional<double> map30, map50, map70;
};

TrainedEval train_and_eval(RunConfig config, uint64_t seed, bool use_trl,
                           const std::string& train_dir, const std::string& test_dir,
                           const fs::path& work) {
    config.seed = seed;
    config.model.use_trl = use_trl;
    const std::string tag = (use_trl ? "trl_" : "ntrl_") + std::to_string(seed);
    TrainResult tr = cmd_train(config, train_dir, (work / ("run_" + tag)).string());
    EvalResult ev =
        cmd_evaluate(config, tr.checkpoint_path, test_dir, (work / ("eval_" + tag)).string());
    return {ev.map30, ev.map50, ev.map70};
}

bool criterion_trl_trend(std::string& detail) {
    const double t0 = now_seconds();
    const fs::path work = scratch_dir("trl_trend");
    RunConfig config = trend_config();

    // held-out split: training sequences differ per seed, test set fixed
    RunConfig test_cfg = config;
    test_cfg.sequences = 10;
    test_cfg.seed = 555000;
    const std::string test_dir = (work / "test").string();
    cmd_simulate(test_cfg, test_dir);

    const std::vector<uint64_t> seeds{101, 202, 303, 404, 505};
    int wins = 0;
    double min_map30 = 1.0;
    std::ostringstream log;
    for (uint64_t seed : seeds) {
        RunConfig train_cfg = config;
        train_cfg.sequences = 30;
        train_cfg.seed = seed;
        const std::string train_dir = (work / ("train_" + std::to_string(seed))).string();
        cmd_simulate(train_cfg, train_dir);
        TrainedEval with = train_and_eval(config, seed, true, train_dir, test_dir, work);
        TrainedEval without = train_and_eval(config, seed, false, train_dir, test_dir, work);
        const double trl50 = with.map50.value_or(0.0);
        const double ntrl50 = without.map50.value_or(0.0);
        if (trl50 > ntrl50) ++wins;
        min_map30 = std::min(min_map30, with.map30.value_or(0.0));
        log << " seed " << seed << ": trl@0.5=" << trl50 << " vs " << ntrl50
            << " (trl@0.3=" << with.map30.value_or(0.0) << ")";
    }
    const double elapsed = now_seconds() - t0;
    std::ostringstream os;
    os << wins << "/5 wins, min trl map@0.3 " << min_map30 << ", " << elapsed << "s;" << log.str();
    detail = os.str();
    return wins >= 4 && min_map30 >= 0.5;
}

bool criterion_k_trend(std::string& detail) {
    const double t0 = now_seconds();
    const fs::path work = scratch_dir("k_trend");
    RunConfig config = trend_config();
    config.sim.min_objects = 5;  // around six objects per frame
    config.sim.max_objects = 7;
    config.train.epochs = 2;

    RunConfig test_cfg = config;
    test_cfg.sequences = 8;
    test_cfg.seed = 777000;
    const std::string test_dir = (work / "test").string();
    cmd_simulate(test_cfg, test_dir);

    const std::vector<uint64_t> seeds{11, 22, 33};
    int k8_wins = 0;
    std::ostringstream log;
    for (uint64_t seed : seeds) {
        RunConfig train_cfg = config;
        train_cfg.sequences = 15;
        train_cfg.seed = seed;
        const std::string train_dir = (work / ("train_" + std::to_string(seed))).string();
        cmd_simulate(train_cfg, train_dir);
        double map_at_k[3] = {0, 0, 0};
        const int ks[3] = {2, 8, 20};
        for (int i = 0; i < 3; ++i) {
            RunConfig kc = config;
            kc.seed = seed;
            kc.model.relational.k = ks[i];
            const std::string tag = "k" + std::to_string(ks[i]) + "_" + std::to_string(seed);
            TrainResult tr = cmd_train(kc, train_dir, (work / ("run_" + tag)).string());
            EvalResult ev = cmd_evaluate(kc, tr.checkpoint_path, test_dir,
                                         (work / ("eval_" + tag)).string());
            map_at_k[i] = ev.map50.value_or(0.0);
        }
        if (map_at_k[1] >= map_at_k[0]) ++k8_wins;
        log << " seed " << seed << ": k2=" << map_at_k[0] << " k8=" << map_at_k[1]
            << " k20=" << map_at_k[2];
    }
    const double elapsed = now_seconds() - t0;
    std::ostringstream os;
    os << "k8 >= k2 in " << k8_wins << "/3 seeds, " << elapsed << "s;" << log.str();
    detail = os.str();
    return k8_wins >= 2;
}

// ---------------------------------------------------------------- criterion 8

bool criterion_overfit(std::string& detail) {
    const fs::path work = scratch_dir("overfit");
    RunConfig config;
    config.sim.frames = 12;
    config.seed = 4;
    Dataset data;
    data.height = config.sim.height;
    data.width = config.sim.width;
    for (int i = 0; i < 2; ++i)
        data.sequences.push_back(
            simulate_sequence(config.sim, Rng::mix(config.seed, static_cast<uint64_t>(i)), i));
    auto all_pairs = collect_pairs(data, 3);
    std::vector<PairSample> batch(all_pairs.begin(), all_pairs.begin() + 8);

    DetectorModel model(config.model, config.seed);
    Adam opt(model.parameters(), AdamConfig{config.train.lr, config.train.weight_decay});
    LossWeights weights;
    double initial = 0.0, current = 0.0;
    int steps = 0;
    for (; steps < 200; ++steps) {
        StepRecord rec = bidirectional_train_step(model, opt, batch, weights, false);
        if (steps == 0) initial = rec.total;
        current = rec.total;
        if (current < 0.5 * initial) break;
    }
    std::ostringstream os;
    os << "loss " << initial << " -> " << current << " after " << (steps + 1) << " steps";
    detail = os.str();
    return current < 0.5 * initial;
}

// ---------------------------------------------------------------- criterion 9

bool criterion_determinism(std::string& detail) {
    const fs::path work = scratch_dir("determinism");
    RunConfig config;
    config.seed = 99;
    config.sequences = 6;
    config.sim.frames = 12;
    config.train.epochs = 1;
    config.train.batch_size = 4;

    auto pipeline = [&](const std::string& name) {
        const fs::path dir = work / name;
        cmd_simulate(config, (dir / "data").string());
        TrainResult tr = cmd_train(config, (dir / "data").string(), (dir / "run").string());
        cmd_evaluate(config, tr.checkpoint_path, (dir / "data").string(), (dir / "eval").string());
        return read_file(dir / "eval" / "report.txt") + read_file(dir / "eval" / "detections.txt");
    };
    const std::string a = pipeline("a");
    const std::string b = pipeline("b");
    detail = a == b ? "reports byte-identical across runs" : "reports differ";
    return a == b && !a.empty();
}

struct Criterion {
    int id;
    const char* title;
    std::function<bool(std::string&)> run;
};

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {1, "gradient oracle: primitives and losses vs central finite differences",
         criterion_gradients},
        {2, "mask semantics: closed form and post-softmax suppression", criterion_mask},
        {3, "rotated IoU vs Monte-Carlo and axis-aligned closed form", criterion_iou},
        {4, "encode-decode identity on exactly encoded head maps", criterion_encode_decode},
        {5, "tracker trace and CLEAR-MOT fixtures", criterion_tracker_fixtures},
        {6, "directional detection trend: TRL vs no-TRL on held-out data", criterion_trl_trend},
        {7, "directional K-ablation trend: K=8 vs K=2", criterion_k_trend},
        {8, "overfit sanity: fixed 8-pair batch halves its loss", criterion_overfit},
        {9, "pipeline determinism: byte-identical metric reports", criterion_determinism},
    };

    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

    int failures = 0;
    for (const Criterion& c : criteria) {
        if (!selected.empty() &&
            std::find(selected.begin(), selected.end(), c.id) == selected.end())
            continue;
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] criterion %d: %s — %s\n", ok ? "PASS" : "FAIL", c.id, c.title,
                    detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
