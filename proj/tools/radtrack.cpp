// SPDX-License-Identifier: Apache-2.0

#include "radtrack/commands.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

struct CommonFlags {
    std::string config_path;
    int64_t seed = -1;
    bool no_trl = false;
    int k = 0;
    int gap = 0;
    double threshold = -1.0;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "flat key=value config file");
    cmd->add_option("--seed", flags.seed, "run seed (overrides the config)");
    cmd->add_flag("--no-trl", flags.no_trl, "bypass the temporal relational block");
    cmd->add_option("--k", flags.k, "candidates per frame for the relational block");
    cmd->add_option("--gap", flags.gap, "frame gap between paired frames");
    cmd->add_option("--threshold", flags.threshold, "detection heatmap threshold");
}

radtrack::RunConfig resolve_config(const CommonFlags& flags, bool gap_is_tracking) {
    radtrack::RunConfig config;
    if (!flags.config_path.empty()) config = radtrack::load_run_config(flags.config_path);
    if (flags.seed >= 0) config.seed = static_cast<uint64_t>(flags.seed);
    if (flags.no_trl) config.model.use_trl = false;
    if (flags.k > 0) config.model.relational.k = flags.k;
    if (flags.gap > 0) {
        if (gap_is_tracking) config.track_gap = flags.gap;
        else config.train.gap = flags.gap;
    }
    if (flags.threshold >= 0.0) config.det_threshold = flags.threshold;
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"temporal radar object detection and tracking"};
    app.require_subcommand(1);

    CommonFlags sim_flags, train_flags, eval_flags, track_flags, render_flags;
    std::string out_dir, data_dir, checkpoint, resume, tracks_dir, detections_file;
    int sequences = -1, epochs = 0, batch = 0, steps = -1;
    bool train_tracking = false;

    CLI::App* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
    add_common(sim, sim_flags);
    sim->add_option("--out", out_dir, "output dataset directory")->required();
    sim->add_option("--sequences", sequences, "number of sequences");

    CLI::App* train = app.add_subcommand("train", "train a detector");
    add_common(train, train_flags);
    train->add_option("--data", data_dir, "training dataset directory")->required();
    train->add_option("--out", out_dir, "run directory for checkpoints and logs")->required();
    train->add_option("--resume", resume, "checkpoint to resume from");
    train->add_option("--epochs", epochs, "training epochs");
    train->add_option("--batch", batch, "pairs per optimizer step");
    train->add_option("--steps", steps, "stop after this many optimizer steps (0 = all)");
    train->add_flag("--tracking", train_tracking, "train the tracking-offset head");

    CLI::App* eval = app.add_subcommand("evaluate", "detection mAP at IoU 0.3/0.5/0.7");
    add_common(eval, eval_flags);
    eval->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
    eval->add_option("--data", data_dir, "evaluation dataset directory")->required();
    eval->add_option("--out", out_dir, "report directory")->required();

    CLI::App* track = app.add_subcommand("track", "run the tracker and score CLEAR-MOT");
    add_common(track, track_flags);
    track->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
    track->add_option("--data", data_dir, "dataset directory")->required();
    track->add_option("--out", out_dir, "track output directory")->required();

    CLI::App* render = app.add_subcommand("render", "draw frames with boxes to .ppm images");
    add_common(render, render_flags);
    render->add_option("--data", data_dir, "dataset directory")->required();
    render->add_option("--out", out_dir, "image output directory")->required();
    render->add_option("--tracks", tracks_dir, "track files directory (from `track`)");
    render->add_option("--detections", detections_file, "detections file (from `evaluate`)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (sim->parsed()) {
            radtrack::RunConfig config = resolve_config(sim_flags, false);
            if (sequences >= 0) config.sequences = sequences;
            radtrack::cmd_simulate(config, out_dir);
            std::printf("dataset written to %s (%d sequences)\n", out_dir.c_str(),
                        config.sequences);
        } else if (train->parsed()) {
            radtrack::RunConfig config = resolve_config(train_flags, false);
            if (epochs > 0) config.train.epochs = epochs;
            if (batch > 0) config.train.batch_size = batch;
            if (steps >= 0) config.train.max_steps = steps;
            if (train_tracking) config.train.tracking = true;
            auto result = radtrack::cmd_train(config, data_dir, out_dir, resume);
            std::printf("trained %lld steps, final loss %.6f, checkpoint %s\n",
                        static_cast<long long>(result.steps), result.final_loss,
                        result.checkpoint_path.c_str());
        } else if (eval->parsed()) {
            radtrack::RunConfig config = resolve_config(eval_flags, false);
            auto result = radtrack::cmd_evaluate(config, checkpoint, data_dir, out_dir);
            auto show = [](const std::optional<double>& v) { return v ? *v : -1.0; };
            std::printf("map@0.30=%.6f map@0.50=%.6f map@0.70=%.6f (report %s)\n",
                        show(result.map30), show(result.map50), show(result.map70),
                        result.report_path.c_str());
        } else if (track->parsed()) {
            radtrack::RunConfig config = resolve_config(track_flags, true);
            auto result = radtrack::cmd_track(config, checkpoint, data_dir, out_dir);
            std::printf("mota=%.6f motp=%.6f idsw=%lld frag=%lld (report %s)\n",
                        result.metrics.mota, result.metrics.motp,
                        static_cast<long long>(result.metrics.idsw),
                        static_cast<long long>(result.metrics.frag), result.report_path.c_str());
        } else if (render->parsed()) {
            radtrack::RunConfig config = resolve_config(render_flags, false);
            radtrack::cmd_render(config, data_dir, tracks_dir, detections_file, out_dir);
            std::printf("images written to %s\n", out_dir.c_str());
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
