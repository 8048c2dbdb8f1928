// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "radtrack/decode_track.hpp"
#include "radtrack/losses.hpp"

#include <algorithm>
#include <cmath>
#include <set>

using namespace radtrack;

namespace {

HeadMaps empty_maps(int h, int w) {
    HeadMaps maps;
    maps.heatmap = Tensor::zeros({1, h, w});
    maps.size = Tensor::full({2, h, w}, 1.0);
    maps.angle = Tensor::zeros({2, h, w});
    for (int i = 0; i < h * w; ++i) maps.angle.data()[h * w + i] = 1.0;  // cos = 1
    maps.offset = Tensor::zeros({2, h, w});
    return maps;
}

void put_object(HeadMaps& maps, const OrientedBox& box, double conf, int s) {
    const int w = maps.heatmap.dim(2);
    const int h = maps.heatmap.dim(1);
    const int cx = static_cast<int>(std::round(box.cx / s));
    const int cy = static_cast<int>(std::round(box.cy / s));
    REQUIRE(cx >= 0);
    REQUIRE(cx < w);
    maps.heatmap.data()[cy * w + cx] = conf;
    maps.size.data()[cy * w + cx] = box.w;
    maps.size.data()[h * w + cy * w + cx] = box.l;
    const double rad = box.theta * 3.14159265358979323846 / 180.0;
    maps.angle.data()[cy * w + cx] = std::sin(rad);
    maps.angle.data()[h * w + cy * w + cx] = std::cos(rad);
    const auto off = offset_target(box.cx, box.cy, s);
    maps.offset.data()[cy * w + cx] = off[0];
    maps.offset.data()[h * w + cy * w + cx] = off[1];
}

Detection det_at(double cx, double cy, double conf, double dx = 0.0, double dy = 0.0) {
    Detection d;
    d.box = make_oriented_box(cx, cy, 4, 8, 0);
    d.confidence = conf;
    d.tracking_offset = {dx, dy};
    return d;
}

} // namespace

TEST_CASE("an all-background heatmap decodes to nothing") {
    HeadMaps maps = empty_maps(16, 16);
    CHECK(decode_detections(maps, 0.3, 0.1, 4).empty());
}

TEST_CASE("an exactly encoded object decodes back to itself") {
    HeadMaps maps = empty_maps(16, 16);
    const OrientedBox box = make_oriented_box(25.3, 41.7, 5.5, 11.25, 117.0);
    put_object(maps, box, 0.9, 4);
    auto dets = decode_detections(maps, 0.3, 0.1, 4);
    REQUIRE(dets.size() == 1);
    CHECK(dets[0].confidence == doctest::Approx(0.9));
    CHECK(dets[0].box.cx == doctest::Approx(box.cx).epsilon(1e-12));
    CHECK(dets[0].box.cy == doctest::Approx(box.cy).epsilon(1e-12));
    CHECK(dets[0].box.w == doctest::Approx(box.w).epsilon(1e-12));
    CHECK(dets[0].box.l == doctest::Approx(box.l).epsilon(1e-12));
    CHECK(dets[0].box.theta == doctest::Approx(box.theta).epsilon(1e-9));
}

TEST_CASE("of two adjacent cells only the larger is a peak") {
    HeadMaps maps = empty_maps(16, 16);
    maps.heatmap.data()[5 * 16 + 5] = 0.9;
    maps.heatmap.data()[5 * 16 + 6] = 0.8;
    auto dets = decode_detections(maps, 0.3, 0.1, 4);
    REQUIRE(dets.size() == 1);
    CHECK(dets[0].confidence == doctest::Approx(0.9));
}

TEST_CASE("decode respects the threshold and sorts by confidence") {
    HeadMaps maps = empty_maps(16, 16);
    put_object(maps, make_oriented_box(8, 8, 4, 8, 0), 0.6, 4);
    put_object(maps, make_oriented_box(40, 40, 4, 8, 0), 0.9, 4);
    put_object(maps, make_oriented_box(56, 12, 4, 8, 0), 0.2, 4);  // below threshold
    auto dets = decode_detections(maps, 0.3, 0.1, 4);
    REQUIRE(dets.size() == 2);
    CHECK(dets[0].confidence == doctest::Approx(0.9));
    CHECK(dets[1].confidence == doctest::Approx(0.6));
}

TEST_CASE("association: near detection inherits the track id") {
    TrackState state;
    state.dist_threshold = 5.0;
    state.birth_threshold = 0.3;
    state.live = {{{10.0, 10.0}, 4}};
    state.next_id = 5;
    auto result = greedy_associate(state, {det_at(12.0, 10.0, 0.9)});
    REQUIRE(result.outputs.size() == 1);
    CHECK(result.outputs[0].id == 4);
    REQUIRE(result.state.live.size() == 1);
    CHECK(result.state.live[0].center.x == doctest::Approx(12.0));
}

TEST_CASE("association: far confident detection births a new id, old track dies") {
    TrackState state;
    state.dist_threshold = 5.0;
    state.birth_threshold = 0.3;
    state.live = {{{10.0, 10.0}, 4}};
    state.next_id = 5;
    auto result = greedy_associate(state, {det_at(20.0, 10.0, 0.9)});
    REQUIRE(result.outputs.size() == 1);
    CHECK(result.outputs[0].id == 5);
    REQUIRE(result.state.live.size() == 1);
    CHECK(result.state.live[0].id == 5);  // the unmatched prior track is gone
}

TEST_CASE("association: far weak detection is discarded") {
    TrackState state;
    state.dist_threshold = 5.0;
    state.birth_threshold = 0.3;
    state.live = {{{10.0, 10.0}, 4}};
    auto result = greedy_associate(state, {det_at(40.0, 10.0, 0.2)});
    CHECK(result.outputs.empty());
    CHECK(result.state.live.empty());
}

TEST_CASE("hand-traced competition: higher confidence wins the track") {
    // detections: conf 0.9 at cost 3, conf 0.8 at cost 2, one prior track
    TrackState state;
    state.dist_threshold = 5.0;
    state.birth_threshold = 0.3;
    state.live = {{{0.0, 0.0}, 7}};
    state.next_id = 8;
    auto result = greedy_associate(state, {det_at(3.0, 0.0, 0.9), det_at(2.0, 0.0, 0.8)});
    REQUIRE(result.outputs.size() == 2);
    CHECK(result.outputs[0].id == 7);   // 0.9 takes the prior id despite higher cost
    CHECK(result.outputs[1].id == 8);   // 0.8 gets a fresh id
    CHECK(result.state.next_id == 9);
}

TEST_CASE("tracking offset compensation feeds the cost") {
    TrackState state;
    state.dist_threshold = 2.0;
    state.birth_threshold = 0.3;
    state.live = {{{10.0, 10.0}, 0}};
    // detection far away, but its offset points straight back to the track
    auto result = greedy_associate(state, {det_at(18.0, 10.0, 0.9, 8.0, 0.0)});
    REQUIRE(result.outputs.size() == 1);
    CHECK(result.outputs[0].id == 0);
}

TEST_CASE("no id appears twice within a frame") {
    Rng rng(100);
    for (int trial = 0; trial < 30; ++trial) {
        TrackState state;
        state.dist_threshold = 6.0;
        state.birth_threshold = 0.2;
        for (int i = 0; i < 5; ++i)
            state.live.push_back({{rng.uniform(0, 60), rng.uniform(0, 60)}, i});
        state.next_id = 5;
        std::vector<Detection> dets;
        for (int i = 0; i < 7; ++i)
            dets.push_back(det_at(rng.uniform(0, 60), rng.uniform(0, 60), rng.uniform(0.05, 1.0)));
        auto result = greedy_associate(state, dets);
        std::set<int> ids;
        for (const TrackedBox& t : result.outputs) {
            CHECK(ids.insert(t.id).second);
        }
    }
}

TEST_CASE("association is invariant to the storage order of prior tracks") {
    Rng rng(200);
    for (int trial = 0; trial < 20; ++trial) {
        TrackState state;
        state.dist_threshold = 8.0;
        state.birth_threshold = 0.3;
        for (int i = 0; i < 4; ++i)
            state.live.push_back({{rng.uniform(0, 40), rng.uniform(0, 40)}, i});
        state.next_id = 4;
        std::vector<Detection> dets;
        for (int i = 0; i < 5; ++i)
            dets.push_back(det_at(rng.uniform(0, 40), rng.uniform(0, 40), rng.uniform(0.1, 1.0)));
        auto base = greedy_associate(state, dets);

        TrackState shuffled = state;
        std::reverse(shuffled.live.begin(), shuffled.live.end());
        auto alt = greedy_associate(shuffled, dets);
        REQUIRE(base.outputs.size() == alt.outputs.size());
        for (size_t i = 0; i < base.outputs.size(); ++i) CHECK(base.outputs[i].id == alt.outputs[i].id);
    }
}

TEST_CASE("perfect detections with true motion offsets keep one id") {
    // synthetic constant-velocity object across 10 frames, no model involved
    TrackState state;
    state.dist_threshold = 1.0;  // tight gate works because offsets are exact
    state.birth_threshold = 0.3;
    std::vector<int> ids;
    double cx = 10.0;
    const double v = 3.0;
    for (int t = 0; t < 10; ++t) {
        auto result = greedy_associate(state, {det_at(cx, 20.0, 0.9, t == 0 ? 0.0 : v, 0.0)});
        REQUIRE(result.outputs.size() == 1);
        ids.push_back(result.outputs[0].id);
        state = result.state;
        cx += v;
    }
    for (int id : ids) CHECK(id == ids[0]);
}

TEST_CASE("a gap beyond the gate splits the track") {
    TrackState state;
    state.dist_threshold = 2.0;
    state.birth_threshold = 0.3;
    auto r1 = greedy_associate(state, {det_at(10, 10, 0.9)});
    state = r1.state;
    // absent for one frame
    auto r2 = greedy_associate(state, {});
    state = r2.state;
    CHECK(state.live.empty());
    auto r3 = greedy_associate(state, {det_at(16, 10, 0.9)});
    REQUIRE(r3.outputs.size() == 1);
    CHECK(r3.outputs[0].id != r1.outputs[0].id);
}

TEST_CASE("run_tracker on an empty sequence returns nothing") {
    ModelConfig cfg;
    cfg.backbone.stage_widths = {8, 12, 16, 24};
    cfg.backbone.out_channels = 16;
    cfg.relational.k = 4;
    cfg.relational.d_pos = 16;
    cfg.relational.heads = 2;
    cfg.relational.ff_hidden = 24;
    cfg.head_width = 12;
    DetectorModel model(cfg, 3);
    CHECK(run_tracker(model, {}, TrackerConfig{}).empty());
}

TEST_CASE("run_tracker produces deterministic per-frame output on a tiny scene") {
    ModelConfig cfg;
    cfg.backbone.stage_widths = {8, 12, 16, 24};
    cfg.backbone.out_channels = 16;
    cfg.relational.k = 4;
    cfg.relational.d_pos = 16;
    cfg.relational.heads = 2;
    cfg.relational.ff_hidden = 24;
    cfg.head_width = 12;
    DetectorModel model(cfg, 3);
    SceneConfig scene;
    scene.height = 32;
    scene.width = 32;
    scene.frames = 4;
    Sequence seq = simulate_sequence(scene, 11, 0);
    TrackerConfig tc;
    tc.det_threshold = 0.05;  // untrained model: accept weak peaks, just exercise the loop
    auto a = run_tracker(model, seq, tc);
    auto b = run_tracker(model, seq, tc);
    REQUIRE(a.size() == seq.size());
    REQUIRE(b.size() == a.size());
    for (size_t t = 0; t < a.size(); ++t) {
        REQUIRE(a[t].size() == b[t].size());
        for (size_t i = 0; i < a[t].size(); ++i) {
            CHECK(a[t][i].id == b[t][i].id);
            CHECK(a[t][i].box.cx == b[t][i].box.cx);
        }
    }
}
