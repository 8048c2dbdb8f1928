// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "radtrack/metrics.hpp"
#include "radtrack/rng.hpp"

#include <algorithm>
#include <cmath>

using namespace radtrack;

namespace {

GtRecord gt(int seq, int frame, int id, double cx, double cy, double w = 4, double l = 8,
            double theta = 0) {
    return {seq, frame, id, make_oriented_box(cx, cy, w, l, theta)};
}

DetectionRecord det(int seq, int frame, double conf, double cx, double cy, double w = 4,
                    double l = 8, double theta = 0) {
    return {seq, frame, make_oriented_box(cx, cy, w, l, theta), conf};
}

TrackRecord trk(int seq, int frame, int id, const OrientedBox& box) {
    return {seq, frame, id, box, 0.9};
}

} // namespace

TEST_CASE("single matching detection gives AP 1") {
    auto ap = average_precision({det(0, 0, 0.9, 10, 10)}, {gt(0, 0, 0, 10, 10)}, 0.5);
    REQUIRE(ap.has_value());
    CHECK(*ap == doctest::Approx(1.0));
}

TEST_CASE("an IoU-0.2 detection at threshold 0.3 gives AP 0") {
    // same center, quarter width: IoU 0.25 < 0.3
    auto ap = average_precision({det(0, 0, 0.9, 10, 10, 1, 8)}, {gt(0, 0, 0, 10, 10, 4, 8)}, 0.3);
    REQUIRE(ap.has_value());
    CHECK(*ap == doctest::Approx(0.0));
}

TEST_CASE("hand-computed PR curve: AP = 5/6 under all-point interpolation") {
    std::vector<GtRecord> gts{gt(0, 0, 0, 10, 10), gt(0, 1, 0, 30, 30)};
    std::vector<DetectionRecord> dets{
        det(0, 0, 0.9, 10, 10),   // TP
        det(0, 0, 0.8, 50, 50),   // FP
        det(0, 1, 0.7, 30, 30),   // TP
    };
    auto ap = average_precision(dets, gts, 0.5);
    REQUIRE(ap.has_value());
    CHECK(*ap == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("AP is invariant under strictly monotone confidence transforms") {
    Rng rng(4);
    std::vector<GtRecord> gts;
    std::vector<DetectionRecord> dets;
    for (int f = 0; f < 6; ++f) {
        gts.push_back(gt(0, f, f, rng.uniform(10, 50), rng.uniform(10, 50)));
        dets.push_back(det(0, f, rng.uniform(0.1, 0.9), rng.uniform(10, 50), rng.uniform(10, 50)));
        dets.push_back(det(0, f, rng.uniform(0.1, 0.9), gts.back().box.cx + rng.uniform(-1, 1),
                           gts.back().box.cy));
    }
    auto base = average_precision(dets, gts, 0.3);
    auto squashed = dets;
    for (auto& d : squashed) d.confidence = 1.0 / (1.0 + std::exp(-6.0 * d.confidence));
    auto transformed = average_precision(squashed, gts, 0.3);
    REQUIRE(base.has_value());
    REQUIRE(transformed.has_value());
    CHECK(*base == doctest::Approx(*transformed).epsilon(1e-12));
}

TEST_CASE("AP is independent of detection storage order") {
    std::vector<GtRecord> gts{gt(0, 0, 0, 10, 10), gt(0, 0, 1, 30, 30), gt(0, 1, 0, 12, 40)};
    std::vector<DetectionRecord> dets{det(0, 0, 0.9, 10, 10), det(0, 0, 0.7, 30, 31),
                                      det(0, 1, 0.85, 12, 40), det(0, 1, 0.4, 50, 9)};
    auto base = average_precision(dets, gts, 0.3);
    std::reverse(dets.begin(), dets.end());
    auto reversed = average_precision(dets, gts, 0.3);
    CHECK(*base == doctest::Approx(*reversed).epsilon(1e-12));
}

TEST_CASE("no ground truth reports absent rather than zero") {
    CHECK(!average_precision({det(0, 0, 0.9, 10, 10)}, {}, 0.5).has_value());
}

TEST_CASE("ground truth fed as detections scores AP 1 at every threshold") {
    Rng rng(21);
    std::vector<GtRecord> gts;
    std::vector<DetectionRecord> dets;
    for (int seq = 0; seq < 2; ++seq) {
        for (int f = 0; f < 5; ++f) {
            for (int k = 0; k < 3; ++k) {
                GtRecord g = gt(seq, f, k, rng.uniform(10, 50), rng.uniform(10, 50),
                                rng.uniform(3, 8), rng.uniform(6, 12), rng.uniform(0, 360));
                gts.push_back(g);
                dets.push_back({seq, f, g.box, rng.uniform(0.5, 1.0)});
            }
        }
    }
    for (double thresh : {0.3, 0.5, 0.7}) {
        auto ap = average_precision(dets, gts, thresh);
        REQUIRE(ap.has_value());
        CHECK(*ap == doctest::Approx(1.0));
    }
}

TEST_CASE("perfect tracking scores MOTA 1 with zero switches and all MT") {
    std::vector<GtRecord> gts;
    std::vector<TrackRecord> preds;
    for (int f = 0; f < 5; ++f) {
        gts.push_back(gt(0, f, 0, 10.0 + f, 10));
        gts.push_back(gt(0, f, 1, 40, 40.0 + f));
        preds.push_back(trk(0, f, 100, gts[gts.size() - 2].box));
        preds.push_back(trk(0, f, 200, gts[gts.size() - 1].box));
    }
    MotMetrics m = mot_evaluate(preds, gts, 0.5);
    CHECK(m.mota == doctest::Approx(1.0));
    CHECK(m.motp == doctest::Approx(1.0));
    CHECK(m.idsw == 0);
    CHECK(m.frag == 0);
    CHECK(m.fn == 0);
    CHECK(m.fp == 0);
    CHECK(m.mostly_tracked == 2);
    CHECK(m.partially_tracked == 0);
}

TEST_CASE("fixture with FN=2 FP=1 IDSW=1 over 10 GT reproduces MOTA 0.6") {
    std::vector<GtRecord> gts;
    std::vector<TrackRecord> preds;
    for (int f = 0; f < 5; ++f) {
        gts.push_back(gt(0, f, 0, 10, 10));  // track A
        gts.push_back(gt(0, f, 1, 40, 40));  // track B
    }
    for (int f = 0; f < 5; ++f) {
        // A matched every frame, id flips from 1 to 9 at frame 3 -> one switch
        preds.push_back(trk(0, f, f < 3 ? 1 : 9, make_oriented_box(10, 10, 4, 8, 0)));
        // B matched only on frames 0..2 -> two misses
        if (f < 3) preds.push_back(trk(0, f, 2, make_oriented_box(40, 40, 4, 8, 0)));
    }
    preds.push_back(trk(0, 4, 50, make_oriented_box(80, 80, 4, 8, 0)));  // spurious
    MotMetrics m = mot_evaluate(preds, gts, 0.5);
    CHECK(m.gt_total == 10);
    CHECK(m.fn == 2);
    CHECK(m.fp == 1);
    CHECK(m.idsw == 1);
    CHECK(m.frag == 1);  // B goes tracked -> untracked once
    CHECK(m.mota == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(m.mostly_tracked == 1);   // A at 5/5
    CHECK(m.partially_tracked == 1);  // B at 3/5
}

TEST_CASE("matched IoUs 0.8 and 0.6 average to MOTP 0.7") {
    // axis-aligned unit-height rectangles with integer corners
    // GT1 x in [0,9]: cx 4.5, l 9; pred shifted by 1: inter 8, union 10
    GtRecord g1{0, 0, 0, make_oriented_box(4.5, 0.5, 1, 9, 0)};
    TrackRecord p1{0, 0, 1, make_oriented_box(5.5, 0.5, 1, 9, 0), 0.9};
    // GT2 x in [0,8]: cx 4, l 8; pred shifted by 2: inter 6, union 10
    GtRecord g2{0, 0, 1, make_oriented_box(4.0, 20.5, 1, 8, 0)};
    TrackRecord p2{0, 0, 2, make_oriented_box(6.0, 20.5, 1, 8, 0), 0.9};
    REQUIRE(rotated_iou(g1.box, p1.box) == doctest::Approx(0.8).epsilon(1e-12));
    REQUIRE(rotated_iou(g2.box, p2.box) == doctest::Approx(0.6).epsilon(1e-12));
    MotMetrics m = mot_evaluate({p1, p2}, {g1, g2}, 0.5);
    CHECK(m.matched_total == 2);
    CHECK(m.motp == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("removing a false positive never decreases MOTA") {
    std::vector<GtRecord> gts;
    std::vector<TrackRecord> preds;
    for (int f = 0; f < 4; ++f) {
        gts.push_back(gt(0, f, 0, 10, 10));
        preds.push_back(trk(0, f, 1, make_oriented_box(10, 10, 4, 8, 0)));
    }
    preds.push_back(trk(0, 2, 9, make_oriented_box(50, 50, 4, 8, 0)));  // FP
    MotMetrics with_fp = mot_evaluate(preds, gts, 0.5);
    preds.pop_back();
    MotMetrics without_fp = mot_evaluate(preds, gts, 0.5);
    CHECK(without_fp.mota >= with_fp.mota);
}

TEST_CASE("match continuity holds against a slightly better newcomer") {
    // GT matched to id 1 in frame 0; in frame 1 a new id 2 overlaps a bit
    // better, but continuity keeps id 1 and no switch is counted
    std::vector<GtRecord> gts{gt(0, 0, 0, 10, 10), gt(0, 1, 0, 10, 10)};
    std::vector<TrackRecord> preds{
        trk(0, 0, 1, make_oriented_box(10, 10, 4, 8, 0)),
        trk(0, 1, 1, make_oriented_box(10.8, 10, 4, 8, 0)),
        trk(0, 1, 2, make_oriented_box(10.2, 10, 4, 8, 0)),
    };
    MotMetrics m = mot_evaluate(preds, gts, 0.5);
    CHECK(m.idsw == 0);
    CHECK(m.fp == 1);  // the newcomer stays unmatched
}
