// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include "radtrack/losses.hpp"

#include <cmath>

using namespace radtrack;

namespace {

Annotation ann(int id, double cx, double cy, double w, double l, double theta) {
    return Annotation{id, make_oriented_box(cx, cy, w, l, theta)};
}

ModelConfig small_model_config() {
    ModelConfig cfg;
    cfg.backbone.stage_widths = {8, 12, 16, 24};
    cfg.backbone.out_channels = 16;
    cfg.relational.k = 4;
    cfg.relational.d_pos = 16;
    cfg.relational.layers = 1;
    cfg.relational.heads = 2;
    cfg.relational.ff_hidden = 24;
    cfg.head_width = 12;
    return cfg;
}

// heads that emit an exact constant row regardless of features
VectorHead constant_head(double a, double b) {
    Rng rng(1);
    VectorHead head = VectorHead::make(4, 4, 2, rng, {a, b});
    std::fill(head.l1.weight.data(), head.l1.weight.data() + head.l1.weight.numel(), 0.0);
    std::fill(head.l2.weight.data(), head.l2.weight.data() + head.l2.weight.numel(), 0.0);
    return head;
}

} // namespace

TEST_CASE("gt heatmap peaks at exactly 1 on each center cell") {
    Tensor hm = make_gt_heatmap({ann(0, 17, 9, 6, 10, 30)}, 16, 16, 4);
    // center (17, 9) / 4 -> cell (4, 2)
    CHECK(hm.at({0, 2, 4}) == 1.0);
    double max_elsewhere = 0.0;
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            if (!(x == 4 && y == 2)) max_elsewhere = std::max(max_elsewhere, hm.at({0, y, x}));
    CHECK(max_elsewhere < 1.0);
}

TEST_CASE("gt heatmap value at one sigma is exp(-1/2)") {
    // min(w,l) = 48 at stride 4 gives sigma = 2
    Tensor hm = make_gt_heatmap({ann(0, 64, 64, 48, 60, 0)}, 32, 32, 4);
    CHECK(hm.at({0, 16, 16}) == 1.0);
    CHECK(hm.at({0, 16, 18}) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
    CHECK(hm.at({0, 18, 16}) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("two distant objects give two unit peaks and quiet background") {
    Tensor hm = make_gt_heatmap({ann(0, 16, 16, 6, 8, 0), ann(1, 112, 112, 6, 8, 0)}, 32, 32, 4);
    CHECK(hm.at({0, 4, 4}) == 1.0);
    CHECK(hm.at({0, 28, 28}) == 1.0);
    // beyond 4 sigma (sigma = 1) of both peaks the target decays below 1e-3
    CHECK(hm.at({0, 16, 16}) < 1e-3);
}

TEST_CASE("gt heatmap is invariant to annotation order") {
    auto a = ann(0, 20, 24, 6, 9, 10);
    auto b = ann(1, 28, 30, 7, 12, 80);
    Tensor ab = make_gt_heatmap({a, b}, 16, 16, 4);
    Tensor ba = make_gt_heatmap({b, a}, 16, 16, 4);
    for (int64_t i = 0; i < ab.numel(); ++i) CHECK(ab.data()[i] == ba.data()[i]);
}

TEST_CASE("focal loss matches direct evaluation") {
    Tensor pred = Tensor::from_vector({1, 1, 1}, {0.5});
    Tensor pos = Tensor::from_vector({1, 1, 1}, {1.0});
    Tensor neg = Tensor::from_vector({1, 1, 1}, {0.0});
    const double expected = -0.25 * std::log(0.5);
    CHECK(focal_loss(pred, pos).item() == doctest::Approx(expected).epsilon(1e-12));
    CHECK(focal_loss(pred, neg).item() == doctest::Approx(expected).epsilon(1e-12));

    Tensor perfect = Tensor::from_vector({1, 1, 1}, {1.0 - 1e-7});
    CHECK(focal_loss(perfect, pos).item() < 1e-5);
}

TEST_CASE("smooth_l1 values and branch continuity") {
    CHECK(smooth_l1(0.5) == doctest::Approx(0.125));
    CHECK(smooth_l1(2.0) == doctest::Approx(1.5));
    CHECK(smooth_l1(1.0) == doctest::Approx(0.5));
    CHECK(smooth_l1(1.0 - 1e-12) == doctest::Approx(smooth_l1(1.0 + 1e-12)).epsilon(1e-9));
    CHECK(smooth_l1(-2.0) == doctest::Approx(1.5));
}

TEST_CASE("smooth l1 over residual norms averages over objects") {
    // residual norms 0 and 2 -> (0 + 1.5) / 2
    Tensor pred = Tensor::from_vector({2, 2}, {3.0, 4.0, 1.0, 0.0});
    Tensor target = Tensor::from_vector({2, 2}, {3.0, 4.0, 1.0, 2.0});
    CHECK(smooth_l1_norm_loss(pred, target).item() == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("box loss is zero when the head reproduces the target") {
    VectorHead head = constant_head(6.0, 9.0);
    Tensor z = Tensor::zeros({4, 8, 8});
    TargetBundle t = make_targets({ann(0, 12, 12, 6.0, 9.0, 0)}, 32, 32, 4);
    CHECK(box_loss(z, t, head).item() == doctest::Approx(0.0));
}

TEST_CASE("box loss of a 0.5 residual norm is 0.125") {
    VectorHead head = constant_head(6.5, 9.0);  // off by (0.5, 0)
    Tensor z = Tensor::zeros({4, 8, 8});
    TargetBundle t = make_targets({ann(0, 12, 12, 6.0, 9.0, 0)}, 32, 32, 4);
    CHECK(box_loss(z, t, head).item() == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("zero objects contribute zero regression loss") {
    VectorHead head = constant_head(1.0, 1.0);
    Tensor z = Tensor::zeros({4, 8, 8});
    TargetBundle t = make_targets({}, 32, 32, 4);
    CHECK(box_loss(z, t, head).item() == 0.0);
    CHECK(orientation_loss(z, t, head).item() == 0.0);
    CHECK(offset_loss(z, t, head).item() == 0.0);
}

TEST_CASE("decode_angle unit-circle cases") {
    CHECK(decode_angle(1.0, 0.0) == doctest::Approx(90.0));
    CHECK(decode_angle(0.0, -1.0) == doctest::Approx(180.0));
    const double r = std::sqrt(2.0) / 2.0;
    CHECK(decode_angle(-r, r) == doctest::Approx(315.0));
    CHECK_THROWS_AS(decode_angle(0.0, 0.0), std::invalid_argument);
}

TEST_CASE("angle encode-decode round trip is tight over [0,360)") {
    for (double theta = 0.0; theta < 360.0; theta += 0.7) {
        const double rad = theta * 3.14159265358979323846 / 180.0;
        const double back = decode_angle(std::sin(rad), std::cos(rad));
        double diff = std::abs(back - theta);
        diff = std::min(diff, 360.0 - diff);
        CHECK(diff < 1e-9);
    }
}

TEST_CASE("offset targets follow the rounding convention") {
    auto o1 = offset_target(8, 4, 4);
    CHECK(o1[0] == 0.0);
    CHECK(o1[1] == 0.0);
    auto o2 = offset_target(9, 7, 4);
    CHECK(o2[0] == doctest::Approx(0.25));
    CHECK(o2[1] == doctest::Approx(-0.25));
    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
        auto o = offset_target(rng.uniform(0.0, 64.0), rng.uniform(0.0, 64.0), 4);
        CHECK(std::abs(o[0]) <= 0.5);
        CHECK(std::abs(o[1]) <= 0.5);
    }
}

TEST_CASE("tracking targets: static object maps to zero, +4 px at stride 4 maps to one") {
    VectorHead exact = constant_head(0.0, 0.0);
    Tensor z = Tensor::zeros({4, 8, 8});
    auto a0 = ann(3, 16, 16, 4, 8, 0);
    CHECK(tracking_offset_loss(z, {a0}, {a0}, 4, exact).item() == doctest::Approx(0.0));

    VectorHead moving = constant_head(1.0, 0.0);
    auto cur = ann(3, 20, 16, 4, 8, 0);
    auto prev = ann(3, 16, 16, 4, 8, 0);
    CHECK(tracking_offset_loss(z, {cur}, {prev}, 4, moving).item() == doctest::Approx(0.0));
    // and a mismatched head pays for it
    CHECK(tracking_offset_loss(z, {cur}, {prev}, 4, exact).item() > 0.0);
    // disjoint ids contribute nothing
    auto stranger = ann(9, 30, 30, 4, 8, 0);
    CHECK(tracking_offset_loss(z, {cur}, {stranger}, 4, exact).item() == 0.0);
}

TEST_CASE("total loss is the weighted linear combination") {
    LossTerms terms;
    terms.heatmap = Tensor::scalar(1.0);
    terms.pre = Tensor::scalar(1.0);
    terms.box = Tensor::scalar(1.0);
    terms.orientation = Tensor::scalar(1.0);
    terms.offset = Tensor::scalar(1.0);
    LossWeights unit{1, 1, 1, 1, 1, 1};
    CHECK(total_loss(terms, unit, false).item() == doctest::Approx(5.0));
    LossWeights zero{0, 0, 0, 0, 0, 0};
    CHECK(total_loss(terms, zero, false).item() == doctest::Approx(0.0));
    LossWeights doubled = unit;
    doubled.box = 2.0;
    CHECK(total_loss(terms, doubled, false).item() - total_loss(terms, unit, false).item() ==
          doctest::Approx(1.0));
}

TEST_CASE("composite regression losses match finite differences through the head") {
    Rng rng(71);
    VectorHead head = VectorHead::make(6, 8, 2, rng);
    Tensor z = radtrack::testing::random_tensor({6, 8, 8}, rng);
    z.set_requires_grad(true);
    TargetBundle t = make_targets({ann(0, 9, 13, 6, 9, 25), ann(1, 22, 6, 5, 11, 130)}, 32, 32, 4);
    auto forward = [&]() { return box_loss(z, t, head); };
    Tensor loss = forward();
    backprop(Graph::current(), loss);
    const double h = 1e-5;
    int checked = 0;
    for (int64_t j = 0; j < z.numel(); j += 37) {
        NoGradGuard guard;
        const double keep = z.data()[j];
        z.data()[j] = keep + h;
        const double fp = forward().item();
        z.data()[j] = keep - h;
        const double fm = forward().item();
        z.data()[j] = keep;
        const double fd = (fp - fm) / (2 * h);
        CHECK(std::abs(fd - z.grad()[j]) / std::max({1.0, std::abs(fd)}) < 1e-4);
        ++checked;
    }
    CHECK(checked > 10);
}

TEST_CASE("train step learns a fixed batch and reaches all parameter groups") {
    SceneConfig scene;
    scene.height = 32;
    scene.width = 32;
    scene.min_objects = 2;
    scene.max_objects = 3;
    scene.frames = 6;
    scene.sigma_blur = 0.5;
    scene.range_blur_gain = 0.01;
    scene.speckle = 0.08;

    Dataset data;
    data.height = scene.height;
    data.width = scene.width;
    for (int i = 0; i < 2; ++i) data.sequences.push_back(simulate_sequence(scene, 100 + i, i));
    auto pairs = collect_pairs(data, 3);
    REQUIRE(pairs.size() == 6);

    DetectorModel model(small_model_config(), 42);
    Adam opt(model.parameters(), AdamConfig{3e-3, 1e-2, 0.9, 0.999, 1e-8});
    LossWeights weights;
    StepRecord first = bidirectional_train_step(model, opt, pairs, weights, true);
    StepRecord last{};
    for (int step = 1; step < 30; ++step)
        last = bidirectional_train_step(model, opt, pairs, weights, true);
    CHECK(last.total < first.total);

    // gradients reached both the backbone and the relational parameters
    bidirectional_train_step(model, opt, pairs, weights, true);
    std::vector<Tensor> backbone_params;
    model.backbone().params(backbone_params);
    double bb = 0.0;
    for (Tensor& p : backbone_params)
        for (int64_t i = 0; i < p.numel(); ++i) bb += std::abs(p.grad()[i]);
    CHECK(bb > 0.0);
    std::vector<Tensor> rel_params;
    model.relational().params(rel_params);
    double rl = 0.0;
    for (Tensor& p : rel_params)
        for (int64_t i = 0; i < p.numel(); ++i) rl += std::abs(p.grad()[i]);
    CHECK(rl > 0.0);
}

TEST_CASE("train step is deterministic given the seed") {
    SceneConfig scene;
    scene.height = 32;
    scene.width = 32;
    scene.frames = 5;
    Dataset data;
    data.height = 32;
    data.width = 32;
    data.sequences.push_back(simulate_sequence(scene, 7, 0));
    auto pairs = collect_pairs(data, 1);
    auto run = [&]() {
        DetectorModel model(small_model_config(), 9);
        Adam opt(model.parameters(), AdamConfig{});
        LossWeights weights;
        StepRecord rec{};
        for (int i = 0; i < 2; ++i)
            rec = bidirectional_train_step(model, opt, {pairs[0], pairs[1]}, weights, false);
        return rec.total;
    };
    CHECK(run() == run());
}
