#include <cmath>

#include "doctest.h"

#include "glyphformer/error.hpp"
#include "glyphformer/optimizer.hpp"
#include "gradcheck.hpp"

using namespace glyphformer;

TEST_CASE("learning-rate schedule") {
    const AdamWConfig cfg;
    CHECK(lr_at(1, cfg) == doctest::Approx(1e-4 / 250));
    CHECK(lr_at(125, cfg) == doctest::Approx(5e-5));
    CHECK(std::abs(lr_at(250, cfg) - 1e-4) < 1e-18);
    CHECK(std::abs(lr_at(1000, cfg) - 5e-5) < 1e-18);
    CHECK(lr_at(4000, cfg) == doctest::Approx(2.5e-5));
    CHECK_THROWS_AS(lr_at(0, cfg), Error);
    AdamWConfig flat;
    flat.warmup = 0;
    CHECK(lr_at(10, flat) == 1e-4);
}

TEST_CASE("first AdamW step moves each weight by about lr") {
    auto cfg = testing::tiny_config(TokenMode::Point, 1);
    AdamWConfig opt;
    opt.warmup = 0;
    opt.base_lr = 0.01;
    opt.weight_decay = 0.0;
    auto p = ModelParams<double>::zeros(cfg);
    auto g = ModelParams<double>::zeros(cfg);
    g.classifier.setConstant(3.0);
    g.layers[0].b1.setConstant(-0.5);
    auto state = OptimizerState<double>::create(cfg, opt);
    adamw_step(p, g, state);
    CHECK(state.step == 1);
    CHECK(p.classifier(0, 0) == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(p.layers[0].b1(0, 0) == doctest::Approx(0.01).epsilon(1e-6));
    CHECK(p.layers[0].wq.isZero());
}

TEST_CASE("weight decay skips biases, gains and pad rows") {
    auto cfg = testing::tiny_config(TokenMode::Point, 1);
    AdamWConfig opt;
    opt.warmup = 0;
    opt.base_lr = 0.1;
    opt.weight_decay = 0.5;
    auto p = ModelParams<double>::zeros(cfg);
    for (auto& r : p.refs()) r.value->setOnes();
    const auto g = ModelParams<double>::zeros(cfg);
    auto state = OptimizerState<double>::create(cfg, opt);
    adamw_step(p, g, state);
    CHECK(p.layers[0].wq(0, 0) == doctest::Approx(0.95));
    CHECK(p.embeddings.loc_x(0, 0) == doctest::Approx(0.95));
    CHECK(p.embeddings.loc_x(cfg.bins, 0) == 1.0);
    CHECK(p.layers[0].bq(0, 0) == 1.0);
    CHECK(p.layers[0].ln1_gain(0, 0) == 1.0);
    CHECK(p.final_bias(0, 0) == 1.0);
}
