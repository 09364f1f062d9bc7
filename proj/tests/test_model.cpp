#include <cmath>
#include <random>

#include "doctest.h"

#include "glyphformer/error.hpp"
#include "glyphformer/model.hpp"
#include "gradcheck.hpp"

using namespace glyphformer;

namespace {

std::vector<const TokenSequence*> pointers(const std::vector<TokenSequence>& seqs) {
    std::vector<const TokenSequence*> out;
    for (const auto& s : seqs) out.push_back(&s);
    return out;
}

}  // namespace

TEST_CASE("gradients match central differences") {
    for (auto mode : {TokenMode::Point, TokenMode::Command}) {
        for (double dropout : {0.0, 0.2}) {
            CAPTURE(to_string(mode));
            CAPTURE(dropout);
            const auto cfg = testing::tiny_config(mode, 3, dropout);
            const auto res = testing::gradient_check(cfg, 100);
            MESSAGE("worst: " << res.worst);
            CHECK(res.max_rel_error < 1e-4);
        }
    }
}

TEST_CASE("untrained model predicts uniformly") {
    for (int k : {2, 4, 16}) {
        EncoderConfig cfg;
        cfg.num_classes = k;
        cfg.seed = 9;
        const auto params = ModelParams<double>::initialize(cfg);
        std::mt19937_64 rng(5);
        auto tiny = testing::tiny_config(TokenMode::Point, 0);
        tiny.num_classes = k;
        const auto seqs = testing::random_sequences(tiny, rng, 4);
        const auto ptrs = pointers(seqs);
        const auto lg = loss_and_grads<double>(std::span<const TokenSequence* const>(ptrs), params, cfg);
        CHECK(std::abs(lg.loss - std::log(static_cast<double>(k))) < 1e-12);
    }
}

TEST_CASE("initialization follows the parameter roles") {
    EncoderConfig cfg;
    cfg.seed = 1;
    auto p = ModelParams<float>::initialize(cfg);
    CHECK(p.layers.size() == 3);
    CHECK((p.layers[0].ln1_gain.array() == 1.0f).all());
    CHECK(p.layers[2].b1.isZero());
    CHECK(p.classifier.isZero());
    const float max_abs = p.layers[1].wq.cwiseAbs().maxCoeff();
    CHECK(max_abs > 0.0f);
    CHECK(max_abs <= 0.04f + 1e-6f);
    auto again = ModelParams<float>::initialize(cfg);
    CHECK(again.layers[1].wq == p.layers[1].wq);
}

TEST_CASE("padding does not leak into real positions") {
    const auto cfg = testing::tiny_config(TokenMode::Point, 4);
    std::mt19937_64 rng(8);
    auto params = testing::random_params(cfg, rng);
    auto seqs = testing::random_sequences(cfg, rng, 1);
    TokenSequence longer = seqs[0];
    for (int i = 0; i < 5; ++i) longer.points.push_back({0, 0, 1, 1, 1});

    const std::vector<TokenSequence> alone = {seqs[0]};
    const std::vector<TokenSequence> padded = {seqs[0], longer};
    const auto a = forward<double>(assemble_batch<double>(std::span<const TokenSequence>(alone), params.embeddings),
                                   params, cfg, false);
    const auto b = forward<double>(assemble_batch<double>(std::span<const TokenSequence>(padded), params.embeddings),
                                   params, cfg, false);
    CHECK((a.row(0) - b.row(0)).cwiseAbs().maxCoeff() < 1e-12);

    const auto batch = assemble_batch<double>(std::span<const TokenSequence>(padded), params.embeddings);
    const auto w = attention_weights<double>(batch.embedded, batch.mask, batch.steps, 0, 1, params.layers[0], cfg);
    const int len = batch.lengths[0];
    for (int q = 0; q < batch.steps; ++q) {
        CHECK(std::abs(w.row(q).sum() - 1.0) < 1e-12);
        for (int k = len; k < batch.steps; ++k) CHECK(w(q, k) == 0.0);
    }
}

TEST_CASE("attention shape checks") {
    const auto cfg = testing::tiny_config(TokenMode::Point, 4);
    const auto p = ModelParams<double>::zeros(cfg);
    const Matrix<double> x = Matrix<double>::Zero(5, cfg.d_model);
    const std::vector<std::uint8_t> mask(5, 1);
    CHECK_THROWS_AS(attention<double>(x, mask, 2, 3, p.layers[0], cfg), Error);
}

TEST_CASE("non-finite activations are reported") {
    const auto cfg = testing::tiny_config(TokenMode::Point, 4);
    std::mt19937_64 rng(2);
    auto params = testing::random_params(cfg, rng);
    params.layers[0].wq(0, 0) = std::numeric_limits<double>::quiet_NaN();
    const auto seqs = testing::random_sequences(cfg, rng, 2);
    try {
        (void)forward<double>(assemble_batch<double>(std::span<const TokenSequence>(seqs), params.embeddings), params,
                              cfg, false);
        FAIL("expected NonFiniteActivation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonFiniteActivation);
    }
}

TEST_CASE("float and double agree") {
    const auto cfg = testing::tiny_config(TokenMode::Command, 6);
    std::mt19937_64 rng(6);
    auto pd = testing::random_params(cfg, rng);
    const auto pf = pd.cast<float>();
    const auto seqs = testing::random_sequences(cfg, rng, 3);
    const auto ptrs = pointers(seqs);
    const std::span<const TokenSequence* const> span(ptrs);
    const double ld = loss_and_grads<double>(span, pd, cfg).loss;
    const float lf = loss_and_grads<float>(span, pf, cfg).loss;
    CHECK(std::abs(ld - lf) < 1e-4);
}

TEST_CASE("dropout is off at inference and seeded in training") {
    const auto cfg = testing::tiny_config(TokenMode::Point, 1, 0.3);
    std::mt19937_64 rng(4);
    auto p = testing::random_params(cfg, rng);
    const auto seqs = testing::random_sequences(cfg, rng, 2);
    const auto batch = assemble_batch<double>(std::span<const TokenSequence>(seqs), p.embeddings);
    CHECK(forward<double>(batch, p, cfg, false, 1) == forward<double>(batch, p, cfg, false, 2));
    CHECK(forward<double>(batch, p, cfg, true, 1) == forward<double>(batch, p, cfg, true, 1));
    CHECK(forward<double>(batch, p, cfg, true, 1) != forward<double>(batch, p, cfg, true, 2));
}

TEST_CASE("config JSON round trip") {
    auto cfg = testing::tiny_config(TokenMode::Command, 77, 0.1);
    CHECK(encoder_config_from_json(to_json(cfg)) == cfg);
    cfg.heads = 3;
    CHECK_THROWS_AS(cfg.check(), Error);
}
