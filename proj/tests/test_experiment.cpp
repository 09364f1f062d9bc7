#include <cmath>
#include <set>

#include "doctest.h"

#include "glyphformer/error.hpp"
#include "glyphformer/experiment.hpp"

using namespace glyphformer;

namespace {

const std::string kData = GF_TEST_DATA;

nlohmann::json toy_manifest_json() {
    return {{"task", "style"},
            {"seed", 3},
            {"representation", "postscript"},
            {"fonts",
             {{{"path", "toy_boxes.ttf"}, {"label", "boxes"}}, {{"path", "toy_blobs.ttf"}, {"label", "blobs"}}}}};
}

Manifest toy_manifest() { return Manifest::from_json(toy_manifest_json(), kData); }

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::IoError;
}

}  // namespace

TEST_CASE("manifest parsing and presets") {
    const Manifest m = toy_manifest();
    CHECK(m.entries.size() == 2);
    CHECK(m.entries[0].font == std::filesystem::path(kData) / "toy_boxes.ttf");
    CHECK(m.preset == "desk");
    CHECK(m.training.epochs == 64);
    CHECK(m.training.batch_size == 256);
    CHECK(m.glyph_cap == 500);
    CHECK(m.class_labels() == std::vector<std::string>{"boxes", "blobs"});

    auto j = toy_manifest_json();
    j["preset"] = "paper";
    j["epochs"] = 3;
    const Manifest p = Manifest::from_json(j, kData);
    CHECK(p.training.epochs == 3);
    CHECK(p.training.batch_size == 1024);
    CHECK(p.glyph_cap == 0);
}

TEST_CASE("manifest validation") {
    auto one_label = toy_manifest_json();
    one_label["fonts"][1]["label"] = "boxes";
    CHECK(kind_of([&] { (void)Manifest::from_json(one_label, kData); }) == ErrorKind::InvalidArgument);
    auto bad_split = toy_manifest_json();
    bad_split["split"] = {0.5, 0.2, 0.2};
    CHECK(kind_of([&] { (void)Manifest::from_json(bad_split, kData); }) == ErrorKind::InvalidArgument);
    auto weight = toy_manifest_json();
    weight["task"] = "weight";
    CHECK(kind_of([&] { (void)Manifest::from_json(weight, kData); }) == ErrorKind::InvalidArgument);
    weight["fonts"][0]["weight"] = "bold";
    weight["fonts"][1]["weight"] = "bold";
    CHECK(Manifest::from_json(weight, kData).class_labels() == std::vector<std::string>{"boxes-bold", "blobs-bold"});
    auto preset = toy_manifest_json();
    preset["preset"] = "laptop";
    CHECK(kind_of([&] { (void)Manifest::from_json(preset, kData); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("per-font 80/10/10 split") {
    const SplitPlan plan = plan_splits(toy_manifest());
    CHECK(plan.train.size() == 160);
    CHECK(plan.val.size() == 20);
    CHECK(plan.test.size() == 20);
    for (int font = 0; font < 2; ++font) {
        std::set<char32_t> train, val, test;
        for (const auto& s : plan.train)
            if (s.font_index == font) train.insert(s.codepoint);
        for (const auto& s : plan.val)
            if (s.font_index == font) val.insert(s.codepoint);
        for (const auto& s : plan.test)
            if (s.font_index == font) test.insert(s.codepoint);
        CHECK(train.size() == 80);
        CHECK(val.size() == 10);
        CHECK(test.size() == 10);
        std::set<char32_t> all = train;
        all.insert(val.begin(), val.end());
        all.insert(test.begin(), test.end());
        CHECK(all.size() == 100);
        CHECK(plan.stats[font].usable == 100);
    }
}

TEST_CASE("splits depend only on the seed") {
    const SplitPlan a = plan_splits(toy_manifest());
    const SplitPlan b = plan_splits(toy_manifest());
    CHECK(a.train == b.train);
    CHECK(a.test == b.test);
    auto j = toy_manifest_json();
    j["seed"] = 4;
    const SplitPlan c = plan_splits(Manifest::from_json(j, kData));
    CHECK(a.train != c.train);
}

TEST_CASE("glyph cap limits each font") {
    auto j = toy_manifest_json();
    j["glyph_cap"] = 30;
    const SplitPlan plan = plan_splits(Manifest::from_json(j, kData));
    CHECK(plan.train.size() == 48);
    CHECK(plan.val.size() == 6);
    CHECK(plan.test.size() == 6);
}

TEST_CASE("dataset errors") {
    auto missing = toy_manifest_json();
    missing["fonts"][0]["path"] = "nope.ttf";
    try {
        (void)build_dataset(Manifest::from_json(missing, kData));
        FAIL("expected FontLoadError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::FontLoadError);
        CHECK(std::string(e.what()).find("nope.ttf") != std::string::npos);
    }
    auto blank = toy_manifest_json();
    blank["fonts"][1]["path"] = "blank.ttf";
    CHECK(kind_of([&] { (void)build_dataset(Manifest::from_json(blank, kData)); }) == ErrorKind::EmptyClass);
}

TEST_CASE("every representation shares the same partition") {
    const SplitPlan plan = plan_splits(toy_manifest());
    for (auto r : kAllRepresentations) {
        const Dataset d = encode_dataset(plan, r);
        CHECK(d.test_samples == plan.test);
        CHECK(d.train.size() == plan.train.size());
        CHECK(d.mode == token_mode_for(r));
        for (std::size_t i = 0; i < d.train.size(); ++i) CHECK(d.train[i].label == plan.train[i].label);
    }
}

TEST_CASE("zero epochs evaluates the initial model") {
    Manifest m = toy_manifest();
    m.training.epochs = 0;
    const Dataset d = build_dataset(m);
    const auto tr = train(d, encoder_for(m, d), m.training, m.seed);
    CHECK(tr.log.empty());
    const auto report = evaluate(tr.final, d, Split::Test);
    CHECK(std::abs(report.loss - std::log(2.0)) < 1e-6);
}

TEST_CASE("short training run lowers the loss and evaluation is pure") {
    Manifest m = toy_manifest();
    m.encoder.d_model = 16;
    m.encoder.heads = 2;
    m.encoder.layers = 1;
    m.encoder.ffn_dim = 32;
    m.training.epochs = 6;
    m.training.batch_size = 32;
    m.training.optimizer.base_lr = 3e-3;
    m.training.optimizer.warmup = 10;
    const Dataset d = build_dataset(m);
    std::vector<int> seen;
    const auto tr = train(d, encoder_for(m, d), m.training, m.seed, [&](const EpochLog& e) { seen.push_back(e.epoch); });
    REQUIRE(tr.log.size() == 6);
    CHECK(seen == std::vector<int>{1, 2, 3, 4, 5, 6});
    CHECK(tr.log.back().train_loss < tr.log.front().train_loss);
    CHECK(tr.log[0].lr == doctest::Approx(lr_at(5, m.training.optimizer)));
    CHECK(tr.best_epoch >= 1);
    CHECK(tr.final.epoch == 6);
    const auto a = evaluate(tr.best, d, Split::Val);
    const auto b = evaluate(tr.best, d, Split::Val);
    CHECK(a.loss == b.loss);
    CHECK(a.confusion == b.confusion);
    CHECK(a.loss == doctest::Approx(tr.log[tr.best_epoch - 1].val_loss));
}

TEST_CASE("evaluation rejects a mismatched checkpoint") {
    Manifest m = toy_manifest();
    m.training.epochs = 0;
    const Dataset ps = build_dataset(m);
    const auto tr = train(ps, encoder_for(m, ps), m.training, m.seed);
    m.representation = Representation::OriginalTT;
    const Dataset orig = build_dataset(m);
    CHECK(kind_of([&] { (void)evaluate(tr.final, orig, Split::Test); }) == ErrorKind::ConfigMismatch);
    m.representation = Representation::SegmentedTT;
    const Dataset seg = build_dataset(m);
    CHECK(kind_of([&] { (void)evaluate(tr.final, seg, Split::Test); }) == ErrorKind::ConfigMismatch);
}

TEST_CASE("divergence surfaces the last good state") {
    Manifest m = toy_manifest();
    m.encoder.d_model = 8;
    m.encoder.heads = 2;
    m.encoder.layers = 1;
    m.encoder.ffn_dim = 8;
    m.training.epochs = 3;
    m.training.batch_size = 64;
    m.training.optimizer.base_lr = 1e30;
    m.training.optimizer.warmup = 0;
    const Dataset d = build_dataset(m);
    try {
        (void)train(d, encoder_for(m, d), m.training, m.seed);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.kind() == ErrorKind::DivergenceDetected);
        CHECK(e.last_good().labels == d.labels);
    }
}
