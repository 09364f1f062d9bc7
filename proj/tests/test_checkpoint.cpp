#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"

#include "glyphformer/checkpoint.hpp"
#include "glyphformer/error.hpp"
#include "gradcheck.hpp"

using namespace glyphformer;
namespace fs = std::filesystem;

namespace {

Checkpoint sample_checkpoint() {
    Checkpoint c;
    c.encoder = testing::tiny_config(TokenMode::Command, 5);
    c.encoder.layers = 1;
    c.representation = Representation::PostScript;
    c.labels = {"sans", "serif", "mono"};
    c.epoch = 4;
    std::mt19937_64 rng(1);
    c.params = testing::random_params(c.encoder, rng).cast<float>();
    c.state = OptimizerState<float>::create(c.encoder, c.optimizer);
    c.state.step = 17;
    c.state.first_moment = testing::random_params(c.encoder, rng).cast<float>();
    c.state.second_moment = testing::random_params(c.encoder, rng).cast<float>();
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("checkpoint round trip is exact") {
    const fs::path path = fs::temp_directory_path() / "gf_roundtrip.ckpt";
    auto c = sample_checkpoint();
    save_checkpoint(path, c);
    auto back = load_checkpoint(path);
    CHECK(back.encoder == c.encoder);
    CHECK(back.optimizer == c.optimizer);
    CHECK(back.representation == c.representation);
    CHECK(back.labels == c.labels);
    CHECK(back.epoch == 4);
    CHECK(back.state.step == 17);
    auto a = c.params.refs();
    auto b = back.params.refs();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i].value == *b[i].value);
    CHECK(*c.state.second_moment.refs()[3].value == *back.state.second_moment.refs()[3].value);

    // Saving again produces the same bytes.
    const fs::path again = fs::temp_directory_path() / "gf_roundtrip2.ckpt";
    save_checkpoint(again, back);
    CHECK(slurp(path) == slurp(again));
}

TEST_CASE("bad checkpoints are rejected") {
    const fs::path path = fs::temp_directory_path() / "gf_bad.ckpt";
    save_checkpoint(path, sample_checkpoint());
    std::string bytes = slurp(path);

    std::string wrong_magic = bytes;
    wrong_magic[0] = 'X';
    std::ofstream(path, std::ios::binary) << wrong_magic;
    CHECK_THROWS_AS(load_checkpoint(path), Error);

    std::ofstream(path, std::ios::binary) << bytes.substr(0, bytes.size() - 10);
    try {
        (void)load_checkpoint(path);
        FAIL("expected IoError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::IoError);
    }

    // Header claims two layers while the tensor table lists one.
    std::string layers = bytes;
    const auto pos = layers.find("\"layers\":1");
    REQUIRE(pos != std::string::npos);
    layers[pos + 9] = '2';
    std::ofstream(path, std::ios::binary) << layers;
    try {
        (void)load_checkpoint(path);
        FAIL("expected ConfigMismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ConfigMismatch);
    }
    CHECK_THROWS_AS(load_checkpoint("/no/such.ckpt"), Error);
}
