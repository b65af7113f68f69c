#include "rankbench/checkpoint.hpp"
#include "rankbench/error.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstring>

using namespace rankbench;
using testing::read_text;
using testing::TempDir;
using testing::write_text;

namespace {

ModelParams sample_params() {
    ModelConfig c;
    c.d_model = 8;
    c.n_heads = 2;
    c.d_ff = 12;
    c.n_layers = 2;
    c.window = 6;
    return init_params(c, 1234);
}

}  // namespace

TEST_CASE("save and load round trip at float32 precision") {
    TempDir dir("ckpt");
    const ModelParams p = sample_params();
    save_checkpoint(p, dir / "m.bin");
    const ModelParams q = load_checkpoint(dir / "m.bin");
    CHECK(q.config == p.config);
    CHECK(q.seed == 1234);
    const ModelParams expected = quantize_to_checkpoint_precision(p);
    CHECK(q.values == expected.values);
    CHECK(q.positional == expected.positional);
    for (std::size_t i = 0; i < p.values.size(); ++i)
        CHECK(std::abs(q.values[i] - p.values[i]) <= 1e-7 * std::max(1.0, std::abs(p.values[i])));
    // Saving the loaded copy reproduces the file byte for byte.
    save_checkpoint(q, dir / "again.bin");
    CHECK(read_text(dir / "m.bin") == read_text(dir / "again.bin"));
}

TEST_CASE("container layout") {
    TempDir dir("layout");
    const ModelParams p = sample_params();
    save_checkpoint(p, dir / "m.bin");
    const std::string bytes = read_text(dir / "m.bin");
    REQUIRE(bytes.size() > 16);
    CHECK(std::memcmp(bytes.data(), "RBCKPT\0\0", 8) == 0);
    std::uint32_t version = 0, header = 0;
    std::memcpy(&version, bytes.data() + 8, 4);
    std::memcpy(&header, bytes.data() + 12, 4);
    CHECK(version == kCheckpointVersion);
    const auto meta = nlohmann::json::parse(bytes.substr(16, header));
    CHECK(meta.at("format_version") == 1);
    CHECK(meta.at("seed") == 1234);
    CHECK(meta.at("model").at("d_model") == 8);
    std::uint32_t count = 0;
    std::memcpy(&count, bytes.data() + 16 + header, 4);
    CHECK(count == parameter_layout(p.config).size() + 1);
    std::size_t expected = 16 + header + 4;
    for (const auto& t : parameter_layout(p.config)) expected += 4 + t.name.size() + 4 + 4 * t.shape.size() + 4 * t.size;
    expected += 4 + std::strlen("positional_encoding") + 4 + 8 + 4 * p.positional.size();
    CHECK(bytes.size() == expected);
}

TEST_CASE("corrupt files are rejected") {
    TempDir dir("corrupt");
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.bin"), IoError);
    write_text(dir / "junk.bin", "not a checkpoint at all");
    CHECK_THROWS_AS(load_checkpoint(dir / "junk.bin"), IoError);

    save_checkpoint(sample_params(), dir / "m.bin");
    const std::string good = read_text(dir / "m.bin");
    write_text(dir / "short.bin", good.substr(0, good.size() - 3));
    CHECK_THROWS_WITH_AS(load_checkpoint(dir / "short.bin"), doctest::Contains("truncated"), IoError);
    write_text(dir / "long.bin", good + "x");
    CHECK_THROWS_WITH_AS(load_checkpoint(dir / "long.bin"), doctest::Contains("trailing"), IoError);
    std::string badver = good;
    badver[8] = 9;
    write_text(dir / "ver.bin", badver);
    CHECK_THROWS_WITH_AS(load_checkpoint(dir / "ver.bin"), doctest::Contains("version"), IoError);
}

TEST_CASE("loaded checkpoint predicts like the quantized model") {
    TempDir dir("predict");
    const ModelParams p = sample_params();
    save_checkpoint(p, dir / "m.bin");
    const ModelParams q = load_checkpoint(dir / "m.bin");
    Rng rng(2);
    const auto x = oracle::normal_vector(rng, 6 * 5 * 2);
    CHECK(forward(q, x, 5).predictions == forward(quantize_to_checkpoint_precision(p), x, 5).predictions);
}
