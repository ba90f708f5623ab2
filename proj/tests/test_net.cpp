#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <limits>

#include "roadlift/net.hpp"
#include "support.hpp"

using namespace roadlift;
using roadlift::testing::Rng;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "roadlift_unit_net";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_SUITE("net") {

TEST_CASE("default architecture parameter count") {
  // conv: sum over blocks of in*out*9 + out with channels 4, 8, ..., 256
  std::int64_t conv = 0;
  for (int c = 4; c < 256; c *= 2) conv += std::int64_t(c) * (2 * c) * 9 + 2 * c;
  // fc: 256 * 2 * 2 = 1024 inputs, then 256, 64, 22
  const std::int64_t fc = (1024 * 256 + 256) + (256 * 64 + 64) + (64 * 22 + 22);
  CHECK(conv == 393624);
  CHECK(fc == 280278);
  CHECK(parameterCount() == conv + fc);
  CHECK(parameterCount() == 673902);

  const auto shapes = layerShapes();
  REQUIRE(shapes.size() == 9u);
  CHECK(shapes[0].parameters() == 296);
  CHECK(shapes[8].parameters() == 1430);
  CHECK(shapes[6].weight_shape == std::vector<int>{256, 1024});
  std::int64_t sum = 0;
  for (const auto& s : shapes) sum += s.parameters();
  CHECK(sum == 673902);
}

TEST_CASE("forward pass matches a direct convolution reference") {
  Rng rng(41);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const WeightBundle w = WeightBundle::random(seed);
    const FeatureMap input = testing::randomInput(rng);
    const Eigen::VectorXf got = forward(w, input);
    const auto want = testing::referenceForward(w, input);
    REQUIRE(got.size() == 22);
    CHECK(testing::maxRelativeError(got, want) < 1e-5);
  }
}

TEST_CASE("forward pass on a small custom spec") {
  NetSpec spec;
  spec.input_size = 16;
  spec.input_channels = 2;
  spec.blocks = 3;
  spec.fc_sizes = {8, 5};
  CHECK(spec.flattenedSize() == 16 * 2 * 2);
  Rng rng(42);
  const WeightBundle w = WeightBundle::random(9, spec);
  const FeatureMap input = testing::randomInput(rng, spec);
  CHECK(testing::maxRelativeError(forward(w, input), testing::referenceForward(w, input)) < 1e-5);
}

TEST_CASE("forward rejects a wrongly shaped input") {
  const WeightBundle w = WeightBundle::random(1);
  CHECK_THROWS_AS(forward(w, FeatureMap(3, 128, 128)), ShapeMismatch);
  CHECK_THROWS_AS(forward(w, FeatureMap(4, 64, 64)), ShapeMismatch);
}

TEST_CASE("weights survive save and load bit for bit, under 3 MB") {
  const WeightBundle w = WeightBundle::random(5);
  const auto path = scratch("w.bin");
  w.save(path);
  CHECK(std::filesystem::file_size(path) < 3u * 1024 * 1024);
  CHECK(std::filesystem::file_size(path) >= 673902u * 4);
  const WeightBundle r = WeightBundle::load(path);
  REQUIRE(r.layers().size() == w.layers().size());
  for (std::size_t i = 0; i < w.layers().size(); ++i) {
    CHECK(r.layers()[i].name == w.layers()[i].name);
    CHECK(r.layers()[i].weight == w.layers()[i].weight);
    CHECK(r.layers()[i].bias == w.layers()[i].bias);
  }
  CHECK(WeightBundle::random(5).layers()[3].weight == w.layers()[3].weight);
  CHECK_FALSE(WeightBundle::random(6).layers()[3].weight == w.layers()[3].weight);
}

TEST_CASE("load rejects foreign, truncated and mismatched files") {
  const auto bad = scratch("bad.bin");
  std::ofstream(bad, std::ios::binary) << "NOPE0000";
  CHECK_THROWS_AS(WeightBundle::load(bad), FormatError);

  const auto good = scratch("good.bin");
  WeightBundle::random(1).save(good);
  std::filesystem::copy_file(good, bad, std::filesystem::copy_options::overwrite_existing);
  std::filesystem::resize_file(bad, std::filesystem::file_size(good) - 10);
  CHECK_THROWS_AS(WeightBundle::load(bad), FormatError);

  NetSpec bottom;
  bottom.fc_sizes = {256, 64, 9};
  CHECK_THROWS_AS(WeightBundle::load(good, bottom), ShapeMismatch);
}

TEST_CASE("validation catches shapes and non-finite values") {
  WeightBundle w = WeightBundle::random(2);
  w.validate();
  w.layers()[2].weight(0, 0) = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(w.validate(), NonFiniteWeights);
  CHECK_THROWS_AS(w.save(scratch("nan.bin")), NonFiniteWeights);
  WeightBundle v = WeightBundle::random(2);
  v.layers()[7].bias.resize(3);
  CHECK_THROWS_AS(v.validate(), ShapeMismatch);
}

}
