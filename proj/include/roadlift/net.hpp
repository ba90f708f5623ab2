#pragma once

// Reference inference for the fixed descriptor network: six blocks of
// (3x3 conv, stride 1, same padding, ReLU) + (2x2 max pool, stride 2), each
// doubling channels and halving resolution, then three fully connected layers
// (ReLU after the first two, identity after the last).

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace roadlift {

struct NetSpec {
  int input_size = 128;
  int input_channels = 4;
  int blocks = 6;
  std::vector<int> fc_sizes = {256, 64, 22};  // outputs of FC1..FC3

  int channelsAfter(int block) const { return input_channels << block; }
  int spatialAfter(int block) const { return input_size >> block; }
  int flattenedSize() const {
    const int s = spatialAfter(blocks);
    return channelsAfter(blocks) * s * s;
  }
};

struct LayerShape {
  std::string name;
  std::vector<int> weight_shape;  // conv: out, in, 3, 3; fc: out, in
  int outputs = 0;
  std::int64_t parameters() const;
};

std::vector<LayerShape> layerShapes(const NetSpec& spec = {});
std::int64_t parameterCount(const NetSpec& spec = {});

// Feature map stored channel-major: data(c, y * width + x).
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  Eigen::MatrixXf data;

  FeatureMap() = default;
  FeatureMap(int c, int h, int w) : channels(c), height(h), width(w), data(Eigen::MatrixXf::Zero(c, h * w)) {}
  float& at(int c, int y, int x) { return data(c, y * width + x); }
  float at(int c, int y, int x) const { return data(c, y * width + x); }
};

struct Layer {
  std::string name;
  Eigen::MatrixXf weight;  // rows = outputs; conv columns ordered (in, ky, kx)
  Eigen::VectorXf bias;
};

class WeightBundle {
 public:
  static constexpr std::uint16_t kVersionMajor = 1;
  static constexpr std::uint16_t kVersionMinor = 0;

  WeightBundle() = default;
  explicit WeightBundle(NetSpec spec);  // all-zero weights

  static WeightBundle random(std::uint64_t seed, NetSpec spec = {});
  static WeightBundle load(const std::filesystem::path& path, NetSpec spec = {});
  void save(const std::filesystem::path& path) const;

  // Throws ShapeMismatch naming the first bad layer, NonFiniteWeights on NaN/inf.
  void validate() const;

  const NetSpec& spec() const { return spec_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

 private:
  NetSpec spec_;
  std::vector<Layer> layers_;
};

// Single-sample inference. Throws ShapeMismatch when the input is not
// spec.input_channels x spec.input_size x spec.input_size.
Eigen::VectorXf forward(const WeightBundle& weights, const FeatureMap& input);

}  // namespace roadlift
