#include "roadlift/net.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "roadlift/error.hpp"
#include "roadlift/random.hpp"

namespace roadlift {

namespace {

constexpr std::array<char, 4> kMagic = {'R', 'L', 'W', 'B'};

static_assert(std::endian::native == std::endian::little, "weight files are little-endian");

template <typename T>
void writeRaw(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T readRaw(std::istream& in, const std::string& what) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T)))
    throw FormatError("weight file truncated while reading " + what);
  return value;
}

std::string shapeString(const std::vector<int>& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "x" : "") + std::to_string(shape[i]);
  return s;
}

FeatureMap conv3x3Relu(const FeatureMap& in, const Layer& layer) {
  const int hw = in.height * in.width;
  // im2col: rows ordered (channel, ky, kx), zero outside the image
  Eigen::MatrixXf cols = Eigen::MatrixXf::Zero(in.channels * 9, hw);
  for (int c = 0; c < in.channels; ++c) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const int row = c * 9 + ky * 3 + kx;
        for (int y = 0; y < in.height; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= in.height) continue;
          for (int x = 0; x < in.width; ++x) {
            const int sx = x + kx - 1;
            if (sx < 0 || sx >= in.width) continue;
            cols(row, y * in.width + x) = in.at(c, sy, sx);
          }
        }
      }
    }
  }
  FeatureMap out(static_cast<int>(layer.weight.rows()), in.height, in.width);
  out.data.noalias() = layer.weight * cols;
  out.data.colwise() += layer.bias;
  out.data = out.data.cwiseMax(0.0f);
  return out;
}

FeatureMap maxPool2x2(const FeatureMap& in) {
  FeatureMap out(in.channels, in.height / 2, in.width / 2);
  for (int c = 0; c < in.channels; ++c) {
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        out.at(c, y, x) = std::max(std::max(in.at(c, 2 * y, 2 * x), in.at(c, 2 * y, 2 * x + 1)),
                                   std::max(in.at(c, 2 * y + 1, 2 * x), in.at(c, 2 * y + 1, 2 * x + 1)));
      }
    }
  }
  return out;
}

}  // namespace

std::int64_t LayerShape::parameters() const {
  std::int64_t n = 1;
  for (int d : weight_shape) n *= d;
  return n + outputs;
}

std::vector<LayerShape> layerShapes(const NetSpec& spec) {
  std::vector<LayerShape> shapes;
  for (int b = 0; b < spec.blocks; ++b) {
    const int in = spec.channelsAfter(b), out = spec.channelsAfter(b + 1);
    shapes.push_back({"conv" + std::to_string(b + 1), {out, in, 3, 3}, out});
  }
  int in = spec.flattenedSize();
  for (std::size_t i = 0; i < spec.fc_sizes.size(); ++i) {
    shapes.push_back({"fc" + std::to_string(i + 1), {spec.fc_sizes[i], in}, spec.fc_sizes[i]});
    in = spec.fc_sizes[i];
  }
  return shapes;
}

std::int64_t parameterCount(const NetSpec& spec) {
  std::int64_t total = 0;
  for (const auto& s : layerShapes(spec)) total += s.parameters();
  return total;
}

WeightBundle::WeightBundle(NetSpec spec) : spec_(std::move(spec)) {
  for (const auto& s : layerShapes(spec_)) {
    const int cols = static_cast<int>(s.parameters() - s.outputs) / s.outputs;
    layers_.push_back({s.name, Eigen::MatrixXf::Zero(s.outputs, cols), Eigen::VectorXf::Zero(s.outputs)});
  }
}

WeightBundle WeightBundle::random(std::uint64_t seed, NetSpec spec) {
  WeightBundle bundle(std::move(spec));
  std::mt19937_64 rng(mixSeed({seed, 0x4E4554ULL}));
  for (auto& layer : bundle.layers_) {
    // He initialization for the rectifier layers
    std::normal_distribution<float> gauss(0.0f, std::sqrt(2.0f / static_cast<float>(layer.weight.cols())));
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = gauss(rng);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = 0.01f * gauss(rng);
  }
  return bundle;
}

void WeightBundle::validate() const {
  const auto shapes = layerShapes(spec_);
  if (layers_.size() != shapes.size())
    throw ShapeMismatch("expected " + std::to_string(shapes.size()) + " layers, got " +
                        std::to_string(layers_.size()));
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto& s = shapes[i];
    const auto& l = layers_[i];
    const Eigen::Index cols = (s.parameters() - s.outputs) / s.outputs;
    if (l.name != s.name || l.weight.rows() != s.outputs || l.weight.cols() != cols || l.bias.size() != s.outputs)
      throw ShapeMismatch("layer " + s.name + ": expected weight " + shapeString(s.weight_shape));
    if (!l.weight.allFinite() || !l.bias.allFinite())
      throw NonFiniteWeights("layer " + s.name + " holds non-finite values");
  }
}

// Layout: "RLWB", u16 major, u16 minor, u32 layer count, then per tensor
// u32 name length, name, u32 rank, u32 dims[rank], f32 values (row-major).
// Each layer contributes "<layer>.weight" then "<layer>.bias".
void WeightBundle::save(const std::filesystem::path& path) const {
  validate();
  const auto shapes = layerShapes(spec_);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
    out.write(kMagic.data(), kMagic.size());
    writeRaw(out, kVersionMajor);
    writeRaw(out, kVersionMinor);
    writeRaw(out, static_cast<std::uint32_t>(layers_.size() * 2));
    auto tensor = [&](const std::string& name, const std::vector<int>& shape, const float* values,
                      std::size_t count) {
      writeRaw(out, static_cast<std::uint32_t>(name.size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      writeRaw(out, static_cast<std::uint32_t>(shape.size()));
      for (int d : shape) writeRaw(out, static_cast<std::uint32_t>(d));
      out.write(reinterpret_cast<const char*>(values), static_cast<std::streamsize>(count * sizeof(float)));
    };
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major = l.weight;
      tensor(l.name + ".weight", shapes[i].weight_shape, row_major.data(), row_major.size());
      tensor(l.name + ".bias", {shapes[i].outputs}, l.bias.data(), l.bias.size());
    }
    if (!out) throw FormatError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

WeightBundle WeightBundle::load(const std::filesystem::path& path, NetSpec spec) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open weight file " + path.string());
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw FormatError(path.string() + " is not a weight bundle");
  const auto major = readRaw<std::uint16_t>(in, "version");
  readRaw<std::uint16_t>(in, "version");
  if (major != kVersionMajor) throw FormatError("unsupported weight file version " + std::to_string(major));
  const auto count = readRaw<std::uint32_t>(in, "layer count");

  WeightBundle bundle(std::move(spec));
  const auto shapes = layerShapes(bundle.spec_);
  if (count != shapes.size() * 2)
    throw ShapeMismatch("weight file has " + std::to_string(count) + " tensors, expected " +
                        std::to_string(shapes.size() * 2));
  for (std::size_t t = 0; t < count; ++t) {
    const auto name_len = readRaw<std::uint32_t>(in, "tensor name");
    if (name_len > 256) throw FormatError("corrupt tensor name length");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) throw FormatError("weight file truncated in tensor name");
    const auto rank = readRaw<std::uint32_t>(in, name + " rank");
    if (rank > 8) throw FormatError("corrupt rank for " + name);
    std::vector<int> shape(rank);
    std::size_t values = 1;
    for (auto& d : shape) {
      d = static_cast<int>(readRaw<std::uint32_t>(in, name + " shape"));
      values *= static_cast<std::size_t>(d);
    }
    const std::size_t li = t / 2;
    const bool is_bias = t % 2 == 1;
    const auto& s = shapes[li];
    const std::string expected_name = s.name + (is_bias ? ".bias" : ".weight");
    const std::vector<int> expected_shape = is_bias ? std::vector<int>{s.outputs} : s.weight_shape;
    if (name != expected_name || shape != expected_shape)
      throw ShapeMismatch("layer " + s.name + ": file has " + name + " [" + shapeString(shape) + "], expected " +
                          expected_name + " [" + shapeString(expected_shape) + "]");
    std::vector<float> data(values);
    if (!in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(values * sizeof(float))))
      throw FormatError("weight file truncated in " + name);
    auto& layer = bundle.layers_[li];
    if (is_bias) {
      layer.bias = Eigen::Map<const Eigen::VectorXf>(data.data(), s.outputs);
    } else {
      layer.weight = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          data.data(), layer.weight.rows(), layer.weight.cols());
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after weight data");
  bundle.validate();
  return bundle;
}

Eigen::VectorXf forward(const WeightBundle& weights, const FeatureMap& input) {
  const NetSpec& spec = weights.spec();
  if (input.channels != spec.input_channels || input.height != spec.input_size || input.width != spec.input_size ||
      input.data.rows() != input.channels || input.data.cols() != input.height * input.width)
    throw ShapeMismatch("network input must be " + std::to_string(spec.input_channels) + "x" +
                        std::to_string(spec.input_size) + "x" + std::to_string(spec.input_size));
  const auto& layers = weights.layers();
  FeatureMap x = input;
  for (int b = 0; b < spec.blocks; ++b) x = maxPool2x2(conv3x3Relu(x, layers[b]));

  // flatten channel-major: index = c * (h * w) + y * w + x
  Eigen::VectorXf v(x.data.size());
  for (int c = 0; c < x.channels; ++c) v.segment(c * x.height * x.width, x.height * x.width) = x.data.row(c);
  for (std::size_t i = spec.blocks; i < layers.size(); ++i) {
    v = layers[i].weight * v + layers[i].bias;
    if (i + 1 < layers.size()) v = v.cwiseMax(0.0f);
  }
  return v;
}

}  // namespace roadlift
