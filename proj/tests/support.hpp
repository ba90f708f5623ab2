#pragma once

// Generators and independent reference implementations shared by the unit tests and
// the acceptance suite. Nothing here calls into the code under test except for the
// plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "roadlift/geometry.hpp"
#include "roadlift/net.hpp"

namespace roadlift::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline Box3D randomBox(Rng& rng, double extent = 3, double max_tilt = std::numbers::pi / 2) {
  Box3D b;
  b.center = {uniform(rng, -extent, extent), uniform(rng, -extent, extent), uniform(rng, -extent, extent)};
  b.size = {uniform(rng, 0.5, 3), uniform(rng, 0.5, 5), uniform(rng, 0.5, 3)};
  b.rotation = {uniform(rng, -std::numbers::pi, std::numbers::pi), uniform(rng, -max_tilt, max_tilt),
                uniform(rng, -max_tilt, max_tilt)};
  return b;
}

// A second box near `a` so that the pair overlaps more often than not.
inline Box3D nearbyBox(Rng& rng, const Box3D& a) {
  Box3D b = randomBox(rng, 1);
  b.center += a.center;
  return b;
}

inline bool insideBox(const Box3D& box, const Vec3d& p) {
  const Vec3d local = box.rotationMatrix().transpose() * (p - box.center);
  return std::abs(local.x()) <= box.size.length / 2 && std::abs(local.y()) <= box.size.width / 2 &&
         std::abs(local.z()) <= box.size.height / 2;
}

// 3D IoU by uniform sampling of the joint axis-aligned bounding box.
inline double monteCarloIou3d(const Box3D& a, const Box3D& b, int samples, std::uint64_t seed) {
  Eigen::AlignedBox3d bounds;
  for (const auto& p : boxCorners(a)) bounds.extend(p);
  for (const auto& p : boxCorners(b)) bounds.extend(p);
  Rng rng(seed);
  long in_a = 0, in_b = 0, in_both = 0;
  for (int i = 0; i < samples; ++i) {
    const Vec3d p(uniform(rng, bounds.min().x(), bounds.max().x()), uniform(rng, bounds.min().y(), bounds.max().y()),
                  uniform(rng, bounds.min().z(), bounds.max().z()));
    const bool ia = insideBox(a, p), ib = insideBox(b, p);
    in_a += ia;
    in_b += ib;
    in_both += ia && ib;
  }
  const long uni = in_a + in_b - in_both;
  return uni == 0 ? 0.0 : double(in_both) / double(uni);
}

// Plan-view x-extent of the box where it crosses the vertical plane y = y0: the
// extreme x over the points where the plane cuts the twelve edges.
inline bool sliceExtent(const Box3D& box, double y0, double& lo, double& hi) {
  static constexpr int kEdges[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                        {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
  const auto c = boxCorners(box);
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  for (const auto& e : kEdges) {
    const Vec3d& p = c[e[0]];
    const Vec3d& q = c[e[1]];
    const double dp = p.y() - y0, dq = q.y() - y0;
    if ((dp > 0 && dq > 0) || (dp < 0 && dq < 0)) continue;
    if (dp == dq) {
      lo = std::min({lo, p.x(), q.x()});
      hi = std::max({hi, p.x(), q.x()});
      continue;
    }
    const double x = p.x() + (q.x() - p.x()) * dp / (dp - dq);
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return lo <= hi;
}

// Bird's-eye IoU by counting the centers of `cell`-sized raster cells covered by
// each footprint, one scanline at a time.
inline double rasterIouBev(const Box3D& a, const Box3D& b, double cell = 1e-3) {
  Eigen::AlignedBox3d bounds;
  for (const auto& p : boxCorners(a)) bounds.extend(p);
  for (const auto& p : boxCorners(b)) bounds.extend(p);
  const long j0 = static_cast<long>(std::floor(bounds.min().y() / cell)) - 1;
  const long j1 = static_cast<long>(std::ceil(bounds.max().y() / cell)) + 1;
  auto cells = [&](double lo, double hi) -> long {
    if (lo > hi) return 0;
    // centers (i + 0.5) * cell within [lo, hi]
    const long first = static_cast<long>(std::ceil(lo / cell - 0.5));
    const long last = static_cast<long>(std::floor(hi / cell - 0.5));
    return std::max(0L, last - first + 1);
  };
  long area_a = 0, area_b = 0, inter = 0;
  for (long j = j0; j <= j1; ++j) {
    const double y = (j + 0.5) * cell;
    double alo, ahi, blo, bhi;
    const bool ha = sliceExtent(a, y, alo, ahi);
    const bool hb = sliceExtent(b, y, blo, bhi);
    if (ha) area_a += cells(alo, ahi);
    if (hb) area_b += cells(blo, bhi);
    if (ha && hb) inter += cells(std::max(alo, blo), std::min(ahi, bhi));
  }
  const long uni = area_a + area_b - inter;
  return uni == 0 ? 0.0 : double(inter) / double(uni);
}

// Direct convolution network evaluated in double precision with plain loops:
// six 3x3 same-padded conv + ReLU + 2x2 max-pool blocks, then FC layers with ReLU
// between them. Weights are read from the bundle's raw matrices by their documented
// (out, in, ky, kx) and (out, in) meaning.
inline std::vector<double> referenceForward(const WeightBundle& w, const FeatureMap& input) {
  const NetSpec& spec = w.spec();
  int channels = input.channels, size = input.height;
  std::vector<double> x(static_cast<std::size_t>(channels) * size * size);
  for (int c = 0; c < channels; ++c)
    for (int y = 0; y < size; ++y)
      for (int xx = 0; xx < size; ++xx) x[(c * size + y) * size + xx] = input.at(c, y, xx);

  for (int b = 0; b < spec.blocks; ++b) {
    const Layer& layer = w.layers()[b];
    const int out_c = static_cast<int>(layer.weight.rows());
    std::vector<double> conv(static_cast<std::size_t>(out_c) * size * size);
    for (int o = 0; o < out_c; ++o) {
      for (int y = 0; y < size; ++y) {
        for (int xx = 0; xx < size; ++xx) {
          double acc = layer.bias(o);
          for (int i = 0; i < channels; ++i) {
            for (int ky = 0; ky < 3; ++ky) {
              for (int kx = 0; kx < 3; ++kx) {
                const int sy = y + ky - 1, sx = xx + kx - 1;
                if (sy < 0 || sx < 0 || sy >= size || sx >= size) continue;
                acc += double(layer.weight(o, (i * 3 + ky) * 3 + kx)) * x[(i * size + sy) * size + sx];
              }
            }
          }
          conv[(o * size + y) * size + xx] = std::max(0.0, acc);
        }
      }
    }
    const int half = size / 2;
    std::vector<double> pooled(static_cast<std::size_t>(out_c) * half * half);
    for (int o = 0; o < out_c; ++o)
      for (int y = 0; y < half; ++y)
        for (int xx = 0; xx < half; ++xx) {
          double m = -std::numeric_limits<double>::infinity();
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) m = std::max(m, conv[(o * size + 2 * y + dy) * size + 2 * xx + dx]);
          pooled[(o * half + y) * half + xx] = m;
        }
    x = std::move(pooled);
    channels = out_c;
    size = half;
  }
  for (std::size_t l = spec.blocks; l < w.layers().size(); ++l) {
    const Layer& layer = w.layers()[l];
    std::vector<double> y(layer.weight.rows());
    for (int o = 0; o < layer.weight.rows(); ++o) {
      double acc = layer.bias(o);
      for (int i = 0; i < layer.weight.cols(); ++i) acc += double(layer.weight(o, i)) * x[i];
      y[o] = l + 1 < w.layers().size() ? std::max(0.0, acc) : acc;
    }
    x = std::move(y);
  }
  return x;
}

inline FeatureMap randomInput(Rng& rng, const NetSpec& spec = {}) {
  FeatureMap m(spec.input_channels, spec.input_size, spec.input_size);
  for (int c = 0; c < m.channels; ++c)
    for (int i = 0; i < m.height * m.width; ++i) m.data(c, i) = static_cast<float>(uniform(rng, 0, 1));
  return m;
}

// Worst relative error of `got` against `want`, scaled by the largest |want|.
inline double maxRelativeError(const Eigen::VectorXf& got, const std::vector<double>& want) {
  double scale = 1e-12, err = 0;
  for (double v : want) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < want.size(); ++i) err = std::max(err, std::abs(double(got(i)) - want[i]));
  return err / scale;
}

}  // namespace roadlift::testing
