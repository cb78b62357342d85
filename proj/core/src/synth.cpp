#include "perfcnn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "perfcnn/rng.hpp"

namespace perfcnn {

namespace {

// Bilinear read of a cells x cells grid at fractional coordinates, clamped
// at the borders.
double grid_at(const std::vector<double>& cells, int extent, double u, double v) {
  const auto clamp = [extent](int i) { return std::min(std::max(i, 0), extent - 1); };
  const int u0 = clamp(static_cast<int>(std::floor(u)));
  const int v0 = clamp(static_cast<int>(std::floor(v)));
  const int u1 = clamp(u0 + 1);
  const int v1 = clamp(v0 + 1);
  const double fu = std::min(std::max(u - u0, 0.0), 1.0);
  const double fv = std::min(std::max(v - v0, 0.0), 1.0);
  const auto at = [&](int i, int j) { return cells[static_cast<std::size_t>(i) * extent + j]; };
  return (1 - fu) * ((1 - fv) * at(u0, v0) + fv * at(u0, v1)) +
         fu * ((1 - fv) * at(u1, v0) + fv * at(u1, v1));
}

}  // namespace

template <typename Real>
Dataset<Real> make_synthetic_images(const SyntheticImageSpec& spec, std::size_t count,
                                    const std::string& split) {
  if (spec.x < 1 || spec.y < 1 || spec.channels < 1) {
    throw std::invalid_argument("synthetic images: bad shape");
  }
  if (spec.classes < 2) throw std::invalid_argument("synthetic images: need at least 2 classes");
  if (spec.template_cells < 2) {
    throw std::invalid_argument("synthetic images: need at least 2 template cells per axis");
  }
  if (count == 0) throw std::invalid_argument("synthetic images: empty dataset");

  // One coarse template grid per (class, channel), fixed by the spec seed.
  Rng template_rng(derive_seed(spec.seed, "templates"));
  const int cells = spec.template_cells;
  std::vector<std::vector<double>> templates(
      static_cast<std::size_t>(spec.classes) * spec.channels);
  for (auto& t : templates) {
    t.resize(static_cast<std::size_t>(cells) * cells);
    for (double& v : t) v = template_rng.normal();
  }

  Rng noise_rng(derive_seed(spec.seed, "split." + split));
  Dataset<Real> data;
  data.samples.reserve(count);
  data.labels.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const int label = static_cast<int>(k % static_cast<std::size_t>(spec.classes));
    Tensor3<Real> img(spec.x, spec.y, spec.channels);
    for (int x = 1; x <= spec.x; ++x) {
      const double u = (x - 0.5) / spec.x * cells - 0.5;
      for (int y = 1; y <= spec.y; ++y) {
        const double v = (y - 0.5) / spec.y * cells - 0.5;
        for (int s = 1; s <= spec.channels; ++s) {
          const auto& t =
              templates[static_cast<std::size_t>(label) * spec.channels + (s - 1)];
          img.at(x, y, s) =
              static_cast<Real>(grid_at(t, cells, u, v) + spec.noise * noise_rng.normal());
        }
      }
    }
    data.samples.push_back(std::move(img));
    data.labels.push_back(label);
  }
  return data;
}

template <typename Real>
Dataset<Real> make_separable_points(std::size_t count, int features, int classes, double margin,
                                    std::uint64_t seed) {
  if (features < classes) {
    throw std::invalid_argument("separable points: need features >= classes");
  }
  if (classes < 2) throw std::invalid_argument("separable points: need at least 2 classes");
  if (count == 0) throw std::invalid_argument("separable points: empty dataset");
  Rng rng(seed);
  Dataset<Real> data;
  data.samples.reserve(count);
  data.labels.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const int label = static_cast<int>(k % static_cast<std::size_t>(classes));
    Tensor3<Real> point(1, 1, features);
    for (int s = 1; s <= features; ++s) {
      point.at(1, 1, s) =
          static_cast<Real>(rng.normal() + (s - 1 == label ? margin : 0.0));
    }
    data.samples.push_back(std::move(point));
    data.labels.push_back(label);
  }
  return data;
}

template Dataset<float> make_synthetic_images(const SyntheticImageSpec&, std::size_t,
                                              const std::string&);
template Dataset<double> make_synthetic_images(const SyntheticImageSpec&, std::size_t,
                                               const std::string&);
template Dataset<float> make_separable_points(std::size_t, int, int, double, std::uint64_t);
template Dataset<double> make_separable_points(std::size_t, int, int, double, std::uint64_t);

}  // namespace perfcnn
