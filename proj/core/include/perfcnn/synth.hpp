#pragma once

#include <cstdint>
#include <string>

#include "perfcnn/network.hpp"

namespace perfcnn {

// Class-conditional image generator: every class owns a smooth random
// template (a coarse Gaussian grid upsampled bilinearly), and a sample is
// its class template plus pixel noise. Smooth spatial structure is what
// makes interpolation quality matter, so mask geometry shows up in the
// evaluation error.
struct SyntheticImageSpec {
  int x = 16;
  int y = 16;
  int channels = 3;
  int classes = 10;
  int template_cells = 4;  // coarse grid extent per axis
  double noise = 0.35;
  std::uint64_t seed = 1;
};

// Labels cycle 0..classes-1, so every class appears floor/ceil(count/classes)
// times. Templates depend only on spec.seed; the split tag (e.g. "train",
// "test") selects an independent noise stream, so different splits share the
// class structure without sharing samples.
template <typename Real>
Dataset<Real> make_synthetic_images(const SyntheticImageSpec& spec, std::size_t count,
                                    const std::string& split);

// 1x1xfeatures points at margin * basis vector of the label class plus unit
// Gaussian noise; linearly separable with high margin. Labels cycle.
template <typename Real>
Dataset<Real> make_separable_points(std::size_t count, int features, int classes, double margin,
                                    std::uint64_t seed);

extern template Dataset<float> make_synthetic_images(const SyntheticImageSpec&, std::size_t,
                                                     const std::string&);
extern template Dataset<double> make_synthetic_images(const SyntheticImageSpec&, std::size_t,
                                                      const std::string&);
extern template Dataset<float> make_separable_points(std::size_t, int, int, double,
                                                     std::uint64_t);
extern template Dataset<double> make_separable_points(std::size_t, int, int, double,
                                                      std::uint64_t);

}  // namespace perfcnn
