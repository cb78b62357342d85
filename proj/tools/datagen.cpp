// Writes seeded synthetic datasets in the layout the perfcnn CLI reads
// (sample_<k>.pcnt plus labels.txt), so experiments need no external data.
#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "perfcnn/io.hpp"
#include "perfcnn/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"synthetic dataset generator for perfcnn", "datagen"};

  std::string out, kind = "images", split = "train";
  std::size_t count = 0;
  perfcnn::SyntheticImageSpec spec;
  int features = 8;
  double margin = 2.0;
  std::uint64_t seed = 1;

  app.add_option("--out", out, "Dataset directory to write")->required();
  app.add_option("--count", count, "Number of samples")->required();
  app.add_option("--kind", kind, "images (class templates + noise) or points (1x1 features)");
  app.add_option("--split", split, "Noise stream tag; splits share class structure");
  app.add_option("--classes", spec.classes, "Number of classes");
  app.add_option("--size", spec.x, "Image extent per axis (images)");
  app.add_option("--channels", spec.channels, "Image channels (images)");
  app.add_option("--cells", spec.template_cells, "Template coarseness per axis (images)");
  app.add_option("--noise", spec.noise, "Pixel noise standard deviation (images)");
  app.add_option("--features", features, "Feature dimension (points)");
  app.add_option("--margin", margin, "Class separation margin (points)");
  app.add_option("--seed", seed, "Global seed");

  CLI11_PARSE(app, argc, argv);

  try {
    perfcnn::Dataset<float> data;
    if (kind == "images") {
      spec.y = spec.x;
      spec.seed = seed;
      data = perfcnn::make_synthetic_images<float>(spec, count, split);
    } else if (kind == "points") {
      data = perfcnn::make_separable_points<float>(
          count, features, spec.classes, margin,
          perfcnn::derive_seed(seed, "points." + split));
    } else {
      throw std::invalid_argument("--kind must be images or points");
    }
    perfcnn::save_dataset(out, data);
    std::cout << "wrote " << data.size() << " samples to " << out << "\n";
  } catch (const std::exception& e) {
    std::cerr << "datagen: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
