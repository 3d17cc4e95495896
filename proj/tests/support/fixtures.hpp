#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "simcurate/dataset.hpp"
#include "simcurate/eval.hpp"

namespace simcurate::testkit {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "simcurate");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

// Smooth 8-bit BGR scene: a few low-frequency gradients and blocks. Values
// stay within [24, 200] so a 1.2x brightness gain never saturates.
cv::Mat procedural_image(std::uint64_t seed, int rows = 128, int cols = 128);

struct ExportOptions {
  std::size_t count = 20;
  std::size_t first_index = 0;
  std::uint64_t seed = 1;
  int rows = 96;
  int cols = 128;
  int max_objects = 3;
  int classes = 3;
  bool masks = true;
  bool depth = true;
  bool labels = true;
};

// Render-export layout: images/, labels/, masks/, depth/ with numeric stems.
// Objects are axis-aligned rectangles; masks cover exactly their boxes.
void write_render_export(const std::filesystem::path& root, const ExportOptions& options);

// Predictions for every truth box (jittered, random confidence) plus some
// false positives, reproducible from the seed.
std::vector<Detection> noisy_predictions(const Dataset& truth, std::uint64_t seed);

}  // namespace simcurate::testkit
