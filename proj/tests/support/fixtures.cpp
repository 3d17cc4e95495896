#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include <opencv2/imgproc.hpp>

#include "simcurate/image_io.hpp"

namespace fs = std::filesystem;

namespace simcurate::testkit {

namespace {
std::atomic<int> temp_counter{0};
}

TempDir::TempDir(const std::string& tag) {
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          (tag + "_" + std::to_string(rd()) + "_" + std::to_string(temp_counter++));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

cv::Mat procedural_image(std::uint64_t seed, int rows, int cols) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  cv::Mat img(rows, cols, CV_8UC3);

  struct Wave {
    double fx, fy, phase, amp;
  };
  std::vector<Wave> waves;
  for (int i = 0; i < 3; ++i)
    waves.push_back({(1 + 3 * u(rng)) * (u(rng) < 0.5 ? -1 : 1), 1 + 3 * u(rng), 6.28318 * u(rng),
                     20 + 25 * u(rng)});
  const double tint[3] = {0.8 + 0.4 * u(rng), 0.8 + 0.4 * u(rng), 0.8 + 0.4 * u(rng)};
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      double v = 110;
      for (const auto& w : waves)
        v += w.amp * std::sin(6.28318 * (w.fx * x / cols + w.fy * y / rows) + w.phase);
      for (int c = 0; c < 3; ++c)
        img.at<cv::Vec3b>(y, x)[c] = static_cast<std::uint8_t>(std::clamp(v * tint[c], 24.0, 200.0));
    }
  }
  const int blocks = 2 + static_cast<int>(u(rng) * 3);
  for (int i = 0; i < blocks; ++i) {
    const int w = cols / 5 + static_cast<int>(u(rng) * cols / 3);
    const int h = rows / 5 + static_cast<int>(u(rng) * rows / 3);
    const int x = static_cast<int>(u(rng) * (cols - w));
    const int y = static_cast<int>(u(rng) * (rows - h));
    const double level = 24 + 176 * u(rng);
    img(cv::Rect(x, y, w, h)).setTo(cv::Scalar(level, level * 0.9 + 10, level * 0.8 + 20));
  }
  return img;
}

void write_render_export(const fs::path& root, const ExportOptions& o) {
  for (const char* sub : {"images", "labels", "masks", "depth"}) fs::create_directories(root / sub);
  for (std::size_t i = 0; i < o.count; ++i) {
    const std::size_t index = o.first_index + i;
    std::mt19937_64 rng(o.seed * 1000003 + index);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::string stem = std::to_string(index);

    cv::Mat img = procedural_image(o.seed * 7919 + index, o.rows, o.cols);
    cv::Mat mask = cv::Mat::zeros(o.rows, o.cols, CV_8UC1);
    std::vector<BoundingBox> boxes;
    const int objects = 1 + static_cast<int>(u(rng) * o.max_objects);
    for (int k = 0; k < objects; ++k) {
      const int w = 8 + static_cast<int>(u(rng) * o.cols / 4);
      const int h = 8 + static_cast<int>(u(rng) * o.rows / 4);
      const int x = static_cast<int>(u(rng) * (o.cols - w));
      const int y = static_cast<int>(u(rng) * (o.rows - h));
      const int cls = static_cast<int>(u(rng) * o.classes);
      img(cv::Rect(x, y, w, h)).setTo(cv::Scalar(40 + 60 * cls, 200 - 50 * cls, 90));
      mask(cv::Rect(x, y, w, h)).setTo(255);
      boxes.push_back(BoundingBox::from_pixels(cls, {double(x), double(y), double(x + w), double(y + h)},
                                               o.cols, o.rows));
    }
    cv::Mat depth(o.rows, o.cols, CV_16UC1);
    for (int y = 0; y < o.rows; ++y)
      for (int x = 0; x < o.cols; ++x)
        depth.at<std::uint16_t>(y, x) = static_cast<std::uint16_t>(1000 + 40 * y + 3 * x);

    write_image(root / "images" / (stem + ".png"), img);
    if (o.masks) write_image(root / "masks" / (stem + ".png"), mask);
    if (o.depth) write_image(root / "depth" / (stem + ".png"), depth);
    if (o.labels) write_yolo_labels(root / "labels" / (stem + ".txt"), boxes);
  }
}

std::vector<Detection> noisy_predictions(const Dataset& truth, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Detection> out;
  for (const auto& r : truth.records) {
    for (const auto& b : r.boxes) {
      if (u(rng) < 0.1) continue;  // missed
      BoundingBox p = b;
      p.cx += (u(rng) - 0.5) * 0.2 * b.w;
      p.cy += (u(rng) - 0.5) * 0.2 * b.h;
      p.w *= 0.85 + 0.3 * u(rng);
      p.h *= 0.85 + 0.3 * u(rng);
      out.push_back({r.id, p.class_id, p, 0.3 + 0.7 * u(rng)});
    }
    if (u(rng) < 0.3) {
      const int cls = r.boxes.empty() ? 0 : r.boxes.front().class_id;
      const BoundingBox fp{cls, 0.2 + 0.6 * u(rng), 0.2 + 0.6 * u(rng), 0.1, 0.1};
      out.push_back({r.id, cls, fp, 0.6 * u(rng)});
    }
  }
  return out;
}

}  // namespace simcurate::testkit
