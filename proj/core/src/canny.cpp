#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include <opencv2/core.hpp>

#include "simcurate/errors.hpp"
#include "simcurate/features.hpp"

namespace simcurate {
namespace {

int clampi(int v, int lo, int hi) { return std::min(std::max(v, lo), hi); }

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  for (int i = -radius; i <= radius; ++i)
    k[static_cast<std::size_t>(i + radius)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
  const double sum = std::accumulate(k.begin(), k.end(), 0.0);
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace

std::size_t EdgeMap::count() const {
  return static_cast<std::size_t>(std::count(on.begin(), on.end(), std::uint8_t{1}));
}

cv::Mat EdgeMap::to_mat() const {
  cv::Mat out(rows, cols, CV_8UC1);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out.at<std::uint8_t>(r, c) = at(r, c) ? 255 : 0;
  return out;
}

std::vector<double> gaussian_blur(const GrayImage& gray, double sigma) {
  const int rows = gray.rows(), cols = gray.cols();
  std::vector<double> src(gray.pixels().begin(), gray.pixels().end());
  if (sigma <= 0) return src;

  const auto k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  std::vector<double> tmp(src.size()), out(src.size());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i)
        acc += k[static_cast<std::size_t>(i + radius)] *
               src[static_cast<std::size_t>(r) * cols + clampi(c + i, 0, cols - 1)];
      tmp[static_cast<std::size_t>(r) * cols + c] = acc;
    }
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i)
        acc += k[static_cast<std::size_t>(i + radius)] *
               tmp[static_cast<std::size_t>(clampi(r + i, 0, rows - 1)) * cols + c];
      out[static_cast<std::size_t>(r) * cols + c] = acc;
    }
  return out;
}

GradientField sobel_gradients(const GrayImage& gray, double sigma) {
  const int rows = gray.rows(), cols = gray.cols();
  const auto img = gaussian_blur(gray, sigma);
  auto px = [&](int r, int c) {
    return img[static_cast<std::size_t>(clampi(r, 0, rows - 1)) * cols + clampi(c, 0, cols - 1)];
  };

  GradientField f;
  f.rows = rows;
  f.cols = cols;
  const auto n = static_cast<std::size_t>(rows) * cols;
  f.gx.resize(n);
  f.gy.resize(n);
  f.magnitude.resize(n);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double gx = (px(r - 1, c + 1) + 2 * px(r, c + 1) + px(r + 1, c + 1)) -
                        (px(r - 1, c - 1) + 2 * px(r, c - 1) + px(r + 1, c - 1));
      const double gy = (px(r + 1, c - 1) + 2 * px(r + 1, c) + px(r + 1, c + 1)) -
                        (px(r - 1, c - 1) + 2 * px(r - 1, c) + px(r - 1, c + 1));
      const auto i = static_cast<std::size_t>(r) * cols + c;
      f.gx[i] = gx;
      f.gy[i] = gy;
      f.magnitude[i] = std::hypot(gx, gy);
    }
  return f;
}

std::vector<std::uint8_t> non_max_suppress(const GradientField& f) {
  static const double kTan22 = std::tan(22.5 * CV_PI / 180.0);
  static const double kTan67 = std::tan(67.5 * CV_PI / 180.0);
  const int rows = f.rows, cols = f.cols;
  auto mag = [&](int r, int c) {
    if (r < 0 || r >= rows || c < 0 || c >= cols) return 0.0;
    return f.magnitude[static_cast<std::size_t>(r) * cols + c];
  };

  std::vector<std::uint8_t> keep(f.magnitude.size(), 0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const auto i = static_cast<std::size_t>(r) * cols + c;
      const double m = f.magnitude[i];
      if (m <= 0) continue;
      const double ax = std::abs(f.gx[i]), ay = std::abs(f.gy[i]);
      int dr = 0, dc = 0;
      if (ay <= kTan22 * ax) {
        dc = 1;
      } else if (ay >= kTan67 * ax) {
        dr = 1;
      } else {
        dr = 1;
        dc = (f.gx[i] * f.gy[i] > 0) ? 1 : -1;
      }
      // Strict on the trailing side, non-strict on the leading side: a plateau
      // two pixels wide keeps exactly one.
      if (m > mag(r - dr, c - dc) && m >= mag(r + dr, c + dc)) keep[i] = 1;
    }
  return keep;
}

EdgeMap canny(const GrayImage& gray, const CannyParams& p) {
  if (!(p.low > 0 && p.low < p.high)) throw ContractError("canny: require 0 < low < high");
  if (!(p.sigma >= 0)) throw ContractError("canny: sigma must be non-negative");
  if (gray.empty()) throw ContractError("canny: empty image");

  const auto field = sobel_gradients(gray, p.sigma);
  const auto nms = non_max_suppress(field);
  const int rows = field.rows, cols = field.cols;

  EdgeMap edges{rows, cols, p.low, p.high, std::vector<std::uint8_t>(nms.size(), 0)};
  std::deque<std::size_t> frontier;
  for (std::size_t i = 0; i < nms.size(); ++i) {
    if (nms[i] && field.magnitude[i] >= p.high) {
      edges.on[i] = 1;
      frontier.push_back(i);
    }
  }
  while (!frontier.empty()) {
    const std::size_t i = frontier.front();
    frontier.pop_front();
    const int r = static_cast<int>(i / cols), c = static_cast<int>(i % cols);
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        const int rr = r + dr, cc = c + dc;
        if ((dr == 0 && dc == 0) || rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
        const auto j = static_cast<std::size_t>(rr) * cols + cc;
        if (!edges.on[j] && nms[j] && field.magnitude[j] >= p.low) {
          edges.on[j] = 1;
          frontier.push_back(j);
        }
      }
  }
  return edges;
}

}  // namespace simcurate
