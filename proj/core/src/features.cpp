#include "simcurate/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>

#include "simcurate/errors.hpp"

namespace simcurate {

GrayImage::GrayImage(int rows, int cols, std::vector<std::uint16_t> pixels,
                     std::uint16_t max_value)
    : rows_(rows), cols_(cols), max_value_(max_value), pixels_(std::move(pixels)) {
  if (rows < 1 || cols < 1) throw ContractError("gray image must be at least 1x1");
  if (pixels_.size() != static_cast<std::size_t>(rows) * cols)
    throw ContractError("gray image pixel count does not match dimensions");
  if (max_value == 0) throw ContractError("gray image max_value must be positive");
  if (std::any_of(pixels_.begin(), pixels_.end(), [&](auto v) { return v > max_value; }))
    throw ContractError("gray image pixel exceeds max_value");
}

GrayImage GrayImage::filled(int rows, int cols, std::uint16_t value, std::uint16_t max_value) {
  return GrayImage(rows, cols,
                   std::vector<std::uint16_t>(static_cast<std::size_t>(std::max(rows, 0)) *
                                                  static_cast<std::size_t>(std::max(cols, 0)),
                                              value),
                   max_value);
}

namespace {

template <typename T>
std::uint16_t luma(const T* px) {
  // OpenCV channel order is B, G, R.
  const double y = 0.299 * px[2] + 0.587 * px[1] + 0.114 * px[0];
  return static_cast<std::uint16_t>(std::lround(y));
}

template <typename T>
GrayImage convert(const cv::Mat& image, std::uint16_t max_value) {
  const int ch = image.channels();
  std::vector<std::uint16_t> out(static_cast<std::size_t>(image.rows) * image.cols);
  for (int r = 0; r < image.rows; ++r) {
    const T* row = image.ptr<T>(r);
    for (int c = 0; c < image.cols; ++c) {
      const T* px = row + static_cast<std::ptrdiff_t>(c) * ch;
      out[static_cast<std::size_t>(r) * image.cols + c] =
          ch == 1 ? static_cast<std::uint16_t>(px[0]) : luma(px);
    }
  }
  return GrayImage(image.rows, image.cols, std::move(out), max_value);
}

}  // namespace

GrayImage to_gray(const cv::Mat& image) {
  if (image.empty()) throw ContractError("to_gray: empty image");
  const int ch = image.channels();
  if (ch != 1 && ch != 3 && ch != 4) throw ContractError("to_gray: expected 1, 3 or 4 channels");
  switch (image.depth()) {
    case CV_8U: return convert<std::uint8_t>(image, 255);
    case CV_16U: return convert<std::uint16_t>(image, 65535);
    default: throw ContractError("to_gray: expected 8- or 16-bit unsigned pixels");
  }
}

cv::Mat to_mat(const GrayImage& gray) {
  const bool wide = gray.max_value() > 255;
  cv::Mat out(gray.rows(), gray.cols(), wide ? CV_16UC1 : CV_8UC1);
  for (int r = 0; r < gray.rows(); ++r) {
    for (int c = 0; c < gray.cols(); ++c) {
      if (wide)
        out.at<std::uint16_t>(r, c) = gray.at(r, c);
      else
        out.at<std::uint8_t>(r, c) = static_cast<std::uint8_t>(gray.at(r, c));
    }
  }
  return out;
}

double brightness(const GrayImage& gray) {
  if (gray.empty()) throw ContractError("brightness: empty image");
  // Integer sum is exact for any realistic image size.
  std::uint64_t sum = 0;
  for (auto v : gray.pixels()) sum += v;
  const double n = static_cast<double>(gray.pixels().size());
  return static_cast<double>(sum) / n / static_cast<double>(gray.max_value());
}

std::string_view to_string(HashAlgorithm a) {
  switch (a) {
    case HashAlgorithm::dct_phash: return "dct_phash";
    case HashAlgorithm::average_hash: return "average_hash";
    case HashAlgorithm::difference_hash: return "difference_hash";
  }
  return "dct_phash";
}

HashAlgorithm parse_hash_algorithm(std::string_view s) {
  if (s == "dct_phash" || s == "phash") return HashAlgorithm::dct_phash;
  if (s == "average_hash" || s == "ahash") return HashAlgorithm::average_hash;
  if (s == "difference_hash" || s == "dhash") return HashAlgorithm::difference_hash;
  throw ContractError("unknown hash algorithm '" + std::string(s) + "'");
}

bool is_valid_hash_size(std::size_t bits) { return bits == 16 || bits == 64 || bits == 256; }

PerceptualHash::PerceptualHash(HashAlgorithm algorithm, std::size_t bit_count)
    : algorithm_(algorithm), bit_count_(bit_count), words_((bit_count + 63) / 64, 0) {
  if (!is_valid_hash_size(bit_count)) throw ContractError("hash bit depth must be 16, 64 or 256");
}

void PerceptualHash::set(std::size_t i, bool on) {
  const std::uint64_t mask = std::uint64_t{1} << (i % 64);
  if (on)
    words_[i / 64] |= mask;
  else
    words_[i / 64] &= ~mask;
}

std::string PerceptualHash::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bit_count_ / 4);
  for (std::size_t i = 0; i < bit_count_; i += 4) {
    const unsigned nibble = (bit(i) << 3) | (bit(i + 1) << 2) | (bit(i + 2) << 1) | bit(i + 3);
    out.push_back(kDigits[nibble]);
  }
  return out;
}

PerceptualHash PerceptualHash::from_hex(HashAlgorithm algorithm, std::string_view hex) {
  PerceptualHash h(algorithm, hex.size() * 4);
  for (std::size_t j = 0; j < hex.size(); ++j) {
    const char ch = hex[j];
    unsigned v = 0;
    if (ch >= '0' && ch <= '9')
      v = ch - '0';
    else if (ch >= 'a' && ch <= 'f')
      v = ch - 'a' + 10;
    else if (ch >= 'A' && ch <= 'F')
      v = ch - 'A' + 10;
    else
      throw ContractError("invalid hex digit in hash");
    for (int b = 0; b < 4; ++b) h.set(4 * j + b, (v >> (3 - b)) & 1u);
  }
  return h;
}

namespace {

// Row i of the result holds (source index, weight) pairs for output cell i.
std::vector<std::vector<std::pair<int, double>>> area_weights(int src, int dst) {
  std::vector<std::vector<std::pair<int, double>>> w(static_cast<std::size_t>(dst));
  const double scale = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    const double lo = i * scale;
    const double hi = (i + 1) * scale;
    for (int s = static_cast<int>(std::floor(lo)); s < src && s < hi; ++s) {
      const double overlap = std::min<double>(hi, s + 1) - std::max<double>(lo, s);
      if (overlap > 0) w[i].emplace_back(s, overlap);
    }
  }
  return w;
}

int side_for(std::size_t bits) {
  switch (bits) {
    case 16: return 4;
    case 64: return 8;
    case 256: return 16;
    default: throw ContractError("hash bit depth must be 16, 64 or 256");
  }
}

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + mid);
  return (lower + upper) / 2;
}

}  // namespace

std::vector<double> resize_area(const GrayImage& gray, int rows, int cols) {
  if (rows < 1 || cols < 1) throw ContractError("resize_area: target must be at least 1x1");
  const auto wy = area_weights(gray.rows(), rows);
  const auto wx = area_weights(gray.cols(), cols);

  // Horizontal pass.
  std::vector<double> tmp(static_cast<std::size_t>(gray.rows()) * cols);
  for (int r = 0; r < gray.rows(); ++r) {
    for (int c = 0; c < cols; ++c) {
      double acc = 0, wsum = 0;
      for (auto [s, w] : wx[c]) {
        acc += w * gray.at(r, s);
        wsum += w;
      }
      tmp[static_cast<std::size_t>(r) * cols + c] = acc / wsum;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double acc = 0, wsum = 0;
      for (auto [s, w] : wy[r]) {
        acc += w * tmp[static_cast<std::size_t>(s) * cols + c];
        wsum += w;
      }
      // Snap away accumulated round-off so flat regions stay exactly flat.
      out[static_cast<std::size_t>(r) * cols + c] = std::round(acc / wsum * 1e6) / 1e6;
    }
  }
  return out;
}

std::vector<double> dct2(std::span<const double> block, int size) {
  const auto n = static_cast<std::size_t>(size);
  if (size < 1 || block.size() != n * n) throw ContractError("dct2: block must be size x size");
  std::vector<double> basis(n * n);
  for (std::size_t u = 0; u < n; ++u) {
    const double alpha = u == 0 ? std::sqrt(1.0 / size) : std::sqrt(2.0 / size);
    for (std::size_t x = 0; x < n; ++x)
      basis[u * n + x] = alpha * std::cos(std::numbers::pi * (2.0 * x + 1) * u / (2.0 * size));
  }
  // rows: tmp = f * B^T; columns: out = B * tmp
  std::vector<double> tmp(n * n, 0.0), out(n * n, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t v = 0; v < n; ++v) {
      double acc = 0;
      for (std::size_t x = 0; x < n; ++x) acc += block[r * n + x] * basis[v * n + x];
      tmp[r * n + v] = acc;
    }
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v) {
      double acc = 0;
      for (std::size_t y = 0; y < n; ++y) acc += basis[u * n + y] * tmp[y * n + v];
      out[u * n + v] = acc;
    }
  return out;
}

PerceptualHash phash(const GrayImage& gray, std::size_t bits) {
  const int k = side_for(bits);
  const int size = 4 * k;
  const auto small = resize_area(gray, size, size);
  auto coeffs = dct2(small, size);

  // Coefficients that are zero up to round-off count as zero, so flat images
  // hash to all zeros.
  double scale = 0;
  for (double v : small) scale += std::abs(v);
  const double eps = 1e-9 * std::max(1.0, scale);
  for (double& c : coeffs)
    if (std::abs(c) < eps) c = 0.0;

  std::vector<double> selected;
  selected.reserve(bits);
  for (int u = 0; u < k; ++u)
    for (int v = 0; v < k; ++v)
      if (u != 0 || v != 0) selected.push_back(coeffs[static_cast<std::size_t>(u) * size + v]);
  selected.push_back(coeffs[static_cast<std::size_t>(k - 1) * size + k]);

  const double med = median_of(selected);
  PerceptualHash h(HashAlgorithm::dct_phash, bits);
  for (std::size_t i = 0; i < bits; ++i) h.set(i, selected[i] > med);
  return h;
}

PerceptualHash average_hash(const GrayImage& gray, std::size_t bits) {
  const int k = side_for(bits);
  const auto small = resize_area(gray, k, k);
  const double mean = std::accumulate(small.begin(), small.end(), 0.0) / small.size();
  PerceptualHash h(HashAlgorithm::average_hash, bits);
  for (std::size_t i = 0; i < bits; ++i) h.set(i, small[i] > mean);
  return h;
}

PerceptualHash difference_hash(const GrayImage& gray, std::size_t bits) {
  const int k = side_for(bits);
  const auto small = resize_area(gray, k, k + 1);
  PerceptualHash h(HashAlgorithm::difference_hash, bits);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) {
      const auto base = static_cast<std::size_t>(r) * (k + 1) + c;
      h.set(static_cast<std::size_t>(r) * k + c, small[base] > small[base + 1]);
    }
  return h;
}

PerceptualHash compute_hash(const GrayImage& gray, HashAlgorithm algorithm, std::size_t bits) {
  switch (algorithm) {
    case HashAlgorithm::dct_phash: return phash(gray, bits);
    case HashAlgorithm::average_hash: return average_hash(gray, bits);
    case HashAlgorithm::difference_hash: return difference_hash(gray, bits);
  }
  throw ContractError("unknown hash algorithm");
}

int hamming(const PerceptualHash& a, const PerceptualHash& b) {
  if (a.size() != b.size()) throw ContractError("hamming: hash lengths differ");
  if (a.algorithm() != b.algorithm()) throw ContractError("hamming: hash algorithms differ");
  int d = 0;
  const auto wa = a.words();
  const auto wb = b.words();
  for (std::size_t i = 0; i < wa.size(); ++i) d += std::popcount(wa[i] ^ wb[i]);
  return d;
}

}  // namespace simcurate
