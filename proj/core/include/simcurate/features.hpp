#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core/mat.hpp>

namespace simcurate {

// Single-channel image with integer intensities in [0, max_value].
class GrayImage {
 public:
  GrayImage() = default;
  // Throws ContractError on empty dimensions, a size mismatch, or any pixel above max_value.
  GrayImage(int rows, int cols, std::vector<std::uint16_t> pixels, std::uint16_t max_value = 255);
  static GrayImage filled(int rows, int cols, std::uint16_t value, std::uint16_t max_value = 255);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::uint16_t max_value() const { return max_value_; }
  std::span<const std::uint16_t> pixels() const { return pixels_; }
  std::uint16_t at(int r, int c) const { return pixels_[static_cast<std::size_t>(r) * cols_ + c]; }
  bool empty() const { return pixels_.empty(); }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::uint16_t max_value_ = 255;
  std::vector<std::uint16_t> pixels_;
};

// Luma with weights 0.299/0.587/0.114, rounded to nearest. Accepts 8-bit BGR,
// BGRA, or single-channel (8- or 16-bit, passed through unchanged).
GrayImage to_gray(const cv::Mat& image);
cv::Mat to_mat(const GrayImage& gray);

// Mean normalized intensity, in [0, 1].
double brightness(const GrayImage& gray);

enum class HashAlgorithm { dct_phash, average_hash, difference_hash };

std::string_view to_string(HashAlgorithm a);
HashAlgorithm parse_hash_algorithm(std::string_view s);

class PerceptualHash {
 public:
  PerceptualHash() = default;
  // bit_count must be 16, 64 or 256.
  PerceptualHash(HashAlgorithm algorithm, std::size_t bit_count);

  HashAlgorithm algorithm() const { return algorithm_; }
  std::size_t size() const { return bit_count_; }
  bool bit(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1u; }
  void set(std::size_t i, bool on);
  std::span<const std::uint64_t> words() const { return words_; }

  // Bit 0 is the most significant hex digit's high bit.
  std::string to_hex() const;
  static PerceptualHash from_hex(HashAlgorithm algorithm, std::string_view hex);

  friend bool operator==(const PerceptualHash&, const PerceptualHash&) = default;

 private:
  HashAlgorithm algorithm_ = HashAlgorithm::dct_phash;
  std::size_t bit_count_ = 0;
  std::vector<std::uint64_t> words_;
};

bool is_valid_hash_size(std::size_t bits);

// Area-averaging resize to rows x cols (works for both shrinking and enlarging).
std::vector<double> resize_area(const GrayImage& gray, int rows, int cols);

// Orthonormal 2-D DCT-II of a row-major size x size block.
std::vector<double> dct2(std::span<const double> block, int size);

// DCT pHash: area-downscale to 4k x 4k (k = sqrt(bits)), DCT-II, take the k x k
// low-frequency block in row-major order minus the DC term, topped up with the
// next coefficient in row-major order; bit = coefficient > median.
PerceptualHash phash(const GrayImage& gray, std::size_t bits = 64);
// k x k area-downscale, bit = pixel > mean.
PerceptualHash average_hash(const GrayImage& gray, std::size_t bits = 64);
// k x (k+1) area-downscale, bit = left neighbour brighter than right.
PerceptualHash difference_hash(const GrayImage& gray, std::size_t bits = 64);
PerceptualHash compute_hash(const GrayImage& gray, HashAlgorithm algorithm, std::size_t bits = 64);

// Number of differing bits. Throws ContractError if length or algorithm differ.
int hamming(const PerceptualHash& a, const PerceptualHash& b);

struct CannyParams {
  double low = 100.0;
  double high = 200.0;
  double sigma = 1.4;
};

// Binary edge map; pixel values are 0 or 1.
struct EdgeMap {
  int rows = 0;
  int cols = 0;
  double low = 0;
  double high = 0;
  std::vector<std::uint8_t> on;

  bool at(int r, int c) const { return on[static_cast<std::size_t>(r) * cols + c] != 0; }
  std::size_t count() const;
  // 8-bit single channel, 0 / 255.
  cv::Mat to_mat() const;
};

// Smoothed Sobel gradients; magnitude is the L2 norm on the 8-bit Sobel scale.
struct GradientField {
  int rows = 0;
  int cols = 0;
  std::vector<double> gx, gy, magnitude;
};

std::vector<double> gaussian_blur(const GrayImage& gray, double sigma);
GradientField sobel_gradients(const GrayImage& gray, double sigma);
// 1 where the magnitude is a local maximum along the quantized gradient direction.
std::vector<std::uint8_t> non_max_suppress(const GradientField& field);

// Gaussian smoothing, Sobel, non-maximum suppression, hysteresis (8-connected).
// Throws ContractError unless 0 < low < high and sigma >= 0.
EdgeMap canny(const GrayImage& gray, const CannyParams& params = {});

}  // namespace simcurate
