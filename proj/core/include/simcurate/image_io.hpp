#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <opencv2/core/mat.hpp>

namespace simcurate {

enum class ReadMode {
  color,      // 8-bit BGR
  grayscale,  // 8-bit single channel
  unchanged,  // as stored (e.g. 16-bit depth)
};

// Throws IoError naming the path when the file is missing or undecodable.
cv::Mat read_image(const std::filesystem::path& path, ReadMode mode = ReadMode::color);
void write_image(const std::filesystem::path& path, const cv::Mat& image);

std::vector<std::uint8_t> encode_png(const cv::Mat& image);
// Throws FormatError when the bytes are not a decodable image.
cv::Mat decode_image(std::span<const std::uint8_t> bytes, ReadMode mode = ReadMode::unchanged);

}  // namespace simcurate
