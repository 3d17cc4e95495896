#include "simcurate/image_io.hpp"

#include <opencv2/imgcodecs.hpp>

#include "simcurate/errors.hpp"

namespace simcurate {
namespace {

int to_flags(ReadMode mode) {
  switch (mode) {
    case ReadMode::color: return cv::IMREAD_COLOR;
    case ReadMode::grayscale: return cv::IMREAD_GRAYSCALE;
    case ReadMode::unchanged: return cv::IMREAD_UNCHANGED;
  }
  return cv::IMREAD_UNCHANGED;
}

}  // namespace

cv::Mat read_image(const std::filesystem::path& path, ReadMode mode) {
  if (!std::filesystem::is_regular_file(path)) throw IoError("missing image file", path);
  cv::Mat img = cv::imread(path.string(), to_flags(mode));
  if (img.empty()) throw IoError("cannot decode image", path);
  return img;
}

void write_image(const std::filesystem::path& path, const cv::Mat& image) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), image);
  } catch (const cv::Exception& e) {
    throw IoError(std::string("cannot write image (") + e.what() + ")", path);
  }
  if (!ok) throw IoError("cannot write image", path);
}

std::vector<std::uint8_t> encode_png(const cv::Mat& image) {
  std::vector<std::uint8_t> buf;
  if (!cv::imencode(".png", image, buf)) throw IoError("PNG encoding failed");
  return buf;
}

cv::Mat decode_image(std::span<const std::uint8_t> bytes, ReadMode mode) {
  if (bytes.empty()) throw FormatError("empty image payload", {}, 0);
  const cv::Mat raw(1, static_cast<int>(bytes.size()), CV_8UC1,
                    const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat img;
  try {
    img = cv::imdecode(raw, to_flags(mode));
  } catch (const cv::Exception&) {
    img.release();
  }
  if (img.empty()) throw FormatError("undecodable image payload", {}, 0);
  return img;
}

}  // namespace simcurate
