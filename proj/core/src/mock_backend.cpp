#include "simcurate/errors.hpp"
#include "simcurate/genai.hpp"

namespace simcurate {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

cv::Vec3b MockBackend::colour_for_seed(std::uint64_t seed) {
  const std::uint64_t h = splitmix64(seed);
  return {static_cast<std::uint8_t>(h & 0xFF), static_cast<std::uint8_t>((h >> 8) & 0xFF),
          static_cast<std::uint8_t>((h >> 16) & 0xFF)};
}

bool MockBackend::fails(std::uint64_t seed) const {
  if (options_.failure_rate <= 0) return false;
  const double u = static_cast<double>(splitmix64(seed ^ 0xa5a5a5a5ULL) >> 11) * 0x1.0p-53;
  return u < options_.failure_rate;
}

cv::Mat MockBackend::generate(const GenerationRequest& request) {
  validate_request(request);
  {
    std::lock_guard lock(mutex_);
    seeds_.push_back(request.seed);
  }
  if (fails(request.seed))
    throw BackendError("mock backend: injected failure", options_.failures_retryable);
  cv::Size size = request.image.size();
  if (options_.corrupt_dimensions) size.width += 1;
  return cv::Mat(size, CV_8UC3, cv::Scalar(colour_for_seed(request.seed)));
}

std::size_t MockBackend::calls() const {
  std::lock_guard lock(mutex_);
  return seeds_.size();
}

std::vector<std::uint64_t> MockBackend::seeds_seen() const {
  std::lock_guard lock(mutex_);
  return seeds_;
}

std::string MockCaptioner::caption(const cv::Mat&) {
  std::lock_guard lock(mutex_);
  ++calls_;
  return caption_;
}

std::size_t MockCaptioner::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

}  // namespace simcurate
