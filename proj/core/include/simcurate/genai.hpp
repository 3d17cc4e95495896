#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core/mat.hpp>

#include "simcurate/dataset.hpp"
#include "simcurate/features.hpp"

namespace simcurate {

// Background prompts used for random-pool domain randomization. They avoid any
// industrial scenery on purpose.
inline constexpr std::array<std::string_view, 8> kRandomPromptPool = {
    "A scene on the moon, craters, astronaut",
    "A dense forest with sunlight filtering through the trees",
    "A snow-covered mountain range with clear blue skies",
    "An underwater coral reef teeming with fish",
    "A peaceful meadow with wildflowers and tall grass swaying in the breeze",
    "A peaceful beach with waves gently lapping the shore",
    "A desert landscape with sand dunes and clear night sky",
    "A grassy hillside with grazing animals under a bright blue sky",
};
inline constexpr std::string_view kContextNegativePrompt = "bad, deformed, ugly";
inline constexpr std::string_view kRandomNegativePrompt = "bad, deformed, ugly, abstract";

struct GenerationRequest {
  cv::Mat image;  // 8-bit BGR original
  cv::Mat depth;  // depth map as stored (8- or 16-bit single channel)
  EdgeMap canny;
  std::string prompt;
  std::string negative_prompt;
  double control_scale = 0.5;
  double guidance_scale = 5.0;
  int denoise_steps = 50;
  std::uint64_t seed = 0;
};

// Throws ContractError if dimensions disagree or scales are out of range.
void validate_request(const GenerationRequest& request);

// Implementations must be safe to call from several threads at once.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  // Returns an 8-bit BGR image. Throws BackendError.
  virtual cv::Mat generate(const GenerationRequest& request) = 0;
};

class CaptionBackend {
 public:
  virtual ~CaptionBackend() = default;
  // Throws BackendError; retryable when the service is unreachable.
  virtual std::string caption(const cv::Mat& image) = 0;
};

// out(p) = original(p) where mask(p) != 0, generated(p) elsewhere. No blending.
cv::Mat composite(const cv::Mat& original, const cv::Mat& generated, const cv::Mat& mask);

struct PromptPair {
  std::string prompt;
  std::string negative;
  friend bool operator==(const PromptPair&, const PromptPair&) = default;
};

enum class PromptMode { context_aware, random_pool, file };

std::string_view to_string(PromptMode m);
PromptMode parse_prompt_mode(std::string_view s);
Provenance provenance_for(PromptMode m);

class PromptProvider {
 public:
  // Uniform draws from kRandomPromptPool (or a custom pool).
  static PromptProvider random_pool(std::vector<std::string> pool = {});
  // Captions a reference image per request; captions are cached per image id.
  static PromptProvider context_aware(std::shared_ptr<CaptionBackend> captioner, Dataset ref);
  // Successive non-empty lines of a text file, wrapping around at the end.
  // Throws ContractError if the file has no prompts, IoError if unreadable.
  static PromptProvider from_file(const std::filesystem::path& path);

  PromptMode mode() const { return mode_; }
  const std::vector<std::string>& pool() const { return pool_; }
  const std::string& negative() const { return negative_; }
  void set_negative(std::string negative) { negative_ = std::move(negative); }

  // Not thread-safe: callers issue prompts in record order.
  PromptPair make_prompt(const ImageRecord& record, std::mt19937_64& rng);

 private:
  PromptProvider() = default;
  PromptMode mode_ = PromptMode::random_pool;
  std::vector<std::string> pool_;
  std::string negative_;
  std::size_t next_line_ = 0;
  std::shared_ptr<CaptionBackend> captioner_;
  std::shared_ptr<const Dataset> ref_;
  std::map<std::string, std::string> caption_cache_;
};

struct AugmentParams {
  std::filesystem::path out_dir;
  std::uint64_t master_seed = 0;
  double control_scale = 0.5;
  double guidance_scale = 5.0;
  int denoise_steps = 50;
  CannyParams canny;
  unsigned jobs = 1;         // in-flight backend requests
  int max_retries = 2;       // extra attempts after a retryable failure
  std::string id_suffix = "aug";
  bool keep_generated = false;  // also persist pre-composite images under generated/
  WriteMode write_mode = WriteMode::copy;
};

struct SkipEntry {
  std::string record_id;
  std::string reason;
};

struct RecordTiming {
  std::string record_id;
  double seconds = 0;          // wall time for the whole record
  double backend_latency = 0;  // time spent inside successful backend calls
};

struct AugmentOutcome {
  Dataset dataset;                    // augmented records, id order
  std::filesystem::path manifest;
  std::vector<SkipEntry> rejected;    // failed admission (missing mask/depth)
  std::vector<SkipEntry> skipped;     // admitted but not produced
  std::vector<RecordTiming> timings;  // produced records, id order
  double total_seconds = 0;
  std::size_t admitted = 0;
};

// Background randomization: per record load image/depth/mask, compute Canny
// edges, request a new image with seed master_seed + index, paste the masked
// targets back, and write the result with the original boxes. Backend failures
// are retried (retryable only) and then skipped; the run continues.
AugmentOutcome augment_dataset(const Dataset& dataset, PromptProvider& provider,
                               GenerationBackend& backend, const AugmentParams& params);

// Writes rejected and skipped records as "record_id,stage,reason" CSV.
void write_skip_log(const std::filesystem::path& path, const AugmentOutcome& outcome);

// Deterministic stand-in: fills the frame with a colour derived from the seed.
// Optionally fails a deterministic fraction of requests.
class MockBackend : public GenerationBackend {
 public:
  struct Options {
    double failure_rate = 0.0;       // fraction of seeds that fail
    bool failures_retryable = true;  // retryable failures recur for the same seed
    bool corrupt_dimensions = false; // return a wrongly sized image
  };
  MockBackend() = default;
  explicit MockBackend(Options options) : options_(options) {}

  cv::Mat generate(const GenerationRequest& request) override;
  static cv::Vec3b colour_for_seed(std::uint64_t seed);
  bool fails(std::uint64_t seed) const;

  std::size_t calls() const;
  std::vector<std::uint64_t> seeds_seen() const;

 private:
  Options options_;
  mutable std::mutex mutex_;
  std::vector<std::uint64_t> seeds_;
};

class MockCaptioner : public CaptionBackend {
 public:
  explicit MockCaptioner(std::string caption) : caption_(std::move(caption)) {}
  std::string caption(const cv::Mat&) override;
  std::size_t calls() const;

 private:
  std::string caption_;
  mutable std::mutex mutex_;
  std::size_t calls_ = 0;
};

}  // namespace simcurate
