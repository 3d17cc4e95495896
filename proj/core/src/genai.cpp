#include "simcurate/genai.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <fstream>

#include <opencv2/core.hpp>

#include "simcurate/errors.hpp"
#include "simcurate/image_io.hpp"
#include "simcurate/parallel.hpp"

namespace fs = std::filesystem;

namespace simcurate {

void validate_request(const GenerationRequest& r) {
  if (r.image.empty()) throw ContractError("generation request has no image");
  const cv::Size size = r.image.size();
  if (r.depth.size() != size) throw ContractError("depth map and image sizes differ");
  if (r.canny.rows != size.height || r.canny.cols != size.width)
    throw ContractError("canny map and image sizes differ");
  if (!(r.control_scale > 0 && r.control_scale <= 1))
    throw ContractError("control_scale must lie in (0, 1]");
  if (r.denoise_steps < 1) throw ContractError("denoise_steps must be at least 1");
}

cv::Mat composite(const cv::Mat& original, const cv::Mat& generated, const cv::Mat& mask) {
  if (original.size() != generated.size() || original.size() != mask.size())
    throw ContractError("composite: original, generated and mask sizes differ");
  if (original.type() != generated.type())
    throw ContractError("composite: original and generated pixel types differ");
  if (mask.channels() != 1) throw ContractError("composite: mask must be single-channel");
  cv::Mat out = generated.clone();
  original.copyTo(out, mask);
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Slot {
  std::optional<ImageRecord> record;
  std::optional<SkipEntry> skip;
  RecordTiming timing;
};

// Calls fn with up to 1 + max_retries attempts on retryable BackendErrors.
template <typename Fn>
auto with_retries(int max_retries, const std::string& what, Fn&& fn) {
  for (int attempt = 0;; ++attempt) {
    try {
      return fn();
    } catch (const BackendError& e) {
      if (!e.retryable() || attempt >= max_retries) throw;
      spdlog::debug("{}: retrying after '{}' (attempt {})", what, e.what(), attempt + 1);
    }
  }
}

}  // namespace

AugmentOutcome augment_dataset(const Dataset& dataset, PromptProvider& provider,
                               GenerationBackend& backend, const AugmentParams& params) {
  if (params.out_dir.empty()) throw ContractError("augment: output directory required");
  if (params.jobs < 1) throw ContractError("augment: jobs must be at least 1");
  if (params.max_retries < 0) throw ContractError("augment: max_retries must be non-negative");
  const auto t_run = Clock::now();

  AugmentOutcome outcome;
  struct Admitted {
    std::size_t index;
    const ImageRecord* record;
    PromptPair prompt;
  };
  std::vector<Admitted> admitted;
  std::vector<Slot> slots;

  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const ImageRecord& r = dataset.records[i];
    if (!r.mask_path || !r.depth_path) {
      outcome.rejected.push_back({r.id, !r.mask_path ? "missing mask" : "missing depth map"});
      spdlog::warn("augment: rejecting '{}' ({})", r.id, outcome.rejected.back().reason);
      continue;
    }
    admitted.push_back({i, &r, {}});
  }
  outcome.admitted = admitted.size();
  slots.resize(admitted.size());

  // Prompts are drawn in record order so file-mode and caption caching stay
  // deterministic regardless of how many requests run concurrently.
  for (std::size_t k = 0; k < admitted.size(); ++k) {
    auto& a = admitted[k];
    std::mt19937_64 rng(params.master_seed + a.index);
    try {
      a.prompt = with_retries(params.max_retries, a.record->id,
                              [&] { return provider.make_prompt(*a.record, rng); });
    } catch (const BackendError& e) {
      slots[k].skip = SkipEntry{a.record->id, std::string("captioning failed: ") + e.what()};
    } catch (const IoError& e) {
      slots[k].skip = SkipEntry{a.record->id, std::string("captioning failed: ") + e.what()};
    }
  }

  const fs::path images_dir = params.out_dir / "images";
  const fs::path generated_dir = params.out_dir / "generated";
  fs::create_directories(images_dir);
  if (params.keep_generated) fs::create_directories(generated_dir);
  const Provenance provenance = provenance_for(provider.mode());

  parallel_for(admitted.size(), params.jobs, [&](std::size_t k) {
    Slot& slot = slots[k];
    if (slot.skip) return;
    const auto& a = admitted[k];
    const ImageRecord& src = *a.record;
    const auto t0 = Clock::now();
    const std::string new_id = src.id + "_" + params.id_suffix;
    try {
      GenerationRequest req;
      req.image = read_image(src.image_path, ReadMode::color);
      req.depth = read_image(*src.depth_path, ReadMode::unchanged);
      const cv::Mat mask = read_image(*src.mask_path, ReadMode::grayscale);
      if (mask.size() != req.image.size() || req.depth.size() != req.image.size())
        throw RecordError(src.id, "mask/depth dimensions differ from image");
      req.canny = canny(to_gray(req.image), params.canny);
      req.prompt = a.prompt.prompt;
      req.negative_prompt = a.prompt.negative;
      req.control_scale = params.control_scale;
      req.guidance_scale = params.guidance_scale;
      req.denoise_steps = params.denoise_steps;
      req.seed = params.master_seed + a.index;
      validate_request(req);

      const auto t_call = Clock::now();
      cv::Mat generated = with_retries(params.max_retries, src.id, [&] { return backend.generate(req); });
      slot.timing.backend_latency = seconds_since(t_call);
      if (generated.empty() || generated.size() != req.image.size() || generated.type() != CV_8UC3)
        throw BackendError("corrupt backend response (size or pixel type mismatch)", false);

      const cv::Mat out = composite(req.image, generated, mask);
      const fs::path out_path = images_dir / (new_id + ".png");
      write_image(out_path, out);
      if (params.keep_generated) write_image(generated_dir / (new_id + ".png"), generated);

      ImageRecord rec = src;
      rec.id = new_id;
      rec.image_path = fs::absolute(out_path).lexically_normal();
      rec.provenance = provenance;
      slot.record = std::move(rec);
      slot.timing.record_id = new_id;
      slot.timing.seconds = seconds_since(t0);
    } catch (const BackendError& e) {
      slot.skip = SkipEntry{src.id, std::string("backend: ") + e.what()};
    } catch (const IoError& e) {
      slot.skip = SkipEntry{src.id, std::string("io: ") + e.what()};
    } catch (const cv::Exception& e) {
      slot.skip = SkipEntry{src.id, std::string("opencv: ") + e.what()};
    }
    if (slot.skip) spdlog::warn("augment: skipping '{}': {}", src.id, slot.skip->reason);
  });

  outcome.dataset.name = dataset.name + "_" + params.id_suffix;
  outcome.dataset.role = dataset.role;
  outcome.dataset.depth_scale = dataset.depth_scale;
  for (auto& slot : slots) {
    if (slot.record) {
      outcome.dataset.records.push_back(std::move(*slot.record));
      outcome.timings.push_back(slot.timing);
    } else if (slot.skip) {
      outcome.skipped.push_back(std::move(*slot.skip));
    }
  }
  outcome.dataset.sort_by_id();
  outcome.manifest = write_dataset(outcome.dataset, params.out_dir, params.write_mode);
  write_skip_log(params.out_dir / "skipped.csv", outcome);
  outcome.total_seconds = seconds_since(t_run);
  return outcome;
}

void write_skip_log(const fs::path& path, const AugmentOutcome& outcome) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write skip log", path);
  auto clean = [](std::string s) {
    for (char& c : s)
      if (c == ',' || c == '\n' || c == '\r') c = ' ';
    return s;
  };
  out << "record_id,stage,reason\n";
  for (const auto& s : outcome.rejected) out << s.record_id << ",admission," << clean(s.reason) << '\n';
  for (const auto& s : outcome.skipped) out << s.record_id << ",generation," << clean(s.reason) << '\n';
}

}  // namespace simcurate
