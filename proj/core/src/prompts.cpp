#include <fstream>

#include "simcurate/errors.hpp"
#include "simcurate/genai.hpp"
#include "simcurate/image_io.hpp"

namespace simcurate {

std::string_view to_string(PromptMode m) {
  switch (m) {
    case PromptMode::context_aware: return "context_aware";
    case PromptMode::random_pool: return "random_pool";
    case PromptMode::file: return "file";
  }
  return "random_pool";
}

PromptMode parse_prompt_mode(std::string_view s) {
  if (s == "context_aware") return PromptMode::context_aware;
  if (s == "random_pool") return PromptMode::random_pool;
  if (s == "file") return PromptMode::file;
  throw ContractError("unknown prompt mode '" + std::string(s) + "'");
}

Provenance provenance_for(PromptMode m) {
  return m == PromptMode::random_pool ? Provenance::genai_random : Provenance::genai_context;
}

PromptProvider PromptProvider::random_pool(std::vector<std::string> pool) {
  PromptProvider p;
  p.mode_ = PromptMode::random_pool;
  if (pool.empty()) pool.assign(kRandomPromptPool.begin(), kRandomPromptPool.end());
  p.pool_ = std::move(pool);
  p.negative_ = kRandomNegativePrompt;
  return p;
}

PromptProvider PromptProvider::context_aware(std::shared_ptr<CaptionBackend> captioner,
                                             Dataset ref) {
  if (!captioner) throw ContractError("context-aware prompting needs a captioning endpoint");
  if (ref.empty()) throw ContractError("context-aware prompting needs reference images");
  PromptProvider p;
  p.mode_ = PromptMode::context_aware;
  p.captioner_ = std::move(captioner);
  p.ref_ = std::make_shared<const Dataset>(std::move(ref));
  p.negative_ = kContextNegativePrompt;
  return p;
}

PromptProvider PromptProvider::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open prompt file", path);
  PromptProvider p;
  p.mode_ = PromptMode::file;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) p.pool_.push_back(line);
  }
  if (p.pool_.empty()) throw ContractError("prompt file has no prompts: " + path.string());
  p.negative_ = kContextNegativePrompt;
  return p;
}

PromptPair PromptProvider::make_prompt(const ImageRecord&, std::mt19937_64& rng) {
  switch (mode_) {
    case PromptMode::random_pool: {
      std::uniform_int_distribution<std::size_t> pick(0, pool_.size() - 1);
      return {pool_[pick(rng)], negative_};
    }
    case PromptMode::file: {
      const std::string& line = pool_[next_line_ % pool_.size()];
      ++next_line_;
      return {line, negative_};
    }
    case PromptMode::context_aware: {
      std::uniform_int_distribution<std::size_t> pick(0, ref_->size() - 1);
      const ImageRecord& ref = ref_->records[pick(rng)];
      auto it = caption_cache_.find(ref.id);
      if (it == caption_cache_.end()) {
        const std::string text = captioner_->caption(read_image(ref.image_path, ReadMode::color));
        it = caption_cache_.emplace(ref.id, text).first;
      }
      return {it->second, negative_};
    }
  }
  throw ContractError("unknown prompt mode");
}

}  // namespace simcurate
