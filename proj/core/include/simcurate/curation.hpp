#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "simcurate/dataset.hpp"
#include "simcurate/features.hpp"

namespace simcurate {

enum class ScoreMethod { brightness, phash };
enum class Aggregation { min, mean, median };

std::string_view to_string(ScoreMethod m);
std::string_view to_string(Aggregation a);
ScoreMethod parse_score_method(std::string_view s);
Aggregation parse_aggregation(std::string_view s);

// Distance of one pool image to the reference set. Brightness distances are
// |delta B|; phash distances are Hamming bit counts.
struct CurationScore {
  std::string image_id;
  ScoreMethod method = ScoreMethod::phash;
  Aggregation aggregation = Aggregation::min;
  double distance = 0;

  friend bool operator==(const CurationScore&, const CurationScore&) = default;
};

struct ScoringOptions {
  ScoreMethod method = ScoreMethod::phash;
  Aggregation aggregation = Aggregation::min;
  HashAlgorithm hash_algorithm = HashAlgorithm::dct_phash;
  std::size_t hash_bits = 64;
  unsigned jobs = 1;
  // Optional feature cache, keyed by (content digest, feature parameters).
  std::optional<std::filesystem::path> cache_path;
};

// Per-image feature for a method. Exactly one member is meaningful.
struct ImageFeature {
  double brightness = 0;
  PerceptualHash hash;
};

ImageFeature compute_feature(const cv::Mat& image, const ScoringOptions& options);
double feature_distance(const ImageFeature& a, const ImageFeature& b, ScoreMethod method);

// Reduces per-reference distances. The input is sorted first so the result
// does not depend on reference ordering.
double aggregate(std::vector<double> distances, Aggregation aggregation);

// One score per pool record, in pool (id) order. Throws ContractError if
// either dataset is empty.
std::vector<CurationScore> score_against_ref(const Dataset& pool, const Dataset& ref,
                                             const ScoringOptions& options = {});

void write_scores_csv(const std::filesystem::path& path, const std::vector<CurationScore>& scores);
std::vector<CurationScore> read_scores_csv(const std::filesystem::path& path);

enum class SeedSelection { first_by_id, random };

struct SubsetPlan {
  std::size_t seed_size = 400;
  std::size_t step = 200;
  std::size_t max_size = 2000;
  SeedSelection seed_selection = SeedSelection::first_by_id;
  std::uint64_t seed_rng = 0;  // used only with SeedSelection::random

  // Sizes seed_size, seed_size + step, ... not exceeding max_size.
  std::vector<std::size_t> sizes() const;
};

// Parses "seed:step:max", e.g. "400:200:2000".
SubsetPlan parse_subset_plan(std::string_view text);

// Non-seed pool ids sorted by ascending distance, ties by id.
std::vector<std::string> rank_pool(const std::vector<CurationScore>& scores,
                                   const std::vector<std::string>& candidates);

// Nested subsets: the seed plus the best (k * step) ranked non-seed records.
// Subset names are "fil_<method>_<size>".
std::vector<Dataset> rank_and_select(const std::vector<CurationScore>& scores, const Dataset& pool,
                                     const SubsetPlan& plan);

}  // namespace simcurate
