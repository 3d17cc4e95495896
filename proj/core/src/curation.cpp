#include "simcurate/curation.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "simcurate/digest.hpp"
#include "simcurate/errors.hpp"
#include "simcurate/image_io.hpp"
#include "simcurate/parallel.hpp"

namespace fs = std::filesystem;

namespace simcurate {

std::string_view to_string(ScoreMethod m) {
  return m == ScoreMethod::brightness ? "brightness" : "phash";
}

std::string_view to_string(Aggregation a) {
  switch (a) {
    case Aggregation::min: return "min";
    case Aggregation::mean: return "mean";
    case Aggregation::median: return "median";
  }
  return "min";
}

ScoreMethod parse_score_method(std::string_view s) {
  if (s == "brightness") return ScoreMethod::brightness;
  if (s == "phash") return ScoreMethod::phash;
  throw ContractError("unknown scoring method '" + std::string(s) + "'");
}

Aggregation parse_aggregation(std::string_view s) {
  if (s == "min") return Aggregation::min;
  if (s == "mean") return Aggregation::mean;
  if (s == "median") return Aggregation::median;
  throw ContractError("unknown aggregation '" + std::string(s) + "'");
}

namespace {

std::string feature_key(const ScoringOptions& o) {
  if (o.method == ScoreMethod::brightness) return "brightness";
  return "phash:" + std::string(to_string(o.hash_algorithm)) + ":" + std::to_string(o.hash_bits);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double_field(std::string_view tok, const fs::path& path, std::size_t line) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw FormatError("invalid number '" + std::string(tok) + "'", path, line);
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Sidecar of computed features: "digest,key,value" lines.
class FeatureCache {
 public:
  explicit FeatureCache(std::optional<fs::path> path) : path_(std::move(path)) {
    if (!path_ || !fs::exists(*path_)) return;
    std::ifstream in(*path_);
    if (!in) throw IoError("cannot open feature cache", *path_);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || (lineno == 1 && line.rfind("digest,", 0) == 0)) continue;
      const auto f = split_csv(line);
      if (f.size() != 3) throw FormatError("malformed cache row", *path_, lineno);
      entries_[f[0] + "," + f[1]] = f[2];
    }
  }

  bool enabled() const { return path_.has_value(); }

  std::optional<std::string> get(const std::string& digest, const std::string& key) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(digest + "," + key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void put(const std::string& digest, const std::string& key, std::string value) {
    std::lock_guard lock(mutex_);
    entries_[digest + "," + key] = std::move(value);
    dirty_ = true;
  }

  void save() const {
    if (!path_ || !dirty_) return;
    if (path_->has_parent_path()) fs::create_directories(path_->parent_path());
    std::ofstream out(*path_, std::ios::trunc);
    if (!out) throw IoError("cannot write feature cache", *path_);
    out << "digest,feature,value\n";
    for (const auto& [k, v] : entries_) out << k << ',' << v << '\n';
  }

 private:
  std::optional<fs::path> path_;
  std::map<std::string, std::string> entries_;
  mutable std::mutex mutex_;
  bool dirty_ = false;
};

ImageFeature decode_feature(const std::string& value, const ScoringOptions& o) {
  ImageFeature f;
  if (o.method == ScoreMethod::brightness)
    f.brightness = std::stod(value);
  else
    f.hash = PerceptualHash::from_hex(o.hash_algorithm, value);
  return f;
}

std::string encode_feature(const ImageFeature& f, const ScoringOptions& o) {
  return o.method == ScoreMethod::brightness ? format_double(f.brightness) : f.hash.to_hex();
}

std::vector<ImageFeature> features_for(const Dataset& d, const ScoringOptions& o,
                                       FeatureCache& cache) {
  const std::string key = feature_key(o);
  std::vector<ImageFeature> out(d.size());
  parallel_for(d.size(), o.jobs, [&](std::size_t i) {
    const auto& path = d.records[i].image_path;
    if (!cache.enabled()) {
      out[i] = compute_feature(read_image(path, ReadMode::unchanged), o);
      return;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image", path);
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                          std::istreambuf_iterator<char>());
    const std::string digest = sha256_hex(bytes);
    if (auto hit = cache.get(digest, key)) {
      out[i] = decode_feature(*hit, o);
      return;
    }
    cv::Mat img;
    try {
      img = decode_image(bytes, ReadMode::unchanged);
    } catch (const FormatError&) {
      throw IoError("cannot decode image", path);
    }
    out[i] = compute_feature(img, o);
    cache.put(digest, key, encode_feature(out[i], o));
  });
  return out;
}

}  // namespace

ImageFeature compute_feature(const cv::Mat& image, const ScoringOptions& o) {
  const GrayImage gray = to_gray(image);
  ImageFeature f;
  if (o.method == ScoreMethod::brightness)
    f.brightness = brightness(gray);
  else
    f.hash = compute_hash(gray, o.hash_algorithm, o.hash_bits);
  return f;
}

double feature_distance(const ImageFeature& a, const ImageFeature& b, ScoreMethod method) {
  if (method == ScoreMethod::brightness) return std::abs(a.brightness - b.brightness);
  return static_cast<double>(hamming(a.hash, b.hash));
}

double aggregate(std::vector<double> d, Aggregation aggregation) {
  if (d.empty()) throw ContractError("aggregate: no distances");
  std::sort(d.begin(), d.end());
  switch (aggregation) {
    case Aggregation::min: return d.front();
    case Aggregation::mean: return std::accumulate(d.begin(), d.end(), 0.0) / d.size();
    case Aggregation::median: {
      const std::size_t mid = d.size() / 2;
      return d.size() % 2 ? d[mid] : (d[mid - 1] + d[mid]) / 2;
    }
  }
  return d.front();
}

std::vector<CurationScore> score_against_ref(const Dataset& pool, const Dataset& ref,
                                             const ScoringOptions& o) {
  if (pool.empty()) throw ContractError("score_against_ref: pool is empty");
  if (ref.empty()) throw ContractError("score_against_ref: reference set is empty");
  if (o.method == ScoreMethod::phash && !is_valid_hash_size(o.hash_bits))
    throw ContractError("hash bit depth must be 16, 64 or 256");

  FeatureCache cache(o.cache_path);
  const auto ref_features = features_for(ref, o, cache);
  const auto pool_features = features_for(pool, o, cache);
  cache.save();

  std::vector<CurationScore> scores(pool.size());
  parallel_for(pool.size(), o.jobs, [&](std::size_t i) {
    std::vector<double> d;
    d.reserve(ref_features.size());
    for (const auto& rf : ref_features) d.push_back(feature_distance(pool_features[i], rf, o.method));
    scores[i] = {pool.records[i].id, o.method, o.aggregation, aggregate(std::move(d), o.aggregation)};
  });
  return scores;
}

void write_scores_csv(const fs::path& path, const std::vector<CurationScore>& scores) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write scores", path);
  out << "image_id,method,aggregation,distance\n";
  for (const auto& s : scores)
    out << s.image_id << ',' << to_string(s.method) << ',' << to_string(s.aggregation) << ','
        << format_double(s.distance) << '\n';
  if (!out) throw IoError("write failed", path);
}

std::vector<CurationScore> read_scores_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scores", path);
  std::vector<CurationScore> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("image_id,", 0) == 0) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) throw FormatError("expected image_id,method,aggregation,distance", path, lineno);
    CurationScore s;
    s.image_id = f[0];
    try {
      s.method = parse_score_method(f[1]);
      s.aggregation = parse_aggregation(f[2]);
    } catch (const ContractError& e) {
      throw FormatError(e.what(), path, lineno);
    }
    s.distance = parse_double_field(f[3], path, lineno);
    if (s.distance < 0) throw FormatError("negative distance", path, lineno);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::size_t> SubsetPlan::sizes() const {
  std::vector<std::size_t> out;
  if (step == 0) return out;
  for (std::size_t s = seed_size; s <= max_size; s += step) out.push_back(s);
  return out;
}

SubsetPlan parse_subset_plan(std::string_view text) {
  SubsetPlan plan;
  std::size_t* fields[] = {&plan.seed_size, &plan.step, &plan.max_size};
  std::size_t start = 0;
  for (int k = 0; k < 3; ++k) {
    const std::size_t end = k < 2 ? text.find(':', start) : text.size();
    if (end == std::string_view::npos) throw ContractError("plan must look like seed:step:max");
    const auto tok = text.substr(start, end - start);
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), *fields[k]);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty())
      throw ContractError("plan must look like seed:step:max");
    start = end + 1;
  }
  if (plan.step < 1) throw ContractError("plan step must be at least 1");
  if (plan.seed_size > plan.max_size) throw ContractError("plan seed size exceeds max size");
  return plan;
}

std::vector<std::string> rank_pool(const std::vector<CurationScore>& scores,
                                   const std::vector<std::string>& candidates) {
  std::unordered_map<std::string, double> by_id;
  by_id.reserve(scores.size());
  for (const auto& s : scores) by_id.emplace(s.image_id, s.distance);
  std::vector<std::pair<double, std::string>> keyed;
  keyed.reserve(candidates.size());
  for (const auto& id : candidates) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ContractError("no score for pool image '" + id + "'");
    keyed.emplace_back(it->second, id);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::string> out;
  out.reserve(keyed.size());
  for (auto& [_, id] : keyed) out.push_back(std::move(id));
  return out;
}

std::vector<Dataset> rank_and_select(const std::vector<CurationScore>& scores, const Dataset& pool,
                                     const SubsetPlan& plan) {
  if (plan.step < 1) throw ContractError("plan step must be at least 1");
  if (plan.seed_size > plan.max_size) throw ContractError("plan seed size exceeds max size");
  if (plan.max_size > pool.size())
    throw ContractError("plan max size " + std::to_string(plan.max_size) + " exceeds pool size " +
                        std::to_string(pool.size()));

  std::set<std::string> pool_ids;
  for (const auto& r : pool.records) pool_ids.insert(r.id);
  std::set<std::string> scored;
  for (const auto& s : scores) {
    if (!pool_ids.contains(s.image_id))
      throw ContractError("score for unknown image '" + s.image_id + "'");
    if (s.method != scores.front().method || s.aggregation != scores.front().aggregation)
      throw ContractError("scores mix methods or aggregations");
    if (!scored.insert(s.image_id).second)
      throw ContractError("duplicate score for image '" + s.image_id + "'");
  }
  if (scored.size() != pool_ids.size()) throw ContractError("scores do not cover every pool image");

  std::vector<std::string> ids(pool_ids.begin(), pool_ids.end());  // id order
  if (plan.seed_selection == SeedSelection::random) {
    std::mt19937_64 rng(plan.seed_rng);
    std::shuffle(ids.begin(), ids.end(), rng);
  }
  const std::vector<std::string> seed(ids.begin(), ids.begin() + plan.seed_size);
  std::vector<std::string> rest(ids.begin() + plan.seed_size, ids.end());
  std::sort(rest.begin(), rest.end());
  const auto ranked = rank_pool(scores, rest);

  const std::string method =
      scores.empty() ? std::string("base") : "fil_" + std::string(to_string(scores.front().method));
  std::vector<Dataset> subsets;
  for (std::size_t size : plan.sizes()) {
    Dataset d{method + "_" + std::to_string(size), pool.role, {}, pool.depth_scale};
    std::vector<std::string> members(seed);
    members.insert(members.end(), ranked.begin(), ranked.begin() + (size - plan.seed_size));
    std::sort(members.begin(), members.end());
    d.records.reserve(members.size());
    for (const auto& id : members) d.records.push_back(*pool.find(id));
    subsets.push_back(std::move(d));
  }
  return subsets;
}

}  // namespace simcurate
