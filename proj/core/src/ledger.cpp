#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "simcurate/errors.hpp"
#include "simcurate/report.hpp"

namespace fs = std::filesystem;

namespace simcurate {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::base_render: return "base_render";
    case Method::fil_brightness: return "fil_brightness";
    case Method::fil_phash: return "fil_phash";
    case Method::aug_context: return "aug_context";
    case Method::aug_random: return "aug_random";
  }
  return "base_render";
}

std::optional<Method> try_parse_method(std::string_view s) {
  for (Method m : {Method::base_render, Method::fil_brightness, Method::fil_phash,
                   Method::aug_context, Method::aug_random})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

Method parse_method(std::string_view s) {
  if (auto m = try_parse_method(s)) return *m;
  throw ContractError("unknown method '" + std::string(s) + "'");
}

double ExperimentRecord::stage_sum() const {
  double sum = 0;
  for (const auto& [_, v] : stage_times) sum += v;
  return sum;
}

Ledger::Ledger(fs::path path) : path_(std::move(path)) {}

void Ledger::append(const LedgerEntry& e) {
  nlohmann::ordered_json j;
  const std::string method = e.method ? std::string(to_string(*e.method)) : std::string("*");
  if (e.kind == LedgerEntry::Kind::timing) {
    j["kind"] = "timing";
    j["method"] = method;
    j["n_images"] = e.n_images;
    j["stage"] = e.stage;
    j["seconds"] = e.seconds;
    if (!e.hardware.empty()) j["hardware"] = e.hardware;
  } else {
    if (!e.method) throw ContractError("ledger: result entries need a method");
    j["kind"] = "result";
    j["method"] = method;
    j["n_images"] = e.n_images;
    j["map50"] = e.map50;
    j["training_seconds"] = e.seconds;
  }
  std::lock_guard lock(mutex_);
  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app);
  if (!out) throw IoError("cannot append to ledger", path_);
  out << j.dump() << '\n';
  if (!out) throw IoError("ledger write failed", path_);
}

std::vector<LedgerEntry> Ledger::entries() const {
  std::lock_guard lock(mutex_);
  std::vector<LedgerEntry> out;
  if (!fs::exists(path_)) return out;
  std::ifstream in(path_);
  if (!in) throw IoError("cannot open ledger", path_);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      LedgerEntry e;
      const auto kind = j.at("kind").get<std::string>();
      const auto method = j.at("method").get<std::string>();
      if (method != "*") e.method = parse_method(method);
      e.n_images = j.at("n_images").get<std::size_t>();
      if (kind == "timing") {
        e.kind = LedgerEntry::Kind::timing;
        e.stage = j.at("stage").get<std::string>();
        e.seconds = j.at("seconds").get<double>();
        e.hardware = j.value("hardware", std::string{});
      } else if (kind == "result") {
        e.kind = LedgerEntry::Kind::result;
        e.map50 = j.at("map50").get<double>();
        e.seconds = j.at("training_seconds").get<double>();
        if (!e.method) throw FormatError("result entry without a method", path_, lineno);
      } else {
        throw FormatError("unknown ledger entry kind '" + kind + "'", path_, lineno);
      }
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError(std::string("malformed ledger line: ") + ex.what(), path_, lineno);
    } catch (const ContractError& ex) {
      throw FormatError(ex.what(), path_, lineno);
    }
  }
  return out;
}

std::vector<ExperimentRecord> replay_entries(const std::vector<LedgerEntry>& entries) {
  std::map<std::pair<std::string, std::size_t>, ExperimentRecord> recs;
  std::vector<const LedgerEntry*> broadcast;  // shared or method-wide timings
  for (const auto& e : entries) {
    if (e.kind == LedgerEntry::Kind::timing && (!e.method || e.n_images == 0)) {
      broadcast.push_back(&e);
      continue;
    }
    auto& r = recs[{std::string(to_string(*e.method)), e.n_images}];
    r.method = *e.method;
    r.n_images = e.n_images;
    if (e.kind == LedgerEntry::Kind::timing) {
      r.stage_times[e.stage] += e.seconds;
      r.total_seconds += e.seconds;
      if (!e.hardware.empty()) r.hardware = e.hardware;
    } else {
      auto& training = r.stage_times["training"];
      r.total_seconds += e.seconds - training;
      training = e.seconds;
      r.map50 = e.map50;
    }
  }
  std::vector<ExperimentRecord> out;
  out.reserve(recs.size());
  for (auto& [_, r] : recs) {
    for (const auto* e : broadcast) {
      if (e->method && *e->method != r.method) continue;
      r.stage_times[e->stage] += e->seconds;
      r.total_seconds += e->seconds;
      if (r.hardware.empty()) r.hardware = e->hardware;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ExperimentRecord> Ledger::replay() const { return replay_entries(entries()); }

void record_timing(const RunContext& ctx, std::string_view stage, double seconds) {
  if (!(seconds >= 0)) throw ContractError("record_timing: duration must be non-negative");
  if (stage.empty()) throw ContractError("record_timing: stage name required");
  if (!ctx.ledger) throw ContractError("record_timing: no ledger");
  LedgerEntry e;
  e.kind = LedgerEntry::Kind::timing;
  e.method = ctx.method;
  e.n_images = ctx.n_images;
  e.stage = std::string(stage);
  e.seconds = seconds;
  e.hardware = ctx.hardware;
  ctx.ledger->append(e);
}

StageTimer::StageTimer(RunContext context, std::string stage)
    : context_(std::move(context)), stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}

StageTimer::~StageTimer() {
  if (stopped_) return;
  try {
    stop();
  } catch (const std::exception& e) {
    spdlog::error("failed to record stage '{}': {}", stage_, e.what());
  }
}

double StageTimer::stop() {
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  stopped_ = true;
  record_timing(context_, stage_, s);
  return s;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
bool parse_num(const std::string& tok, T& v) {
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  return !tok.empty() && ec == std::errc() && ptr == tok.data() + tok.size();
}

}  // namespace

IngestReport ingest_training_results(const fs::path& csv, std::vector<ExperimentRecord> records) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot open training results", csv);
  IngestReport rep;
  std::map<std::pair<std::string, std::size_t>, TrainingRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("method,", 0) == 0) continue;
    const auto f = split_csv(line);
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (f.size() != 4) {
      rep.errors.push_back(where + "expected method,n_images,map50,training_seconds");
      continue;
    }
    TrainingRow row;
    row.line = lineno;
    const auto m = try_parse_method(f[0]);
    if (!m) {
      rep.errors.push_back(where + "unknown method '" + f[0] + "'");
      continue;
    }
    row.method = *m;
    if (!parse_num(f[1], row.n_images) || !parse_num(f[2], row.map50) ||
        !parse_num(f[3], row.training_seconds)) {
      rep.errors.push_back(where + "invalid number");
      continue;
    }
    if (row.map50 < 0 || row.map50 > 1) {
      rep.errors.push_back(where + "map50 outside [0, 1]");
      continue;
    }
    if (row.training_seconds < 0) {
      rep.errors.push_back(where + "negative training time");
      continue;
    }
    const auto key = std::make_pair(f[0], row.n_images);
    if (auto it = rows.find(key); it != rows.end()) {
      rep.warnings.push_back(where + "duplicate " + f[0] + "/" + f[1] + " overrides line " +
                             std::to_string(it->second.line));
      spdlog::warn("{}: {}", csv.string(), rep.warnings.back());
    }
    rows[key] = row;
  }

  for (const auto& [key, row] : rows) {
    auto it = std::find_if(records.begin(), records.end(), [&](const ExperimentRecord& r) {
      return r.method == row.method && r.n_images == row.n_images;
    });
    if (it == records.end()) {
      rep.unmatched.push_back(row);
      continue;
    }
    auto& training = it->stage_times["training"];
    it->total_seconds += row.training_seconds - training;
    training = row.training_seconds;
    it->map50 = row.map50;
    rep.merged.push_back(row);
  }
  rep.records = std::move(records);
  return rep;
}

}  // namespace simcurate
