#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace simcurate {

enum class Method { base_render, fil_brightness, fil_phash, aug_context, aug_random };

std::string_view to_string(Method m);
// Throws ContractError on unknown names.
Method parse_method(std::string_view s);
std::optional<Method> try_parse_method(std::string_view s);

// One point of the accuracy-versus-time-overhead benchmark.
struct ExperimentRecord {
  Method method = Method::base_render;
  std::size_t n_images = 0;
  std::map<std::string, double> stage_times;  // seconds per stage
  double total_seconds = 0;                   // running sum as recorded
  std::optional<double> map50;                // absent until training results arrive
  std::string hardware;

  double stage_sum() const;
  bool complete() const { return map50.has_value(); }
};

// Newline-delimited JSON, append-only. Each line is either
//   {"kind":"timing","method":M|"*","n_images":N,"stage":S,"seconds":T,"hardware":H}
//   {"kind":"result","method":M,"n_images":N,"map50":V,"training_seconds":T}
// A timing with method "*" is shared by every record (e.g. base render time);
// a timing with n_images 0 applies to every size of its method (e.g. scoring
// the whole pool once).
struct LedgerEntry {
  enum class Kind { timing, result };
  Kind kind = Kind::timing;
  std::optional<Method> method;  // nullopt = shared
  std::size_t n_images = 0;
  std::string stage;
  double seconds = 0;
  double map50 = 0;
  std::string hardware;
};

class Ledger {
 public:
  explicit Ledger(std::filesystem::path path);

  const std::filesystem::path& path() const { return path_; }
  // Serialized through one writer; each call appends exactly one line.
  void append(const LedgerEntry& entry);
  std::vector<LedgerEntry> entries() const;
  // Folds entries into records keyed by (method, n_images > 0), sorted by
  // method name then size, with shared and method-wide timings added in.
  std::vector<ExperimentRecord> replay() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
};

std::vector<ExperimentRecord> replay_entries(const std::vector<LedgerEntry>& entries);

struct RunContext {
  Ledger* ledger = nullptr;
  std::optional<Method> method;  // nullopt = shared across methods
  std::size_t n_images = 0;
  std::string hardware;
};

// Throws ContractError on negative durations.
void record_timing(const RunContext& context, std::string_view stage, double seconds);

// Measures a stage on the steady clock and records it on stop() or destruction.
class StageTimer {
 public:
  StageTimer(RunContext context, std::string stage);
  ~StageTimer();
  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

  double stop();

 private:
  RunContext context_;
  std::string stage_;
  std::chrono::steady_clock::time_point start_;
  bool stopped_ = false;
};

struct TrainingRow {
  Method method = Method::base_render;
  std::size_t n_images = 0;
  double map50 = 0;
  double training_seconds = 0;
  std::size_t line = 0;
};

struct IngestReport {
  std::vector<ExperimentRecord> records;  // input records with results merged
  std::vector<TrainingRow> merged;        // rows that matched, after last-wins
  std::vector<TrainingRow> unmatched;
  std::vector<std::string> errors;        // row-level parse errors
  std::vector<std::string> warnings;      // duplicate rows
};

// CSV: method,n_images,map50,training_seconds. Rows join on (method, n_images);
// duplicates resolve last-wins with a warning; bad rows are listed and skipped.
IngestReport ingest_training_results(const std::filesystem::path& csv,
                                     std::vector<ExperimentRecord> records);

struct ReportFiles {
  std::filesystem::path csv;
  std::filesystem::path svg;
};

std::string render_report_csv(const std::vector<ExperimentRecord>& records);
// mAP50 against total time overhead (minutes), one series per method.
std::string render_report_svg(const std::vector<ExperimentRecord>& records);
// Writes report.csv and report.svg. Throws ContractError when no record has a
// mAP50 value or when a record's total differs from its stage sum.
ReportFiles emit_report(const std::vector<ExperimentRecord>& records,
                        const std::filesystem::path& out_dir);

}  // namespace simcurate
