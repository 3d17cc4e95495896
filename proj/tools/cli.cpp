#include "cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include "simcurate/curation.hpp"
#include "simcurate/dataset.hpp"
#include "simcurate/errors.hpp"
#include "simcurate/eval.hpp"
#include "simcurate/features.hpp"
#include "simcurate/genai.hpp"
#include "simcurate/http_backend.hpp"
#include "simcurate/image_io.hpp"
#include "simcurate/report.hpp"

namespace fs = std::filesystem;

namespace simcurate::cli {
namespace {

struct Globals {
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::string ledger;
  std::string hardware;
  std::string log_level = "warn";
};

struct IngestArgs {
  std::string root, name, role = "train", out;
  double depth_scale = 1.0;
  bool copy = false;
  double render_seconds = -1;
};

struct ScoreArgs {
  std::string method, pool, ref, out, aggregation = "min", hash_algorithm = "dct_phash", cache;
  std::size_t hash_bits = 64;
};

struct SelectArgs {
  std::string scores, pool, plan = "400:200:2000", out, seed_selection = "first";
  bool copy = false;
};

struct SplitArgs {
  std::string dataset, out;
  double fraction = 0.8;
  bool copy = false;
};

struct AugmentArgs {
  std::string dataset, mode = "random_pool", prompt_file, ref, backend_url = "http://127.0.0.1:8000",
              caption_url, out, mock_caption = "there is a desk with a monitor", suffix = "aug";
  bool mock = false, keep_generated = false, reference_paths = false;
  double mock_failure_rate = 0.0, timeout = 300.0, connect_timeout = 10.0;
  int retries = 2;
  double control_scale = 0.5, guidance = 5.0;
  int steps = 50;
  double canny_low = 100, canny_high = 200, canny_sigma = 1.4;
  std::size_t n_images = 0;
};

struct CannyArgs {
  std::string image, out;
  double low = 100, high = 200, sigma = 1.4;
};

struct EvalArgs {
  std::string predictions, truth, out, interpolation = "all_points";
  double iou = 0.5;
};

struct IngestResultsArgs {
  std::string csv;
};

struct ReportArgs {
  std::string out;
};

WriteMode mode_for(bool copy) { return copy ? WriteMode::copy : WriteMode::reference; }

std::optional<Ledger> open_ledger(const Globals& g) {
  if (g.ledger.empty()) return std::nullopt;
  return std::optional<Ledger>(std::in_place, g.ledger);
}

void dump_config(const CLI::App& app, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write resolved config", path);
  out << app.config_to_str(true, false);
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_ingest(const CLI::App& app, const Globals& g, const IngestArgs& a, std::ostream& out) {
  const fs::path root(a.root);
  const std::string name = a.name.empty() ? fs::absolute(root).lexically_normal().filename().string() : a.name;
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset d = ingest_directory(root, name, parse_role(a.role), a.depth_scale, {g.jobs});
  const fs::path manifest = write_dataset(d, a.out, mode_for(a.copy));
  dump_config(app, fs::path(a.out) / "resolved_config.toml");
  if (auto ledger = open_ledger(g)) {
    record_timing({&*ledger, std::nullopt, 0, g.hardware}, "ingest", elapsed(t0));
    if (a.render_seconds >= 0)
      record_timing({&*ledger, std::nullopt, 0, g.hardware}, "render", a.render_seconds);
  }
  out << "ingested " << d.size() << " records -> " << manifest.string() << '\n';
  return kOk;
}

int cmd_score(const CLI::App& app, const Globals& g, const ScoreArgs& a, std::ostream& out) {
  ScoringOptions o;
  o.method = parse_score_method(a.method);
  o.aggregation = parse_aggregation(a.aggregation);
  o.hash_algorithm = parse_hash_algorithm(a.hash_algorithm);
  o.hash_bits = a.hash_bits;
  o.jobs = g.jobs;
  if (!a.cache.empty()) o.cache_path = fs::path(a.cache);

  const auto t0 = std::chrono::steady_clock::now();
  const Dataset pool = load_dataset(a.pool, {g.jobs});
  const Dataset ref = load_dataset(a.ref, {g.jobs});
  const auto scores = score_against_ref(pool, ref, o);
  write_scores_csv(a.out, scores);
  dump_config(app, a.out + ".config.toml");
  if (auto ledger = open_ledger(g)) {
    const Method m = o.method == ScoreMethod::phash ? Method::fil_phash : Method::fil_brightness;
    record_timing({&*ledger, m, 0, g.hardware}, "filtering", elapsed(t0));
  }
  out << "scored " << scores.size() << " images against " << ref.size() << " references -> " << a.out << '\n';
  return kOk;
}

int cmd_select(const CLI::App& app, const Globals& g, const SelectArgs& a, std::ostream& out) {
  SubsetPlan plan = parse_subset_plan(a.plan);
  if (a.seed_selection == "random") {
    plan.seed_selection = SeedSelection::random;
    plan.seed_rng = g.seed;
  } else if (a.seed_selection != "first") {
    throw ContractError("--seed-selection must be 'first' or 'random'");
  }
  const Dataset pool = load_dataset(a.pool, {g.jobs});
  const auto scores = read_scores_csv(a.scores);
  const auto subsets = rank_and_select(scores, pool, plan);

  const fs::path out_dir(a.out);
  fs::create_directories(out_dir);
  for (const auto& s : subsets) {
    const fs::path manifest = write_dataset(s, out_dir / s.name, mode_for(a.copy));
    out << s.size() << " records -> " << manifest.string() << '\n';
  }

  // Audit trail of the ranking that produced the subsets.
  std::vector<std::string> rest;
  std::vector<std::string> seed_ids;
  for (const auto& r : subsets.front().records) seed_ids.push_back(r.id);
  std::sort(seed_ids.begin(), seed_ids.end());
  for (const auto& r : pool.records)
    if (!std::binary_search(seed_ids.begin(), seed_ids.end(), r.id)) rest.push_back(r.id);
  const auto ranked = rank_pool(scores, rest);
  std::ofstream rank_out(out_dir / "ranking.csv", std::ios::trunc);
  if (!rank_out) throw IoError("cannot write ranking", out_dir / "ranking.csv");
  rank_out << "rank,image_id\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) rank_out << i + 1 << ',' << ranked[i] << '\n';
  dump_config(app, out_dir / "resolved_config.toml");
  return kOk;
}

int cmd_split(const CLI::App& app, const Globals& g, const SplitArgs& a, std::ostream& out) {
  const Dataset d = load_dataset(a.dataset, {g.jobs});
  const auto [train, val] = split_dataset(d, {a.fraction, g.seed});
  const fs::path out_dir(a.out);
  write_dataset(train, out_dir / "train", mode_for(a.copy));
  write_dataset(val, out_dir / "val", mode_for(a.copy));
  dump_config(app, out_dir / "resolved_config.toml");
  out << "split " << d.size() << " -> " << train.size() << " train / " << val.size() << " val\n";
  return kOk;
}

int cmd_augment(const CLI::App& app, const Globals& g, const AugmentArgs& a, std::ostream& out) {
  const Dataset d = load_dataset(a.dataset, {g.jobs});
  const PromptMode mode = parse_prompt_mode(a.mode);

  HttpBackendOptions http;
  http.base_url = a.backend_url;
  http.timeout_seconds = a.timeout;
  http.connect_timeout_seconds = a.connect_timeout;

  std::unique_ptr<GenerationBackend> backend;
  if (a.mock)
    backend = std::make_unique<MockBackend>(MockBackend::Options{a.mock_failure_rate, true, false});
  else
    backend = std::make_unique<HttpGenerationBackend>(http);

  std::optional<PromptProvider> provider;
  switch (mode) {
    case PromptMode::random_pool: provider = PromptProvider::random_pool(); break;
    case PromptMode::file:
      if (a.prompt_file.empty()) throw ContractError("--mode file requires --prompt-file");
      provider = PromptProvider::from_file(a.prompt_file);
      break;
    case PromptMode::context_aware: {
      if (a.ref.empty()) throw ContractError("--mode context_aware requires --ref");
      std::shared_ptr<CaptionBackend> captioner;
      if (a.mock) {
        captioner = std::make_shared<MockCaptioner>(a.mock_caption);
      } else {
        HttpBackendOptions cap = http;
        if (!a.caption_url.empty()) cap.base_url = a.caption_url;
        captioner = std::make_shared<HttpCaptioner>(cap);
      }
      provider = PromptProvider::context_aware(captioner, load_dataset(a.ref, {g.jobs}));
      break;
    }
  }

  AugmentParams p;
  p.out_dir = a.out;
  p.master_seed = g.seed;
  p.control_scale = a.control_scale;
  p.guidance_scale = a.guidance;
  p.denoise_steps = a.steps;
  p.canny = {a.canny_low, a.canny_high, a.canny_sigma};
  p.jobs = g.jobs;
  p.max_retries = a.retries;
  p.id_suffix = a.suffix;
  p.keep_generated = a.keep_generated;
  p.write_mode = a.reference_paths ? WriteMode::reference : WriteMode::copy;

  const auto outcome = augment_dataset(d, *provider, *backend, p);
  dump_config(app, fs::path(a.out) / "resolved_config.toml");
  if (auto ledger = open_ledger(g)) {
    const Method m = mode == PromptMode::random_pool ? Method::aug_random : Method::aug_context;
    const std::size_t n = a.n_images ? a.n_images : d.size();
    record_timing({&*ledger, m, n, g.hardware}, "generation", outcome.total_seconds);
  }
  out << "augmented " << outcome.dataset.size() << " of " << outcome.admitted << " admitted records ("
      << outcome.skipped.size() << " skipped, " << outcome.rejected.size() << " rejected) -> "
      << outcome.manifest.string() << '\n';
  return kOk;
}

int cmd_canny(const CLI::App& app, const CannyArgs& a, std::ostream& out) {
  const cv::Mat img = read_image(a.image, ReadMode::unchanged);
  const EdgeMap edges = canny(to_gray(img), {a.low, a.high, a.sigma});
  write_image(a.out, edges.to_mat());
  dump_config(app, a.out + ".config.toml");
  out << edges.count() << " edge pixels -> " << a.out << '\n';
  return kOk;
}

int cmd_eval(const CLI::App& app, const Globals& g, const EvalArgs& a, std::ostream& out) {
  EvalOptions o;
  o.iou_threshold = a.iou;
  if (a.interpolation == "all_points")
    o.interpolation = Interpolation::all_points;
  else if (a.interpolation == "eleven_point")
    o.interpolation = Interpolation::eleven_point;
  else
    throw ContractError("--interpolation must be all_points or eleven_point");
  const Dataset truth = load_dataset(a.truth, {g.jobs});
  const auto preds = read_predictions_csv(a.predictions);
  const EvalResult r = evaluate(preds, truth, o);
  write_eval_json(a.out, r);
  dump_config(app, a.out + ".config.toml");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", r.map50);
  out << "mAP50 = " << buf << " over " << r.per_class_ap.size() << " classes -> " << a.out << '\n';
  return kOk;
}

int cmd_ingest_results(const CLI::App& app, const Globals& g, const IngestResultsArgs& a,
                       std::ostream& out, std::ostream& err) {
  auto ledger = open_ledger(g);
  if (!ledger) throw ContractError("ingest-results requires --ledger");
  const auto rep = ingest_training_results(a.csv, ledger->replay());
  for (const auto& e : rep.errors) err << "error: " << e << '\n';
  for (const auto& w : rep.warnings) err << "warning: " << w << '\n';
  for (const auto& u : rep.unmatched)
    err << "unmatched: " << to_string(u.method) << '/' << u.n_images << " (line " << u.line
        << ") has no timing entries; recorded with training time only\n";
  auto append = [&](const TrainingRow& r) {
    LedgerEntry e;
    e.kind = LedgerEntry::Kind::result;
    e.method = r.method;
    e.n_images = r.n_images;
    e.map50 = r.map50;
    e.seconds = r.training_seconds;
    ledger->append(e);
  };
  for (const auto& r : rep.merged) append(r);
  for (const auto& r : rep.unmatched) append(r);
  dump_config(app, fs::path(g.ledger).string() + ".ingest-results.config.toml");
  out << rep.merged.size() << " merged, " << rep.unmatched.size() << " unmatched, " << rep.errors.size()
      << " rejected rows\n";
  return kOk;
}

int cmd_report(const CLI::App& app, const Globals& g, const ReportArgs& a, std::ostream& out) {
  auto ledger = open_ledger(g);
  if (!ledger) throw ContractError("report requires --ledger");
  const auto files = emit_report(ledger->replay(), a.out);
  dump_config(app, fs::path(a.out) / "resolved_config.toml");
  out << "report -> " << files.csv.string() << ", " << files.svg.string() << '\n';
  return kOk;
}

spdlog::level::level_enum parse_level(const std::string& s) {
  const auto lvl = spdlog::level::from_str(s);
  if (lvl == spdlog::level::off && s != "off") throw ContractError("unknown log level '" + s + "'");
  return lvl;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic dataset curation, background randomization and benchmarking", "simcurate"};
  app.set_config("--config", "", "TOML config file; command-line flags override it");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  Globals g;
  app.add_option("--seed", g.seed, "Master seed for every random choice");
  app.add_option("--jobs", g.jobs, "Worker threads / in-flight backend requests")
      ->check(CLI::Range(1u, 1024u));
  app.add_option("--ledger", g.ledger, "Timing ledger (newline-delimited JSON) to append to");
  app.add_option("--hardware", g.hardware, "Hardware descriptor stored with ledger timings");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off");

  IngestArgs ia;
  auto* ingest = app.add_subcommand("ingest", "Build a manifest from a render export directory");
  ingest->add_option("--root", ia.root, "Directory with images/ and optional labels/, masks/, depth/")
      ->required();
  ingest->add_option("--out", ia.out, "Output directory for manifest.json and labels")->required();
  ingest->add_option("--name", ia.name, "Dataset name (default: root directory name)");
  ingest->add_option("--role", ia.role, "train, val, ref or test");
  ingest->add_option("--depth-scale", ia.depth_scale, "Depth units per 16-bit depth PNG step");
  ingest->add_flag("--copy", ia.copy, "Copy artifacts instead of referencing them");
  ingest->add_option("--render-seconds", ia.render_seconds,
                     "Rendering time to charge to every method in the ledger (negative: none)");

  ScoreArgs sa;
  auto* score = app.add_subcommand("score", "Score pool images against a reference set");
  score->add_option("--method", sa.method, "brightness or phash")->required();
  score->add_option("--pool", sa.pool, "Pool manifest")->required();
  score->add_option("--ref", sa.ref, "Reference manifest")->required();
  score->add_option("--out", sa.out, "Scores CSV")->required();
  score->add_option("--aggregation", sa.aggregation, "min, mean or median over references");
  score->add_option("--hash-algorithm", sa.hash_algorithm, "dct_phash, average_hash or difference_hash");
  score->add_option("--hash-bits", sa.hash_bits, "Hash bit depth: 16, 64 or 256");
  score->add_option("--cache", sa.cache, "Feature cache CSV reused across runs");

  SelectArgs sel;
  auto* select = app.add_subcommand("select", "Emit nested training subsets from scores");
  select->add_option("--scores", sel.scores, "Scores CSV from 'score'")->required();
  select->add_option("--pool", sel.pool, "Pool manifest")->required();
  select->add_option("--plan", sel.plan, "seed:step:max subset sizes");
  select->add_option("--out", sel.out, "Output directory (one manifest per size)")->required();
  select->add_option("--seed-selection", sel.seed_selection, "first (by id) or random (uses --seed)");
  select->add_flag("--copy", sel.copy, "Copy artifacts instead of referencing them");

  SplitArgs sp;
  auto* split = app.add_subcommand("split", "Seeded train/validation split");
  split->add_option("--dataset", sp.dataset, "Manifest to split")->required();
  split->add_option("--out", sp.out, "Output directory (train/ and val/)")->required();
  split->add_option("--fraction", sp.fraction, "Training fraction")->check(CLI::Range(0.0, 1.0));
  split->add_flag("--copy", sp.copy, "Copy artifacts instead of referencing them");

  AugmentArgs aa;
  auto* augment = app.add_subcommand("augment", "Background randomization through a generation backend");
  augment->add_option("--dataset", aa.dataset, "Manifest of records with masks and depth maps")->required();
  augment->add_option("--out", aa.out, "Output directory")->required();
  augment->add_option("--mode", aa.mode, "context_aware, random_pool or file");
  augment->add_option("--prompt-file", aa.prompt_file, "Prompt lines for --mode file");
  augment->add_option("--ref", aa.ref, "Reference manifest for --mode context_aware");
  augment->add_option("--backend-url", aa.backend_url, "Generation service base URL")
      ->envname("SIMCURATE_BACKEND_URL");
  augment->add_option("--caption-url", aa.caption_url, "Captioning service base URL (default: backend URL)");
  augment->add_flag("--mock", aa.mock, "Use the deterministic offline mock backend");
  augment->add_option("--mock-failure-rate", aa.mock_failure_rate, "Fraction of mock requests that fail")
      ->check(CLI::Range(0.0, 1.0));
  augment->add_option("--mock-caption", aa.mock_caption, "Caption returned by the mock captioner");
  augment->add_option("--timeout", aa.timeout, "Per-request timeout in seconds");
  augment->add_option("--connect-timeout", aa.connect_timeout, "Connection timeout in seconds");
  augment->add_option("--retries", aa.retries, "Retries after a retryable backend failure");
  augment->add_option("--control-scale", aa.control_scale, "Conditioning scale in (0, 1]");
  augment->add_option("--guidance", aa.guidance, "Guidance scale");
  augment->add_option("--steps", aa.steps, "Denoising steps");
  augment->add_option("--canny-low", aa.canny_low, "Canny low threshold");
  augment->add_option("--canny-high", aa.canny_high, "Canny high threshold");
  augment->add_option("--canny-sigma", aa.canny_sigma, "Canny Gaussian sigma (0 = none)");
  augment->add_option("--suffix", aa.suffix, "Suffix appended to output record ids");
  augment->add_flag("--keep-generated", aa.keep_generated, "Also save pre-composite images");
  augment->add_flag("--reference-paths", aa.reference_paths, "Reference masks/depth instead of copying");
  augment->add_option("--n-images", aa.n_images, "Subset size to file the timing under (default: dataset size)");

  CannyArgs ca;
  auto* canny_cmd = app.add_subcommand("canny", "Compute a Canny edge map");
  canny_cmd->add_option("--image", ca.image, "Input image")->required();
  canny_cmd->add_option("--out", ca.out, "Output PNG (0/255)")->required();
  canny_cmd->add_option("--low", ca.low, "Low threshold");
  canny_cmd->add_option("--high", ca.high, "High threshold");
  canny_cmd->add_option("--sigma", ca.sigma, "Gaussian sigma (0 = none)");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "mAP50 of predictions against ground truth");
  eval_cmd->add_option("--predictions", ea.predictions, "Predictions CSV")->required();
  eval_cmd->add_option("--truth", ea.truth, "Ground-truth manifest")->required();
  eval_cmd->add_option("--out", ea.out, "Result JSON")->required();
  eval_cmd->add_option("--iou", ea.iou, "IoU threshold")->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--interpolation", ea.interpolation, "all_points or eleven_point");

  IngestResultsArgs ira;
  auto* ingest_results = app.add_subcommand("ingest-results", "Merge external training results into the ledger");
  ingest_results->add_option("--csv", ira.csv, "CSV: method,n_images,map50,training_seconds")->required();

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Write report.csv and report.svg from the ledger");
  report->add_option("--out", ra.out, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (auto* sub : app.get_subcommands()) failing = sub;
    err << failing->help();
    return kUsageError;
  }

  try {
    spdlog::set_level(parse_level(g.log_level));
    if (*ingest) return cmd_ingest(app, g, ia, out);
    if (*score) return cmd_score(app, g, sa, out);
    if (*select) return cmd_select(app, g, sel, out);
    if (*split) return cmd_split(app, g, sp, out);
    if (*augment) return cmd_augment(app, g, aa, out);
    if (*canny_cmd) return cmd_canny(app, ca, out);
    if (*eval_cmd) return cmd_eval(app, g, ea, out);
    if (*ingest_results) return cmd_ingest_results(app, g, ira, out, err);
    if (*report) return cmd_report(app, g, ra, out);
  } catch (const ContractError& e) {
    err << "error: " << e.what() << '\n';
    return kContractError;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const BackendError& e) {
    err << "backend error: " << e.what() << '\n';
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }
  return kUsageError;
}

int run(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("simcurate"));
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace simcurate::cli
