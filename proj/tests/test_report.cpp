#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "fixtures.hpp"
#include "simcurate/errors.hpp"
#include "simcurate/report.hpp"

using namespace simcurate;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LedgerEntry timing(std::optional<Method> m, std::size_t n, std::string stage, double s) {
  LedgerEntry e;
  e.kind = LedgerEntry::Kind::timing;
  e.method = m;
  e.n_images = n;
  e.stage = std::move(stage);
  e.seconds = s;
  e.hardware = "cpu";
  return e;
}

LedgerEntry result(Method m, std::size_t n, double map50, double train_s) {
  LedgerEntry e;
  e.kind = LedgerEntry::Kind::result;
  e.method = m;
  e.n_images = n;
  e.map50 = map50;
  e.seconds = train_s;
  return e;
}

// Two methods x three sizes, with a shared render stage and a method-wide
// filtering stage.
void write_fixture_ledger(Ledger& ledger) {
  ledger.append(timing(std::nullopt, 0, "render", 120));
  ledger.append(timing(Method::fil_phash, 0, "filtering", 30));
  const double maps[2][3] = {{0.41, 0.55, 0.62}, {0.38, 0.6, 0.71}};
  for (int s = 0; s < 3; ++s) {
    const std::size_t n = 400 + 200 * s;
    ledger.append(timing(Method::aug_random, n, "generation", 900.0 * (s + 1)));
    ledger.append(result(Method::aug_random, n, maps[0][s], 600 + 300 * s));
    ledger.append(result(Method::fil_phash, n, maps[1][s], 580 + 310 * s));
  }
}

}  // namespace

TEST(Ledger, AppendAndReadBack) {
  testkit::TempDir dir;
  Ledger ledger(dir / "sub" / "ledger.ndjson");
  ledger.append(timing(Method::fil_phash, 400, "filtering", 1.5));
  ledger.append(result(Method::fil_phash, 400, 0.5, 10));
  const auto e = ledger.entries();
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0].stage, "filtering");
  EXPECT_EQ(e[0].hardware, "cpu");
  EXPECT_EQ(e[1].kind, LedgerEntry::Kind::result);
  EXPECT_EQ(e[1].map50, 0.5);
}

TEST(Ledger, MalformedLinesAreFormatErrors) {
  testkit::TempDir dir;
  std::ofstream(dir / "l.ndjson") << R"({"kind":"timing","method":"fil_phash","n_images":1,"stage":"x","seconds":1})"
                                  << "\n{not json\n";
  try {
    Ledger(dir / "l.ndjson").entries();
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::ofstream(dir / "m.ndjson") << R"({"kind":"timing","method":"nope","n_images":1,"stage":"x","seconds":1})" << "\n";
  EXPECT_THROW(Ledger(dir / "m.ndjson").entries(), FormatError);
}

TEST(Ledger, ConcurrentAppendsProduceWholeLines) {
  testkit::TempDir dir;
  Ledger ledger(dir / "c.ndjson");
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&, t] {
      for (int i = 0; i < 50; ++i) ledger.append(timing(Method::aug_context, 100 + t, "generation", i));
    });
  for (auto& th : threads) th.join();
  EXPECT_EQ(ledger.entries().size(), 200u);
}

TEST(Ledger, ReplayMatchesSummationOracle) {
  std::mt19937_64 rng(8);
  const Method methods[] = {Method::fil_brightness, Method::fil_phash, Method::aug_context};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<LedgerEntry> entries;
    for (int k = 0; k < 40; ++k) {
      const Method m = methods[rng() % 3];
      const std::size_t n = 200 * (1 + rng() % 3);
      const double s = static_cast<double>(rng() % 1000) / 10.0;
      switch (rng() % 5) {
        case 0: entries.push_back(timing(std::nullopt, 0, "render", s)); break;
        case 1: entries.push_back(timing(m, 0, "filtering", s)); break;
        case 2: entries.push_back(result(m, n, s / 100.0, s)); break;
        default: entries.push_back(timing(m, n, rng() % 2 ? "generation" : "inference", s));
      }
    }
    const auto records = replay_entries(entries);
    for (const auto& r : records) {
      // Oracle: shared + method-wide + own timings, plus the last training time.
      double expected = 0;
      std::optional<double> map, train;
      for (const auto& e : entries) {
        if (e.kind == LedgerEntry::Kind::timing) {
          if (!e.method || (*e.method == r.method && (e.n_images == 0 || e.n_images == r.n_images)))
            expected += e.seconds;
        } else if (*e.method == r.method && e.n_images == r.n_images) {
          map = e.map50;
          train = e.seconds;
        }
      }
      if (train) expected += *train;
      EXPECT_NEAR(r.total_seconds, expected, 1e-9);
      EXPECT_NEAR(r.stage_sum(), expected, 1e-9);
      EXPECT_EQ(r.map50, map);
      EXPECT_GT(r.n_images, 0u);
    }
  }
}

TEST(RecordTiming, RejectsNegativeDurations) {
  testkit::TempDir dir;
  Ledger ledger(dir / "t.ndjson");
  EXPECT_THROW(record_timing({&ledger, Method::fil_phash, 400, ""}, "filtering", -1), ContractError);
  EXPECT_NO_THROW(record_timing({&ledger, Method::fil_phash, 400, ""}, "filtering", 0));
}

TEST(StageTimer, RecordsOnDestruction) {
  testkit::TempDir dir;
  Ledger ledger(dir / "t.ndjson");
  { StageTimer t({&ledger, Method::aug_random, 400, "cpu"}, "generation"); }
  const auto e = ledger.entries();
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e[0].stage, "generation");
  EXPECT_GE(e[0].seconds, 0.0);
}

TEST(IngestResults, MergesRowsAndReportsProblems) {
  testkit::TempDir dir;
  std::ofstream(dir / "r.csv") << "method,n_images,map50,training_seconds\n"
                               << "fil_phash,400,0.5,100\n"
                               << "fil_phash,400,0.6,110\n"
                               << "mystery,400,0.5,100\n"
                               << "aug_random,800,1.5,100\n"
                               << "aug_random,600,0.7,90\n";
  std::vector<ExperimentRecord> recs(1);
  recs[0].method = Method::fil_phash;
  recs[0].n_images = 400;
  recs[0].stage_times["filtering"] = 20;
  recs[0].total_seconds = 20;
  const auto rep = ingest_training_results(dir / "r.csv", recs);
  ASSERT_EQ(rep.merged.size(), 1u);
  EXPECT_EQ(rep.merged[0].map50, 0.6);  // last wins
  EXPECT_EQ(rep.warnings.size(), 1u);
  EXPECT_EQ(rep.errors.size(), 2u);
  ASSERT_EQ(rep.unmatched.size(), 1u);
  EXPECT_EQ(rep.unmatched[0].n_images, 600u);
  EXPECT_EQ(rep.records[0].total_seconds, 130);
  EXPECT_EQ(rep.records[0].map50, 0.6);
}

TEST(Report, FixtureLedgerIsByteStableAndMatchesGolden) {
  testkit::TempDir dir;
  Ledger ledger(dir / "ledger.ndjson");
  write_fixture_ledger(ledger);
  const auto records = ledger.replay();
  ASSERT_EQ(records.size(), 6u);
  const auto a = emit_report(records, dir / "a");
  const auto b = emit_report(Ledger(dir / "ledger.ndjson").replay(), dir / "b");
  EXPECT_EQ(slurp(a.csv), slurp(b.csv));
  EXPECT_EQ(slurp(a.svg), slurp(b.svg));
  const fs::path golden(SIMCURATE_TEST_DATA);
  if (std::getenv("SIMCURATE_UPDATE_GOLDEN")) {
    fs::copy_file(a.csv, golden / "report_golden.csv", fs::copy_options::overwrite_existing);
    fs::copy_file(a.svg, golden / "report_golden.svg", fs::copy_options::overwrite_existing);
  }
  EXPECT_EQ(slurp(a.csv), slurp(golden / "report_golden.csv"));
  EXPECT_EQ(slurp(a.svg), slurp(golden / "report_golden.svg"));
}

TEST(Report, CsvTotalsEqualStageSums) {
  testkit::TempDir dir;
  Ledger ledger(dir / "ledger.ndjson");
  write_fixture_ledger(ledger);
  std::istringstream csv(render_report_csv(ledger.replay()));
  std::string header, line;
  std::getline(csv, header);
  EXPECT_EQ(header, "method,n_images,filtering_s,generation_s,render_s,training_s,total_s,map50,status,hardware");
  int rows = 0;
  while (std::getline(csv, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string tok; std::getline(ss, tok, ',');) f.push_back(tok);
    ASSERT_GE(f.size(), 9u);
    const double sum = std::stod(f[2]) + std::stod(f[3]) + std::stod(f[4]) + std::stod(f[5]);
    EXPECT_NEAR(std::stod(f[6]), sum, 2e-3) << line;
    EXPECT_EQ(f[8], "complete");
    ++rows;
  }
  EXPECT_EQ(rows, 6);
}

TEST(Report, SvgHasOneSeriesPerMethodAndOnePointPerRecord) {
  testkit::TempDir dir;
  Ledger ledger(dir / "ledger.ndjson");
  write_fixture_ledger(ledger);
  const std::string svg = render_report_svg(ledger.replay());
  auto count = [&](const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = svg.find(needle); pos != std::string::npos; pos = svg.find(needle, pos + 1)) ++n;
    return n;
  };
  EXPECT_EQ(count("<g class=\"series\""), 2u);
  EXPECT_EQ(count("<circle"), 6u);
  EXPECT_LT(svg.find("data-method=\"aug_random\""), svg.find("data-method=\"fil_phash\""));
}

TEST(Report, PendingRecordsAreListedButNotPlotted) {
  std::vector<ExperimentRecord> recs(2);
  recs[0].method = Method::fil_phash;
  recs[0].n_images = 400;
  recs[0].stage_times["filtering"] = 10;
  recs[0].total_seconds = 10;
  recs[0].map50 = 0.5;
  recs[1] = recs[0];
  recs[1].n_images = 600;
  recs[1].map50.reset();
  EXPECT_NE(render_report_csv(recs).find("fil_phash,600,10.000,10.000,,pending"), std::string::npos);
  const std::string svg = render_report_svg(recs);
  EXPECT_EQ(svg.find(">600<"), std::string::npos);
}

TEST(Report, RefusesInconsistentOrIncompleteLedgers) {
  testkit::TempDir dir;
  std::vector<ExperimentRecord> recs(1);
  recs[0].method = Method::fil_phash;
  recs[0].n_images = 400;
  recs[0].stage_times["filtering"] = 10;
  recs[0].total_seconds = 10;
  EXPECT_THROW(emit_report(recs, dir / "x"), ContractError);  // no mAP50
  recs[0].map50 = 0.4;
  recs[0].total_seconds = 11;
  EXPECT_THROW(emit_report(recs, dir / "y"), ContractError);  // total != sum
}

TEST(Method, NamesRoundTrip) {
  for (Method m : {Method::base_render, Method::fil_brightness, Method::fil_phash, Method::aug_context,
                   Method::aug_random})
    EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_THROW(parse_method("fil_md5"), ContractError);
}
