#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "simcurate/errors.hpp"
#include "simcurate/eval.hpp"

using namespace simcurate;

namespace {

Dataset truth_of(std::vector<std::vector<BoundingBox>> per_image, int w = 100, int h = 100) {
  Dataset d{"truth", DatasetRole::test, {}, 1.0};
  for (std::size_t i = 0; i < per_image.size(); ++i) {
    ImageRecord r;
    r.id = "img" + std::to_string(i);
    r.width = w;
    r.height = h;
    r.boxes = std::move(per_image[i]);
    d.records.push_back(r);
  }
  d.sort_by_id();
  return d;
}

Detection det(const std::string& id, const BoundingBox& b, double conf) { return {id, b.class_id, b, conf}; }

BoundingBox random_box(std::mt19937_64& rng, int cls) {
  std::uniform_real_distribution<double> u(0, 1);
  const double w = 0.05 + 0.4 * u(rng), h = 0.05 + 0.4 * u(rng);
  return {cls, w / 2 + (1 - w) * u(rng), h / 2 + (1 - h) * u(rng), w, h};
}

}  // namespace

TEST(Iou, HandValues) {
  EXPECT_NEAR(iou(PixelBox{0, 0, 2, 2}, PixelBox{1, 1, 3, 3}), 1.0 / 7.0, 1e-12);
  EXPECT_EQ(iou(PixelBox{0, 0, 2, 2}, PixelBox{0, 0, 2, 2}), 1.0);
  EXPECT_EQ(iou(PixelBox{0, 0, 1, 1}, PixelBox{2, 2, 3, 3}), 0.0);
  EXPECT_EQ(iou(PixelBox{0, 0, 1, 1}, PixelBox{1, 0, 2, 1}), 0.0);  // touching
}

TEST(Iou, SymmetricBoundedAndScaleInvariant) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 1000; ++i) {
    const BoundingBox a = random_box(rng, 0), b = random_box(rng, 0);
    const double v = iou(a, b);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_DOUBLE_EQ(v, iou(b, a));
    EXPECT_NEAR(v, iou(a.to_pixels(640, 480), b.to_pixels(640, 480)), 1e-12);
    EXPECT_NEAR(v, testkit::box_iou(a, b), 1e-12);
  }
}

TEST(AveragePrecision, HandCaseFalsePositiveRankedFirst) {
  // One truth box; FP at 0.9 then TP at 0.8. Precision 1/2 at recall 1.
  const BoundingBox t{0, 0.5, 0.5, 0.2, 0.2};
  const Dataset truth = truth_of({{t}});
  const auto r = evaluate({det("img0", {0, 0.1, 0.1, 0.1, 0.1}, 0.9), det("img0", t, 0.8)}, truth);
  EXPECT_EQ(r.map50, 0.5);
  EXPECT_EQ(r.per_class.at(0).true_positives, 1u);
}

TEST(AveragePrecision, PerfectAndEmptyPredictions) {
  std::mt19937_64 rng(4);
  const Dataset truth = truth_of({{random_box(rng, 0), random_box(rng, 1)}, {random_box(rng, 2)}});
  std::vector<Detection> perfect;
  for (const auto& rec : truth.records)
    for (const auto& b : rec.boxes) perfect.push_back(det(rec.id, b, 0.9));
  EXPECT_EQ(evaluate(perfect, truth).map50, 1.0);
  const auto empty = evaluate({}, truth);
  EXPECT_EQ(empty.map50, 0.0);
  EXPECT_EQ(empty.per_class_ap.size(), 3u);
}

TEST(AveragePrecision, ElevenPointInterpolation) {
  const BoundingBox t{0, 0.5, 0.5, 0.2, 0.2};
  const Dataset truth = truth_of({{t}});
  EvalOptions o;
  o.interpolation = Interpolation::eleven_point;
  const auto r = evaluate({det("img0", {0, 0.1, 0.1, 0.1, 0.1}, 0.9), det("img0", t, 0.8)}, truth, o);
  EXPECT_NEAR(r.map50, 0.5, 1e-15);
  // Recall tops out at 1/2: points 0.0..0.5 get precision 1.
  const Dataset two = truth_of({{t, {0, 0.1, 0.1, 0.1, 0.1}}});
  EXPECT_NEAR(evaluate({det("img0", t, 0.8)}, two, o).map50, 6.0 / 11.0, 1e-15);
}

TEST(Evaluate, DuplicateDetectionsAreFalsePositives) {
  const BoundingBox t{0, 0.5, 0.5, 0.2, 0.2};
  const auto r = evaluate({det("img0", t, 0.9), det("img0", t, 0.8)}, truth_of({{t}}));
  EXPECT_EQ(r.per_class.at(0).true_positives, 1u);
  EXPECT_EQ(r.map50, 1.0);  // the FP ranks below the only TP
}

TEST(Evaluate, PredictionOnlyClassesAreIgnored) {
  const BoundingBox t{0, 0.5, 0.5, 0.2, 0.2};
  const auto r = evaluate({det("img0", t, 0.9), det("img0", {5, 0.5, 0.5, 0.2, 0.2}, 0.99)}, truth_of({{t}}));
  EXPECT_EQ(r.per_class_ap.size(), 1u);
  EXPECT_EQ(r.map50, 1.0);
}

TEST(Evaluate, ThresholdIsInclusive) {
  // Prediction covering exactly half of a truth box's union: IoU = 0.5.
  const BoundingBox t{0, 0.5, 0.5, 0.5, 0.5};
  const BoundingBox p{0, 0.375, 0.5, 0.25, 0.5};  // inside t, half its area
  EXPECT_EQ(iou(t, p), 0.5);
  EXPECT_EQ(evaluate({det("img0", p, 0.5)}, truth_of({{t}})).map50, 1.0);
}

TEST(Evaluate, RejectsEmptyTruthAndBadConfidence) {
  EXPECT_THROW(evaluate({}, Dataset{}), ContractError);
  EXPECT_THROW(evaluate({}, truth_of({{}})), ContractError);
  const BoundingBox t{0, 0.5, 0.5, 0.2, 0.2};
  EXPECT_THROW(evaluate({det("img0", t, 1.5)}, truth_of({{t}})), ContractError);
}

TEST(Evaluate, MatchesBruteForceOracleOnRandomInstances) {
  std::mt19937_64 rng(1234);
  for (int inst = 0; inst < 300; ++inst) {
    const int images = 1 + static_cast<int>(rng() % 3);
    std::vector<std::vector<BoundingBox>> per_image(images);
    int total = 0;
    for (auto& boxes : per_image) {
      const int n = static_cast<int>(rng() % 4);
      for (int k = 0; k < n; ++k) boxes.push_back(random_box(rng, static_cast<int>(rng() % 3)));
      total += n;
    }
    if (total == 0) per_image[0].push_back(random_box(rng, 0));
    const Dataset truth = truth_of(per_image);
    std::vector<Detection> preds;
    const int n_pred = static_cast<int>(rng() % 9);
    for (int k = 0; k < n_pred; ++k) {
      const auto& rec = truth.records[rng() % truth.size()];
      BoundingBox b = (!rec.boxes.empty() && rng() % 2) ? rec.boxes[rng() % rec.boxes.size()] : random_box(rng, static_cast<int>(rng() % 3));
      b.cx += (static_cast<double>(rng() % 100) / 100.0 - 0.5) * 0.1;
      preds.push_back(det(rec.id, b, static_cast<double>(rng() % 10) / 10.0));  // coarse, so ties happen
    }
    EXPECT_NEAR(evaluate(preds, truth).map50, testkit::brute_force_map(preds, truth, 0.5), 1e-9) << inst;
  }
}

TEST(Evaluate, InvariantToPredictionOrderWhenConfidencesDistinct) {
  std::mt19937_64 rng(77);
  std::vector<std::vector<BoundingBox>> per_image(3);
  for (auto& boxes : per_image)
    for (int k = 0; k < 4; ++k) boxes.push_back(random_box(rng, k % 2));
  const Dataset truth = truth_of(per_image);
  std::vector<Detection> preds;
  for (const auto& rec : truth.records)
    for (const auto& b : rec.boxes) {
      BoundingBox p = b;
      p.cx += 0.02;
      preds.push_back(det(rec.id, p, std::uniform_real_distribution<double>(0, 1)(rng)));
    }
  const double base = evaluate(preds, truth).map50;
  for (int i = 0; i < 20; ++i) {
    std::shuffle(preds.begin(), preds.end(), rng);
    EXPECT_EQ(evaluate(preds, truth).map50, base);
  }
}

TEST(PredictionsCsv, RoundTripAndErrors) {
  testkit::TempDir dir;
  const std::vector<Detection> preds{det("000001", {2, 0.25, 0.5, 0.125, 0.0625}, 0.75)};
  write_predictions_csv(dir / "p.csv", preds);
  const auto back = read_predictions_csv(dir / "p.csv");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].image_id, "000001");
  EXPECT_EQ(back[0].class_id, 2);
  EXPECT_EQ(back[0].box, preds[0].box);
  EXPECT_EQ(back[0].confidence, 0.75);
  std::ofstream(dir / "bad.csv") << "image_id,class_id,cx,cy,w,h,confidence\n1,2,3\n";
  EXPECT_THROW(read_predictions_csv(dir / "bad.csv"), FormatError);
}

TEST(EvalJson, CarriesPerClassBreakdown) {
  const BoundingBox t{1, 0.5, 0.5, 0.2, 0.2};
  const auto j = nlohmann::json::parse(to_json(evaluate({det("img0", t, 0.9)}, truth_of({{t}}))));
  EXPECT_EQ(j["map50"].get<double>(), 1.0);
  EXPECT_EQ(j["per_class"]["1"]["truth_boxes"].get<int>(), 1);
  EXPECT_EQ(j["interpolation"], "all_points");
}
