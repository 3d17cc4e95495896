#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "simcurate/dataset.hpp"

namespace simcurate {

struct Detection {
  std::string image_id;
  int class_id = 0;
  BoundingBox box;  // normalized, same convention as labels
  double confidence = 0;
};

// Intersection over union. Scale-invariant, so normalized boxes give the same
// value as their pixel-space counterparts.
double iou(const PixelBox& a, const PixelBox& b);
double iou(const BoundingBox& a, const BoundingBox& b);

enum class Interpolation { all_points, eleven_point };

struct EvalOptions {
  double iou_threshold = 0.5;
  Interpolation interpolation = Interpolation::all_points;
};

struct ClassStats {
  std::size_t truth_boxes = 0;
  std::size_t predictions = 0;
  std::size_t true_positives = 0;
};

struct EvalResult {
  std::map<int, double> per_class_ap;   // classes with at least one truth box
  std::map<int, ClassStats> per_class;  // same keys
  double map50 = 0;                     // mean of per_class_ap
  double iou_threshold = 0.5;
  Interpolation interpolation = Interpolation::all_points;
};

// Precision/recall at each rank of a confidence-sorted list of TP/FP flags.
struct PrCurve {
  std::vector<double> precision;
  std::vector<double> recall;
};
PrCurve pr_curve(const std::vector<bool>& is_tp, std::size_t n_truth);
double average_precision(const PrCurve& curve, Interpolation interpolation);

// Greedy per-class matching in descending confidence (ties: image_id, then
// input order); each prediction takes the unmatched same-image truth box with
// the highest IoU at or above the threshold. Classes only present in
// predictions are ignored. Throws ContractError if truth has no boxes.
EvalResult evaluate(const std::vector<Detection>& predictions, const Dataset& truth,
                    const EvalOptions& options = {});

// CSV with header image_id,class_id,cx,cy,w,h,confidence.
std::vector<Detection> read_predictions_csv(const std::filesystem::path& path);
void write_predictions_csv(const std::filesystem::path& path, const std::vector<Detection>& preds);
std::string to_json(const EvalResult& result);
void write_eval_json(const std::filesystem::path& path, const EvalResult& result);

}  // namespace simcurate
