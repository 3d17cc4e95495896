#include "simcurate/eval.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "simcurate/errors.hpp"

namespace fs = std::filesystem;

namespace simcurate {

double iou(const PixelBox& a, const PixelBox& b) {
  const double iw = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double ih = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  return iou(a.to_pixels(1, 1), b.to_pixels(1, 1));
}

PrCurve pr_curve(const std::vector<bool>& is_tp, std::size_t n_truth) {
  PrCurve c;
  c.precision.reserve(is_tp.size());
  c.recall.reserve(is_tp.size());
  std::size_t tp = 0;
  for (std::size_t k = 0; k < is_tp.size(); ++k) {
    if (is_tp[k]) ++tp;
    c.precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
    c.recall.push_back(n_truth ? static_cast<double>(tp) / static_cast<double>(n_truth) : 0.0);
  }
  return c;
}

double average_precision(const PrCurve& c, Interpolation interpolation) {
  if (c.precision.empty()) return 0.0;
  if (interpolation == Interpolation::eleven_point) {
    double ap = 0;
    for (int t = 0; t <= 10; ++t) {
      const double r = t / 10.0;
      double p = 0;
      for (std::size_t k = 0; k < c.recall.size(); ++k)
        if (c.recall[k] >= r) p = std::max(p, c.precision[k]);
      ap += p;
    }
    return ap / 11.0;
  }
  // Precision envelope, then area under the recall steps.
  std::vector<double> env(c.precision);
  for (std::size_t k = env.size() - 1; k > 0; --k) env[k - 1] = std::max(env[k - 1], env[k]);
  double ap = 0, prev_recall = 0;
  for (std::size_t k = 0; k < env.size(); ++k) {
    ap += (c.recall[k] - prev_recall) * env[k];
    prev_recall = c.recall[k];
  }
  return ap;
}

EvalResult evaluate(const std::vector<Detection>& preds, const Dataset& truth,
                    const EvalOptions& options) {
  if (truth.empty()) throw ContractError("evaluate: truth dataset is empty");
  if (!(options.iou_threshold > 0 && options.iou_threshold <= 1))
    throw ContractError("evaluate: IoU threshold must lie in (0, 1]");

  // Truth boxes grouped by (class, image).
  struct TruthBox {
    PixelBox box;
    bool matched = false;
  };
  std::map<int, std::unordered_map<std::string, std::vector<TruthBox>>> gt;
  std::map<int, std::size_t> n_truth;
  for (const auto& r : truth.records)
    for (const auto& b : r.boxes) {
      gt[b.class_id][r.id].push_back({b.to_pixels(r.width, r.height)});
      ++n_truth[b.class_id];
    }
  if (n_truth.empty()) throw ContractError("evaluate: truth dataset has no boxes");

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& p = preds[i];
    if (!(p.confidence >= 0 && p.confidence <= 1))
      throw ContractError("evaluate: confidence outside [0, 1] for image '" + p.image_id + "'");
    if (n_truth.contains(p.class_id)) by_class[p.class_id].push_back(i);
  }

  EvalResult result;
  result.iou_threshold = options.iou_threshold;
  result.interpolation = options.interpolation;
  for (const auto& [cls, count] : n_truth) {
    auto& order = by_class[cls];
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (preds[a].confidence != preds[b].confidence) return preds[a].confidence > preds[b].confidence;
      return preds[a].image_id < preds[b].image_id;
    });
    auto& images = gt[cls];
    std::vector<bool> is_tp;
    is_tp.reserve(order.size());
    for (std::size_t idx : order) {
      const auto& p = preds[idx];
      bool tp = false;
      auto it = images.find(p.image_id);
      const ImageRecord* rec = truth.find(p.image_id);
      if (it != images.end() && rec) {
        const PixelBox pb = p.box.to_pixels(rec->width, rec->height);
        TruthBox* best = nullptr;
        double best_iou = -1;
        for (auto& t : it->second) {
          if (t.matched) continue;
          const double v = iou(pb, t.box);
          if (v >= options.iou_threshold && v > best_iou) {
            best = &t;
            best_iou = v;
          }
        }
        if (best) {
          best->matched = true;
          tp = true;
        }
      }
      is_tp.push_back(tp);
    }
    result.per_class_ap[cls] = average_precision(pr_curve(is_tp, count), options.interpolation);
    result.per_class[cls] = {count, order.size(),
                             static_cast<std::size_t>(std::count(is_tp.begin(), is_tp.end(), true))};
  }
  double sum = 0;
  for (const auto& [_, ap] : result.per_class_ap) sum += ap;
  result.map50 = sum / static_cast<double>(result.per_class_ap.size());
  return result;
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
T parse_field(const std::string& tok, const fs::path& path, std::size_t line) {
  T v{};
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty())
    throw FormatError("invalid field '" + tok + "'", path, line);
  return v;
}

}  // namespace

std::vector<Detection> read_predictions_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open predictions", path);
  std::vector<Detection> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("image_id,", 0) == 0) continue;
    const auto f = split_csv(line);
    if (f.size() != 7) throw FormatError("expected image_id,class_id,cx,cy,w,h,confidence", path, lineno);
    Detection d;
    d.image_id = f[0];
    d.class_id = parse_field<int>(f[1], path, lineno);
    d.box.class_id = d.class_id;
    d.box.cx = parse_field<double>(f[2], path, lineno);
    d.box.cy = parse_field<double>(f[3], path, lineno);
    d.box.w = parse_field<double>(f[4], path, lineno);
    d.box.h = parse_field<double>(f[5], path, lineno);
    d.confidence = parse_field<double>(f[6], path, lineno);
    if (d.confidence < 0 || d.confidence > 1) throw FormatError("confidence outside [0, 1]", path, lineno);
    if (d.box.w <= 0 || d.box.h <= 0) throw FormatError("box width/height must be positive", path, lineno);
    out.push_back(std::move(d));
  }
  return out;
}

void write_predictions_csv(const fs::path& path, const std::vector<Detection>& preds) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write predictions", path);
  out << "image_id,class_id,cx,cy,w,h,confidence\n";
  char buf[200];
  for (const auto& d : preds) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.6f,%.6f", d.class_id, d.box.cx, d.box.cy,
                  d.box.w, d.box.h, d.confidence);
    out << d.image_id << ',' << buf << '\n';
  }
}

std::string to_json(const EvalResult& r) {
  nlohmann::ordered_json j;
  j["map50"] = r.map50;
  j["iou_threshold"] = r.iou_threshold;
  j["interpolation"] = r.interpolation == Interpolation::all_points ? "all_points" : "eleven_point";
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (const auto& [cls, ap] : r.per_class_ap) {
    const auto& s = r.per_class.at(cls);
    per[std::to_string(cls)] = {{"ap", ap},
                                {"truth_boxes", s.truth_boxes},
                                {"predictions", s.predictions},
                                {"true_positives", s.true_positives}};
  }
  j["per_class"] = std::move(per);
  return j.dump(2);
}

void write_eval_json(const fs::path& path, const EvalResult& r) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write evaluation result", path);
  out << to_json(r) << '\n';
}

}  // namespace simcurate
