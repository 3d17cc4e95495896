#include "oracles.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include <opencv2/imgproc.hpp>

namespace simcurate::testkit {

double naive_brightness(const cv::Mat& gray, double max_value) {
  double sum = 0;
  for (int y = 0; y < gray.rows; ++y)
    for (int x = 0; x < gray.cols; ++x)
      sum += (gray.depth() == CV_16U ? gray.at<std::uint16_t>(y, x) : gray.at<std::uint8_t>(y, x)) / max_value;
  return sum / (static_cast<double>(gray.rows) * gray.cols);
}

int per_bit_hamming(const PerceptualHash& a, const PerceptualHash& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.bit(i) != b.bit(i)) ++d;
  return d;
}

std::bitset<64> textbook_phash(const cv::Mat& bgr) {
  cv::Mat g;
  cv::cvtColor(bgr, g, cv::COLOR_BGR2GRAY);
  g.convertTo(g, CV_64F);
  cv::Mat small, freq;
  cv::resize(g, small, {32, 32}, 0, 0, cv::INTER_AREA);
  cv::dct(small, freq);
  std::vector<double> c;
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) c.push_back(freq.at<double>(y, x));
  std::vector<double> sorted = c;
  std::sort(sorted.begin(), sorted.end());
  const double median = (sorted[31] + sorted[32]) / 2;
  std::bitset<64> bits;
  for (int i = 0; i < 64; ++i) bits[i] = c[i] > median;
  return bits;
}

double box_iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::max(0.0, std::min(a.cx + a.w / 2, b.cx + b.w / 2) - std::max(a.cx - a.w / 2, b.cx - b.w / 2));
  const double iy = std::max(0.0, std::min(a.cy + a.h / 2, b.cy + b.h / 2) - std::max(a.cy - a.h / 2, b.cy - b.h / 2));
  const double inter = ix * iy;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0 ? inter / uni : 0.0;
}

double brute_force_map(const std::vector<Detection>& preds, const Dataset& truth, double threshold) {
  std::set<int> classes;
  for (const auto& r : truth.records)
    for (const auto& b : r.boxes) classes.insert(b.class_id);

  double total = 0;
  for (int cls : classes) {
    std::size_t n_truth = 0;
    for (const auto& r : truth.records)
      for (const auto& b : r.boxes) n_truth += b.class_id == cls;

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < preds.size(); ++i)
      if (preds[i].class_id == cls) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (preds[a].confidence != preds[b].confidence) return preds[a].confidence > preds[b].confidence;
      return preds[a].image_id < preds[b].image_id;
    });

    std::map<std::string, std::vector<bool>> used;
    std::vector<int> tp;
    for (std::size_t idx : order) {
      const auto& p = preds[idx];
      const ImageRecord* rec = nullptr;
      for (const auto& r : truth.records)
        if (r.id == p.image_id) rec = &r;
      int hit = 0;
      if (rec) {
        auto& u = used[rec->id];
        u.resize(rec->boxes.size(), false);
        double best = -1;
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < rec->boxes.size(); ++j) {
          if (u[j] || rec->boxes[j].class_id != cls) continue;
          const double v = box_iou(p.box, rec->boxes[j]);
          if (v >= threshold && v > best) {
            best = v;
            best_j = j;
          }
        }
        if (best >= 0) {
          u[best_j] = true;
          hit = 1;
        }
      }
      tp.push_back(hit);
    }

    // Full PR table, then sum of recall increments times the best precision
    // at any rank with at least that recall.
    const std::size_t n = tp.size();
    std::vector<double> prec(n), rec(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double hits = std::accumulate(tp.begin(), tp.begin() + k + 1, 0.0);
      prec[k] = hits / static_cast<double>(k + 1);
      rec[k] = hits / static_cast<double>(n_truth);
    }
    double ap = 0, prev_recall = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (rec[k] <= prev_recall) continue;
      double best = 0;
      for (std::size_t j = k; j < n; ++j) best = std::max(best, prec[j]);
      ap += (rec[k] - prev_recall) * best;
      prev_recall = rec[k];
    }
    total += ap;
  }
  return classes.empty() ? 0.0 : total / static_cast<double>(classes.size());
}

}  // namespace simcurate::testkit
