#pragma once

// Independent reference computations used to check the library. None of these
// call into the code under test beyond plain data types.

#include <bitset>
#include <cstdint>
#include <vector>

#include <opencv2/core.hpp>

#include "simcurate/dataset.hpp"
#include "simcurate/eval.hpp"
#include "simcurate/features.hpp"

namespace simcurate::testkit {

// Mean of I(x,y) / max over a single-channel 8- or 16-bit image, summed in
// floating point pixel by pixel.
double naive_brightness(const cv::Mat& gray, double max_value);

int per_bit_hamming(const PerceptualHash& a, const PerceptualHash& b);

// Textbook 64-bit DCT hash: gray, INTER_AREA to 32x32, cv::dct, top-left 8x8
// including DC, bit = coefficient > median.
std::bitset<64> textbook_phash(const cv::Mat& bgr);

// IoU on normalized center/size boxes.
double box_iou(const BoundingBox& a, const BoundingBox& b);

// Per class: sort predictions (confidence desc, image id, input order), match
// greedily against the best unmatched same-image truth box, build the full
// precision/recall table and integrate max-precision-to-the-right over recall
// steps in O(n^2). Mean over classes with truth boxes.
double brute_force_map(const std::vector<Detection>& preds, const Dataset& truth, double threshold);

}  // namespace simcurate::testkit
