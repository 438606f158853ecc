#pragma once

#include <span>
#include <vector>

#include "posereg/oks.hpp"
#include "posereg/types.hpp"

namespace posereg {

struct ImageDetections {
    int image_id = 0;
    std::vector<Pose> poses; // score carried by Pose::score
};

struct ImageGroundTruth {
    int image_id = 0;
    std::vector<InstanceAnnotation> instances;
};

/// COCO-style keypoint metrics: mean AP over oks thresholds 0.50:0.05:0.95,
/// AP at 0.50 / 0.75, medium/large area bands, and average recall at 20
/// detections per image. Undefined entries (no ground truth in a band) are -1.
struct EvalResult {
    double ap = -1.0;
    double ap50 = -1.0;
    double ap75 = -1.0;
    double ap_m = -1.0;
    double ap_l = -1.0;
    double ar = -1.0;
    std::vector<double> thresholds;
    std::vector<double> per_threshold_ap;
    std::vector<std::vector<double>> interpolated_precision; // per threshold, 101 recall points
};

/// Greedy per-image matching: detections in descending score order take the
/// unmatched ground truth with the highest oks when it reaches the threshold.
/// Returns, per detection (original order), the matched gt index or -1.
std::vector<int> match_detections(const std::vector<Pose>& detections,
                                  const std::vector<InstanceAnnotation>& ground_truths, double oks_threshold,
                                  const FalloffConstants& kc);

/// 101-point interpolated average precision. `scored_flags` holds one
/// (score, true positive) entry per detection; ties keep the caller's order.
/// num_gt == 0 yields the undefined sentinel -1.
double average_precision(std::vector<std::pair<double, bool>> scored_flags, size_t num_gt);

EvalResult summarize(std::span<const ImageDetections> detections, std::span<const ImageGroundTruth> ground_truth,
                     const FalloffConstants& kc);

} // namespace posereg
