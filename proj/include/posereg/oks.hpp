#pragma once

#include <span>
#include <vector>

#include "posereg/types.hpp"

namespace posereg {

/// Gaussian falloff of a single keypoint: exp(-d^2 / (2 s^2 k^2)).
/// d is the prediction/ground-truth distance, s the instance scale, k the
/// per-keypoint falloff constant. Throws InvalidScale when s <= 0 or k <= 0.
double keypoint_similarity(double d, double s, double k);

/// Object keypoint similarity between a predicted pose and a ground-truth
/// instance: the mean keypoint similarity over the ground truth's labeled
/// keypoints (visibility > 0, occluded ones included).
/// Throws NoVisibleKeypoints when the ground truth has none, ShapeMismatch
/// when keypoint counts disagree.
double oks(const Pose& pred, const InstanceAnnotation& gt, const FalloffConstants& kc);

/// Matrix of oks values, entry (i, j) = oks(preds[i], gts[j]).
/// Entries whose ground truth has no labeled keypoint are NaN.
std::vector<std::vector<double>> pairwise_oks(std::span<const Pose> preds,
                                              std::span<const InstanceAnnotation> gts,
                                              const FalloffConstants& kc);

} // namespace posereg
