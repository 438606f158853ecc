#pragma once

#include <vector>

#include "posereg/target_codec.hpp"
#include "posereg/types.hpp"

namespace posereg {

/// A loss value together with its gradient w.r.t. the prediction elements,
/// flattened in the prediction's storage order.
struct LossValue {
    double value = 0.0;
    std::vector<double> grad;
};

/// Pixel-wise weighted squared error over the score map, normalized by cell
/// count.
LossValue weighted_l2(const ScoreMap& pred, const ScoreMap& target, const WeightMap& weights);

/// Smooth L1 over the offset field, restricted to valid-mask elements and
/// normalized by their count. An empty mask yields loss 0 with zero gradient.
LossValue smooth_l1(const OffsetField& pred, const OffsetTarget& target, double beta = 1.0);

/// Both gradients live in different spaces, so the combined loss carries the
/// lambda-scaled gradients side by side.
struct TotalLoss {
    double value = 0.0;
    std::vector<double> score_grad;
    std::vector<double> offset_grad;
};

TotalLoss total_loss(const LossValue& score_loss, const LossValue& offset_loss, double lambda_score,
                     double lambda_offset);

} // namespace posereg
