#include "posereg/losses.hpp"

#include <cmath>

namespace posereg {

LossValue weighted_l2(const ScoreMap& pred, const ScoreMap& target, const WeightMap& weights) {
    if (pred.height != target.height || pred.width != target.width || pred.height != weights.height ||
        pred.width != weights.width)
        throw ShapeMismatch("score map, target and weight map shapes differ");

    const size_t n = pred.values.size();
    LossValue out;
    out.grad.assign(n, 0.0);
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double r = pred.values[i] - target.values[i];
        sum += weights.values[i] * r * r;
        out.grad[i] = 2.0 * weights.values[i] * r / static_cast<double>(n);
    }
    out.value = sum / static_cast<double>(n);
    return out;
}

LossValue smooth_l1(const OffsetField& pred, const OffsetTarget& target, double beta) {
    const OffsetField& tgt = target.offsets;
    if (pred.num_keypoints != tgt.num_keypoints || pred.height != tgt.height || pred.width != tgt.width)
        throw ShapeMismatch("offset field and target shapes differ");

    LossValue out;
    out.grad.assign(pred.values.size(), 0.0);

    // Scalar element count: both coordinates of every supervised keypoint cell.
    size_t valid_count = 0;
    for (uint8_t m : target.valid)
        if (m) valid_count += 2;
    if (valid_count == 0) return out;

    double sum = 0.0;
    for (int kp = 0; kp < pred.num_keypoints; ++kp) {
        for (int y = 0; y < pred.height; ++y) {
            for (int x = 0; x < pred.width; ++x) {
                if (!target.valid_at(kp, x, y)) continue;
                for (int coord = 0; coord < 2; ++coord) {
                    const size_t i = pred.index(kp, coord, x, y);
                    const double r = pred.values[i] - tgt.values[i];
                    const double a = std::abs(r);
                    if (a < beta) {
                        sum += 0.5 * r * r / beta;
                        out.grad[i] = (r / beta) / static_cast<double>(valid_count);
                    } else {
                        sum += a - 0.5 * beta;
                        out.grad[i] = (r > 0.0 ? 1.0 : -1.0) / static_cast<double>(valid_count);
                    }
                }
            }
        }
    }
    out.value = sum / static_cast<double>(valid_count);
    return out;
}

TotalLoss total_loss(const LossValue& score_loss, const LossValue& offset_loss, double lambda_score,
                     double lambda_offset) {
    TotalLoss out;
    out.value = lambda_score * score_loss.value + lambda_offset * offset_loss.value;
    out.score_grad.resize(score_loss.grad.size());
    for (size_t i = 0; i < score_loss.grad.size(); ++i) out.score_grad[i] = lambda_score * score_loss.grad[i];
    out.offset_grad.resize(offset_loss.grad.size());
    for (size_t i = 0; i < offset_loss.grad.size(); ++i) out.offset_grad[i] = lambda_offset * offset_loss.grad[i];
    return out;
}

} // namespace posereg
