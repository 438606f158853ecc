#include "posereg/oks.hpp"

#include <cmath>
#include <limits>

namespace posereg {

double keypoint_similarity(double d, double s, double k) {
    if (!(s > 0.0)) throw InvalidScale("instance scale must be > 0, got " + std::to_string(s));
    if (!(k > 0.0)) throw InvalidScale("falloff constant must be > 0, got " + std::to_string(k));
    return std::exp(-(d * d) / (2.0 * s * s * k * k));
}

double oks(const Pose& pred, const InstanceAnnotation& gt, const FalloffConstants& kc) {
    const int k = gt.pose.num_keypoints();
    if (pred.num_keypoints() != k)
        throw ShapeMismatch("pose has " + std::to_string(pred.num_keypoints()) +
                            " keypoints, ground truth has " + std::to_string(k));
    if (kc.size() != k)
        throw ShapeMismatch("falloff constants size " + std::to_string(kc.size()) +
                            " does not match keypoint count " + std::to_string(k));

    double sum = 0.0;
    int labeled = 0;
    for (int i = 0; i < k; ++i) {
        const Keypoint& g = gt.pose.keypoints[i];
        if (!g.visible()) continue;
        const Keypoint& p = pred.keypoints[i];
        const double d = std::hypot(p.x - g.x, p.y - g.y);
        sum += keypoint_similarity(d, gt.scale, kc.k[i]);
        ++labeled;
    }
    if (labeled == 0) throw NoVisibleKeypoints();
    return sum / labeled;
}

std::vector<std::vector<double>> pairwise_oks(std::span<const Pose> preds,
                                              std::span<const InstanceAnnotation> gts,
                                              const FalloffConstants& kc) {
    std::vector<std::vector<double>> out(preds.size(), std::vector<double>(gts.size(), 0.0));
    for (size_t i = 0; i < preds.size(); ++i) {
        for (size_t j = 0; j < gts.size(); ++j) {
            try {
                out[i][j] = oks(preds[i], gts[j], kc);
            } catch (const NoVisibleKeypoints&) {
                out[i][j] = std::numeric_limits<double>::quiet_NaN();
            }
        }
    }
    return out;
}

} // namespace posereg
