#include "posereg/target_codec.hpp"

#include <cmath>

namespace posereg {

RegionAssignment assign_regions(std::span<const InstanceAnnotation> annotations,
                                const GridGeometry& geom, double radius) {
    RegionAssignment out;
    out.height = geom.height;
    out.width = geom.width;
    out.radius = radius;
    out.instance.assign(static_cast<size_t>(geom.height) * geom.width, RegionAssignment::kNone);

    for (int y = 0; y < geom.height; ++y) {
        for (int x = 0; x < geom.width; ++x) {
            int best = RegionAssignment::kNone;
            double best_dist = 0.0;
            for (size_t n = 0; n < annotations.size(); ++n) {
                const Vec2 c = annotations[n].center;
                const double dist = std::hypot(x - c.x, y - c.y);
                if (dist >= radius) continue; // strict "< radius" membership
                if (best == RegionAssignment::kNone || dist < best_dist ||
                    (dist == best_dist && annotations[n].area < annotations[best].area)) {
                    best = static_cast<int>(n);
                    best_dist = dist;
                }
            }
            out.at(x, y) = best;
        }
    }
    return out;
}

WeightMap build_weight_map(const RegionAssignment& assignment) {
    WeightMap w(assignment.height, assignment.width, 0.1);
    for (size_t i = 0; i < assignment.instance.size(); ++i) {
        if (assignment.instance[i] != RegionAssignment::kNone) w.values[i] = 1.0;
    }
    return w;
}

OffsetTarget build_offset_target(std::span<const InstanceAnnotation> annotations,
                                 const RegionAssignment& assignment) {
    const int h = assignment.height;
    const int w = assignment.width;
    int num_keypoints = 0;
    if (!annotations.empty()) num_keypoints = annotations[0].pose.num_keypoints();

    OffsetTarget out;
    out.offsets = OffsetField(num_keypoints, h, w);
    out.valid.assign(static_cast<size_t>(num_keypoints) * h * w, 0);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int n = assignment.at(x, y);
            if (n == RegionAssignment::kNone) continue;
            const Pose& gt = annotations[n].pose;
            for (int i = 0; i < num_keypoints; ++i) {
                const Keypoint& kp = gt.keypoints[i];
                if (!kp.visible()) continue; // unlabeled keypoints are excluded from the loss
                out.offsets.set_offset(i, x, y, {x - kp.x, y - kp.y});
                out.valid[out.mask_index(i, x, y)] = 1;
            }
        }
    }
    return out;
}

ScoreMap build_cir_target(const PoseProvider& predicted_poses, std::span<const InstanceAnnotation> annotations,
                          const RegionAssignment& assignment, const FalloffConstants& kc) {
    ScoreMap target(assignment.height, assignment.width, 0.0);
    for (int y = 0; y < assignment.height; ++y) {
        for (int x = 0; x < assignment.width; ++x) {
            const int n = assignment.at(x, y);
            if (n == RegionAssignment::kNone) continue;
            target.at(x, y) = oks(predicted_poses(x, y), annotations[n], kc);
        }
    }
    return target;
}

ScoreMap build_score_target(InstanceLabel label, const PoseProvider& predicted_poses,
                            std::span<const InstanceAnnotation> annotations, const RegionAssignment& assignment,
                            const FalloffConstants& kc, double gaussian_sigma) {
    if (label == InstanceLabel::kCir)
        return build_cir_target(predicted_poses, annotations, assignment, kc);

    ScoreMap target(assignment.height, assignment.width, 0.0);
    for (int y = 0; y < assignment.height; ++y) {
        for (int x = 0; x < assignment.width; ++x) {
            const int n = assignment.at(x, y);
            if (n == RegionAssignment::kNone) continue;
            if (label == InstanceLabel::kDiscrete) {
                target.at(x, y) = 1.0;
            } else {
                const Vec2 c = annotations[n].center;
                const double d2 = (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y);
                target.at(x, y) = std::exp(-d2 / (2.0 * gaussian_sigma * gaussian_sigma));
            }
        }
    }
    return target;
}

} // namespace posereg
