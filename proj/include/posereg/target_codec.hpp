#pragma once

#include <functional>
#include <span>
#include <vector>

#include "posereg/oks.hpp"
#include "posereg/types.hpp"

namespace posereg {

/// Per-cell instance assignment: each cell belongs to at most one instance,
/// namely the nearest center strictly closer than `radius` (ties go to the
/// smaller-area instance, then the lower index).
struct RegionAssignment {
    int height = 0;
    int width = 0;
    double radius = 0.0;
    std::vector<int> instance; // -1 = unassigned

    static constexpr int kNone = -1;

    int at(int x, int y) const { return instance[static_cast<size_t>(y) * width + x]; }
    int& at(int x, int y) { return instance[static_cast<size_t>(y) * width + x]; }
};

/// Dense offset targets plus the supervision mask. Mask entry (kp, cell) is
/// true only on assigned cells whose keypoint is labeled.
struct OffsetTarget {
    OffsetField offsets;
    std::vector<uint8_t> valid; // K x H x W

    size_t mask_index(int kp, int x, int y) const {
        return (static_cast<size_t>(kp) * offsets.height + y) * offsets.width + x;
    }
    bool valid_at(int kp, int x, int y) const { return valid[mask_index(kp, x, y)] != 0; }
};

/// Score-map supervision flavours. `kCir` is the quality-aware target (the
/// decoded pose's oks); the other two are the baselines it is compared against.
enum class InstanceLabel {
    kCir,
    kGaussian,
    kDiscrete,
};

/// Opaque provider of the pose currently predicted at a grid cell.
using PoseProvider = std::function<Pose(int x, int y)>;

RegionAssignment assign_regions(std::span<const InstanceAnnotation> annotations,
                                const GridGeometry& geom, double radius);

/// 1.0 on assigned cells, 0.1 on background.
WeightMap build_weight_map(const RegionAssignment& assignment);

/// Offset target at an assigned cell is cell - keypoint, zero elsewhere.
OffsetTarget build_offset_target(std::span<const InstanceAnnotation> annotations,
                                 const RegionAssignment& assignment);

/// Quality-aware score target: at a cell assigned to instance n, the oks of
/// the pose predicted there against ground truth n; 0 on background.
/// The result is a constant target for the current step; no gradient flows
/// into it.
ScoreMap build_cir_target(const PoseProvider& predicted_poses, std::span<const InstanceAnnotation> annotations,
                          const RegionAssignment& assignment, const FalloffConstants& kc);

/// Dispatches between the quality-aware target and the two baseline labels.
/// `gaussian_sigma` only applies to the Gaussian label; `predicted_poses` is
/// only consulted for the quality-aware one.
ScoreMap build_score_target(InstanceLabel label, const PoseProvider& predicted_poses,
                            std::span<const InstanceAnnotation> annotations, const RegionAssignment& assignment,
                            const FalloffConstants& kc, double gaussian_sigma);

} // namespace posereg
