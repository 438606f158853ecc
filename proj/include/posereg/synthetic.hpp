#pragma once

#include <cstdint>
#include <vector>

#include "posereg/types.hpp"

namespace posereg {

/// Stand-in for an image: per-keypoint evidence channels plus exact
/// annotations. Channel i holds a unit-height Gaussian blob at every
/// instance's keypoint i.
struct SyntheticScene {
    FeatureGrid input; // K x H x W
    std::vector<InstanceAnnotation> annotations;
    uint64_t seed = 0;
};

struct SceneParams {
    GridGeometry geom{64, 64, 4.0};
    int num_keypoints = 5;
    double blob_sigma = 1.5;
    double figure_radius = 4.5;             // template half-extent in cells, before scaling
    double scale_min = 0.7, scale_max = 1.1;
    double jitter = 0.4;                    // per-keypoint position noise, cells
    double min_center_separation = 11.0;    // keeps instance regions disjoint
};

/// Deterministic scene generator: the same seed yields a bit-identical scene.
/// Keypoints always land inside the grid.
SyntheticScene synth_scene(uint64_t seed, const SceneParams& params, int num_instances);

/// Convenience for building scene pools: instance count drawn in [lo, hi]
/// from the scene's own seed stream.
SyntheticScene synth_scene_random_count(uint64_t seed, const SceneParams& params, int lo, int hi);

} // namespace posereg
