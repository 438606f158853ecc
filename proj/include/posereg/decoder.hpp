#pragma once

#include <vector>

#include "posereg/oks.hpp"
#include "posereg/types.hpp"

namespace posereg {

/// A pose candidate read off the score map. The score is the map value at the
/// source cell, untouched by any rescoring.
struct Candidate {
    Pose pose;
    double score = 0.0;
    int cell_x = 0, cell_y = 0;
};

/// Candidate extraction: 3x3 local maxima of the score map at or above the
/// threshold, sorted by descending score and truncated to top_k. Ties inside
/// an exactly-flat plateau keep only the raster-first cell, so ideal (constant
/// per region) maps still decode. Keypoints are cell - offset per channel.
std::vector<Candidate> extract_candidates(const ScoreMap& score_map, const OffsetField& offsets,
                                          double score_threshold = 0.01, int top_k = 30);

/// Greedy duplicate suppression: repeatedly keep the best remaining candidate
/// and drop those whose oks against it exceeds the threshold. The reference
/// scale is the sqrt of the kept candidate's keypoint bbox area.
std::vector<Candidate> oks_nms(std::vector<Candidate> candidates, double nms_threshold,
                               const FalloffConstants& kc);

/// Pseudo-annotation used as the oks reference for a candidate during NMS.
InstanceAnnotation candidate_reference(const Candidate& candidate);

} // namespace posereg
