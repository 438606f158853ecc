#include "posereg/decoder.hpp"

#include <algorithm>
#include <cmath>

namespace posereg {

std::vector<Candidate> extract_candidates(const ScoreMap& score_map, const OffsetField& offsets,
                                          double score_threshold, int top_k) {
    const int h = score_map.height;
    const int w = score_map.width;
    std::vector<Candidate> found;

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double s = score_map.at(x, y);
            if (s < score_threshold) continue;
            bool peak = true;
            for (int dy = -1; dy <= 1 && peak; ++dy) {
                for (int dx = -1; dx <= 1 && peak; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const double ns = score_map.at(nx, ny);
                    if (ns > s) peak = false;
                    // plateau: only the raster-first cell survives
                    if (ns == s && (ny < y || (ny == y && nx < x))) peak = false;
                }
            }
            if (!peak) continue;

            Candidate cand;
            cand.score = s;
            cand.cell_x = x;
            cand.cell_y = y;
            cand.pose.score = s;
            cand.pose.keypoints.reserve(offsets.num_keypoints);
            for (int i = 0; i < offsets.num_keypoints; ++i) {
                const Vec2 off = offsets.offset(i, x, y);
                cand.pose.keypoints.push_back({x - off.x, y - off.y, kLabeledVisible});
            }
            found.push_back(std::move(cand));
        }
    }

    std::sort(found.begin(), found.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.cell_y != b.cell_y) return a.cell_y < b.cell_y;
        return a.cell_x < b.cell_x;
    });
    if (top_k >= 0 && static_cast<int>(found.size()) > top_k) found.resize(top_k);
    return found;
}

InstanceAnnotation candidate_reference(const Candidate& candidate) {
    double min_x = candidate.pose.keypoints[0].x, max_x = min_x;
    double min_y = candidate.pose.keypoints[0].y, max_y = min_y;
    for (const Keypoint& kp : candidate.pose.keypoints) {
        min_x = std::min(min_x, kp.x);
        max_x = std::max(max_x, kp.x);
        min_y = std::min(min_y, kp.y);
        max_y = std::max(max_y, kp.y);
    }
    InstanceAnnotation ref;
    ref.pose = candidate.pose;
    for (Keypoint& kp : ref.pose.keypoints) kp.visibility = kLabeledVisible;
    ref.center = {(min_x + max_x) / 2.0, (min_y + max_y) / 2.0};
    ref.scale = std::max(std::sqrt((max_x - min_x) * (max_y - min_y)), 1e-6);
    ref.area = ref.scale * ref.scale;
    return ref;
}

std::vector<Candidate> oks_nms(std::vector<Candidate> candidates, double nms_threshold,
                               const FalloffConstants& kc) {
    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.cell_y != b.cell_y) return a.cell_y < b.cell_y;
        return a.cell_x < b.cell_x;
    });

    std::vector<Candidate> kept;
    std::vector<bool> removed(candidates.size(), false);
    for (size_t i = 0; i < candidates.size(); ++i) {
        if (removed[i]) continue;
        const InstanceAnnotation ref = candidate_reference(candidates[i]);
        for (size_t j = i + 1; j < candidates.size(); ++j) {
            if (removed[j]) continue;
            if (oks(candidates[j].pose, ref, kc) > nms_threshold) removed[j] = true;
        }
        kept.push_back(std::move(candidates[i]));
    }
    return kept;
}

} // namespace posereg
