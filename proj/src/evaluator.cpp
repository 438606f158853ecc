#include "posereg/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace posereg {

namespace {

constexpr int kMaxDetectionsPerImage = 20;
constexpr double kMediumAreaLow = 32.0 * 32.0;
constexpr double kMediumAreaHigh = 96.0 * 96.0;

std::vector<double> oks_thresholds() {
    std::vector<double> t;
    for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
    return t;
}

// Indices of detections sorted by descending score, stable for ties.
std::vector<size_t> score_order(const std::vector<Pose>& poses) {
    std::vector<size_t> order(poses.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return poses[a].score > poses[b].score; });
    return order;
}

struct BandEval {
    double mean_ap = -1.0;
    std::vector<double> per_threshold_ap;
    std::vector<std::vector<double>> curves;
    double mean_recall = -1.0;
    double ap_at(double threshold_lo, const std::vector<double>& thresholds) const {
        for (size_t i = 0; i < thresholds.size(); ++i)
            if (std::abs(thresholds[i] - threshold_lo) < 1e-9) return per_threshold_ap[i];
        return -1.0;
    }
};

std::vector<double> interpolated_curve(const std::vector<std::pair<double, bool>>& sorted_flags, size_t num_gt) {
    // Precision/recall along the ranked list, then max-interpolation sampled
    // at recalls 0.00, 0.01, ..., 1.00.
    std::vector<double> precision, recall;
    size_t tp = 0, fp = 0;
    for (const auto& [score, is_tp] : sorted_flags) {
        (void)score;
        if (is_tp)
            ++tp;
        else
            ++fp;
        precision.push_back(static_cast<double>(tp) / (tp + fp));
        recall.push_back(num_gt > 0 ? static_cast<double>(tp) / num_gt : 0.0);
    }
    for (size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);

    std::vector<double> curve(101, 0.0);
    size_t k = 0;
    for (int r = 0; r <= 100; ++r) {
        const double target = r / 100.0;
        while (k < recall.size() && recall[k] < target - 1e-12) ++k;
        curve[r] = k < precision.size() ? precision[k] : 0.0;
    }
    return curve;
}

} // namespace

std::vector<int> match_detections(const std::vector<Pose>& detections,
                                  const std::vector<InstanceAnnotation>& ground_truths, double oks_threshold,
                                  const FalloffConstants& kc) {
    std::vector<int> matches(detections.size(), -1);
    std::vector<bool> gt_taken(ground_truths.size(), false);
    for (size_t rank_idx : score_order(detections)) {
        int best = -1;
        double best_oks = 0.0;
        for (size_t g = 0; g < ground_truths.size(); ++g) {
            if (gt_taken[g]) continue;
            const double v = oks(detections[rank_idx], ground_truths[g], kc);
            if (v >= oks_threshold && v > best_oks) {
                best = static_cast<int>(g);
                best_oks = v;
            }
        }
        if (best >= 0) {
            matches[rank_idx] = best;
            gt_taken[best] = true;
        }
    }
    return matches;
}

double average_precision(std::vector<std::pair<double, bool>> scored_flags, size_t num_gt) {
    if (num_gt == 0) return -1.0;
    std::stable_sort(scored_flags.begin(), scored_flags.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    const std::vector<double> curve = interpolated_curve(scored_flags, num_gt);
    double sum = 0.0;
    for (double p : curve) sum += p;
    return sum / curve.size();
}

namespace {

// One full sweep over the thresholds for a ground-truth subset selected by
// the area band [area_lo, area_hi).
BandEval evaluate_band(std::span<const ImageDetections> detections,
                       std::span<const ImageGroundTruth> ground_truth, const FalloffConstants& kc,
                       double area_lo, double area_hi) {
    std::map<int, const ImageGroundTruth*> gt_by_id;
    for (const ImageGroundTruth& g : ground_truth) gt_by_id[g.image_id] = &g;

    const std::vector<double> thresholds = oks_thresholds();
    BandEval out;

    // Pre-filter gts per image and cap detections to the top scored per image.
    std::vector<std::vector<InstanceAnnotation>> gts_per_image;
    std::vector<std::vector<Pose>> dets_per_image;
    for (const ImageDetections& d : detections) {
        auto it = gt_by_id.find(d.image_id);
        if (it == gt_by_id.end()) throw UnknownImageId(d.image_id);
    }
    for (const ImageGroundTruth& g : ground_truth) {
        std::vector<InstanceAnnotation> banded;
        for (const InstanceAnnotation& ann : g.instances)
            if (ann.area >= area_lo && ann.area < area_hi) banded.push_back(ann);
        gts_per_image.push_back(std::move(banded));

        std::vector<Pose> dets;
        for (const ImageDetections& d : detections) {
            if (d.image_id != g.image_id) continue;
            for (size_t idx : score_order(d.poses)) {
                dets.push_back(d.poses[idx]);
                if (static_cast<int>(dets.size()) >= kMaxDetectionsPerImage) break;
            }
            break;
        }
        dets_per_image.push_back(std::move(dets));
    }

    size_t total_gt = 0;
    for (const auto& g : gts_per_image) total_gt += g.size();
    if (total_gt == 0) return out;

    double recall_sum = 0.0;
    double ap_sum = 0.0;
    for (double threshold : thresholds) {
        std::vector<std::pair<double, bool>> flags;
        size_t matched = 0;
        for (size_t img = 0; img < gts_per_image.size(); ++img) {
            const std::vector<int> m = match_detections(dets_per_image[img], gts_per_image[img], threshold, kc);
            for (size_t d = 0; d < m.size(); ++d) {
                flags.emplace_back(dets_per_image[img][d].score, m[d] >= 0);
                if (m[d] >= 0) ++matched;
            }
        }
        std::stable_sort(flags.begin(), flags.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        out.curves.push_back(interpolated_curve(flags, total_gt));
        double ap = 0.0;
        for (double p : out.curves.back()) ap += p;
        ap /= out.curves.back().size();
        out.per_threshold_ap.push_back(ap);
        ap_sum += ap;
        recall_sum += static_cast<double>(matched) / total_gt;
    }
    out.mean_ap = ap_sum / thresholds.size();
    out.mean_recall = recall_sum / thresholds.size();
    return out;
}

} // namespace

EvalResult summarize(std::span<const ImageDetections> detections, std::span<const ImageGroundTruth> ground_truth,
                     const FalloffConstants& kc) {
    const double inf = std::numeric_limits<double>::infinity();
    const BandEval all = evaluate_band(detections, ground_truth, kc, 0.0, inf);
    const BandEval medium = evaluate_band(detections, ground_truth, kc, kMediumAreaLow, kMediumAreaHigh);
    const BandEval large = evaluate_band(detections, ground_truth, kc, kMediumAreaHigh, inf);

    EvalResult result;
    result.thresholds = oks_thresholds();
    result.ap = all.mean_ap;
    result.per_threshold_ap = all.per_threshold_ap;
    result.interpolated_precision = all.curves;
    if (!all.per_threshold_ap.empty()) {
        result.ap50 = all.ap_at(0.50, result.thresholds);
        result.ap75 = all.ap_at(0.75, result.thresholds);
    }
    result.ap_m = medium.mean_ap;
    result.ap_l = large.mean_ap;
    result.ar = all.mean_recall;
    return result;
}

} // namespace posereg
