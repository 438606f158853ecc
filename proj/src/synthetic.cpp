#include "posereg/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "posereg/rng.hpp"

namespace posereg {

namespace {

// Unit-extent keypoint layout. K=5 is a little stick figure (head, hands,
// feet); other K fall back to a fixed irregular ring.
std::vector<Vec2> layout_template(int num_keypoints) {
    if (num_keypoints == 5)
        return {{0.0, -1.0}, {-0.9, -0.15}, {0.9, -0.15}, {-0.45, 1.0}, {0.45, 1.0}};
    std::vector<Vec2> pts(num_keypoints);
    for (int j = 0; j < num_keypoints; ++j) {
        const double angle = 2.0 * 3.14159265358979323846 * j / num_keypoints - 1.5707963267948966;
        const double frac = std::fmod(0.618033988749895 * (j + 1), 1.0);
        const double radius = 0.55 + 0.45 * frac;
        pts[j] = {radius * std::cos(angle), radius * std::sin(angle)};
    }
    return pts;
}

} // namespace

SyntheticScene synth_scene(uint64_t seed, const SceneParams& params, int num_instances) {
    const GridGeometry& geom = params.geom;
    SyntheticScene scene;
    scene.seed = seed;
    scene.input = FeatureGrid(params.num_keypoints, geom.height, geom.width, 0.0);

    Rng rng(derive_seed(seed, 1));
    const std::vector<Vec2> tmpl = layout_template(params.num_keypoints);

    std::vector<Vec2> centers;
    for (int inst = 0; inst < num_instances; ++inst) {
        Pose pose;
        Vec2 center{};
        for (int attempt = 0; attempt < 1000; ++attempt) {
            const double scale = rng.uniform(params.scale_min, params.scale_max);
            const double extent = params.figure_radius * scale + params.jitter;
            const double margin = extent + 1.0;
            const double px = rng.uniform(margin, geom.width - 1 - margin);
            const double py = rng.uniform(margin, geom.height - 1 - margin);

            pose.keypoints.clear();
            for (const Vec2& t : tmpl) {
                const double jx = rng.uniform(-params.jitter, params.jitter);
                const double jy = rng.uniform(-params.jitter, params.jitter);
                pose.keypoints.push_back(
                    {px + t.x * params.figure_radius * scale + jx, py + t.y * params.figure_radius * scale + jy, kLabeledVisible});
            }
            center = instance_center(pose.keypoints);
            bool ok = true;
            for (const Vec2& c : centers)
                if (std::hypot(center.x - c.x, center.y - c.y) < params.min_center_separation) ok = false;
            if (ok) break;
        }
        centers.push_back(center);

        double min_x = pose.keypoints[0].x, max_x = min_x;
        double min_y = pose.keypoints[0].y, max_y = min_y;
        for (const Keypoint& kp : pose.keypoints) {
            min_x = std::min(min_x, kp.x);
            max_x = std::max(max_x, kp.x);
            min_y = std::min(min_y, kp.y);
            max_y = std::max(max_y, kp.y);
        }
        // Padded keypoint bbox, converted to image pixels.
        const double area = (max_x - min_x + 2.0) * (max_y - min_y + 2.0) * geom.stride * geom.stride;
        scene.annotations.push_back(make_annotation(std::move(pose), area, geom));
    }

    const double two_sigma2 = 2.0 * params.blob_sigma * params.blob_sigma;
    for (const InstanceAnnotation& ann : scene.annotations) {
        for (int j = 0; j < params.num_keypoints; ++j) {
            const Keypoint& kp = ann.pose.keypoints[j];
            for (int y = 0; y < geom.height; ++y) {
                for (int x = 0; x < geom.width; ++x) {
                    const double d2 = (x - kp.x) * (x - kp.x) + (y - kp.y) * (y - kp.y);
                    scene.input.at(j, x, y) += std::exp(-d2 / two_sigma2);
                }
            }
        }
    }
    return scene;
}

SyntheticScene synth_scene_random_count(uint64_t seed, const SceneParams& params, int lo, int hi) {
    Rng count_rng(derive_seed(seed, 2));
    const int count = lo + (hi > lo ? count_rng.uniform_int(hi - lo + 1) : 0);
    return synth_scene(seed, params, count);
}

} // namespace posereg
