#include "posereg/types.hpp"

#include <cmath>

namespace posereg {

Vec2 to_grid(Vec2 image_point, const GridGeometry& geom) {
    return {image_point.x / geom.stride, image_point.y / geom.stride};
}

Vec2 from_grid(Vec2 grid_point, const GridGeometry& geom) {
    return {grid_point.x * geom.stride, grid_point.y * geom.stride};
}

Vec2 instance_center(std::span<const Keypoint> keypoints) {
    double sx = 0.0, sy = 0.0;
    int n = 0;
    for (const Keypoint& kp : keypoints) {
        if (kp.visible()) {
            sx += kp.x;
            sy += kp.y;
            ++n;
        }
    }
    if (n == 0) throw NoVisibleKeypoints();
    return {sx / n, sy / n};
}

double instance_scale(double area) {
    if (!(area > 0.0)) throw NonPositiveArea(area);
    return std::sqrt(area);
}

InstanceAnnotation make_annotation(Pose pose, double area, const GridGeometry& geom) {
    InstanceAnnotation ann;
    ann.center = instance_center(pose.keypoints);
    ann.scale = instance_scale(area) / geom.stride;
    ann.area = area;
    ann.pose = std::move(pose);
    return ann;
}

FalloffConstants coco_falloff() {
    // nose, eyes, ears, shoulders, elbows, wrists, hips, knees, ankles
    return FalloffConstants{{0.026, 0.025, 0.025, 0.035, 0.035, 0.079, 0.079, 0.072, 0.072,
                             0.062, 0.062, 0.107, 0.107, 0.087, 0.087, 0.089, 0.089}};
}

FalloffConstants default_falloff(int num_keypoints) {
    if (num_keypoints == 17) return coco_falloff();
    return FalloffConstants{std::vector<double>(static_cast<size_t>(num_keypoints), 0.1)};
}

} // namespace posereg
