#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "posereg/errors.hpp"

namespace posereg {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }
};

/// Keypoint visibility follows the COCO convention.
enum Visibility : int {
    kNotLabeled = 0,
    kLabeledOccluded = 1,
    kLabeledVisible = 2,
};

/// A single keypoint in grid units. Position is meaningless when visibility == 0.
struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    int visibility = kLabeledVisible;

    bool visible() const { return visibility > 0; }
    Vec2 pos() const { return {x, y}; }
};

/// An ordered set of K keypoints plus a confidence score.
struct Pose {
    std::vector<Keypoint> keypoints;
    double score = 0.0;

    int num_keypoints() const { return static_cast<int>(keypoints.size()); }
};

/// Ground-truth instance: pose, scale (grid units), center and area (image pixels^2).
struct InstanceAnnotation {
    Pose pose;
    double scale = 0.0;
    Vec2 center;
    double area = 0.0;
};

/// Output grid geometry. Stride is image pixels per grid cell.
struct GridGeometry {
    int height = 0;
    int width = 0;
    double stride = 4.0;

    bool valid() const { return height >= 1 && width >= 1 && stride >= 1.0; }
    int num_cells() const { return height * width; }
};

/// Per-keypoint falloff constants k_i of the keypoint similarity kernel.
struct FalloffConstants {
    std::vector<double> k;

    int size() const { return static_cast<int>(k.size()); }
};

/// Single-channel H x W grid of scores, row major.
struct ScoreMap {
    int height = 0;
    int width = 0;
    std::vector<double> values;

    ScoreMap() = default;
    ScoreMap(int h, int w, double fill = 0.0) : height(h), width(w), values(static_cast<size_t>(h) * w, fill) {}

    double& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
    double at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
};

using WeightMap = ScoreMap;

/// 2K-channel H x W grid of x/y displacements in grid units.
/// Channel 2i holds x offsets and channel 2i+1 holds y offsets of keypoint i.
struct OffsetField {
    int num_keypoints = 0;
    int height = 0;
    int width = 0;
    std::vector<double> values;

    OffsetField() = default;
    OffsetField(int k, int h, int w)
        : num_keypoints(k), height(h), width(w), values(static_cast<size_t>(2) * k * h * w, 0.0) {}

    size_t index(int kp, int coord, int x, int y) const {
        return ((static_cast<size_t>(2) * kp + coord) * height + y) * width + x;
    }
    double& at(int kp, int coord, int x, int y) { return values[index(kp, coord, x, y)]; }
    double at(int kp, int coord, int x, int y) const { return values[index(kp, coord, x, y)]; }

    Vec2 offset(int kp, int x, int y) const { return {at(kp, 0, x, y), at(kp, 1, x, y)}; }
    void set_offset(int kp, int x, int y, Vec2 v) {
        at(kp, 0, x, y) = v.x;
        at(kp, 1, x, y) = v.y;
    }
};

/// C-channel H x W feature grid, channel major, each channel row major.
struct FeatureGrid {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> values;

    FeatureGrid() = default;
    FeatureGrid(int c, int h, int w, double fill = 0.0)
        : channels(c), height(h), width(w), values(static_cast<size_t>(c) * h * w, fill) {}

    size_t index(int c, int x, int y) const { return (static_cast<size_t>(c) * height + y) * width + x; }
    double& at(int c, int x, int y) { return values[index(c, x, y)]; }
    double at(int c, int x, int y) const { return values[index(c, x, y)]; }
};

/// image pixels -> grid units
Vec2 to_grid(Vec2 image_point, const GridGeometry& geom);

/// grid units -> image pixels
Vec2 from_grid(Vec2 grid_point, const GridGeometry& geom);

/// Arithmetic mean of the visible keypoints. Throws NoVisibleKeypoints.
Vec2 instance_center(std::span<const Keypoint> keypoints);

/// sqrt(area). Throws NonPositiveArea.
double instance_scale(double area);

/// Assembles an annotation from a ground-truth pose and its pixel area:
/// center = mean of visible keypoints, scale = sqrt(area) converted to grid units.
InstanceAnnotation make_annotation(Pose pose, double area, const GridGeometry& geom);

/// The 17 COCO keypoint falloff constants, in standard keypoint order.
FalloffConstants coco_falloff();

/// COCO constants for K == 17, otherwise uniform k_i = 0.1.
FalloffConstants default_falloff(int num_keypoints);

} // namespace posereg
