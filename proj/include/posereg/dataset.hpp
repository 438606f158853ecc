#pragma once

#include <span>
#include <string>
#include <vector>

#include "posereg/evaluator.hpp"
#include "posereg/types.hpp"

namespace posereg {

struct DatasetImage {
    int id = 0;
    int width = 0;
    int height = 0;
};

struct CategoryInfo {
    int id = 1;
    std::string name = "person";
    std::vector<std::string> keypoint_names;
    FalloffConstants falloff;

    int num_keypoints() const { return static_cast<int>(keypoint_names.size()); }
};

/// A keypoint dataset loaded from COCO-style JSON. All geometry is converted
/// to grid units at load time; `stride` remembers the conversion.
struct Dataset {
    double stride = 4.0;
    std::vector<DatasetImage> images;
    std::vector<std::vector<InstanceAnnotation>> annotations; // aligned with images
    CategoryInfo category;

    GridGeometry geometry(size_t image_index) const;
    int image_index(int image_id) const; // -1 when unknown
};

Dataset load_annotations(const std::string& path, double stride = 4.0);

/// One detection row of a results file; keypoints are K (x, y, v) triples in
/// image pixels.
struct ResultRecord {
    int image_id = 0;
    int category_id = 1;
    std::vector<double> keypoints;
    double score = 0.0;
};

void write_results(const std::string& path, std::span<const ResultRecord> records);
std::vector<ResultRecord> load_results(const std::string& path);

/// Grid-space pose -> result record (pixels, predicted visibility written as 1).
ResultRecord make_result_record(const Pose& pose, int image_id, int category_id, const GridGeometry& geom);
Pose result_record_to_pose(const ResultRecord& record, const GridGeometry& geom);

void write_eval_report(const std::string& path, const EvalResult& result);

} // namespace posereg
