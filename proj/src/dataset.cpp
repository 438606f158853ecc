#include "posereg/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace posereg {

namespace {

using nlohmann::json;

json parse_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open: " + path);
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

const json& require(const json& obj, const char* field, const std::string& context) {
    auto it = obj.find(field);
    if (it == obj.end()) throw MissingField(context + "." + field);
    return *it;
}

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

} // namespace

GridGeometry Dataset::geometry(size_t image_index) const {
    const DatasetImage& img = images[image_index];
    return GridGeometry{static_cast<int>(std::ceil(img.height / stride)),
                        static_cast<int>(std::ceil(img.width / stride)), stride};
}

int Dataset::image_index(int image_id) const {
    for (size_t i = 0; i < images.size(); ++i)
        if (images[i].id == image_id) return static_cast<int>(i);
    return -1;
}

Dataset load_annotations(const std::string& path, double stride) {
    const json doc = parse_json_file(path);
    if (!doc.is_object()) throw ParseError(path + ": top level must be an object");

    Dataset ds;
    ds.stride = stride;

    const json& categories = require(doc, "categories", path);
    if (!categories.is_array() || categories.empty()) throw ParseError(path + ": categories must be a non-empty array");
    const json& cat = categories[0];
    ds.category.id = cat.value("id", 1);
    ds.category.name = cat.value("name", "person");
    const json& kp_names = require(cat, "keypoints", path + ".categories[0]");
    for (const json& n : kp_names) ds.category.keypoint_names.push_back(n.get<std::string>());
    const int k = ds.category.num_keypoints();
    if (k <= 0) throw ParseError(path + ": category defines no keypoints");
    if (cat.contains("sigmas")) {
        std::vector<double> sig = cat["sigmas"].get<std::vector<double>>();
        if (static_cast<int>(sig.size()) != k)
            throw InconsistentK(path + ": sigmas length " + std::to_string(sig.size()) +
                                " does not match keypoint count " + std::to_string(k));
        ds.category.falloff = FalloffConstants{std::move(sig)};
    } else {
        ds.category.falloff = default_falloff(k);
    }

    const json& images = require(doc, "images", path);
    for (const json& img : images) {
        DatasetImage di;
        di.id = require(img, "id", path + ".images").get<int>();
        di.width = require(img, "width", path + ".images").get<int>();
        di.height = require(img, "height", path + ".images").get<int>();
        if (ds.image_index(di.id) >= 0) throw ParseError(path + ": duplicate image id " + std::to_string(di.id));
        ds.images.push_back(di);
    }
    ds.annotations.resize(ds.images.size());

    const json& annotations = require(doc, "annotations", path);
    for (const json& ann : annotations) {
        const std::string ctx = path + ".annotations[id=" + std::to_string(ann.value("id", -1)) + "]";
        const int image_id = require(ann, "image_id", ctx).get<int>();
        const int idx = ds.image_index(image_id);
        if (idx < 0) throw ParseError(ctx + ": references unknown image id " + std::to_string(image_id));

        const std::vector<double> kps = require(ann, "keypoints", ctx).get<std::vector<double>>();
        if (static_cast<int>(kps.size()) != 3 * k)
            throw InconsistentK(ctx + ": keypoints length " + std::to_string(kps.size()) + " but category has K=" +
                                std::to_string(k));

        double area = 0.0;
        if (ann.contains("area")) {
            area = ann["area"].get<double>();
        } else if (ann.contains("bbox")) {
            const std::vector<double> bbox = ann["bbox"].get<std::vector<double>>();
            if (bbox.size() != 4) throw ParseError(ctx + ": bbox must have 4 entries");
            area = bbox[2] * bbox[3];
        } else {
            throw MissingField(ctx + ".area");
        }
        if (!(area > 0.0)) throw ParseError(ctx + ": area must be > 0");

        Pose pose;
        const GridGeometry geom = ds.geometry(idx);
        for (int i = 0; i < k; ++i) {
            const Vec2 grid = to_grid({kps[3 * i], kps[3 * i + 1]}, geom);
            const int vis = static_cast<int>(kps[3 * i + 2]);
            if (vis < 0 || vis > 2) throw ParseError(ctx + ": keypoint visibility must be 0, 1 or 2");
            pose.keypoints.push_back({grid.x, grid.y, vis});
        }
        try {
            ds.annotations[idx].push_back(make_annotation(std::move(pose), area, geom));
        } catch (const NoVisibleKeypoints&) {
            throw ParseError(ctx + ": annotation has no labeled keypoints");
        }
    }
    return ds;
}

void write_results(const std::string& path, std::span<const ResultRecord> records) {
    std::string out = "[";
    for (size_t i = 0; i < records.size(); ++i) {
        const ResultRecord& r = records[i];
        out += i == 0 ? "\n" : ",\n";
        out += " {\"image_id\": " + std::to_string(r.image_id);
        out += ", \"category_id\": " + std::to_string(r.category_id);
        out += ", \"keypoints\": [";
        for (size_t j = 0; j < r.keypoints.size(); ++j) {
            if (j) out += ", ";
            out += fmt6(r.keypoints[j]);
        }
        out += "], \"score\": " + fmt6(r.score) + "}";
    }
    out += records.empty() ? "]\n" : "\n]\n";

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << out;
    if (!f) throw IoError("write failed: " + path);
}

std::vector<ResultRecord> load_results(const std::string& path) {
    const json doc = parse_json_file(path);
    if (!doc.is_array()) throw ParseError(path + ": results file must be a JSON array");
    std::vector<ResultRecord> out;
    for (const json& rec : doc) {
        ResultRecord r;
        r.image_id = require(rec, "image_id", path).get<int>();
        r.category_id = rec.value("category_id", 1);
        r.keypoints = require(rec, "keypoints", path).get<std::vector<double>>();
        if (r.keypoints.size() % 3 != 0) throw ParseError(path + ": keypoints length must be a multiple of 3");
        r.score = require(rec, "score", path).get<double>();
        out.push_back(std::move(r));
    }
    return out;
}

ResultRecord make_result_record(const Pose& pose, int image_id, int category_id, const GridGeometry& geom) {
    ResultRecord r;
    r.image_id = image_id;
    r.category_id = category_id;
    r.score = pose.score;
    r.keypoints.reserve(pose.keypoints.size() * 3);
    for (const Keypoint& kp : pose.keypoints) {
        const Vec2 px = from_grid({kp.x, kp.y}, geom);
        r.keypoints.push_back(px.x);
        r.keypoints.push_back(px.y);
        r.keypoints.push_back(1.0);
    }
    return r;
}

Pose result_record_to_pose(const ResultRecord& record, const GridGeometry& geom) {
    Pose pose;
    pose.score = record.score;
    const size_t k = record.keypoints.size() / 3;
    for (size_t i = 0; i < k; ++i) {
        const Vec2 grid = to_grid({record.keypoints[3 * i], record.keypoints[3 * i + 1]}, geom);
        pose.keypoints.push_back({grid.x, grid.y, static_cast<int>(record.keypoints[3 * i + 2])});
    }
    return pose;
}

void write_eval_report(const std::string& path, const EvalResult& result) {
    std::string out = "{\n  \"version\": 1,\n";
    out += "  \"ap\": " + fmt6(result.ap) + ",\n";
    out += "  \"ap50\": " + fmt6(result.ap50) + ",\n";
    out += "  \"ap75\": " + fmt6(result.ap75) + ",\n";
    out += "  \"ap_m\": " + fmt6(result.ap_m) + ",\n";
    out += "  \"ap_l\": " + fmt6(result.ap_l) + ",\n";
    out += "  \"ar\": " + fmt6(result.ar) + ",\n";
    out += "  \"thresholds\": [";
    for (size_t i = 0; i < result.thresholds.size(); ++i) {
        if (i) out += ", ";
        out += fmt6(result.thresholds[i]);
    }
    out += "],\n  \"per_threshold_ap\": [";
    for (size_t i = 0; i < result.per_threshold_ap.size(); ++i) {
        if (i) out += ", ";
        out += fmt6(result.per_threshold_ap[i]);
    }
    out += "]\n}\n";

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << out;
    if (!f) throw IoError("write failed: " + path);
}

} // namespace posereg
