#include "posereg/config.hpp"

#include <fstream>
#include <sstream>

namespace posereg {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

bool ConfigFile::has(const std::string& key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return true;
    return false;
}

std::string ConfigFile::get(const std::string& key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return v;
    throw MissingField(key);
}

std::string ConfigFile::get(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key) : fallback;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get(key);
    try {
        size_t used = 0;
        const double out = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ParseError("config key '" + key + "' is not a number: " + v);
    }
}

int ConfigFile::get_int(const std::string& key, int fallback) const {
    const double v = get_double(key, fallback);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v) throw ParseError("config key '" + key + "' is not an integer");
    return i;
}

uint64_t ConfigFile::get_u64(const std::string& key, uint64_t fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get(key);
    try {
        size_t used = 0;
        const uint64_t out = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ParseError("config key '" + key + "' is not an unsigned integer: " + v);
    }
}

ConfigFile parse_config_text(const std::string& text, const std::string& origin) {
    ConfigFile cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError(origin + ":" + std::to_string(line_no) + ": empty key");
        cfg.entries.emplace_back(key, value);
    }
    if (!cfg.has("version")) throw MissingField("version");
    if (cfg.get_int("version", 0) != 1)
        throw ParseError(origin + ": unsupported config version " + cfg.get("version"));
    return cfg;
}

ConfigFile load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config: " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse_config_text(text, path);
}

InstanceLabel parse_instance_label(const std::string& name) {
    if (name == "cir") return InstanceLabel::kCir;
    if (name == "gaussian") return InstanceLabel::kGaussian;
    if (name == "discrete") return InstanceLabel::kDiscrete;
    throw ParseError("unknown instance_label '" + name + "' (expected cir, gaussian or discrete)");
}

std::string instance_label_name(InstanceLabel label) {
    switch (label) {
        case InstanceLabel::kCir: return "cir";
        case InstanceLabel::kGaussian: return "gaussian";
        case InstanceLabel::kDiscrete: return "discrete";
    }
    return "cir";
}

TrainConfig train_config_from(const ConfigFile& config) {
    TrainConfig cfg;
    cfg.seed = config.get_u64("seed", cfg.seed);
    cfg.steps = config.get_int("steps", cfg.steps);
    cfg.lr = config.get_double("lr", cfg.lr);
    cfg.gamma = config.get_double("gamma", cfg.gamma);
    cfg.model.n_semantic = config.get_int("n_semantic", cfg.model.n_semantic);
    cfg.lambda_score = config.get_double("lambda_i", cfg.lambda_score);
    cfg.lambda_offset = config.get_double("lambda_d", cfg.lambda_offset);
    cfg.batch = config.get_int("batch", cfg.batch);
    cfg.model.num_keypoints = config.get_int("k", cfg.model.num_keypoints);
    cfg.model.feat_channels = config.get_int("channels", cfg.model.feat_channels);
    cfg.model.inst_channels = config.get_int("inst_channels", cfg.model.inst_channels);
    cfg.train_scenes = config.get_int("train_scenes", cfg.train_scenes);
    cfg.eval_scenes = config.get_int("eval_scenes", cfg.eval_scenes);
    cfg.min_instances = config.get_int("min_instances", cfg.min_instances);
    cfg.max_instances = config.get_int("max_instances", cfg.max_instances);
    cfg.score_threshold = config.get_double("score_threshold", cfg.score_threshold);
    cfg.top_k = config.get_int("top_k", cfg.top_k);
    cfg.nms_threshold = config.get_double("nms_threshold", cfg.nms_threshold);
    cfg.gaussian_sigma = config.get_double("gaussian_sigma", cfg.gaussian_sigma);
    cfg.scene.geom.stride = config.get_double("stride", cfg.scene.geom.stride);

    if (config.has("instance_label")) cfg.label = parse_instance_label(config.get("instance_label"));
    if (config.has("grid")) {
        const std::string grid = config.get("grid");
        const size_t x = grid.find('x');
        if (x == std::string::npos) throw ParseError("config key 'grid' must look like 64x64");
        try {
            cfg.scene.geom.width = std::stoi(grid.substr(0, x));
            cfg.scene.geom.height = std::stoi(grid.substr(x + 1));
        } catch (const std::exception&) {
            throw ParseError("config key 'grid' must look like 64x64");
        }
    }
    cfg.scene.num_keypoints = cfg.model.num_keypoints;
    return cfg;
}

} // namespace posereg
