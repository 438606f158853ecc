#pragma once

#include <string>
#include <utility>
#include <vector>

#include "posereg/errors.hpp"
#include "posereg/trainer.hpp"

namespace posereg {

/// Flat "key = value" config document with '#' comments. A version key is
/// required. Entry order is preserved.
struct ConfigFile {
    std::vector<std::pair<std::string, std::string>> entries;

    bool has(const std::string& key) const;
    std::string get(const std::string& key) const; // throws MissingField
    std::string get(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    uint64_t get_u64(const std::string& key, uint64_t fallback) const;
};

ConfigFile parse_config_text(const std::string& text, const std::string& origin = "<memory>");
ConfigFile load_config_file(const std::string& path);

InstanceLabel parse_instance_label(const std::string& name); // throws ParseError
std::string instance_label_name(InstanceLabel label);

/// Maps config keys (seed, steps, lr, gamma, n_semantic, lambda_i, lambda_d,
/// grid, instance_label, ...) onto a TrainConfig with desk-scale defaults.
TrainConfig train_config_from(const ConfigFile& config);

} // namespace posereg
