#pragma once

#include <string>

#include <json.hpp>

#include "rbnn/normalize.hpp"
#include "rbnn/variational.hpp"

namespace rbnn {

// Model checkpoint: architecture, flat parameters (deterministic) or
// variational mu/sigma_raw (probabilistic), the normalization statistics the
// model was trained with, and an echo of the resolved training config.
struct Checkpoint {
    std::string model;  // "ffnn", "rffnn", "rbnn"
    NetArch arch;
    int H = 1;
    Vec params;     // deterministic models
    Vec mu;         // rbnn
    Vec sigma_raw;  // rbnn
    NormStats stats;
    std::uint64_t seed = 0;
    nlohmann::json config;  // resolved training configuration

    bool probabilistic() const { return model == "rbnn"; }
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

nlohmann::json norm_stats_to_json(const NormStats& st);
NormStats norm_stats_from_json(const nlohmann::json& j);

// temp-file-plus-rename so partially written outputs never appear
void atomic_write_text(const std::string& path, const std::string& content);

}  // namespace rbnn
