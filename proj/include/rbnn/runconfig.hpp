#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "rbnn/simulator.hpp"
#include "rbnn/train_det.hpp"
#include "rbnn/variational.hpp"

namespace rbnn {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

nlohmann::json load_json_file(const std::string& path);

struct SimulateJob {
    ConstitutiveParams params;
    std::vector<SeriesConfig> suite;
    GenOptions opt;
    std::string out = "dataset.csv";
    nlohmann::json resolved;  // config echo with defaults filled in
};
SimulateJob parse_simulate_config(const nlohmann::json& j);

struct TrainJob {
    std::string dataset;
    std::string model = "rffnn";  // ffnn | rffnn | rbnn
    std::vector<int> hidden = {64, 64};
    int H = 1;
    LrSchedule lr{};
    int epochs = 1000;
    int batch = 16;
    int patience = 300;
    int n_q = 25;
    double kl_weight = 1.0;
    bool kl_per_window = false;
    double var_floor = 1e-6;
    double sigma_init = 0.05;
    std::uint64_t seed = 0;
    SplitSpec split;
    std::string out = "checkpoint.json";
    std::string history = "";  // optional per-epoch CSV
    nlohmann::json resolved;
};
TrainJob parse_train_config(const nlohmann::json& j);

struct SweepJob {
    TrainJob base;
    std::vector<int> h_list;
    int sweep_epochs = 200;
    std::string out = "sweep.csv";
    nlohmann::json resolved;
};
SweepJob parse_sweep_config(const nlohmann::json& j);

SplitSpec parse_split_spec(const nlohmann::json& j);

void write_manifest(const std::string& path, const std::string& command,
                    const nlohmann::json& resolved_config,
                    const std::vector<std::string>& outputs);

}  // namespace rbnn
