#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rbnn/optim.hpp"
#include "rbnn/rollout.hpp"

namespace rbnn {

struct DetConfig {
    NetArch arch;
    int H = 1;
    LrSchedule lr{};
    int epochs = 3000;
    int batch = 16;
    int patience = 300;  // early stop on validation loss; <=0 disables
    std::uint64_t seed = 0;
    int threads = 0;  // 0 -> RBNN_THREADS / hardware
};

struct TrainHistory {
    std::vector<double> train, val;
    int best_epoch = -1;
    bool aborted = false;
    std::string abort_reason;
};

struct DetFit {
    Vec params;
    TrainHistory history;
};

// Minimizes the mean windowed Huber loss with Adam; the best-validation
// parameters are retained. With H=1 windows this is plain one-step
// regression.
DetFit train_rffnn(const std::vector<Window>& train, const std::vector<Window>& val,
                   const DetConfig& cfg);

}  // namespace rbnn
