#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "rbnn/arch.hpp"

namespace rbnn {

// Per-channel errors over aligned prediction/truth sequences, plus the
// vector-norm means (mean L2 / mean L1 of per-step state error) kept for
// auditability.
struct ChannelMetrics {
    Vec mae, rmse;
    double mean_l2 = 0.0, mean_l1 = 0.0;
    long count = 0;  // step-vectors pooled
};

ChannelMetrics mae_rmse(const std::vector<Mat>& pred, const std::vector<Mat>& truth);

// mean over steps/channels of 0.5*(log(2 pi s^2) + (x-m)^2/s^2)
double predictive_nll(const Mat& mean, const Mat& var, const Mat& truth);
double predictive_nll(const std::vector<Mat>& mean, const std::vector<Mat>& var,
                      const std::vector<Mat>& truth);

// fraction of (step, channel) pairs with the truth inside mean +/- z(level)*sigma
double ci_coverage(const Mat& mean, const Mat& var, const Mat& truth, double level = 0.95);
double ci_coverage(const std::vector<Mat>& mean, const std::vector<Mat>& var,
                   const std::vector<Mat>& truth, double level = 0.95);

// inverse standard-normal CDF (rational approximation, |err| < 1e-8)
double normal_quantile(double p);

// ---- window-length selection ----

struct SweepEval {
    Vec val_rmse;          // per channel, normalized units
    double val_nll = std::numeric_limits<double>::quiet_NaN();
};

struct SweepRow {
    int H = 0;
    SweepEval eval;
    bool failed = false;
    std::string error;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    int chosen_H = -1;
};

// Trains/evaluates one model per H via `eval_at`. Selection: argmin of the
// mean per-channel RMSE; when balance_nll is set (probabilistic models) the
// rank sum of RMSE and NLL is minimized instead, ties to the smaller H.
SweepResult h_sweep(const std::vector<int>& h_list,
                    const std::function<SweepEval(int)>& eval_at, bool balance_nll);

}  // namespace rbnn
