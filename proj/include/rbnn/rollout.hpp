#pragma once

#include <stdexcept>
#include <vector>

#include "rbnn/dataset.hpp"
#include "rbnn/tape.hpp"

namespace rbnn {

// Equal-length windows stacked row-wise so a whole batch rolls forward in
// lockstep.
struct WindowBatch {
    Mat s_init;                // B x S
    std::vector<Mat> inputs;   // H matrices of B x U
    std::vector<Mat> targets;  // H matrices of B x S
    Mat theta;                 // B x T

    int H() const { return static_cast<int>(inputs.size()); }
    int B() const { return static_cast<int>(s_init.rows()); }
};

WindowBatch stack_windows(const std::vector<Window>& ws, const std::vector<int>& idx);

struct RolloutDivergence : std::runtime_error {
    int step;
    RolloutDivergence(int step_, const std::string& what)
        : std::runtime_error(what), step(step_) {}
};

// Autoregressive rollout: step k uses the measured initial state, every
// later step feeds back the previous predicted mean. Variances come along
// for free from the second head.
struct Rollout {
    Mat mean;  // H x S
    Mat var;   // H x S
};
Rollout recursive_rollout(const Vec& params, const NetArch& arch, const Vec& s_init,
                          const Mat& inputs, const Vec& theta);

double huber(double x, double xhat);
// mean elementwise Huber over channels, averaged over the window steps
double window_loss(const Mat& pred_mean, const Mat& targets);
Vec window_loss_terms(const Mat& pred_mean, const Mat& targets);  // per-step
// mean of window losses with the 1/(M(N-H+1)) weighting
double total_loss(const Vec& params, const NetArch& arch, const std::vector<Window>& windows);

// ---- tape-side building blocks ----

struct MlpVars {
    Tape::Var mean, var;
};
// relu trunk, final affine split into mean and softplus(raw variance)
MlpVars mlp_on_tape(Tape& t, Tape::Var x);

struct TapeRollout {
    std::vector<MlpVars> steps;
};
TapeRollout rollout_on_tape(Tape& t, const WindowBatch& b);

// mean over the batch of per-window losses, as a scalar tape node
Tape::Var batch_huber_loss(Tape& t, const TapeRollout& r, const WindowBatch& b);
// mean over the batch of per-window negative log-pseudolikelihoods
Tape::Var batch_nll_loss(Tape& t, const TapeRollout& r, const WindowBatch& b, double var_floor);

}  // namespace rbnn
