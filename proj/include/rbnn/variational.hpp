#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rbnn/optim.hpp"
#include "rbnn/rollout.hpp"

namespace rbnn {

// Factorized Gaussian variational family. The stored sigma_raw is
// pre-softplus; the effective standard deviation softplus(sigma_raw) is
// strictly positive.
struct VariationalParams {
    Vec mu;
    Vec sigma_raw;

    Vec sigma() const;
    void validate() const;
};

struct PosteriorSample {
    Vec beta;
    Vec gamma;  // the standard-normal draw; beta = mu + softplus(sigma_raw) .* gamma
};

// log N(beta; 0, I)
double prior_log_density(const Vec& beta);

PosteriorSample reparameterize(const VariationalParams& vp, const Vec& gamma);

// KL( q || N(0,I) ) = sum_i [ -log s_i + (mu_i^2 + s_i^2 - 1)/2 ]
double kl_to_prior(const VariationalParams& vp);

// Log-pseudolikelihood of one window: the rollout feeds predicted means
// forward, and each step contributes -1/2 [ log sigma^2 + (s-mu)^2/sigma^2 ]
// per channel (the 2*pi constant is dropped).
double window_log_pseudolikelihood(const Vec& beta, const NetArch& arch, const Window& w,
                                   double var_floor = 1e-6);
// Average over all M(N-H+1) windows.
double total_log_pseudolikelihood(const Vec& beta, const NetArch& arch,
                                  const std::vector<Window>& windows, double var_floor = 1e-6);

// Monte-Carlo ELBO: mean over n_q reparameterized samples of the total
// log-pseudolikelihood, minus the closed-form KL.
double elbo_estimate(const VariationalParams& vp, const NetArch& arch,
                     const std::vector<Window>& windows, int n_q, std::uint64_t seed,
                     double var_floor = 1e-6);

// Negative ELBO with the noise draws held fixed (rows of `gammas`), for
// gradient checks and the optimizer. Gradients flow to mu directly and to
// sigma_raw through gamma .* sigmoid(sigma_raw).
double negative_elbo_fixed_gamma(const VariationalParams& vp, const NetArch& arch,
                                 const std::vector<Window>& windows, const Mat& gammas,
                                 double var_floor, double kl_weight, Vec* grad_mu = nullptr,
                                 Vec* grad_sigma_raw = nullptr);

// ---- generic variational fit over a differentiable log-likelihood ----

struct LogLikFn {
    int dim = 0;
    // returns log-likelihood at beta; when grad is non-null, fills d/dbeta
    std::function<double(const Vec& beta, Vec* grad)> eval;
};

struct VIConfig {
    LrSchedule lr{};
    int epochs = 1000;
    int n_q = 25;
    double kl_weight = 1.0;
    double sigma_init = 0.05;
    Vec mu_init;  // empty -> zeros
    std::uint64_t seed = 0;
    int threads = 0;
};

struct VIFit {
    VariationalParams vp;
    std::vector<double> neg_elbo;
    bool aborted = false;
    std::string abort_reason;
};

VIFit fit_variational(const LogLikFn& loglik, const VIConfig& cfg);

// ---- windowed trainer ----

struct BayesConfig {
    NetArch arch;
    int H = 1;
    LrSchedule lr{};
    int epochs = 1000;
    int batch = 64;
    int n_q = 25;
    // weight on the KL term; "per-window" mode divides by the number of
    // training windows so the likelihood average and the prior balance as a
    // sum over windows
    double kl_weight = 1.0;
    bool kl_per_window = false;
    double var_floor = 1e-6;
    double sigma_init = 0.05;
    int patience = 300;
    std::uint64_t seed = 0;
    int threads = 0;
};

struct BayesHistory {
    std::vector<double> neg_elbo, train_nll, val_nll;
    int best_epoch = -1;
    bool aborted = false;
    std::string abort_reason;
};

struct BayesFit {
    VariationalParams vp;
    BayesHistory history;
    double kl_weight_used = 1.0;
};

BayesFit train_rbnn(const std::vector<Window>& train, const std::vector<Window>& val,
                    const BayesConfig& cfg);

// ---- posterior predictive ----

struct PredictiveRollout {
    Mat mean;       // per-step mean of sample means
    Mat variance;   // per-step mean of sample variances (headline intervals)
    Mat epistemic;  // between-sample variance of the means, reported separately
    Mat lo95, hi95; // mean -/+ 1.96 sqrt(variance)
    int excluded = 0;  // divergent samples dropped (at most 1% tolerated)
};

PredictiveRollout posterior_predict(const VariationalParams& vp, const NetArch& arch,
                                    const Vec& s0, const Mat& inputs, const Vec& theta, int n_mc,
                                    std::uint64_t seed, int threads = 0);

}  // namespace rbnn
