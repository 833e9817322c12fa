#include "rbnn/variational.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "rbnn/parallel.hpp"
#include "rbnn/rng.hpp"

namespace rbnn {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr int kChunkRows = 32;

Vec sigmoid_of(const Vec& x) {
    return x.unaryExpr([](double v) { return softplus_prime(v); });
}
}  // namespace

Vec VariationalParams::sigma() const {
    return sigma_raw.unaryExpr([](double v) { return softplus(v); });
}

void VariationalParams::validate() const {
    if (mu.size() != sigma_raw.size())
        throw std::invalid_argument("variational parameters: mu/sigma_raw length mismatch");
    if (!mu.allFinite() || !sigma_raw.allFinite())
        throw std::invalid_argument("variational parameters: non-finite entries");
}

double prior_log_density(const Vec& beta) {
    return -0.5 * (static_cast<double>(beta.size()) * kLog2Pi + beta.squaredNorm());
}

PosteriorSample reparameterize(const VariationalParams& vp, const Vec& gamma) {
    vp.validate();
    if (gamma.size() != vp.mu.size())
        throw std::invalid_argument("reparameterize: gamma length mismatch");
    PosteriorSample s;
    s.gamma = gamma;
    s.beta = vp.mu + vp.sigma().cwiseProduct(gamma);
    return s;
}

double kl_to_prior(const VariationalParams& vp) {
    vp.validate();
    Vec s = vp.sigma();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        acc += -std::log(s[i]) + 0.5 * (vp.mu[i] * vp.mu[i] + s[i] * s[i] - 1.0);
    return acc;
}

double window_log_pseudolikelihood(const Vec& beta, const NetArch& arch, const Window& w,
                                   double var_floor) {
    Rollout r = recursive_rollout(beta, arch, w.s_init, w.inputs, w.theta);
    double acc = 0.0;
    for (Eigen::Index t = 0; t < r.mean.rows(); ++t)
        for (Eigen::Index c = 0; c < r.mean.cols(); ++c) {
            double v = std::max(r.var(t, c), var_floor);
            double d = w.targets(t, c) - r.mean(t, c);
            acc += std::log(v) + d * d / v;
        }
    return -0.5 * acc;
}

double total_log_pseudolikelihood(const Vec& beta, const NetArch& arch,
                                  const std::vector<Window>& windows, double var_floor) {
    if (windows.empty()) throw std::invalid_argument("total_log_pseudolikelihood: no windows");
    double acc = 0.0;
    for (const Window& w : windows) acc += window_log_pseudolikelihood(beta, arch, w, var_floor);
    return acc / static_cast<double>(windows.size());
}

double elbo_estimate(const VariationalParams& vp, const NetArch& arch,
                     const std::vector<Window>& windows, int n_q, std::uint64_t seed,
                     double var_floor) {
    if (n_q < 1) throw std::invalid_argument("elbo_estimate: n_q must be >= 1");
    double acc = 0.0;
    for (int i = 0; i < n_q; ++i) {
        Rng rng(seed, static_cast<std::uint64_t>(i));
        PosteriorSample s = reparameterize(vp, rng.normal_vec(vp.mu.size()));
        acc += total_log_pseudolikelihood(s.beta, arch, windows, var_floor);
    }
    return acc / n_q - kl_to_prior(vp);
}

namespace {

// data term of the negative ELBO over a set of windows: mean over samples of
// -(average window log-pseudolikelihood), with gradients accumulated per Eq.
// d/dmu = dL/dbeta, d/dsigma_raw = dL/dbeta .* gamma .* sigmoid(sigma_raw).
struct DataTerm {
    double loss = 0.0;
    Vec g_mu, g_rho;
};

DataTerm data_term_fixed_gamma(const VariationalParams& vp, const NetArch& arch,
                               const std::vector<Window>& windows, const std::vector<int>& idx,
                               const Mat& gammas, double var_floor, bool want_grad, int threads) {
    int n_q = static_cast<int>(gammas.rows());
    Eigen::Index L = vp.mu.size();
    Vec sig = vp.sigma();
    Vec sprime = sigmoid_of(vp.sigma_raw);

    int n_chunks = (static_cast<int>(idx.size()) + kChunkRows - 1) / kChunkRows;
    int tasks = n_q * n_chunks;
    std::vector<double> losses(static_cast<size_t>(tasks), 0.0);
    std::vector<Vec> grads(static_cast<size_t>(tasks));

    parallel_tasks(
        tasks,
        [&](int task) {
            int i = task / n_chunks;
            int c = task % n_chunks;
            Vec beta = vp.mu + sig.cwiseProduct(gammas.row(i).transpose());
            int lo = c * kChunkRows;
            int hi = std::min<int>(static_cast<int>(idx.size()), lo + kChunkRows);
            std::vector<int> part(idx.begin() + lo, idx.begin() + hi);
            WindowBatch wb = stack_windows(windows, part);
            Tape tape(arch, beta);
            Tape::Var loss = batch_nll_loss(tape, rollout_on_tape(tape, wb), wb, var_floor);
            losses[static_cast<size_t>(task)] =
                tape.value(loss) * (static_cast<double>(hi - lo) / static_cast<double>(idx.size()));
            if (want_grad)
                grads[static_cast<size_t>(task)] =
                    tape.grad_params(loss) *
                    (static_cast<double>(hi - lo) / static_cast<double>(idx.size()));
        },
        threads);

    DataTerm out;
    if (want_grad) {
        out.g_mu = Vec::Zero(L);
        out.g_rho = Vec::Zero(L);
    }
    for (int i = 0; i < n_q; ++i) {
        Vec g_beta = want_grad ? Vec(Vec::Zero(L)) : Vec();
        for (int c = 0; c < n_chunks; ++c) {
            int task = i * n_chunks + c;
            out.loss += losses[static_cast<size_t>(task)] / n_q;
            if (want_grad) g_beta += grads[static_cast<size_t>(task)];
        }
        if (want_grad) {
            out.g_mu += g_beta / n_q;
            out.g_rho += g_beta.cwiseProduct(gammas.row(i).transpose())
                             .cwiseProduct(sprime) /
                         n_q;
        }
    }
    return out;
}

}  // namespace

double negative_elbo_fixed_gamma(const VariationalParams& vp, const NetArch& arch,
                                 const std::vector<Window>& windows, const Mat& gammas,
                                 double var_floor, double kl_weight, Vec* grad_mu,
                                 Vec* grad_sigma_raw) {
    vp.validate();
    if (windows.empty()) throw std::invalid_argument("negative_elbo_fixed_gamma: no windows");
    if (gammas.cols() != vp.mu.size())
        throw std::invalid_argument("negative_elbo_fixed_gamma: gamma width mismatch");

    std::vector<int> idx(windows.size());
    std::iota(idx.begin(), idx.end(), 0);
    bool want_grad = grad_mu != nullptr || grad_sigma_raw != nullptr;
    DataTerm dt = data_term_fixed_gamma(vp, arch, windows, idx, gammas, var_floor, want_grad, 0);

    Vec sig = vp.sigma();
    double kl = kl_to_prior(vp);
    if (want_grad) {
        Vec kl_mu = vp.mu;
        Vec kl_rho = (sig - sig.cwiseInverse()).cwiseProduct(sigmoid_of(vp.sigma_raw));
        if (grad_mu) *grad_mu = dt.g_mu + kl_weight * kl_mu;
        if (grad_sigma_raw) *grad_sigma_raw = dt.g_rho + kl_weight * kl_rho;
    }
    return dt.loss + kl_weight * kl;
}

VIFit fit_variational(const LogLikFn& loglik, const VIConfig& cfg) {
    if (loglik.dim < 1) throw std::invalid_argument("fit_variational: dim must be >= 1");
    Eigen::Index L = loglik.dim;

    VariationalParams vp;
    vp.mu = cfg.mu_init.size() == L ? cfg.mu_init : Vec(Vec::Zero(L));
    vp.sigma_raw = Vec::Constant(L, softplus_inverse(cfg.sigma_init));

    AdamState adam(2 * L);
    VIFit out;

    std::uint64_t draw = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = cfg.lr.at(epoch);
        Vec sig = vp.sigma();
        Vec sprime = sigmoid_of(vp.sigma_raw);

        double data_loss = 0.0;
        Vec g_mu = Vec::Zero(L), g_rho = Vec::Zero(L);
        for (int i = 0; i < cfg.n_q; ++i) {
            Rng rng(cfg.seed, draw++);
            Vec gamma = rng.normal_vec(L);
            Vec beta = vp.mu + sig.cwiseProduct(gamma);
            Vec g_beta(L);
            double ll = loglik.eval(beta, &g_beta);
            data_loss -= ll / cfg.n_q;
            g_mu -= g_beta / cfg.n_q;
            g_rho -= g_beta.cwiseProduct(gamma).cwiseProduct(sprime) / cfg.n_q;
        }
        double kl = kl_to_prior(vp);
        g_mu += cfg.kl_weight * vp.mu;
        g_rho += cfg.kl_weight * (sig - sig.cwiseInverse()).cwiseProduct(sprime);

        double neg_elbo = data_loss + cfg.kl_weight * kl;
        if (!std::isfinite(neg_elbo) || !g_mu.allFinite() || !g_rho.allFinite()) {
            out.aborted = true;
            out.abort_reason = "non-finite objective at epoch " + std::to_string(epoch);
            break;
        }
        out.neg_elbo.push_back(neg_elbo);

        Vec packed(2 * L), grad(2 * L);
        packed << vp.mu, vp.sigma_raw;
        grad << g_mu, g_rho;
        adam_step(adam, packed, grad, lr);
        vp.mu = packed.head(L);
        vp.sigma_raw = packed.tail(L);
    }
    out.vp = std::move(vp);
    return out;
}

BayesFit train_rbnn(const std::vector<Window>& train, const std::vector<Window>& val,
                    const BayesConfig& cfg) {
    if (train.empty()) throw std::invalid_argument("train_rbnn: no training windows");
    cfg.arch.validate();
    Eigen::Index L = cfg.arch.param_count();

    double kl_weight = cfg.kl_weight;
    if (cfg.kl_per_window) kl_weight /= static_cast<double>(train.size());

    VariationalParams vp;
    vp.mu = init_params(cfg.arch, cfg.seed);
    vp.sigma_raw = Vec::Constant(L, softplus_inverse(cfg.sigma_init));

    AdamState adam(2 * L);
    BayesHistory hist;
    VariationalParams best = vp;
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;

    std::vector<int> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::uint64_t draw = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = cfg.lr.at(epoch);
        Rng shuffle_rng(cfg.seed, 0x9e0u + static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(order);

        int n_batches =
            static_cast<int>((order.size() + static_cast<size_t>(cfg.batch) - 1) /
                             static_cast<size_t>(cfg.batch));
        double epoch_data = 0.0;
        bool ok = true;

        for (int bi = 0; bi < n_batches && ok; ++bi) {
            size_t at = static_cast<size_t>(bi) * static_cast<size_t>(cfg.batch);
            size_t end = std::min(order.size(), at + static_cast<size_t>(cfg.batch));
            std::vector<int> batch(order.begin() + static_cast<long>(at),
                                   order.begin() + static_cast<long>(end));

            Mat gammas(cfg.n_q, L);
            for (int i = 0; i < cfg.n_q; ++i) {
                Rng rng(cfg.seed, 0xabc000 + draw++);
                gammas.row(i) = rng.normal_vec(L).transpose();
            }

            DataTerm dt;
            try {
                dt = data_term_fixed_gamma(vp, cfg.arch, train, batch, gammas, cfg.var_floor,
                                           true, cfg.threads);
            } catch (const std::runtime_error& ex) {
                hist.aborted = true;
                hist.abort_reason = "epoch " + std::to_string(epoch) + ": " + ex.what();
                ok = false;
                break;
            }

            // one full epoch applies the KL exactly once
            Vec sig = vp.sigma();
            Vec sprime = sigmoid_of(vp.sigma_raw);
            double klw = kl_weight / n_batches;
            Vec g_mu = dt.g_mu + klw * vp.mu;
            Vec g_rho = dt.g_rho + klw * (sig - sig.cwiseInverse()).cwiseProduct(sprime);

            if (!std::isfinite(dt.loss) || !g_mu.allFinite() || !g_rho.allFinite()) {
                hist.aborted = true;
                hist.abort_reason = "non-finite objective at epoch " + std::to_string(epoch);
                ok = false;
                break;
            }
            epoch_data += dt.loss * static_cast<double>(batch.size()) /
                          static_cast<double>(train.size());

            Vec packed(2 * L), grad(2 * L);
            packed << vp.mu, vp.sigma_raw;
            grad << g_mu, g_rho;
            adam_step(adam, packed, grad, lr);
            vp.mu = packed.head(L);
            vp.sigma_raw = packed.tail(L);
        }
        if (hist.aborted) break;

        double kl = kl_to_prior(vp);
        hist.train_nll.push_back(epoch_data);
        hist.neg_elbo.push_back(epoch_data + kl_weight * kl);

        double val_nll;
        if (val.empty()) {
            val_nll = epoch_data;
        } else {
            try {
                val_nll = -total_log_pseudolikelihood(vp.mu, cfg.arch, val, cfg.var_floor);
            } catch (const RolloutDivergence&) {
                val_nll = std::numeric_limits<double>::infinity();
            }
        }
        hist.val_nll.push_back(val_nll);

        if (val_nll < best_val) {
            best_val = val_nll;
            best = vp;
            hist.best_epoch = epoch;
            since_best = 0;
        } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
            break;
        }
    }

    if (hist.best_epoch < 0) best = vp;
    return {std::move(best), std::move(hist), kl_weight};
}

PredictiveRollout posterior_predict(const VariationalParams& vp, const NetArch& arch,
                                    const Vec& s0, const Mat& inputs, const Vec& theta, int n_mc,
                                    std::uint64_t seed, int threads) {
    vp.validate();
    if (n_mc < 1) throw std::invalid_argument("posterior_predict: n_mc must be >= 1");
    Eigen::Index L = vp.mu.size();
    Eigen::Index N = inputs.rows();
    int S = arch.state_dim;
    Vec sig = vp.sigma();

    std::vector<Mat> means(static_cast<size_t>(n_mc)), vars(static_cast<size_t>(n_mc));
    std::vector<char> good(static_cast<size_t>(n_mc), 0);

    parallel_tasks(
        n_mc,
        [&](int i) {
            Rng rng(seed, static_cast<std::uint64_t>(i));
            Vec beta = vp.mu + sig.cwiseProduct(rng.normal_vec(L));
            try {
                Rollout r = recursive_rollout(beta, arch, s0, inputs, theta);
                means[static_cast<size_t>(i)] = std::move(r.mean);
                vars[static_cast<size_t>(i)] = std::move(r.var);
                good[static_cast<size_t>(i)] = 1;
            } catch (const RolloutDivergence&) {
                good[static_cast<size_t>(i)] = 0;
            }
        },
        threads);

    PredictiveRollout out;
    out.mean = Mat::Zero(N, S);
    out.variance = Mat::Zero(N, S);
    out.epistemic = Mat::Zero(N, S);

    Mat mean_sq = Mat::Zero(N, S);
    int kept = 0;
    for (int i = 0; i < n_mc; ++i) {
        if (!good[static_cast<size_t>(i)]) {
            ++out.excluded;
            continue;
        }
        ++kept;
        out.mean += means[static_cast<size_t>(i)];
        out.variance += vars[static_cast<size_t>(i)];
        mean_sq += means[static_cast<size_t>(i)].cwiseProduct(means[static_cast<size_t>(i)]);
    }
    if (out.excluded > 0.01 * n_mc)
        throw std::runtime_error("posterior_predict: " + std::to_string(out.excluded) + " of " +
                                 std::to_string(n_mc) + " sample rollouts diverged");
    out.mean /= kept;
    out.variance /= kept;
    out.epistemic = mean_sq / kept - out.mean.cwiseProduct(out.mean);
    out.epistemic = out.epistemic.cwiseMax(0.0);

    Mat half = 1.96 * out.variance.cwiseSqrt();
    out.lo95 = out.mean - half;
    out.hi95 = out.mean + half;
    return out;
}

}  // namespace rbnn
