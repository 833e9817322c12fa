#include "rbnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <numbers>
#include <stdexcept>

namespace rbnn {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

ChannelMetrics mae_rmse(const std::vector<Mat>& pred, const std::vector<Mat>& truth) {
    if (pred.size() != truth.size() || pred.empty())
        throw std::invalid_argument("mae_rmse: misaligned prediction/truth sets");
    Eigen::Index S = pred[0].cols();
    ChannelMetrics m;
    m.mae = Vec::Zero(S);
    m.rmse = Vec::Zero(S);
    for (size_t i = 0; i < pred.size(); ++i) {
        if (pred[i].rows() != truth[i].rows() || pred[i].cols() != truth[i].cols() ||
            pred[i].cols() != S)
            throw std::invalid_argument("mae_rmse: shape mismatch at test " + std::to_string(i));
        for (Eigen::Index t = 0; t < pred[i].rows(); ++t) {
            Vec err = (truth[i].row(t) - pred[i].row(t)).transpose();
            m.mae += err.cwiseAbs();
            m.rmse += err.cwiseProduct(err);
            m.mean_l2 += err.norm();
            m.mean_l1 += err.lpNorm<1>();
            ++m.count;
        }
    }
    m.mae /= static_cast<double>(m.count);
    m.rmse = (m.rmse / static_cast<double>(m.count)).cwiseSqrt();
    m.mean_l2 /= static_cast<double>(m.count);
    m.mean_l1 /= static_cast<double>(m.count);
    return m;
}

double predictive_nll(const Mat& mean, const Mat& var, const Mat& truth) {
    if (mean.rows() != truth.rows() || mean.cols() != truth.cols() || var.rows() != mean.rows() ||
        var.cols() != mean.cols())
        throw std::invalid_argument("predictive_nll: shape mismatch");
    double acc = 0.0;
    for (Eigen::Index t = 0; t < mean.rows(); ++t)
        for (Eigen::Index c = 0; c < mean.cols(); ++c) {
            double v = var(t, c);
            if (!(v > 0.0)) throw std::invalid_argument("predictive_nll: non-positive variance");
            double d = truth(t, c) - mean(t, c);
            acc += 0.5 * (kLog2Pi + std::log(v) + d * d / v);
        }
    return acc / static_cast<double>(mean.size());
}

double predictive_nll(const std::vector<Mat>& mean, const std::vector<Mat>& var,
                      const std::vector<Mat>& truth) {
    if (mean.empty() || mean.size() != var.size() || mean.size() != truth.size())
        throw std::invalid_argument("predictive_nll: misaligned sets");
    double acc = 0.0;
    long n = 0;
    for (size_t i = 0; i < mean.size(); ++i) {
        acc += predictive_nll(mean[i], var[i], truth[i]) * static_cast<double>(mean[i].size());
        n += mean[i].size();
    }
    return acc / static_cast<double>(n);
}

double ci_coverage(const Mat& mean, const Mat& var, const Mat& truth, double level) {
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("ci_coverage: bad level");
    double z = normal_quantile(0.5 + level / 2.0);
    long inside = 0;
    for (Eigen::Index t = 0; t < mean.rows(); ++t)
        for (Eigen::Index c = 0; c < mean.cols(); ++c) {
            double half = z * std::sqrt(var(t, c));
            if (truth(t, c) >= mean(t, c) - half && truth(t, c) <= mean(t, c) + half) ++inside;
        }
    return static_cast<double>(inside) / static_cast<double>(mean.size());
}

double ci_coverage(const std::vector<Mat>& mean, const std::vector<Mat>& var,
                   const std::vector<Mat>& truth, double level) {
    double acc = 0.0;
    long n = 0;
    for (size_t i = 0; i < mean.size(); ++i) {
        acc += ci_coverage(mean[i], var[i], truth[i], level) * static_cast<double>(mean[i].size());
        n += mean[i].size();
    }
    return acc / static_cast<double>(n);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p outside (0,1)");
    // Acklam's rational approximation with one Halley refinement step
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= phigh) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
    double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

SweepResult h_sweep(const std::vector<int>& h_list,
                    const std::function<SweepEval(int)>& eval_at, bool balance_nll) {
    if (h_list.empty()) throw std::invalid_argument("h_sweep: empty H list");
    SweepResult out;
    for (int h : h_list) {
        SweepRow row;
        row.H = h;
        try {
            row.eval = eval_at(h);
        } catch (const std::exception& ex) {
            row.failed = true;
            row.error = ex.what();
        }
        out.rows.push_back(std::move(row));
    }

    auto aggregate = [](const SweepRow& r) { return r.eval.val_rmse.mean(); };
    std::vector<const SweepRow*> ok;
    for (const SweepRow& r : out.rows)
        if (!r.failed) ok.push_back(&r);
    if (ok.empty()) return out;

    if (!balance_nll) {
        const SweepRow* best = ok[0];
        for (const SweepRow* r : ok)
            if (aggregate(*r) < aggregate(*best)) best = r;
        out.chosen_H = best->H;
        return out;
    }

    // rank(RMSE) + rank(NLL), ties resolved toward the smaller H
    auto rank_of = [&](const std::function<double(const SweepRow&)>& key, const SweepRow* row) {
        int rank = 0;
        for (const SweepRow* other : ok)
            if (key(*other) < key(*row)) ++rank;
        return rank;
    };
    const SweepRow* best = nullptr;
    int best_score = 0;
    for (const SweepRow* r : ok) {
        int score = rank_of([&](const SweepRow& x) { return aggregate(x); }, r) +
                    rank_of([](const SweepRow& x) { return x.eval.val_nll; }, r);
        if (best == nullptr || score < best_score || (score == best_score && r->H < best->H)) {
            best = r;
            best_score = score;
        }
    }
    out.chosen_H = best->H;
    return out;
}

}  // namespace rbnn
