#include "rbnn/rollout.hpp"

#include <cmath>

namespace rbnn {

WindowBatch stack_windows(const std::vector<Window>& ws, const std::vector<int>& idx) {
    if (idx.empty()) throw std::invalid_argument("stack_windows: empty index set");
    const Window& first = ws[static_cast<size_t>(idx[0])];
    int H = static_cast<int>(first.inputs.rows());
    int U = static_cast<int>(first.inputs.cols());
    int S = static_cast<int>(first.targets.cols());
    int T = static_cast<int>(first.theta.size());
    int B = static_cast<int>(idx.size());

    WindowBatch b;
    b.s_init.resize(B, S);
    b.theta.resize(B, T);
    b.inputs.assign(static_cast<size_t>(H), Mat(B, U));
    b.targets.assign(static_cast<size_t>(H), Mat(B, S));
    for (int r = 0; r < B; ++r) {
        const Window& w = ws[static_cast<size_t>(idx[static_cast<size_t>(r)])];
        if (w.inputs.rows() != H || w.inputs.cols() != U || w.targets.cols() != S ||
            w.theta.size() != T)
            throw std::invalid_argument("stack_windows: inconsistent window shapes");
        b.s_init.row(r) = w.s_init.transpose();
        b.theta.row(r) = w.theta.transpose();
        for (int t = 0; t < H; ++t) {
            b.inputs[static_cast<size_t>(t)].row(r) = w.inputs.row(t);
            b.targets[static_cast<size_t>(t)].row(r) = w.targets.row(t);
        }
    }
    return b;
}

namespace {
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// forward pass without re-validating parameters at every step
void forward_raw(const Vec& params, const NetArch& arch, const Vec& x, Vec& mean, Vec& var) {
    Vec h = x;
    for (int l = 0; l < arch.layer_count(); ++l) {
        Eigen::Map<const RowMat> w(params.data() + arch.weight_offset(l), arch.fan_out(l),
                                   arch.fan_in(l));
        Eigen::Map<const Vec> b(params.data() + arch.bias_offset(l), arch.fan_out(l));
        Vec z = w * h + b;
        if (l + 1 < arch.layer_count()) z = z.cwiseMax(0.0);
        h = std::move(z);
    }
    mean = h.head(arch.state_dim);
    var = h.tail(arch.state_dim).unaryExpr([](double v) { return softplus(v); });
}
}  // namespace

Rollout recursive_rollout(const Vec& params, const NetArch& arch, const Vec& s_init,
                          const Mat& inputs, const Vec& theta) {
    check_params(params, arch);
    int H = static_cast<int>(inputs.rows());
    if (H < 1) throw std::invalid_argument("recursive_rollout: empty input sequence");
    int S = arch.state_dim;
    if (s_init.size() != S) throw std::invalid_argument("recursive_rollout: bad initial state");
    if (S + inputs.cols() + theta.size() != arch.input_dim)
        throw std::invalid_argument("recursive_rollout: state+input+theta does not match input_dim");

    Rollout r;
    r.mean.resize(H, S);
    r.var.resize(H, S);
    Vec x(arch.input_dim);
    Vec state = s_init, mean(S), var(S);
    for (int t = 0; t < H; ++t) {
        x << state, inputs.row(t).transpose(), theta;
        forward_raw(params, arch, x, mean, var);
        if (!mean.allFinite() || !var.allFinite())
            throw RolloutDivergence(t + 1, "rollout diverged at step " + std::to_string(t + 1));
        r.mean.row(t) = mean.transpose();
        r.var.row(t) = var.transpose();
        state = mean;
    }
    return r;
}

double huber(double x, double xhat) {
    double r = x - xhat;
    double a = std::abs(r);
    return a < 1.0 ? 0.5 * r * r : a - 0.5;
}

Vec window_loss_terms(const Mat& pred_mean, const Mat& targets) {
    if (pred_mean.rows() != targets.rows() || pred_mean.cols() != targets.cols())
        throw std::invalid_argument("window_loss: shape mismatch");
    Vec terms(pred_mean.rows());
    for (Eigen::Index t = 0; t < pred_mean.rows(); ++t) {
        double s = 0.0;
        for (Eigen::Index c = 0; c < pred_mean.cols(); ++c)
            s += huber(targets(t, c), pred_mean(t, c));
        terms[t] = s / static_cast<double>(pred_mean.cols());
    }
    return terms;
}

double window_loss(const Mat& pred_mean, const Mat& targets) {
    return window_loss_terms(pred_mean, targets).mean();
}

double total_loss(const Vec& params, const NetArch& arch, const std::vector<Window>& windows) {
    if (windows.empty()) throw std::invalid_argument("total_loss: no windows");
    double acc = 0.0;
    for (const Window& w : windows) {
        Rollout r = recursive_rollout(params, arch, w.s_init, w.inputs, w.theta);
        acc += window_loss(r.mean, w.targets);
    }
    return acc / static_cast<double>(windows.size());
}

MlpVars mlp_on_tape(Tape& t, Tape::Var x) {
    const NetArch& a = t.arch();
    Tape::Var h = x;
    for (int l = 0; l + 1 < a.layer_count(); ++l) h = t.relu(t.affine(h, l));
    Tape::Var out = t.affine(h, a.layer_count() - 1);
    MlpVars v;
    v.mean = t.slice_cols(out, 0, a.state_dim);
    v.var = t.softplus(t.slice_cols(out, a.state_dim, a.state_dim));
    return v;
}

TapeRollout rollout_on_tape(Tape& t, const WindowBatch& b) {
    const NetArch& a = t.arch();
    if (b.s_init.cols() + b.inputs.at(0).cols() + b.theta.cols() != a.input_dim)
        throw std::invalid_argument("rollout_on_tape: state+input+theta does not match input_dim");
    TapeRollout r;
    Tape::Var theta = t.constant(b.theta);
    Tape::Var state = t.constant(b.s_init);
    for (int step = 0; step < b.H(); ++step) {
        Tape::Var x = t.hstack({state, t.constant(b.inputs[static_cast<size_t>(step)]), theta});
        MlpVars mv = mlp_on_tape(t, x);
        r.steps.push_back(mv);
        state = mv.mean;
    }
    return r;
}

Tape::Var batch_huber_loss(Tape& t, const TapeRollout& r, const WindowBatch& b) {
    Tape::Var acc{};
    for (int step = 0; step < b.H(); ++step) {
        Tape::Var h = t.huber_sum(r.steps[static_cast<size_t>(step)].mean,
                                  b.targets[static_cast<size_t>(step)]);
        acc = step == 0 ? h : t.add(acc, h);
    }
    double denom = static_cast<double>(b.B()) * b.H() * b.targets[0].cols();
    return t.scale(acc, 1.0 / denom);
}

Tape::Var batch_nll_loss(Tape& t, const TapeRollout& r, const WindowBatch& b, double var_floor) {
    Tape::Var acc{};
    for (int step = 0; step < b.H(); ++step) {
        const MlpVars& mv = r.steps[static_cast<size_t>(step)];
        Tape::Var g =
            t.gaussian_nll_sum(mv.mean, mv.var, b.targets[static_cast<size_t>(step)], var_floor);
        acc = step == 0 ? g : t.add(acc, g);
    }
    return t.scale(acc, 1.0 / static_cast<double>(b.B()));
}

}  // namespace rbnn
