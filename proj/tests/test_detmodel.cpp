#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "fd_check.hpp"
#include "rbnn/rng.hpp"
#include "rbnn/rollout.hpp"
#include "rbnn/train_det.hpp"

using namespace rbnn;

namespace {

// linear system s_t = 0.9 s_{t-1} + u_t as a closed-form data generator
std::vector<Window> linear_system_windows(int m_tests, int n_steps, int H, std::uint64_t seed) {
    std::vector<Window> all;
    for (int m = 0; m < m_tests; ++m) {
        Rng rng(seed, static_cast<std::uint64_t>(m));
        std::vector<double> s(static_cast<size_t>(n_steps) + 1), u(static_cast<size_t>(n_steps));
        s[0] = rng.uniform();
        for (int t = 1; t <= n_steps; ++t) {
            u[static_cast<size_t>(t - 1)] = 0.1 * rng.uniform();
            s[static_cast<size_t>(t)] = 0.9 * s[static_cast<size_t>(t - 1)] + u[static_cast<size_t>(t - 1)];
        }
        for (int k = 1; k <= n_steps - H + 1; ++k) {
            Window w;
            w.series = m;
            w.start = k;
            w.s_init = Vec::Constant(1, s[static_cast<size_t>(k - 1)]);
            w.inputs.resize(H, 1);
            w.targets.resize(H, 1);
            for (int t = 0; t < H; ++t) {
                w.inputs(t, 0) = u[static_cast<size_t>(k + t - 1)];
                w.targets(t, 0) = s[static_cast<size_t>(k + t)];
            }
            w.theta = Vec();
            all.push_back(std::move(w));
        }
    }
    return all;
}

// 1-channel network that copies its state input through the relu trunk
Vec identity_network(NetArch& arch) {
    arch = NetArch{.input_dim = 2, .hidden = {1}, .state_dim = 1};
    Vec p = Vec::Zero(arch.param_count());
    p[arch.weight_offset(0) + 0] = 1.0;  // hidden <- state
    p[arch.weight_offset(1) + 0] = 1.0;  // mean <- hidden
    return p;
}

}  // namespace

TEST_CASE("huber values and knee continuity") {
    CHECK(huber(0.5, 0.0) == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(huber(2.0, 0.0) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(huber(1.0, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(huber(0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("window_loss closed cases") {
    Mat pred = Mat::Zero(2, 1), target(2, 1);
    target << 0.5, 2.0;
    CHECK(window_loss(pred, pred) == 0.0);
    CHECK(window_loss(pred, target) == doctest::Approx(0.8125).epsilon(1e-15));

    Mat p3 = Mat::Zero(3, 2), t3 = Mat::Constant(3, 2, 0.5);
    CHECK(window_loss(p3, t3) == doctest::Approx(0.125).epsilon(1e-15));
}

TEST_CASE("recursive_rollout: H=1 is a single forward pass of the mean head") {
    NetArch a{.input_dim = 9, .hidden = {12}, .state_dim = 3};
    Vec params = init_params(a, 4);
    Rng rng(5);
    Vec s0 = rng.normal_vec(3);
    Mat u = rng.normal_vec(4).transpose();
    Vec theta = rng.normal_vec(2);

    Rollout r = recursive_rollout(params, a, s0, u, theta);
    Vec x(9);
    x << s0, u.row(0).transpose(), theta;
    MlpOut direct = mlp_forward(params, a, x);
    CHECK(r.mean.row(0).transpose() == direct.mean);
    CHECK(r.var.row(0).transpose() == direct.var);
}

TEST_CASE("recursive_rollout: identity network holds the initial state") {
    NetArch a;
    Vec p = identity_network(a);
    Vec s0 = Vec::Constant(1, 0.37);
    Mat u = Mat::Constant(6, 1, 0.9);
    Rollout r = recursive_rollout(p, a, s0, u, Vec());
    for (int t = 0; t < 6; ++t) CHECK(r.mean(t, 0) == doctest::Approx(0.37).epsilon(1e-15));
}

TEST_CASE("recursive_rollout: H=3 equals the manual 3-fold composition") {
    NetArch a{.input_dim = 7, .hidden = {10, 10}, .state_dim = 3};
    Vec params = init_params(a, 21);
    Rng rng(22);
    Vec s0 = rng.normal_vec(3);
    Mat u(3, 2);
    u << rng.normal(), rng.normal(), rng.normal(), rng.normal(), rng.normal(), rng.normal();
    Vec theta = rng.normal_vec(2);

    Rollout r = recursive_rollout(params, a, s0, u, theta);
    Vec state = s0;
    for (int t = 0; t < 3; ++t) {
        Vec x(7);
        x << state, u.row(t).transpose(), theta;
        MlpOut o = mlp_forward(params, a, x);
        CHECK(r.mean.row(t).transpose() == o.mean);
        state = o.mean;
    }
}

TEST_CASE("rollout causality: later inputs never affect earlier predictions") {
    NetArch a{.input_dim = 9, .hidden = {8}, .state_dim = 3};
    Vec params = init_params(a, 33);
    Rng rng(34);
    Vec s0 = rng.normal_vec(3);
    Vec theta = rng.normal_vec(2);
    Mat u = Mat::NullaryExpr(5, 4, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });

    Rollout base = recursive_rollout(params, a, s0, u, theta);
    for (int j = 1; j < 5; ++j) {
        Mat u2 = u;
        u2.row(j).array() += 10.0;
        Rollout r = recursive_rollout(params, a, s0, u2, theta);
        for (int t = 0; t < j; ++t) CHECK(r.mean.row(t) == base.mean.row(t));
        CHECK(r.mean.row(j) != base.mean.row(j));
    }
}

TEST_CASE("recursive_rollout reports the diverging step") {
    NetArch a{.input_dim = 2, .hidden = {1}, .state_dim = 1};
    Vec p = Vec::Zero(a.param_count());
    p[a.weight_offset(0)] = 1e180;  // overflow after two feedbacks
    p[a.weight_offset(1)] = 1e180;
    Vec s0 = Vec::Constant(1, 1.0);
    Mat u = Mat::Ones(4, 1);
    try {
        recursive_rollout(p, a, s0, u, Vec());
        FAIL("expected divergence");
    } catch (const RolloutDivergence& ex) {
        CHECK(ex.step >= 1);
        CHECK(ex.step <= 4);
    }
}

TEST_CASE("total_loss weighting") {
    NetArch a{.input_dim = 2, .hidden = {4}, .state_dim = 1};
    Vec params = init_params(a, 8);
    std::vector<Window> ws = linear_system_windows(2, 6, 3, 77);
    double single = total_loss(params, a, {ws[0]});
    Rollout r = recursive_rollout(params, a, ws[0].s_init, ws[0].inputs, ws[0].theta);
    CHECK(single == doctest::Approx(window_loss(r.mean, ws[0].targets)).epsilon(1e-15));

    // duplicated window leaves the mean unchanged; two windows average
    CHECK(total_loss(params, a, {ws[0], ws[0]}) == doctest::Approx(single).epsilon(1e-15));
    double b = total_loss(params, a, {ws[1]});
    CHECK(total_loss(params, a, {ws[0], ws[1]}) ==
          doctest::Approx(0.5 * (single + b)).epsilon(1e-14));

    // permutation invariance
    CHECK(total_loss(params, a, {ws[0], ws[1], ws[2]}) ==
          doctest::Approx(total_loss(params, a, {ws[2], ws[0], ws[1]})).epsilon(1e-14));

    CHECK_THROWS_AS(total_loss(params, a, {}), std::invalid_argument);
}

TEST_CASE("batched tape loss equals the plain total_loss and its gradient passes FD") {
    NetArch a{.input_dim = 2, .hidden = {5}, .state_dim = 1};
    Vec params = init_params(a, 13);
    std::vector<Window> ws = linear_system_windows(2, 8, 4, 5);
    std::vector<int> idx = {0, 1, 2, 3};
    WindowBatch wb = stack_windows(ws, idx);

    Tape t(a, params);
    Tape::Var loss = batch_huber_loss(t, rollout_on_tape(t, wb), wb);
    std::vector<Window> four(ws.begin(), ws.begin() + 4);
    CHECK(t.value(loss) == doctest::Approx(total_loss(params, a, four)).epsilon(1e-14));

    Vec analytic = t.grad_params(loss);
    Vec numeric = testutil::finite_diff(
        [&](const Vec& p) { return total_loss(p, a, four); }, params);
    CHECK(testutil::grad_close(analytic, numeric, 1e-4));
}

TEST_CASE("H=1 training gradient equals the plain one-step regression gradient") {
    NetArch a{.input_dim = 2, .hidden = {6}, .state_dim = 1};
    Vec params = init_params(a, 17);
    std::vector<Window> ws = linear_system_windows(1, 10, 1, 3);
    std::vector<int> idx(ws.size());
    std::iota(idx.begin(), idx.end(), 0);
    WindowBatch wb = stack_windows(ws, idx);

    Tape t(a, params);
    Vec g_rollout = t.grad_params(batch_huber_loss(t, rollout_on_tape(t, wb), wb));

    // direct one-step regression: no recursion anywhere
    Tape t2(a, params);
    Mat x(wb.B(), 2), target(wb.B(), 1);
    for (int r = 0; r < wb.B(); ++r) {
        x(r, 0) = wb.s_init(r, 0);
        x(r, 1) = wb.inputs[0](r, 0);
        target(r, 0) = wb.targets[0](r, 0);
    }
    MlpVars mv = mlp_on_tape(t2, t2.constant(x));
    Vec g_direct = t2.grad_params(t2.scale(t2.huber_sum(mv.mean, target), 1.0 / wb.B()));
    CHECK(g_rollout.isApprox(g_direct, 1e-13));
}

TEST_CASE("train_rffnn: zero learning rate leaves the initialization untouched") {
    std::vector<Window> ws = linear_system_windows(2, 10, 2, 9);
    DetConfig cfg;
    cfg.arch = NetArch{.input_dim = 2, .hidden = {4}, .state_dim = 1};
    cfg.H = 2;
    cfg.lr = {0.0, 1.0, 100};
    cfg.epochs = 3;
    cfg.seed = 42;
    DetFit fit = train_rffnn(ws, {}, cfg);
    CHECK(fit.params == init_params(cfg.arch, 42));
}

TEST_CASE("train_rffnn learns the linear system to val RMSE < 1e-2") {
    std::vector<Window> train = linear_system_windows(6, 40, 5, 100);
    std::vector<Window> val = linear_system_windows(2, 40, 5, 200);

    DetConfig cfg;
    cfg.arch = NetArch{.input_dim = 2, .hidden = {16}, .state_dim = 1};
    cfg.H = 5;
    cfg.lr = {0.01, 0.95, 100};
    cfg.epochs = 2000;
    cfg.batch = 32;
    cfg.patience = 0;
    cfg.seed = 7;
    DetFit fit = train_rffnn(train, val, cfg);
    REQUIRE(!fit.history.aborted);

    double se = 0.0;
    long n = 0;
    for (const Window& w : val) {
        Rollout r = recursive_rollout(fit.params, cfg.arch, w.s_init, w.inputs, w.theta);
        se += (r.mean - w.targets).squaredNorm();
        n += r.mean.size();
    }
    double rmse = std::sqrt(se / static_cast<double>(n));
    INFO("val rollout rmse ", rmse);
    CHECK(rmse < 1e-2);

    // training loss is monotone under a 5-epoch moving average: no step of
    // the averaged curve rises by more than 1% of the starting loss
    const std::vector<double>& tl = fit.history.train;
    REQUIRE(tl.size() > 50);
    auto avg = [&](size_t i) {
        double s = 0;
        for (size_t k = i; k < i + 5; ++k) s += tl[k];
        return s / 5.0;
    };
    for (size_t i = 0; i + 10 < tl.size(); i += 5) CHECK(avg(i + 5) <= avg(i) + 0.01 * tl[0]);
}

TEST_CASE("train_rffnn aborts on divergence and keeps finite parameters") {
    std::vector<Window> ws = linear_system_windows(2, 10, 3, 1);
    DetConfig cfg;
    cfg.arch = NetArch{.input_dim = 2, .hidden = {8}, .state_dim = 1};
    cfg.H = 3;
    cfg.lr = {1e100, 1.0, 100};  // overflows the rollout within one epoch
    cfg.epochs = 50;
    cfg.seed = 3;
    DetFit fit = train_rffnn(ws, {}, cfg);
    CHECK(fit.history.aborted);
    CHECK(!fit.history.abort_reason.empty());
    CHECK(fit.params.allFinite());
}
