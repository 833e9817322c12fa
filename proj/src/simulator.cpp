#include "rbnn/simulator.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rbnn/rng.hpp"

namespace rbnn {

void ConstitutiveParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) throw std::invalid_argument(std::string("constitutive parameter ") + name +
                                                    " must be positive");
    };
    positive(G0, "G0");
    positive(n, "n");
    positive(e_c0, "e_c0");
    positive(lambda_cs, "lambda_cs");
    positive(xi, "xi");
    positive(d_exp, "d_exp");
    positive(p_atm, "p_atm");
    if (!(nu > 0.0 && nu < 0.5)) throw std::invalid_argument("nu must lie in (0, 0.5)");
    if (!(phi_c_deg > 0.0 && phi_c_deg < 90.0))
        throw std::invalid_argument("phi_c must lie in (0, 90) degrees");
}

StateFunctions state_functions(double e, double p_eff, const ConstitutiveParams& cp) {
    if (!(e > 0.0)) throw std::runtime_error("degenerate state: void ratio <= 0");
    if (!(p_eff > 0.0)) throw std::runtime_error("degenerate state: p' <= 0");

    double sin_phi = std::sin(cp.phi_c_deg * std::numbers::pi / 180.0);
    double m_c = 6.0 * sin_phi / (3.0 - sin_phi);

    StateFunctions f;
    f.G = cp.G0 * (2.97 - e) * (2.97 - e) / (1.0 + e) * std::pow(p_eff / cp.p_atm, cp.n);
    f.K = 2.0 * f.G * (1.0 + cp.nu) / (3.0 * (1.0 - 2.0 * cp.nu));
    f.e_c = cp.e_c0 - cp.lambda_cs * std::pow(p_eff / cp.p_atm, cp.xi);
    if (!(f.e_c > 0.0)) throw std::runtime_error("degenerate state: critical void ratio <= 0");
    f.M_p = m_c * std::pow(f.e_c / e, cp.d_exp);
    f.M_pt = m_c * std::pow(e / f.e_c, cp.d_exp);
    return f;
}

SimState initial_state(double e0, double sigma3) {
    SimState s;
    s.p_eff = sigma3;
    s.e = e0;
    return s;
}

SimState step_drained(const SimState& s, double deps_d, const ConstitutiveParams& cp, double e0) {
    StateFunctions f = state_functions(s.e, s.p_eff, cp);
    double dq = 3.0 * f.G * (deps_d - (s.q / (s.p_eff * f.M_p)) * std::abs(deps_d));
    double deps_v = f.M_pt * std::abs(deps_d) - (s.q / s.p_eff) * deps_d;

    SimState r = s;
    r.q += dq;
    r.p_eff += dq / 3.0;  // drained triaxial path, cell pressure constant
    r.e -= (1.0 + e0) * deps_v;
    r.eps_v += deps_v;
    r.eps_d += deps_d;
    return r;
}

SimState step_undrained(const SimState& s, double deps_d, const ConstitutiveParams& cp) {
    StateFunctions f = state_functions(s.e, s.p_eff, cp);
    double deps_v_p = f.M_pt * std::abs(deps_d) - (s.q / s.p_eff) * deps_d;
    double dp = -f.K * deps_v_p;  // elastic response to the suppressed volume change
    double dq = 3.0 * f.G * (deps_d - (s.q / (s.p_eff * f.M_p)) * std::abs(deps_d));

    SimState r = s;
    r.p_eff += dp;
    r.q += dq;
    r.u_excess += dq / 3.0 - dp;
    r.eps_d += deps_d;
    return r;
}

std::vector<PathStep> make_strain_path(PathKind kind, double amplitude, int n_cycles,
                                       int steps_per_branch) {
    if (!(amplitude > 0.0)) throw std::invalid_argument("strain amplitude must be positive");
    if (n_cycles < 1 || steps_per_branch < 1)
        throw std::invalid_argument("cycle and step counts must be >= 1");

    std::vector<PathStep> path;
    double eps = 0.0;
    int cycle = 1;  // the step-0 row of a series carries cycle 0

    auto leg = [&](int sign, int steps) {
        double d = sign * amplitude / steps_per_branch;
        for (int i = 0; i < steps; ++i) {
            eps += d;
            path.push_back({eps, d, sign, cycle});
        }
    };

    if (kind == PathKind::Monotonic) {
        leg(+1, n_cycles * steps_per_branch);
        return path;
    }

    // Triangular wave 0 -> +a -> -a -> ... -> 0. The counter advances where
    // an unload->reload pass crosses zero strain, i.e. halfway through each
    // -a -> +a reload leg; the closing -a -> 0 leg still belongs to the last
    // cycle.
    leg(+1, steps_per_branch);
    for (int c = 0; c < n_cycles; ++c) {
        leg(-1, 2 * steps_per_branch);
        leg(+1, steps_per_branch);  // -a -> 0
        if (c + 1 < n_cycles) {
            ++cycle;
            leg(+1, steps_per_branch);  // 0 -> +a, new cycle
        }
    }
    return path;
}

namespace {

std::string default_id(const SeriesConfig& c) {
    char buf[96];
    const char* tag = c.path == PathKind::Monotonic ? "mono" : "cyc";
    const char* dr = c.drainage == Drainage::Drained ? "cd" : "cu";
    std::snprintf(buf, sizeof(buf), "%s_%s_s%g_e%.4f", tag, dr, c.sigma3, c.e0);
    return buf;
}

TestKind kind_of(const SeriesConfig& c) {
    if (c.path == PathKind::Monotonic) {
        if (c.drainage != Drainage::Drained)
            throw std::invalid_argument("monotonic undrained tests are not supported");
        return TestKind::MonotonicCD;
    }
    return c.drainage == Drainage::Drained ? TestKind::CyclicCD : TestKind::CyclicCU;
}

TriaxSeries simulate_series(const SeriesConfig& cfg, const ConstitutiveParams& cp,
                            const GenOptions& opt, GenReport::Entry& entry) {
    if (!(cfg.e0 > 0.0)) throw std::invalid_argument("e0 must be positive");
    if (!(cfg.sigma3 > 0.0)) throw std::invalid_argument("sigma3 must be positive");

    TriaxSeries out;
    out.test_id = cfg.id.empty() ? default_id(cfg) : cfg.id;
    out.kind = kind_of(cfg);
    out.sigma3 = cfg.sigma3;
    out.e0 = cfg.e0;

    std::vector<PathStep> path =
        make_strain_path(cfg.path, cfg.amplitude, cfg.n_cycles, cfg.steps_per_branch);
    entry.requested = static_cast<int>(path.size());

    SimState s = initial_state(cfg.e0, cfg.sigma3);
    auto record = [&](const SimState& st) {
        TriaxState ts;
        ts.p = st.p_eff;
        ts.q = st.q;
        switch (out.kind) {
            case TestKind::MonotonicCD: ts.third = st.e; break;
            case TestKind::CyclicCD: ts.third = st.eps_v; break;
            case TestKind::CyclicCU: ts.third = st.u_excess / cfg.sigma3; break;
        }
        out.states.push_back(ts);
    };
    record(s);

    for (size_t i = 0; i < path.size(); ++i) {
        const PathStep& ps = path[i];
        SimState next;
        try {
            next = cfg.drainage == Drainage::Drained ? step_drained(s, ps.deps, cp, cfg.e0)
                                                     : step_undrained(s, ps.deps, cp);
            if (!(next.p_eff > 0.0))
                throw std::runtime_error(cfg.drainage == Drainage::Undrained
                                             ? "liquefaction limit: p' <= 0"
                                             : "instability: p' <= 0");
        } catch (const std::exception& ex) {
            throw SimError(static_cast<int>(i) + 1, out.test_id + ": " + ex.what() + " at step " +
                                                        std::to_string(i + 1));
        }
        s = next;
        record(s);
        out.inputs.push_back({ps.eps, ps.deps, static_cast<double>(ps.delta),
                              static_cast<double>(ps.cycle)});
        if (cfg.drainage == Drainage::Undrained && s.u_excess / cfg.sigma3 >= opt.ru_stop) {
            entry.note = "ru_stop";
            break;
        }
    }
    return out;
}

void add_noise(TriaxSeries& se, double sigma, Rng& rng) {
    int n = se.steps();
    if (n == 0) return;
    double sp = 0, sq = 0, st = 0;
    for (const TriaxState& x : se.states) {
        sp += x.p * x.p;
        sq += x.q * x.q;
        st += x.third * x.third;
    }
    double m = static_cast<double>(se.states.size());
    double ap = sigma * std::sqrt(sp / m), aq = sigma * std::sqrt(sq / m),
           at = sigma * std::sqrt(st / m);
    // the initial state is measured, not perturbed
    for (size_t t = 1; t < se.states.size(); ++t) {
        se.states[t].p += ap * rng.normal();
        se.states[t].q += aq * rng.normal();
        se.states[t].third += at * rng.normal();
    }
}

}  // namespace

Dataset generate_dataset(const std::vector<SeriesConfig>& suite, const ConstitutiveParams& cp,
                         const GenOptions& opt, GenReport* report) {
    cp.validate();
    Dataset ds;
    GenReport local;
    GenReport& rep = report ? *report : local;

    for (size_t i = 0; i < suite.size(); ++i) {
        GenReport::Entry entry;
        entry.id = suite[i].id.empty() ? default_id(suite[i]) : suite[i].id;
        try {
            TriaxSeries se = simulate_series(suite[i], cp, opt, entry);
            if (opt.noise_sigma > 0.0) {
                Rng rng(opt.seed, i);
                add_noise(se, opt.noise_sigma, rng);
            }
            entry.steps = se.steps();
            ds.series.push_back(std::move(se));
        } catch (const SimError& ex) {
            if (opt.strict) throw;
            entry.note = ex.what();
        }
        rep.entries.push_back(std::move(entry));
    }

    if (!ds.empty()) {
        int n_min = ds.series.front().steps();
        int n_max = n_min;
        for (const TriaxSeries& se : ds.series) {
            n_min = std::min(n_min, se.steps());
            n_max = std::max(n_max, se.steps());
        }
        if (n_min != n_max) {
            switch (opt.equalize) {
                case Equalize::None: break;
                case Equalize::Error:
                    throw std::runtime_error("series lengths differ (" + std::to_string(n_min) +
                                             ".." + std::to_string(n_max) +
                                             ") and equalize=error");
                case Equalize::Min:
                    for (TriaxSeries& se : ds.series) {
                        se.states.resize(static_cast<size_t>(n_min) + 1);
                        se.inputs.resize(static_cast<size_t>(n_min));
                    }
                    rep.truncated_to = n_min;
                    break;
            }
        }
    }
    return ds;
}

}  // namespace rbnn
