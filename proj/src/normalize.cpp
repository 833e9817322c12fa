#include "rbnn/normalize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rbnn {

int NormStats::group_index(double sigma3) const {
    if (group_sigma3.empty()) throw std::runtime_error("no normalization groups");
    for (size_t i = 0; i < group_sigma3.size(); ++i)
        if (group_sigma3[i] == sigma3) return static_cast<int>(i);
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < group_sigma3.size(); ++i) {
        double d = std::abs(std::log(sigma3) - std::log(group_sigma3[i]));
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

NormStats rms_stats(const Dataset& train) {
    if (train.empty()) throw std::invalid_argument("rms_stats: empty dataset");
    NormStats st;
    st.has_rms = true;
    for (const TriaxSeries& s : train.series)
        if (std::find(st.group_sigma3.begin(), st.group_sigma3.end(), s.sigma3) ==
            st.group_sigma3.end())
            st.group_sigma3.push_back(s.sigma3);
    std::sort(st.group_sigma3.begin(), st.group_sigma3.end());

    st.p_rms.resize(st.group_sigma3.size());
    st.q_rms.resize(st.group_sigma3.size());
    for (size_t g = 0; g < st.group_sigma3.size(); ++g) {
        double sp = 0.0, sq = 0.0;
        long count = 0;
        for (const TriaxSeries& s : train.series) {
            if (s.sigma3 != st.group_sigma3[g]) continue;
            for (int t = 1; t <= s.steps(); ++t) {
                sp += s.states[static_cast<size_t>(t)].p * s.states[static_cast<size_t>(t)].p;
                sq += s.states[static_cast<size_t>(t)].q * s.states[static_cast<size_t>(t)].q;
                ++count;
            }
        }
        st.p_rms[g] = std::sqrt(sp / static_cast<double>(count));
        st.q_rms[g] = std::sqrt(sq / static_cast<double>(count));
        if (!(st.p_rms[g] > 0.0) || !(st.q_rms[g] > 0.0))
            throw std::runtime_error("zero RMS in confining-pressure group " +
                                     std::to_string(st.group_sigma3[g]));
    }
    return st;
}

NormStats minmax_stats(const Dataset& train, bool strict) {
    if (train.empty()) throw std::invalid_argument("minmax_stats: empty dataset");
    NormStats st;
    st.has_ranges = true;
    st.u.assign(4, Range{});

    auto fold = [](Range& r, double v, bool& first) {
        if (first) {
            r.lo = r.hi = v;
            first = false;
        } else {
            r.lo = std::min(r.lo, v);
            r.hi = std::max(r.hi, v);
        }
    };

    bool f_third = true, f_s3 = true, f_e0 = true;
    bool f_u[4] = {true, true, true, true};
    for (const TriaxSeries& s : train.series) {
        int dim = input_dim(s.kind);
        for (const TriaxState& x : s.states) fold(st.third, x.third, f_third);
        for (const StepInput& u : s.inputs) {
            fold(st.u[0], u.eps, f_u[0]);
            fold(st.u[1], u.deps, f_u[1]);
            if (dim == 4) {
                fold(st.u[2], u.delta, f_u[2]);
                fold(st.u[3], u.cycle, f_u[3]);
            }
        }
        fold(st.theta_sigma3, s.sigma3, f_s3);
        fold(st.theta_e0, s.e0, f_e0);
    }

    if (strict) {
        auto check = [](const Range& r, const char* name) {
            if (r.constant())
                throw std::runtime_error(std::string("degenerate range: field '") + name +
                                         "' is constant");
        };
        check(st.third, "third");
        check(st.u[0], "eps");
        check(st.u[1], "deps");
        if (!f_u[2]) check(st.u[2], "delta");
        if (!f_u[3]) check(st.u[3], "cycle");
        check(st.theta_sigma3, "sigma3");
        check(st.theta_e0, "e0");
    }
    return st;
}

NormStats compute_norm_stats(const Dataset& train, bool strict) {
    NormStats st = rms_stats(train);
    NormStats mm = minmax_stats(train, strict);
    st.has_ranges = true;
    st.third = mm.third;
    st.u = mm.u;
    st.theta_sigma3 = mm.theta_sigma3;
    st.theta_e0 = mm.theta_e0;
    return st;
}

namespace {

TriaxSeries transform_series(const TriaxSeries& s, const NormStats& st, bool forward) {
    TriaxSeries out = s;
    // group lookup always uses the raw confining pressure; when inverting,
    // theta arrives min-max scaled and must be unscaled first
    double raw_sigma3 = (!forward && st.has_ranges) ? st.theta_sigma3.unscale(s.sigma3) : s.sigma3;
    if (st.has_rms) {
        int g = st.group_index(raw_sigma3);
        double pr = st.p_rms[static_cast<size_t>(g)];
        double qr = st.q_rms[static_cast<size_t>(g)];
        for (TriaxState& x : out.states) {
            x.p = forward ? x.p / pr : x.p * pr;
            x.q = forward ? x.q / qr : x.q * qr;
        }
    }
    if (st.has_ranges) {
        int dim = input_dim(s.kind);
        for (TriaxState& x : out.states)
            x.third = forward ? st.third.scale(x.third) : st.third.unscale(x.third);
        for (StepInput& u : out.inputs) {
            u.eps = forward ? st.u[0].scale(u.eps) : st.u[0].unscale(u.eps);
            u.deps = forward ? st.u[1].scale(u.deps) : st.u[1].unscale(u.deps);
            if (dim == 4) {
                u.delta = forward ? st.u[2].scale(u.delta) : st.u[2].unscale(u.delta);
                u.cycle = forward ? st.u[3].scale(u.cycle) : st.u[3].unscale(u.cycle);
            }
        }
        out.sigma3 = forward ? st.theta_sigma3.scale(s.sigma3) : st.theta_sigma3.unscale(s.sigma3);
        out.e0 = forward ? st.theta_e0.scale(s.e0) : st.theta_e0.unscale(s.e0);
    }
    return out;
}

}  // namespace

Dataset apply_normalization(const Dataset& ds, const NormStats& st) {
    Dataset out;
    out.series.reserve(ds.series.size());
    for (const TriaxSeries& s : ds.series) out.series.push_back(transform_series(s, st, true));
    return out;
}

Dataset invert_normalization(const Dataset& ds, const NormStats& st) {
    Dataset out;
    out.series.reserve(ds.series.size());
    for (const TriaxSeries& s : ds.series) out.series.push_back(transform_series(s, st, false));
    return out;
}

std::pair<Dataset, NormStats> rms_normalize(const Dataset& ds) {
    NormStats st = rms_stats(ds);
    return {apply_normalization(ds, st), st};
}

std::pair<Dataset, NormStats> minmax_scale(const Dataset& ds, bool strict) {
    NormStats st = minmax_stats(ds, strict);
    return {apply_normalization(ds, st), st};
}

Vec channel_scales(const NormStats& st, const TriaxSeries& s) {
    Vec v = Vec::Ones(3);
    if (st.has_rms) {
        int g = st.group_index(s.sigma3);
        v[0] = st.p_rms[static_cast<size_t>(g)];
        v[1] = st.q_rms[static_cast<size_t>(g)];
    }
    if (st.has_ranges) v[2] = st.third.constant() ? 1.0 : st.third.span();
    return v;
}

Vec channel_offsets(const NormStats& st, const TriaxSeries& s) {
    (void)s;
    Vec v = Vec::Zero(3);
    if (st.has_ranges) v[2] = st.third.lo;
    return v;
}

}  // namespace rbnn
