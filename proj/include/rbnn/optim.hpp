#pragma once

#include <cmath>
#include <stdexcept>

#include "rbnn/arch.hpp"

namespace rbnn {

// Adam with canonical defaults (beta1=0.9, beta2=0.999, eps=1e-8).
struct AdamState {
    Vec m, v;
    long t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(Eigen::Index n) : m(Vec::Zero(n)), v(Vec::Zero(n)) {}
};

inline void adam_step(AdamState& st, Vec& params, const Vec& grad, double lr) {
    if (params.size() != grad.size() || params.size() != st.m.size())
        throw std::invalid_argument("adam_step: size mismatch");
    if (!(lr >= 0.0)) throw std::invalid_argument("adam_step: lr must be non-negative");
    ++st.t;
    st.m = st.beta1 * st.m + (1.0 - st.beta1) * grad;
    st.v = st.beta2 * st.v + (1.0 - st.beta2) * grad.cwiseProduct(grad);
    double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
    double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
    params.array() -=
        lr * (st.m.array() / c1) / ((st.v.array() / c2).sqrt() + st.eps);
}

// Exponential decay: lr(epoch) = lr0 * decay^(epoch / decay_steps).
struct LrSchedule {
    double lr0 = 1e-3;
    double decay = 1.0;
    int decay_steps = 1000;

    double at(int epoch) const {
        if (decay == 1.0) return lr0;
        return lr0 * std::pow(decay, static_cast<double>(epoch) / decay_steps);
    }
};

}  // namespace rbnn
