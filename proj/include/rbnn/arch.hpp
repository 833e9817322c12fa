#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace rbnn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Fully-connected network with rectifier hidden layers and a final linear
// layer of width 2*state_dim, split into a mean head and a raw-variance
// head (softplus is applied to the raw half to keep variances positive).
struct NetArch {
    int input_dim = 0;
    std::vector<int> hidden;
    int state_dim = 0;

    int layer_count() const { return static_cast<int>(hidden.size()) + 1; }
    int fan_in(int layer) const;
    int fan_out(int layer) const;  // last layer = 2*state_dim
    // offsets into the flat parameter vector; weights row-major (fan_out x fan_in),
    // bias directly after
    int weight_offset(int layer) const;
    int bias_offset(int layer) const;
    int param_count() const;  // L = sum over layers of (fan_in+1)*fan_out

    void validate() const;  // throws std::invalid_argument
    bool operator==(const NetArch&) const = default;
};

// Overflow-safe log(1 + exp(x)).
double softplus(double x);
double softplus_prime(double x);  // logistic sigmoid
double softplus_inverse(double y);

// Fan-in-scaled uniform initialization, deterministic in the seed.
Vec init_params(const NetArch& arch, std::uint64_t seed, double gain = 1.0);

struct MlpOut {
    Vec mean;
    Vec var;  // strictly positive
};

// Plain (tape-free) forward pass; throws std::invalid_argument on shape mismatch.
MlpOut mlp_forward(const Vec& params, const NetArch& arch, const Vec& x);

void check_params(const Vec& params, const NetArch& arch);

}  // namespace rbnn
