#include "rbnn/arch.hpp"
#include <limits>

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "rbnn/rng.hpp"

namespace rbnn {

int NetArch::fan_in(int layer) const {
    return layer == 0 ? input_dim : hidden[static_cast<size_t>(layer) - 1];
}

int NetArch::fan_out(int layer) const {
    return layer < static_cast<int>(hidden.size()) ? hidden[static_cast<size_t>(layer)]
                                                   : 2 * state_dim;
}

int NetArch::weight_offset(int layer) const {
    int off = 0;
    for (int l = 0; l < layer; ++l) off += (fan_in(l) + 1) * fan_out(l);
    return off;
}

int NetArch::bias_offset(int layer) const {
    return weight_offset(layer) + fan_in(layer) * fan_out(layer);
}

int NetArch::param_count() const {
    int n = 0;
    for (int l = 0; l < layer_count(); ++l) n += (fan_in(l) + 1) * fan_out(l);
    return n;
}

void NetArch::validate() const {
    if (input_dim < 1) throw std::invalid_argument("NetArch: input_dim must be >= 1");
    if (state_dim < 1) throw std::invalid_argument("NetArch: state_dim must be >= 1");
    if (hidden.empty()) throw std::invalid_argument("NetArch: hidden layers must be non-empty");
    for (int h : hidden)
        if (h < 1) throw std::invalid_argument("NetArch: hidden widths must be >= 1");
}

double softplus(double x) {
    // log(1+exp(x)); for large x the direct form overflows, use x + log1p(exp(-x)).
    // Clamped to the smallest positive normal so the result stays > 0 even
    // where exp(x) underflows.
    if (x > 30.0) return x + std::log1p(std::exp(-x));
    double y = std::log1p(std::exp(x));
    return y > 0.0 ? y : std::numeric_limits<double>::min();
}

double softplus_prime(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double softplus_inverse(double y) {
    if (y > 30.0) return y;
    return std::log(std::expm1(y));
}

Vec init_params(const NetArch& arch, std::uint64_t seed, double gain) {
    arch.validate();
    Vec p(arch.param_count());
    Rng rng(seed);
    for (int l = 0; l < arch.layer_count(); ++l) {
        double bound = gain / std::sqrt(static_cast<double>(arch.fan_in(l)));
        int begin = arch.weight_offset(l);
        int count = (arch.fan_in(l) + 1) * arch.fan_out(l);
        for (int i = 0; i < count; ++i) p[begin + i] = (2.0 * rng.uniform() - 1.0) * bound;
    }
    return p;
}

void check_params(const Vec& params, const NetArch& arch) {
    arch.validate();
    if (params.size() != arch.param_count())
        throw std::invalid_argument("parameter vector length " + std::to_string(params.size()) +
                                    " does not match architecture (expected " +
                                    std::to_string(arch.param_count()) + ")");
    if (!params.allFinite()) throw std::invalid_argument("parameter vector has non-finite entries");
}

MlpOut mlp_forward(const Vec& params, const NetArch& arch, const Vec& x) {
    check_params(params, arch);
    if (x.size() != arch.input_dim)
        throw std::invalid_argument("mlp_forward: input length " + std::to_string(x.size()) +
                                    " does not match input_dim " + std::to_string(arch.input_dim));

    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Vec h = x;
    for (int l = 0; l < arch.layer_count(); ++l) {
        Eigen::Map<const RowMat> w(params.data() + arch.weight_offset(l), arch.fan_out(l),
                                   arch.fan_in(l));
        Eigen::Map<const Vec> b(params.data() + arch.bias_offset(l), arch.fan_out(l));
        Vec z = w * h + b;
        if (l + 1 < arch.layer_count()) z = z.cwiseMax(0.0);
        h = std::move(z);
    }

    MlpOut out;
    out.mean = h.head(arch.state_dim);
    out.var = h.tail(arch.state_dim).unaryExpr([](double v) { return softplus(v); });
    return out;
}

}  // namespace rbnn
