#pragma once

#include <functional>
#include <vector>

#include "rbnn/arch.hpp"

namespace rbnn {

// Reverse-mode tape over matrix-valued nodes (rows = batch). Parameters
// enter through affine layers (or params_row) and gradients accumulate
// into a flat vector of length L. Nodes are recorded in creation order,
// which is already topological, so backward is a single reverse sweep.
class Tape {
public:
    struct Var {
        int id = -1;
    };

    Tape(NetArch arch, Vec params);

    Var constant(Mat v);
    Var params_row();  // whole parameter vector as a 1 x L node

    Var affine(Var x, int layer);  // x * W_l^T + b_l
    Var relu(Var x);
    Var softplus(Var x);
    Var slice_cols(Var x, int begin, int len);
    Var hstack(const std::vector<Var>& parts);

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);  // elementwise
    Var square(Var a);
    Var scale(Var a, double c);
    Var sum(Var a);  // 1 x 1

    // sum of elementwise Huber(pred - target), knee at 1
    Var huber_sum(Var pred, Mat target);
    // 0.5 * sum( log(max(var, floor)) + (target-mean)^2 / max(var, floor) )
    Var gaussian_nll_sum(Var mean, Var var, Mat target, double var_floor);

    double value(Var v) const;
    const Mat& matrix(Var v) const;

    // d value(loss) / d params; loss must be 1x1. Throws on non-finite loss,
    // naming the first non-finite node.
    Vec grad_params(Var loss);

    const NetArch& arch() const { return arch_; }
    const Vec& params() const { return params_; }

private:
    enum class Op {
        Const,
        Params,
        Affine,
        Relu,
        Softplus,
        Slice,
        Hstack,
        Add,
        Sub,
        Mul,
        Square,
        Scale,
        Sum,
        HuberSum,
        GaussNll
    };

    struct Node {
        Op op;
        Mat val;
        Mat grad;  // allocated lazily during backward
        int a = -1, b = -1;
        int layer = -1;
        int begin = 0, len = 0;
        double c = 0.0;
        std::vector<int> parts;
        Mat aux;  // target for loss nodes
    };

    Var push(Node n);
    Mat& grad_of(int id);
    static const char* op_name(Op op);

    NetArch arch_;
    Vec params_;
    std::vector<Node> nodes_;
};

// Gradient of a scalar loss built on a fresh tape, evaluated at `at`.
Vec grad(const std::function<Tape::Var(Tape&)>& build_loss, const NetArch& arch, const Vec& at);

}  // namespace rbnn
