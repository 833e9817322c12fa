#include "rbnn/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace rbnn {

namespace {
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
}

Tape::Tape(NetArch arch, Vec params) : arch_(std::move(arch)), params_(std::move(params)) {
    check_params(params_, arch_);
}

Tape::Var Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

const Mat& Tape::matrix(Var v) const { return nodes_.at(static_cast<size_t>(v.id)).val; }

double Tape::value(Var v) const {
    const Mat& m = matrix(v);
    if (m.rows() != 1 || m.cols() != 1) throw std::logic_error("value() on non-scalar node");
    return m(0, 0);
}

Tape::Var Tape::constant(Mat v) {
    Node n;
    n.op = Op::Const;
    n.val = std::move(v);
    return push(std::move(n));
}

Tape::Var Tape::params_row() {
    Node n;
    n.op = Op::Params;
    n.val = params_.transpose();
    return push(std::move(n));
}

Tape::Var Tape::affine(Var x, int layer) {
    const Mat& in = matrix(x);
    if (in.cols() != arch_.fan_in(layer))
        throw std::invalid_argument("affine: input has " + std::to_string(in.cols()) +
                                    " columns, layer expects " +
                                    std::to_string(arch_.fan_in(layer)));
    Eigen::Map<const RowMat> w(params_.data() + arch_.weight_offset(layer), arch_.fan_out(layer),
                               arch_.fan_in(layer));
    Eigen::Map<const Vec> b(params_.data() + arch_.bias_offset(layer), arch_.fan_out(layer));
    Node n;
    n.op = Op::Affine;
    n.a = x.id;
    n.layer = layer;
    n.val = (in * w.transpose()).rowwise() + b.transpose();
    return push(std::move(n));
}

Tape::Var Tape::relu(Var x) {
    Node n;
    n.op = Op::Relu;
    n.a = x.id;
    n.val = matrix(x).cwiseMax(0.0);
    return push(std::move(n));
}

Tape::Var Tape::softplus(Var x) {
    Node n;
    n.op = Op::Softplus;
    n.a = x.id;
    n.val = matrix(x).unaryExpr([](double v) { return rbnn::softplus(v); });
    return push(std::move(n));
}

Tape::Var Tape::slice_cols(Var x, int begin, int len) {
    const Mat& in = matrix(x);
    if (begin < 0 || len < 1 || begin + len > in.cols())
        throw std::invalid_argument("slice_cols out of range");
    Node n;
    n.op = Op::Slice;
    n.a = x.id;
    n.begin = begin;
    n.len = len;
    n.val = in.middleCols(begin, len);
    return push(std::move(n));
}

Tape::Var Tape::hstack(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("hstack: no parts");
    Eigen::Index rows = matrix(parts[0]).rows();
    Eigen::Index cols = 0;
    for (Var p : parts) {
        if (matrix(p).rows() != rows) throw std::invalid_argument("hstack: row mismatch");
        cols += matrix(p).cols();
    }
    Node n;
    n.op = Op::Hstack;
    n.val.resize(rows, cols);
    Eigen::Index at = 0;
    for (Var p : parts) {
        n.val.middleCols(at, matrix(p).cols()) = matrix(p);
        at += matrix(p).cols();
        n.parts.push_back(p.id);
    }
    return push(std::move(n));
}

Tape::Var Tape::add(Var a, Var b) {
    Node n;
    n.op = Op::Add;
    n.a = a.id;
    n.b = b.id;
    n.val = matrix(a) + matrix(b);
    return push(std::move(n));
}

Tape::Var Tape::sub(Var a, Var b) {
    Node n;
    n.op = Op::Sub;
    n.a = a.id;
    n.b = b.id;
    n.val = matrix(a) - matrix(b);
    return push(std::move(n));
}

Tape::Var Tape::mul(Var a, Var b) {
    Node n;
    n.op = Op::Mul;
    n.a = a.id;
    n.b = b.id;
    n.val = matrix(a).cwiseProduct(matrix(b));
    return push(std::move(n));
}

Tape::Var Tape::square(Var a) {
    Node n;
    n.op = Op::Square;
    n.a = a.id;
    n.val = matrix(a).array().square();
    return push(std::move(n));
}

Tape::Var Tape::scale(Var a, double c) {
    Node n;
    n.op = Op::Scale;
    n.a = a.id;
    n.c = c;
    n.val = matrix(a) * c;
    return push(std::move(n));
}

Tape::Var Tape::sum(Var a) {
    Node n;
    n.op = Op::Sum;
    n.a = a.id;
    n.val = Mat::Constant(1, 1, matrix(a).sum());
    return push(std::move(n));
}

Tape::Var Tape::huber_sum(Var pred, Mat target) {
    const Mat& p = matrix(pred);
    if (p.rows() != target.rows() || p.cols() != target.cols())
        throw std::invalid_argument("huber_sum: shape mismatch");
    double total = 0.0;
    for (Eigen::Index j = 0; j < p.cols(); ++j)
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            double r = p(i, j) - target(i, j);
            double a = std::abs(r);
            total += a < 1.0 ? 0.5 * r * r : a - 0.5;
        }
    Node n;
    n.op = Op::HuberSum;
    n.a = pred.id;
    n.aux = std::move(target);
    n.val = Mat::Constant(1, 1, total);
    return push(std::move(n));
}

Tape::Var Tape::gaussian_nll_sum(Var mean, Var var, Mat target, double var_floor) {
    const Mat& m = matrix(mean);
    const Mat& v = matrix(var);
    if (m.rows() != target.rows() || m.cols() != target.cols() || v.rows() != m.rows() ||
        v.cols() != m.cols())
        throw std::invalid_argument("gaussian_nll_sum: shape mismatch");
    double total = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            double ve = std::max(v(i, j), var_floor);
            double r = target(i, j) - m(i, j);
            total += 0.5 * (std::log(ve) + r * r / ve);
        }
    Node n;
    n.op = Op::GaussNll;
    n.a = mean.id;
    n.b = var.id;
    n.aux = std::move(target);
    n.c = var_floor;
    n.val = Mat::Constant(1, 1, total);
    return push(std::move(n));
}

Mat& Tape::grad_of(int id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.val.rows(), n.val.cols());
    return n.grad;
}

const char* Tape::op_name(Op op) {
    switch (op) {
        case Op::Const: return "const";
        case Op::Params: return "params";
        case Op::Affine: return "affine";
        case Op::Relu: return "relu";
        case Op::Softplus: return "softplus";
        case Op::Slice: return "slice";
        case Op::Hstack: return "hstack";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::Square: return "square";
        case Op::Scale: return "scale";
        case Op::Sum: return "sum";
        case Op::HuberSum: return "huber_sum";
        case Op::GaussNll: return "gaussian_nll";
    }
    return "?";
}

Vec Tape::grad_params(Var loss) {
    const Mat& lv = matrix(loss);
    if (lv.rows() != 1 || lv.cols() != 1) throw std::invalid_argument("grad_params: loss not scalar");
    if (!std::isfinite(lv(0, 0))) {
        for (size_t i = 0; i < nodes_.size(); ++i)
            if (!nodes_[i].val.allFinite())
                throw std::runtime_error("non-finite loss: first offending node #" +
                                         std::to_string(i) + " (" + op_name(nodes_[i].op) + ")");
        throw std::runtime_error("non-finite loss");
    }

    Vec pgrad = Vec::Zero(params_.size());
    grad_of(loss.id)(0, 0) = 1.0;

    for (int id = loss.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        if (n.grad.size() == 0) continue;  // not on the path to the loss
        const Mat& g = n.grad;
        switch (n.op) {
            case Op::Const:
                break;
            case Op::Params:
                pgrad += g.row(0).transpose();
                break;
            case Op::Affine: {
                const Mat& x = nodes_[static_cast<size_t>(n.a)].val;
                Eigen::Map<const RowMat> w(params_.data() + arch_.weight_offset(n.layer),
                                           arch_.fan_out(n.layer), arch_.fan_in(n.layer));
                grad_of(n.a).noalias() += g * w;
                Eigen::Map<RowMat> gw(pgrad.data() + arch_.weight_offset(n.layer),
                                      arch_.fan_out(n.layer), arch_.fan_in(n.layer));
                gw.noalias() += g.transpose() * x;
                Eigen::Map<Vec> gb(pgrad.data() + arch_.bias_offset(n.layer), arch_.fan_out(n.layer));
                gb += g.colwise().sum().transpose();
                break;
            }
            case Op::Relu: {
                const Mat& x = nodes_[static_cast<size_t>(n.a)].val;
                grad_of(n.a).array() += g.array() * (x.array() > 0.0).cast<double>();
                break;
            }
            case Op::Softplus: {
                const Mat& x = nodes_[static_cast<size_t>(n.a)].val;
                grad_of(n.a).array() +=
                    g.array() * x.array().unaryExpr([](double v) { return softplus_prime(v); });
                break;
            }
            case Op::Slice:
                grad_of(n.a).middleCols(n.begin, n.len) += g;
                break;
            case Op::Hstack: {
                Eigen::Index at = 0;
                for (int pid : n.parts) {
                    Eigen::Index w = nodes_[static_cast<size_t>(pid)].val.cols();
                    grad_of(pid) += g.middleCols(at, w);
                    at += w;
                }
                break;
            }
            case Op::Add:
                grad_of(n.a) += g;
                grad_of(n.b) += g;
                break;
            case Op::Sub:
                grad_of(n.a) += g;
                grad_of(n.b) -= g;
                break;
            case Op::Mul:
                grad_of(n.a).array() += g.array() * nodes_[static_cast<size_t>(n.b)].val.array();
                grad_of(n.b).array() += g.array() * nodes_[static_cast<size_t>(n.a)].val.array();
                break;
            case Op::Square:
                grad_of(n.a).array() += 2.0 * g.array() * nodes_[static_cast<size_t>(n.a)].val.array();
                break;
            case Op::Scale:
                grad_of(n.a) += g * n.c;
                break;
            case Op::Sum:
                grad_of(n.a).array() += g(0, 0);
                break;
            case Op::HuberSum: {
                const Mat& p = nodes_[static_cast<size_t>(n.a)].val;
                double s = g(0, 0);
                Mat r = p - n.aux;
                grad_of(n.a).array() += s * r.array().min(1.0).max(-1.0);
                break;
            }
            case Op::GaussNll: {
                const Mat& m = nodes_[static_cast<size_t>(n.a)].val;
                const Mat& v = nodes_[static_cast<size_t>(n.b)].val;
                double s = g(0, 0);
                Mat& gm = grad_of(n.a);
                Mat& gv = grad_of(n.b);
                for (Eigen::Index j = 0; j < m.cols(); ++j)
                    for (Eigen::Index i = 0; i < m.rows(); ++i) {
                        double ve = std::max(v(i, j), n.c);
                        double r = n.aux(i, j) - m(i, j);
                        gm(i, j) += s * (-r / ve);
                        if (v(i, j) > n.c) gv(i, j) += s * 0.5 * (1.0 / ve - r * r / (ve * ve));
                    }
                break;
            }
        }
    }
    return pgrad;
}

Vec grad(const std::function<Tape::Var(Tape&)>& build_loss, const NetArch& arch, const Vec& at) {
    Tape tape(arch, at);
    Tape::Var loss = build_loss(tape);
    return tape.grad_params(loss);
}

}  // namespace rbnn
