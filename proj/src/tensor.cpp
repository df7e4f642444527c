#include "wdm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "wdm/errors.hpp"

namespace wdm {

namespace {

thread_local bool g_grad_enabled = true;

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) {
        if (e == 0) throw DimensionError("tensor extents must be positive");
        n *= e;
    }
    return n;
}

std::string shape_str(const std::vector<std::size_t>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

double sigmoid(double x) {
    return 1.0 / (1.0 + std::exp(-x));
}

}  // namespace

bool grad_enabled() {
    return g_grad_enabled;
}

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) {
    g_grad_enabled = false;
}

NoGradGuard::~NoGradGuard() {
    g_grad_enabled = prev_;
}

namespace detail {

void Node::ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
}

}  // namespace detail

using detail::Node;

// Internal bridge so free operations can mint tensors from nodes.
class OpBuilder {
public:
    static Tensor wrap(std::shared_ptr<Node> n) { return Tensor(std::move(n)); }
};

namespace {

Tensor make_op(std::vector<std::size_t> shape, std::vector<double> values,
               std::vector<std::shared_ptr<Node>> parents,
               std::function<void(Node&)> backprop) {
    auto out = std::make_shared<Node>();
    out->shape = std::move(shape);
    out->values = std::move(values);
    bool needs = false;
    if (g_grad_enabled) {
        for (const auto& p : parents)
            if (p->requires_grad) needs = true;
    }
    if (needs) {
        out->requires_grad = true;
        out->is_leaf = false;
        out->parents = std::move(parents);
        out->backprop = std::move(backprop);
    }
    return OpBuilder::wrap(out);
}

}  // namespace

Tensor::Tensor() : n_(std::make_shared<Node>()) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data, bool requires_grad)
    : n_(std::make_shared<Node>()) {
    if (shape_product(shape) != data.size())
        throw DimensionError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
    n_->shape = std::move(shape);
    n_->values = std::move(data);
    n_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
    std::size_t n = shape_product(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v, bool requires_grad) {
    std::size_t n = shape_product(shape);
    return Tensor(std::move(shape), std::vector<double>(n, v), requires_grad);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return Tensor({1}, {v}, requires_grad);
}

Tensor Tensor::from_vector(std::vector<double> v, bool requires_grad) {
    std::size_t n = v.size();
    return Tensor({n}, std::move(v), requires_grad);
}

const std::vector<std::size_t>& Tensor::shape() const { return n_->shape; }
std::size_t Tensor::size() const { return n_->values.size(); }
std::size_t Tensor::rank() const { return n_->shape.size(); }

std::size_t Tensor::rows() const {
    if (rank() != 2) throw DimensionError("rows(): tensor is not rank-2");
    return n_->shape[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw DimensionError("cols(): tensor is not rank-2");
    return n_->shape[1];
}

double Tensor::value() const {
    if (size() != 1) throw ContractError("value(): tensor is not a scalar");
    return n_->values[0];
}

double Tensor::at(std::size_t i) const { return n_->values.at(i); }

double Tensor::at(std::size_t r, std::size_t c) const {
    return n_->values.at(r * cols() + c);
}

std::span<const double> Tensor::data() const { return n_->values; }

std::span<double> Tensor::mutable_data() {
    if (!n_->is_leaf)
        throw ContractError("mutable_data(): only leaf tensors may be mutated");
    return n_->values;
}

bool Tensor::requires_grad() const { return n_->requires_grad; }

void Tensor::set_requires_grad(bool rg) {
    if (!n_->is_leaf) throw ContractError("set_requires_grad: non-leaf tensor");
    n_->requires_grad = rg;
}

bool Tensor::has_grad() const { return n_->grad.size() == n_->values.size(); }

std::span<const double> Tensor::grad() const {
    if (!has_grad())
        throw ContractError("grad(): no gradient present; call backward() first");
    return n_->grad;
}

void Tensor::zero_grad() {
    n_->grad.assign(n_->values.size(), 0.0);
}

Tensor Tensor::clone() const {
    return Tensor(n_->shape, n_->values, n_->requires_grad);
}

Tensor Tensor::reshape(std::vector<std::size_t> new_shape) const {
    if (shape_product(new_shape) != size())
        throw DimensionError("reshape: element count mismatch");
    return make_op(std::move(new_shape), n_->values, {n_}, [](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
    });
}

bool Tensor::all_finite() const {
    return std::all_of(n_->values.begin(), n_->values.end(),
                       [](double v) { return std::isfinite(v); });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw DimensionError("matmul: both operands must be rank-2");
    std::size_t m = a.rows(), k = a.cols(), k2 = b.rows(), n = b.cols();
    if (k != k2)
        throw DimensionError("matmul: inner dimensions disagree (" + std::to_string(k) +
                             " vs " + std::to_string(k2) + ")");
    const auto& av = a.node()->values;
    const auto& bv = b.node()->values;
    std::vector<double> cv(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = &av[i * k];
        double* crow = &cv[i * n];
        for (std::size_t p = 0; p < k; ++p) {
            double aip = arow[p];
            const double* brow = &bv[p * n];
            for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
    return make_op({m, n}, std::move(cv), {a.node(), b.node()}, [m, k, n](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        const auto& g = self.grad;
        if (pa.requires_grad) {
            pa.ensure_grad();
            // dA = dC * B^T
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = &g[i * n];
                double* garow = &pa.grad[i * k];
                for (std::size_t p = 0; p < k; ++p) {
                    const double* brow = &pb.values[p * n];
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                    garow[p] += acc;
                }
            }
        }
        if (pb.requires_grad) {
            pb.ensure_grad();
            // dB = A^T * dC
            for (std::size_t i = 0; i < m; ++i) {
                const double* arow = &pa.values[i * k];
                const double* grow = &g[i * n];
                for (std::size_t p = 0; p < k; ++p) {
                    double aip = arow[p];
                    if (aip == 0.0) continue;
                    double* gbrow = &pb.grad[p * n];
                    for (std::size_t j = 0; j < n; ++j) gbrow[j] += aip * grow[j];
                }
            }
        }
    });
}

Tensor elementwise(const Tensor& a, const Tensor& b, EwOp op) {
    bool scalar_b = (b.size() == 1 && a.size() != 1);
    if (!scalar_b && a.shape() != b.shape())
        throw DimensionError("elementwise: shapes " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()) + " are incompatible");
    const auto& av = a.node()->values;
    const auto& bv = b.node()->values;
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double bi = scalar_b ? bv[0] : bv[i];
        switch (op) {
            case EwOp::Add: out[i] = av[i] + bi; break;
            case EwOp::Sub: out[i] = av[i] - bi; break;
            case EwOp::Mul: out[i] = av[i] * bi; break;
        }
    }
    return make_op(a.shape(), std::move(out), {a.node(), b.node()},
                   [op, scalar_b](Node& self) {
                       Node& pa = *self.parents[0];
                       Node& pb = *self.parents[1];
                       const auto& g = self.grad;
                       if (pa.requires_grad) {
                           pa.ensure_grad();
                           for (std::size_t i = 0; i < g.size(); ++i) {
                               double bi = scalar_b ? pb.values[0] : pb.values[i];
                               switch (op) {
                                   case EwOp::Add:
                                   case EwOp::Sub: pa.grad[i] += g[i]; break;
                                   case EwOp::Mul: pa.grad[i] += g[i] * bi; break;
                               }
                           }
                       }
                       if (pb.requires_grad) {
                           pb.ensure_grad();
                           for (std::size_t i = 0; i < g.size(); ++i) {
                               std::size_t bi = scalar_b ? 0 : i;
                               switch (op) {
                                   case EwOp::Add: pb.grad[bi] += g[i]; break;
                                   case EwOp::Sub: pb.grad[bi] -= g[i]; break;
                                   case EwOp::Mul: pb.grad[bi] += g[i] * pa.values[i]; break;
                               }
                           }
                       }
                   });
}

Tensor add(const Tensor& a, const Tensor& b) { return elementwise(a, b, EwOp::Add); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(a, b, EwOp::Sub); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(a, b, EwOp::Mul); }
Tensor add(const Tensor& a, double b) { return add(a, Tensor::scalar(b)); }
Tensor mul(const Tensor& a, double b) { return mul(a, Tensor::scalar(b)); }

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
    if (m.rank() != 2 || v.rank() != 1)
        throw DimensionError("add_rowvec: expects [n,k] matrix and [k] vector");
    std::size_t rows = m.rows(), k = m.cols();
    if (v.size() != k)
        throw DimensionError("add_rowvec: vector length does not match matrix columns");
    const auto& mv = m.node()->values;
    const auto& vv = v.node()->values;
    std::vector<double> out(mv.size());
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < k; ++j) out[i * k + j] = mv[i * k + j] + vv[j];
    return make_op(m.shape(), std::move(out), {m.node(), v.node()}, [rows, k](Node& self) {
        Node& pm = *self.parents[0];
        Node& pv = *self.parents[1];
        const auto& g = self.grad;
        if (pm.requires_grad) {
            pm.ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) pm.grad[i] += g[i];
        }
        if (pv.requires_grad) {
            pv.ensure_grad();
            for (std::size_t i = 0; i < rows; ++i)
                for (std::size_t j = 0; j < k; ++j) pv.grad[j] += g[i * k + j];
        }
    });
}

Tensor silu(const Tensor& x) {
    const auto& xv = x.node()->values;
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * sigmoid(xv[i]);
    return make_op(x.shape(), std::move(out), {x.node()}, [](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            double s = sigmoid(p.values[i]);
            p.grad[i] += self.grad[i] * s * (1.0 + p.values[i] * (1.0 - s));
        }
    });
}

Tensor sum(const Tensor& x) {
    double acc = 0.0;
    for (double v : x.node()->values) acc += v;
    return make_op({1}, {acc}, {x.node()}, [](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        p.ensure_grad();
        double g = self.grad[0];
        for (auto& gi : p.grad) gi += g;
    });
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape())
        throw DimensionError("mse_loss: shape mismatch " + shape_str(pred.shape()) +
                             " vs " + shape_str(target.shape()));
    const auto& pv = pred.node()->values;
    const auto& tv = target.node()->values;
    double acc = 0.0;
    for (std::size_t i = 0; i < pv.size(); ++i) {
        double d = pv[i] - tv[i];
        acc += d * d;
    }
    double n = static_cast<double>(pv.size());
    return make_op({1}, {acc / n}, {pred.node(), target.node()}, [n](Node& self) {
        Node& pp = *self.parents[0];
        Node& pt = *self.parents[1];
        double g = self.grad[0] * 2.0 / n;
        if (pp.requires_grad) {
            pp.ensure_grad();
            for (std::size_t i = 0; i < pp.values.size(); ++i)
                pp.grad[i] += g * (pp.values[i] - pt.values[i]);
        }
        if (pt.requires_grad) {
            pt.ensure_grad();
            for (std::size_t i = 0; i < pt.values.size(); ++i)
                pt.grad[i] -= g * (pp.values[i] - pt.values[i]);
        }
    });
}

void backward(const Tensor& loss) {
    auto root = loss.node();
    if (root->size() != 1)
        throw ContractError("backward: loss must be a scalar");
    if (!root->requires_grad)
        throw ContractError("backward: loss is detached from any differentiable leaf");

    // Post-order DFS yields a topological order of the recorded graph.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* parent = node->parents[idx].get();
            ++idx;
            if (parent->requires_grad && !visited.count(parent)) {
                visited.insert(parent);
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root->ensure_grad();
    root->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (node->backprop) {
            node->ensure_grad();
            node->backprop(*node);
        }
    }
    // Free interior grads and release the tape; leaves keep accumulated grads.
    for (Node* node : order) {
        if (!node->is_leaf) {
            node->grad.clear();
            node->backprop = nullptr;
            node->parents.clear();
        }
    }
}

AdamState AdamState::init(const std::vector<Tensor>& params) {
    AdamState s;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const auto& p : params) {
        s.m.emplace_back(p.size(), 0.0);
        s.v.emplace_back(p.size(), 0.0);
    }
    return s;
}

void adam_step(std::vector<Tensor>& params, const std::vector<std::string>& names,
               AdamState& state, double lr) {
    if (params.size() != state.m.size() || params.size() != names.size())
        throw ContractError("adam_step: state/name arity does not match parameters");
    state.step += 1;
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto g = params[pi].grad();
        if (g.size() != state.m[pi].size())
            throw ContractError("adam_step: accumulator shape mismatch for " + names[pi]);
        auto w = params[pi].mutable_data();
        auto& m = state.m[pi];
        auto& v = state.v[pi];
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!std::isfinite(g[i]))
                throw NumericError("adam_step: non-finite gradient in parameter " + names[pi]);
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            w[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

}  // namespace wdm
