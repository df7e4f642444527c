#ifndef WDM_TENSOR_HPP
#define WDM_TENSOR_HPP

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace wdm {

// Thread-local switch controlling whether operations record the backward
// graph. Inference paths (sampling, extraction) run with it off.
bool grad_enabled();

class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

namespace detail {

struct Node {
    std::vector<std::size_t> shape;
    std::vector<double> values;
    std::vector<double> grad;  // allocated lazily, same length as values
    bool requires_grad = false;
    bool is_leaf = true;
    std::vector<std::shared_ptr<Node>> parents;
    // Pulls this node's grad and pushes contributions into the parents.
    std::function<void(Node&)> backprop;

    std::size_t size() const { return values.size(); }
    void ensure_grad();
};

}  // namespace detail

// Dense n-dimensional array of 64-bit reals with optional reverse-mode
// gradient. Copies share the underlying storage (handle semantics);
// use clone() for an independent copy.
class Tensor {
public:
    Tensor();
    Tensor(std::vector<std::size_t> shape, std::vector<double> data,
           bool requires_grad = false);

    static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
    static Tensor full(std::vector<std::size_t> shape, double v, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);
    static Tensor from_vector(std::vector<double> v, bool requires_grad = false);

    const std::vector<std::size_t>& shape() const;
    std::size_t size() const;
    std::size_t rank() const;
    // Rank-2 accessors.
    std::size_t rows() const;
    std::size_t cols() const;

    double value() const;  // scalar tensors only
    double at(std::size_t i) const;
    double at(std::size_t r, std::size_t c) const;

    std::span<const double> data() const;
    // Direct mutation; only valid for leaves (optimizer updates, loading).
    std::span<double> mutable_data();

    bool requires_grad() const;
    void set_requires_grad(bool rg);
    bool has_grad() const;
    std::span<const double> grad() const;
    void zero_grad();

    // Deep copy of values; the clone is a fresh leaf.
    Tensor clone() const;
    // Same values viewed under a different shape (copying, grad flows back).
    Tensor reshape(std::vector<std::size_t> new_shape) const;

    bool all_finite() const;

    friend void backward(const Tensor& loss);
    friend class OpBuilder;

    std::shared_ptr<detail::Node> node() const { return n_; }

private:
    explicit Tensor(std::shared_ptr<detail::Node> n) : n_(std::move(n)) {}
    std::shared_ptr<detail::Node> n_;
};

enum class EwOp { Add, Sub, Mul };

// Matrix product of two rank-2 tensors.
Tensor matmul(const Tensor& a, const Tensor& b);

// Elementwise add/sub/mul; b may be a scalar tensor (broadcast).
Tensor elementwise(const Tensor& a, const Tensor& b, EwOp op);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double b);
Tensor mul(const Tensor& a, double b);

// Adds a length-k vector to every row of an [n, k] matrix.
Tensor add_rowvec(const Tensor& m, const Tensor& v);

Tensor silu(const Tensor& x);
Tensor sum(const Tensor& x);

// Mean of squared element differences; differentiable.
Tensor mse_loss(const Tensor& pred, const Tensor& target);

// Populates grads on all requires_grad leaves reachable from loss.
// Grads accumulate across calls; callers zero them between steps.
void backward(const Tensor& loss);

// Adam optimizer state. Accumulator shapes mirror the tracked parameters.
struct AdamState {
    std::vector<std::vector<double>> m;  // first moments
    std::vector<std::vector<double>> v;  // second moments
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState init(const std::vector<Tensor>& params);
};

// One Adam update with bias correction. Gradients are read from the
// parameters themselves; throws NumericError naming the parameter if a
// gradient is non-finite.
void adam_step(std::vector<Tensor>& params, const std::vector<std::string>& names,
               AdamState& state, double lr);

}  // namespace wdm

#endif
