#include "wdm/denoiser.hpp"

#include <cmath>

#include "wdm/errors.hpp"
#include "wdm/rng.hpp"

namespace wdm {

namespace {

std::vector<double> raw_time_embed(int t, std::size_t d_emb) {
    std::size_t half = d_emb / 2;
    std::vector<double> e(d_emb);
    for (std::size_t k = 0; k < half; ++k) {
        double expo = (half == 1) ? 0.0
                                  : static_cast<double>(k) / static_cast<double>(half - 1);
        double omega = std::pow(10000.0, expo);
        double phase = static_cast<double>(t) / omega;
        e[2 * k] = std::sin(phase);
        e[2 * k + 1] = std::cos(phase);
    }
    return e;
}

void validate_arch(const Arch& arch) {
    if (arch.input_dim == 0) throw ParameterError("arch: input_dim must be positive");
    if (arch.hidden.empty()) throw ParameterError("arch: need at least one hidden layer");
    for (std::size_t h : arch.hidden)
        if (h == 0) throw ParameterError("arch: hidden widths must be positive");
    if (arch.time_embed_dim == 0 || arch.time_embed_dim % 2 != 0)
        throw ParameterError("arch: time_embed_dim must be even and positive");
}

}  // namespace

std::size_t Arch::param_count() const {
    std::size_t n = 0;
    std::size_t prev = input_dim;
    for (std::size_t h : hidden) {
        n += prev * h + h;                  // dense layer
        n += time_embed_dim * h + h;        // per-layer embedding projection
        prev = h;
    }
    n += prev * input_dim + input_dim;      // output layer
    return n;
}

Tensor time_embed(int t, std::size_t d_emb, int T) {
    if (d_emb == 0 || d_emb % 2 != 0)
        throw ParameterError("time_embed: d_emb must be even and positive");
    if (t < 1 || t > T)
        throw ParameterError("time_embed: t outside [1, T]");
    return Tensor::from_vector(raw_time_embed(t, d_emb));
}

DenoiserModel DenoiserModel::init(const Arch& arch, std::uint64_t seed) {
    validate_arch(arch);
    DenoiserModel m;
    m.arch_ = arch;
    Rng rng(seed);
    auto he_uniform = [&](std::size_t fan_in, std::size_t fan_out) {
        double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        std::vector<double> w(fan_in * fan_out);
        for (auto& x : w) x = rng.uniform(-bound, bound);
        return Tensor({fan_in, fan_out}, std::move(w), true);
    };
    std::size_t prev = arch.input_dim;
    for (std::size_t li = 0; li < arch.hidden.size(); ++li) {
        std::size_t h = arch.hidden[li];
        m.params_.push_back(he_uniform(prev, h));
        m.names_.push_back("w" + std::to_string(li));
        m.params_.push_back(Tensor::zeros({h}, true));
        m.names_.push_back("b" + std::to_string(li));
        // Step conditioning feeds every hidden layer.
        m.params_.push_back(he_uniform(arch.time_embed_dim, h));
        m.names_.push_back("t_proj" + std::to_string(li));
        m.params_.push_back(Tensor::zeros({h}, true));
        m.names_.push_back("t_bias" + std::to_string(li));
        prev = h;
    }
    m.params_.push_back(he_uniform(prev, arch.input_dim));
    m.names_.push_back("w_out");
    m.params_.push_back(Tensor::zeros({arch.input_dim}, true));
    m.names_.push_back("b_out");
    return m;
}

DenoiserModel DenoiserModel::from_flat(const Arch& arch, const std::vector<double>& flat) {
    if (flat.size() != arch.param_count())
        throw DimensionError("from_flat: parameter count " + std::to_string(flat.size()) +
                             " does not match architecture (" +
                             std::to_string(arch.param_count()) + ")");
    DenoiserModel m = init(arch, 0);
    std::size_t off = 0;
    for (auto& p : m.params_) {
        auto w = p.mutable_data();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = flat[off + i];
        off += w.size();
    }
    return m;
}

std::size_t DenoiserModel::param_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
}

std::vector<double> DenoiserModel::flat_params() const {
    std::vector<double> out;
    out.reserve(param_count());
    for (const auto& p : params_)
        out.insert(out.end(), p.data().begin(), p.data().end());
    return out;
}

DenoiserModel DenoiserModel::clone() const {
    DenoiserModel m;
    m.arch_ = arch_;
    m.names_ = names_;
    m.params_.reserve(params_.size());
    for (const auto& p : params_) m.params_.push_back(p.clone());
    return m;
}

void DenoiserModel::zero_grads() {
    for (auto& p : params_) p.zero_grad();
}

Tensor DenoiserModel::forward(const Tensor& x_in, int t) const {
    if (params_.empty()) throw ContractError("forward: uninitialized model");
    if (t < 1) throw ParameterError("forward: t must be >= 1");
    Tensor x = x_in;
    bool vector_input = (x.rank() == 1);
    if (vector_input) x = x.reshape({1, x.size()});
    if (x.rank() != 2 || x.cols() != arch_.input_dim)
        throw DimensionError("forward: input dimension does not match architecture");

    std::size_t n_hidden = arch_.hidden.size();
    Tensor emb = Tensor::from_vector(raw_time_embed(t, arch_.time_embed_dim))
                     .reshape({1, arch_.time_embed_dim});
    Tensor h = x;
    for (std::size_t li = 0; li < n_hidden; ++li) {
        const Tensor& w = params_[4 * li];
        const Tensor& b = params_[4 * li + 1];
        const Tensor& t_proj = params_[4 * li + 2];
        const Tensor& t_bias = params_[4 * li + 3];
        Tensor te = add(matmul(emb, t_proj).reshape({arch_.hidden[li]}), t_bias);
        h = silu(add_rowvec(add_rowvec(matmul(h, w), b), te));
    }
    Tensor out = add_rowvec(matmul(h, params_[4 * n_hidden]), params_[4 * n_hidden + 1]);
    if (vector_input) out = out.reshape({arch_.input_dim});
    return out;
}

Tensor predict_noise(const DenoiserModel& model, const Tensor& x_in, int t) {
    return model.forward(x_in, t);
}

}  // namespace wdm
