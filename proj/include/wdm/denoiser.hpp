#ifndef WDM_DENOISER_HPP
#define WDM_DENOISER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "wdm/tensor.hpp"

namespace wdm {

struct Arch {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden;
    std::size_t time_embed_dim = 16;

    std::size_t param_count() const;
    bool operator==(const Arch&) const = default;
};

// Sinusoidal step embedding: interleaved (sin(t/w_k), cos(t/w_k)) pairs with
// d_emb/2 geometric frequencies w_k spanning [1, 10000].
Tensor time_embed(int t, std::size_t d_emb, int T);

// Noise predictor: an MLP with SiLU activations whose output matches the
// input shape. The step embedding passes through a learned projection and
// is added to the first hidden pre-activation.
class DenoiserModel {
public:
    DenoiserModel() = default;

    // He-style fan-in scaled uniform init, reproducible per seed.
    static DenoiserModel init(const Arch& arch, std::uint64_t seed);

    // Rebuilds a model around an existing flat parameter vector (checkpoint
    // loading). The vector length must equal arch.param_count().
    static DenoiserModel from_flat(const Arch& arch, const std::vector<double>& flat);

    const Arch& arch() const { return arch_; }
    std::vector<Tensor>& params() { return params_; }
    const std::vector<Tensor>& params() const { return params_; }
    const std::vector<std::string>& param_names() const { return names_; }

    std::size_t param_count() const;
    std::vector<double> flat_params() const;

    // Independent deep copy.
    DenoiserModel clone() const;

    void zero_grads();

    // Forward pass on a [n, d] batch (or a [d] vector) at step t; all rows
    // share the same t. Differentiable w.r.t. the parameters.
    Tensor forward(const Tensor& x_in, int t) const;

private:
    Arch arch_;
    std::vector<Tensor> params_;
    std::vector<std::string> names_;
};

// Predicted noise for x_in at step t; output shape equals input shape.
Tensor predict_noise(const DenoiserModel& model, const Tensor& x_in, int t);

}  // namespace wdm

#endif
