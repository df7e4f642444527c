#include "wdm/sampler.hpp"

#include <cmath>

#include "wdm/errors.hpp"
#include "wdm/rng.hpp"

namespace wdm {

namespace {

// Chain streams start after the training streams to keep seed spaces apart.
constexpr std::uint64_t kChainStreamBase = 16;

}  // namespace

std::vector<Tensor> ancestral_sample(const NoisePredictor& predict, std::size_t dim,
                                     const NoiseSchedule& sched, int n,
                                     std::uint64_t seed) {
    if (n < 1) throw ParameterError("sampling: n must be >= 1");
    NoGradGuard ng;

    std::vector<Rng> chains;
    chains.reserve(n);
    for (int i = 0; i < n; ++i)
        chains.push_back(Rng::stream(seed, kChainStreamBase + static_cast<std::uint64_t>(i)));

    std::vector<double> state(static_cast<std::size_t>(n) * dim);
    for (int i = 0; i < n; ++i) {
        auto v = chains[i].normal_vec(dim);
        std::copy(v.begin(), v.end(), state.begin() + static_cast<std::size_t>(i) * dim);
    }
    Tensor x({static_cast<std::size_t>(n), dim}, state);

    std::vector<double> zbuf(static_cast<std::size_t>(n) * dim);
    for (int t = sched.T; t >= 1; --t) {
        Tensor eps_hat = predict(x, t);
        if (eps_hat.shape() != x.shape())
            throw DimensionError("sampling: predictor output shape mismatch");
        if (t > 1) {
            for (int i = 0; i < n; ++i) {
                auto v = chains[i].normal_vec(dim);
                std::copy(v.begin(), v.end(),
                          zbuf.begin() + static_cast<std::size_t>(i) * dim);
            }
        } else {
            std::fill(zbuf.begin(), zbuf.end(), 0.0);
        }
        Tensor z({static_cast<std::size_t>(n), dim}, zbuf);
        x = reverse_step(x, eps_hat, t, sched, z);
        if (!x.all_finite())
            throw NumericError("sampling: non-finite state at t = " + std::to_string(t));
    }

    std::vector<Tensor> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        auto row = x.data().subspan(static_cast<std::size_t>(i) * dim, dim);
        out.emplace_back(Tensor::from_vector({row.begin(), row.end()}));
    }
    return out;
}

std::vector<Tensor> sample_task(const DenoiserModel& model, const NoiseSchedule& sched,
                                int n, std::uint64_t seed) {
    return ancestral_sample(
        [&model](const Tensor& x, int t) { return model.forward(x, t); },
        model.arch().input_dim, sched, n, seed);
}

std::vector<Tensor> extract_watermark(const DenoiserModel& model, const WatermarkSpec& wm,
                                      const NoiseSchedule& sched, int n,
                                      std::uint64_t seed) {
    std::size_t d = model.arch().input_dim;
    if (wm.trigger.size() != d)
        throw DimensionError("extract_watermark: trigger dim does not match model input");
    double g1 = wm.gamma1;
    if (!(g1 > 0.0 && g1 <= 1.0))
        throw ParameterError("extract_watermark: gamma1 must lie in (0,1]");
    if (g1 == 1.0)
        return sample_task(model, sched, n, seed);
    auto bv = wm.trigger.data();
    // The trigger mix feeds only the model; the chain state stays raw.
    auto predict = [&model, g1, bv, d](const Tensor& x, int t) {
        std::size_t rows = x.rows();
        std::vector<double> mixed(rows * d);
        auto xv = x.data();
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < d; ++j)
                mixed[i * d + j] = g1 * xv[i * d + j] + (1.0 - g1) * bv[j];
        return model.forward(Tensor({rows, d}, std::move(mixed)), t);
    };
    return ancestral_sample(predict, d, sched, n, seed);
}

}  // namespace wdm
