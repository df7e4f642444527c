#ifndef WDM_SAMPLER_HPP
#define WDM_SAMPLER_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "wdm/denoiser.hpp"
#include "wdm/schedule.hpp"
#include "wdm/train.hpp"

namespace wdm {

// Predicts the reverse noise for a [n, d] state batch at step t.
using NoisePredictor = std::function<Tensor(const Tensor& batch, int t)>;

// Ancestral sampling of n chains from pure noise under an arbitrary noise
// predictor. Each chain owns an independent (seed, chain-index) draw stream,
// so results do not depend on batching. z = 0 at the final step.
std::vector<Tensor> ancestral_sample(const NoisePredictor& predict, std::size_t dim,
                                     const NoiseSchedule& sched, int n,
                                     std::uint64_t seed);

std::vector<Tensor> sample_task(const DenoiserModel& model, const NoiseSchedule& sched,
                                int n, std::uint64_t seed);

// Watermark extraction: identical chain evolution, but the model sees the
// trigger-mixed state gamma1 * x_t + (1 - gamma1) * b while the evolving
// state itself stays raw. With gamma1 = 1 this reduces to sample_task
// bit-for-bit on shared seeds.
std::vector<Tensor> extract_watermark(const DenoiserModel& model, const WatermarkSpec& wm,
                                      const NoiseSchedule& sched, int n,
                                      std::uint64_t seed);

}  // namespace wdm

#endif
