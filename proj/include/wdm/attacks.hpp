#ifndef WDM_ATTACKS_HPP
#define WDM_ATTACKS_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "wdm/dataset.hpp"
#include "wdm/denoiser.hpp"
#include "wdm/schedule.hpp"
#include "wdm/train.hpp"

namespace wdm {

// IEEE-754 binary16 conversion, round-to-nearest-even. Values beyond the
// half range saturate to +-65504 and set *saturated.
std::uint16_t f16_from_f32(float f, bool* saturated = nullptr);
float f32_from_f16(std::uint16_t h);

struct QuantizeResult {
    DenoiserModel model;
    std::size_t saturated = 0;  // parameters clamped to the half-range limit
};

// Round-trips every parameter through binary16. Idempotent; the input
// model is never mutated.
QuantizeResult quantize_weights(const DenoiserModel& model);

// Adds independent N(0, std^2) noise to every parameter, deterministic
// per seed.
DenoiserModel perturb_weights(const DenoiserModel& model, double std, std::uint64_t seed);

struct FinetuneResult {
    DenoiserModel model;
    // (epoch, model copy) pairs captured at each snapshot interval.
    std::vector<std::pair<int, DenoiserModel>> snapshots;
    std::vector<double> loss_trace;
};

// Fine-tunes all layers with the plain task loss only; the watermark
// never enters (it is not a parameter). Snapshots are captured every
// snapshot_interval epochs (<= 0 means epochs/10, at least 1).
FinetuneResult finetune_attack(const DenoiserModel& model, const Dataset& task_ds,
                               const NoiseSchedule& sched, const TrainConfig& cfg,
                               int snapshot_interval = 0);

}  // namespace wdm

#endif
