#ifndef WDM_TRAIN_HPP
#define WDM_TRAIN_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "wdm/dataset.hpp"
#include "wdm/denoiser.hpp"
#include "wdm/schedule.hpp"
#include "wdm/tensor.hpp"

namespace wdm {

struct TrainConfig {
    int epochs = 1;
    int batch_size = 32;
    int task_per_batch = 16;  // task/watermark split; must sum to batch_size
    int wm_per_batch = 16;
    double lr = 1e-3;
    double gamma1 = 0.8;  // trigger factor
    double gamma2 = 1.0;  // task-loss weight
    std::uint64_t seed = 0;

    void validate() const;
};

enum class WatermarkMode { SingleSample, MultiSample };

struct WatermarkSpec {
    Tensor trigger;
    double gamma1 = 0.8;
    Dataset wm_data;
    WatermarkMode mode = WatermarkMode::SingleSample;

    void validate(std::size_t data_dim) const;
};

// Joint embedding objective:
// gamma2 * mse(pred_task, eps) + mse(pred_wm, eps_w)
// with the squared norms realized as element means.
Tensor wdp_loss(const Tensor& eps, const Tensor& eps_w, const Tensor& pred_task,
                const Tensor& pred_wm, double gamma2);

struct TrainResult {
    DenoiserModel model;
    std::vector<double> loss_trace;  // per-iteration loss values
};

using EpochCallback = std::function<void(int epoch, const DenoiserModel& model)>;

// Standard denoising trainer: per iteration draws a batch of task samples,
// one shared step t, fresh noise, and minimizes the plain prediction error.
// The input model is not mutated; a trained copy is returned. The optional
// callback fires after every completed epoch (used for attack snapshots).
TrainResult train_baseline(const DenoiserModel& model, const Dataset& task_ds,
                           const NoiseSchedule& sched, const TrainConfig& cfg,
                           const EpochCallback& on_epoch_end = nullptr);

// Joint trainer: per iteration draws a task batch and a watermark batch,
// one shared t, independent noises; the watermark branch trains on the
// trigger-mixed state. Works for fresh models (train-from-scratch) and
// pretrained ones (fine-tune).
//
// Task-side draws come from a stream separate from the watermark-side
// draws, so with mask_watermark_term the task trajectory is bit-identical
// to train_baseline on the same seed (the watermark draws are still
// consumed). The mask exists for that contract test only.
TrainResult embed_watermark(const DenoiserModel& model, const Dataset& task_ds,
                            const WatermarkSpec& wm, const NoiseSchedule& sched,
                            const TrainConfig& cfg, bool mask_watermark_term = false);

}  // namespace wdm

#endif
