#include "wdm/train.hpp"

#include <cmath>

#include "wdm/errors.hpp"
#include "wdm/rng.hpp"

namespace wdm {

namespace {

// Stream ids for the two independent draw sequences of one training run.
constexpr std::uint64_t kTaskStream = 0;
constexpr std::uint64_t kWatermarkStream = 1;

Tensor draw_batch(const Dataset& ds, int n, Rng& rng) {
    std::size_t d = ds.dim();
    std::vector<double> flat(static_cast<std::size_t>(n) * d);
    for (int i = 0; i < n; ++i) {
        std::size_t idx = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(ds.size()) - 1));
        const auto& s = ds.samples[idx];
        std::copy(s.begin(), s.end(), flat.begin() + static_cast<std::size_t>(i) * d);
    }
    return Tensor({static_cast<std::size_t>(n), d}, std::move(flat));
}

Tensor draw_noise(int n, std::size_t d, Rng& rng) {
    return Tensor({static_cast<std::size_t>(n), d},
                  rng.normal_vec(static_cast<std::size_t>(n) * d));
}

Tensor replicate_rows(const Tensor& v, int n) {
    std::size_t d = v.size();
    std::vector<double> flat(static_cast<std::size_t>(n) * d);
    auto src = v.data();
    for (int i = 0; i < n; ++i)
        std::copy(src.begin(), src.end(), flat.begin() + static_cast<std::size_t>(i) * d);
    return Tensor({static_cast<std::size_t>(n), d}, std::move(flat));
}

int iters_per_epoch(std::size_t dataset_size, int task_draws_per_iter) {
    return static_cast<int>(
        (dataset_size + static_cast<std::size_t>(task_draws_per_iter) - 1) /
        static_cast<std::size_t>(task_draws_per_iter));
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs < 0) throw ParameterError("train: epochs must be >= 0");
    if (batch_size < 1) throw ParameterError("train: batch_size must be >= 1");
    if (task_per_batch < 1 || wm_per_batch < 0 ||
        task_per_batch + wm_per_batch != batch_size)
        throw ParameterError("train: task/watermark split must sum to batch_size");
    if (!(lr > 0.0)) throw ParameterError("train: lr must be positive");
    if (!(gamma1 > 0.0 && gamma1 < 1.0))
        throw ParameterError("train: gamma1 must lie in (0,1)");
    if (!(gamma2 > 0.0)) throw ParameterError("train: gamma2 must be positive");
}

void WatermarkSpec::validate(std::size_t data_dim) const {
    if (trigger.size() != data_dim)
        throw DimensionError("watermark: trigger shape does not match data shape");
    if (wm_data.size() == 0) throw ParameterError("watermark: dataset is empty");
    if (wm_data.dim() != data_dim)
        throw DimensionError("watermark: sample shape does not match data shape");
    if (mode == WatermarkMode::SingleSample && wm_data.size() != 1)
        throw ParameterError("watermark: single-sample mode requires exactly one sample");
}

Tensor wdp_loss(const Tensor& eps, const Tensor& eps_w, const Tensor& pred_task,
                const Tensor& pred_wm, double gamma2) {
    return add(mul(mse_loss(pred_task, eps), gamma2), mse_loss(pred_wm, eps_w));
}

TrainResult train_baseline(const DenoiserModel& model, const Dataset& task_ds,
                           const NoiseSchedule& sched, const TrainConfig& cfg,
                           const EpochCallback& on_epoch_end) {
    cfg.validate();
    if (task_ds.size() == 0) throw ParameterError("train_baseline: dataset is empty");
    if (task_ds.dim() != model.arch().input_dim)
        throw DimensionError("train_baseline: data dim does not match model input dim");

    TrainResult res;
    res.model = model.clone();
    Rng task_rng = Rng::stream(cfg.seed, kTaskStream);
    AdamState opt = AdamState::init(res.model.params());

    int n = cfg.batch_size;
    std::size_t d = task_ds.dim();
    int per_epoch = iters_per_epoch(task_ds.size(), n);
    res.loss_trace.reserve(static_cast<std::size_t>(cfg.epochs) * per_epoch);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        for (int it = 0; it < per_epoch; ++it) {
            Tensor x0 = draw_batch(task_ds, n, task_rng);
            int t = static_cast<int>(task_rng.uniform_int(1, sched.T));
            Tensor eps = draw_noise(n, d, task_rng);
            Tensor xt = forward_sample(x0, t, eps, sched);

            res.model.zero_grads();
            Tensor pred = res.model.forward(xt, t);
            Tensor loss = mse_loss(pred, eps);
            double lv = loss.value();
            if (!std::isfinite(lv))
                throw NumericError("train_baseline: non-finite loss in epoch " +
                                   std::to_string(epoch));
            backward(loss);
            adam_step(res.model.params(), res.model.param_names(), opt, cfg.lr);
            res.loss_trace.push_back(lv);
        }
        if (on_epoch_end) on_epoch_end(epoch, res.model);
    }
    return res;
}

TrainResult embed_watermark(const DenoiserModel& model, const Dataset& task_ds,
                            const WatermarkSpec& wm, const NoiseSchedule& sched,
                            const TrainConfig& cfg, bool mask_watermark_term) {
    cfg.validate();
    if (cfg.wm_per_batch < 1)
        throw ParameterError("embed_watermark: watermark split must be >= 1");
    if (task_ds.size() == 0) throw ParameterError("embed_watermark: dataset is empty");
    if (task_ds.dim() != model.arch().input_dim)
        throw DimensionError("embed_watermark: data dim does not match model input dim");
    wm.validate(task_ds.dim());
    if (wm.gamma1 != cfg.gamma1)
        throw ContractError("embed_watermark: trigger factor differs between "
                            "watermark spec and train config");

    TrainResult res;
    res.model = model.clone();
    Rng task_rng = Rng::stream(cfg.seed, kTaskStream);
    Rng wm_rng = Rng::stream(cfg.seed, kWatermarkStream);
    AdamState opt = AdamState::init(res.model.params());

    int n_task = cfg.task_per_batch;
    int n_wm = cfg.wm_per_batch;
    std::size_t d = task_ds.dim();
    Tensor trigger_rows = replicate_rows(wm.trigger, n_wm);
    int iters = cfg.epochs * iters_per_epoch(task_ds.size(), n_task);
    res.loss_trace.reserve(iters);
    for (int it = 0; it < iters; ++it) {
        Tensor x0 = draw_batch(task_ds, n_task, task_rng);
        int t = static_cast<int>(task_rng.uniform_int(1, sched.T));
        Tensor eps = draw_noise(n_task, d, task_rng);

        // Watermark draws always happen, in the same order, so the task
        // trajectory is unaffected by masking the watermark term.
        Tensor x0w = draw_batch(wm.wm_data, n_wm, wm_rng);
        Tensor eps_w = draw_noise(n_wm, d, wm_rng);

        Tensor xt = forward_sample(x0, t, eps, sched);
        res.model.zero_grads();
        Tensor pred_task = res.model.forward(xt, t);

        Tensor loss;
        if (mask_watermark_term) {
            loss = mul(mse_loss(pred_task, eps), cfg.gamma2);
        } else {
            Tensor xt_w = forward_sample(x0w, t, eps_w, sched);
            Tensor tilde_xt = wdp_state(xt_w, trigger_rows, cfg.gamma1);
            Tensor pred_wm = res.model.forward(tilde_xt, t);
            loss = wdp_loss(eps, eps_w, pred_task, pred_wm, cfg.gamma2);
        }
        double lv = loss.value();
        if (!std::isfinite(lv))
            throw NumericError("embed_watermark: non-finite loss at iteration " +
                               std::to_string(it));
        backward(loss);
        adam_step(res.model.params(), res.model.param_names(), opt, cfg.lr);
        res.loss_trace.push_back(lv);
    }
    return res;
}

}  // namespace wdm
