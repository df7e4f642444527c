#include "wdm/attacks.hpp"

#include <bit>
#include <cmath>

#include "wdm/errors.hpp"
#include "wdm/rng.hpp"

namespace wdm {

std::uint16_t f16_from_f32(float f, bool* saturated) {
    std::uint32_t x = std::bit_cast<std::uint32_t>(f);
    std::uint16_t sign = static_cast<std::uint16_t>((x >> 16) & 0x8000u);
    std::int32_t exp = static_cast<std::int32_t>((x >> 23) & 0xFF) - 127 + 15;
    std::uint32_t mant = x & 0x7FFFFFu;

    if (((x >> 23) & 0xFF) == 0xFF) {
        // Inf/NaN in the source: treat as overflow, saturate to max finite.
        if (saturated) *saturated = true;
        return sign | 0x7BFFu;
    }
    if (exp >= 0x1F) {
        if (saturated) *saturated = true;
        return sign | 0x7BFFu;  // +-65504
    }
    if (exp <= 0) {
        // Subnormal half (or zero). Shift the implicit bit into the mantissa.
        if (exp < -10) return sign;  // rounds to zero
        mant |= 0x800000u;
        int shift = 14 - exp;  // 13 + (1 - exp)
        std::uint32_t half_mant = mant >> shift;
        std::uint32_t rem = mant & ((1u << shift) - 1);
        std::uint32_t halfway = 1u << (shift - 1);
        if (rem > halfway || (rem == halfway && (half_mant & 1)))
            ++half_mant;  // may carry into the exponent, which is correct
        return sign | static_cast<std::uint16_t>(half_mant);
    }
    std::uint32_t half_mant = mant >> 13;
    std::uint32_t rem = mant & 0x1FFFu;
    std::uint32_t result = sign | (static_cast<std::uint32_t>(exp) << 10) | half_mant;
    if (rem > 0x1000u || (rem == 0x1000u && (half_mant & 1))) {
        ++result;  // carry may roll into the exponent
        if ((result & 0x7FFFu) >= 0x7C00u) {
            if (saturated) *saturated = true;
            return sign | 0x7BFFu;
        }
    }
    return static_cast<std::uint16_t>(result);
}

float f32_from_f16(std::uint16_t h) {
    std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
    std::uint32_t exp = (h >> 10) & 0x1F;
    std::uint32_t mant = h & 0x3FFu;
    std::uint32_t out;
    if (exp == 0) {
        if (mant == 0) {
            out = sign;
        } else {
            // Normalize the subnormal.
            int e = -1;
            std::uint32_t m = mant;
            do {
                ++e;
                m <<= 1;
            } while ((m & 0x400u) == 0);
            out = sign | (static_cast<std::uint32_t>(127 - 15 - e) << 23) |
                  ((m & 0x3FFu) << 13);
        }
    } else if (exp == 0x1F) {
        out = sign | 0x7F800000u | (mant << 13);
    } else {
        out = sign | ((exp - 15 + 127) << 23) | (mant << 13);
    }
    return std::bit_cast<float>(out);
}

QuantizeResult quantize_weights(const DenoiserModel& model) {
    QuantizeResult res;
    res.model = model.clone();
    for (auto& p : res.model.params()) {
        auto w = p.mutable_data();
        for (auto& v : w) {
            bool sat = false;
            std::uint16_t h = f16_from_f32(static_cast<float>(v), &sat);
            if (sat) ++res.saturated;
            v = static_cast<double>(f32_from_f16(h));
        }
    }
    return res;
}

DenoiserModel perturb_weights(const DenoiserModel& model, double std, std::uint64_t seed) {
    if (std < 0.0) throw ParameterError("perturb_weights: std must be >= 0");
    DenoiserModel out = model.clone();
    if (std == 0.0) return out;
    Rng rng(seed);
    for (auto& p : out.params()) {
        auto w = p.mutable_data();
        for (auto& v : w) v += std * rng.normal();
    }
    return out;
}

FinetuneResult finetune_attack(const DenoiserModel& model, const Dataset& task_ds,
                               const NoiseSchedule& sched, const TrainConfig& cfg,
                               int snapshot_interval) {
    if (snapshot_interval <= 0) snapshot_interval = std::max(1, cfg.epochs / 10);
    FinetuneResult res;
    TrainResult tr = train_baseline(
        model, task_ds, sched, cfg,
        [&](int epoch, const DenoiserModel& m) {
            if (epoch % snapshot_interval == 0 || epoch == cfg.epochs)
                res.snapshots.emplace_back(epoch, m.clone());
        });
    res.model = std::move(tr.model);
    res.loss_trace = std::move(tr.loss_trace);
    return res;
}

}  // namespace wdm
