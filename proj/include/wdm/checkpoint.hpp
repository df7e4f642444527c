#ifndef WDM_CHECKPOINT_HPP
#define WDM_CHECKPOINT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "wdm/denoiser.hpp"
#include "wdm/schedule.hpp"

namespace wdm {

// On-disk model format, little-endian throughout:
//   magic "WDMK" | version u16 | T u32 | beta_1 f64 | beta_T f64 |
//   input_dim u32 | n_hidden u32 | hidden widths u32... | time_embed_dim u32 |
//   param_count u64 | params f32... | checksum u64 (FNV-1a over all prior bytes)
struct Checkpoint {
    static constexpr std::uint16_t kVersion = 1;

    Arch arch;
    int T = 0;
    double beta_1 = 0.0;
    double beta_T = 0.0;
    std::vector<float> params;

    NoiseSchedule schedule() const { return linear_schedule(T, beta_1, beta_T); }
    DenoiserModel model() const;
};

void save_checkpoint(const DenoiserModel& model, const NoiseSchedule& sched,
                     double beta_1, double beta_T, const std::string& path);

Checkpoint load_checkpoint(const std::string& path);

std::uint64_t fnv1a64(const void* data, std::size_t len,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace wdm

#endif
