#ifndef WDM_CONFIG_HPP
#define WDM_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "wdm/dataset.hpp"
#include "wdm/denoiser.hpp"
#include "wdm/train.hpp"

namespace wdm {

// Full experiment description. Serializes to/from JSON losslessly
// (parse(print(c)) == c) and hashes to a stable 64-bit id that every
// results file embeds.
struct ExperimentConfig {
    // schedule
    int T = 100;
    double beta_1 = 1e-4;
    double beta_T = 0.02;

    // architecture
    Arch arch{2, {64, 64}, 16};

    // training
    TrainConfig train;

    // watermark
    std::string trigger_source = "prf";  // "prf" | "file"
    std::string prf_key = "wdm-secret-key";
    double trigger_low = -1.0;
    double trigger_high = 1.0;
    std::string trigger_path;            // csv-points row, when source == "file"
    std::string wm_mode = "single";      // "single" | "multi"
    std::vector<double> wm_sample;       // inline single-sample watermark
    std::string wm_data_path;            // multi-sample watermark dataset
    std::string wm_data_format = "csv-points";

    // task dataset
    std::string data_path;
    std::string data_format = "csv-points";
    std::vector<std::size_t> raw_shape;  // for raw-u8-images
    std::size_t idx_resolution = 8;
    std::size_t max_samples = 0;
    double holdout_fraction = 0.2;       // tail fraction reserved for fidelity

    // attacks
    std::vector<double> perturb_stds{0.005, 0.01, 0.02, 0.04};
    int finetune_epochs = 0;             // 0 = same as train.epochs
    int snapshot_interval = 0;           // 0 = epochs/10

    // verification
    double alpha = 1e-3;
    int mse_repetitions = 100;
    int fid_repetitions = 5;
    int fid_batch = 64;
    int fidelity_samples = 256;
    std::uint64_t extract_seed = 7001;

    // artifact names, relative to output_dir
    std::string baseline_ckpt = "baseline.ckpt";
    std::string watermarked_ckpt = "watermarked.ckpt";
    std::string control_ckpt = "control.ckpt";
    std::string suspect_ckpt = "watermarked.ckpt";
    std::string extracted_csv = "extracted.csv";
    std::string embed_mode = "scratch";  // "scratch" | "finetune"

    std::string output_dir = "runs/default";
    std::uint64_t seed = 1;

    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    // Loads a JSON config file and applies dotted-path overrides
    // ("train.lr=0.001"). Values parse as JSON when possible.
    static ExperimentConfig load(const std::string& path,
                                 const std::vector<std::string>& overrides = {});

    std::uint64_t hash() const;
    std::string hash_hex() const;

    void validate() const;
};

}  // namespace wdm

#endif
