#ifndef WDM_HARNESS_HPP
#define WDM_HARNESS_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "wdm/config.hpp"
#include "wdm/dataset.hpp"
#include "wdm/denoiser.hpp"
#include "wdm/schedule.hpp"
#include "wdm/train.hpp"
#include "wdm/verify.hpp"

namespace wdm {

namespace exit_code {
constexpr int ok = 0;
constexpr int verdict_negative = 1;
constexpr int config = 2;
constexpr int io = 3;
constexpr int numeric = 4;
constexpr int statistical = 5;
constexpr int parse = 6;
constexpr int corruption = 7;
constexpr int failure = 10;
}  // namespace exit_code

// Materialized experiment: schedule, train/holdout task data, trigger and
// watermark spec, all derived from one config.
struct Experiment {
    ExperimentConfig cfg;
    NoiseSchedule sched;
    Dataset task_train;
    Dataset task_holdout;  // tail fraction, reserved for fidelity scoring
    WatermarkSpec wm;

    static Experiment make(const ExperimentConfig& cfg);
};

// Similarity scores for one model: in single-sample mode, one MSE per
// extracted chain (mse_repetitions chains); in multi-sample mode, one
// Frechet score per repetition (fid_repetitions batches of fid_batch).
std::vector<double> similarity_scores(const DenoiserModel& model, const Experiment& ex,
                                      std::uint64_t extract_seed);

nlohmann::json report_to_json(const VerificationReport& rep, const std::string& config_hash);

// RFC-4180 CSV writer; every row gets the config hash appended.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows,
               const std::string& config_hash);

int cmd_train(const ExperimentConfig& cfg);
int cmd_embed(const ExperimentConfig& cfg);
int cmd_extract(const ExperimentConfig& cfg);
// polarity "stolen": exit 0 when the verdict flags the suspect as stolen.
// polarity "clean": exit 0 when it does not.
int cmd_verify(const ExperimentConfig& cfg, const std::string& polarity = "stolen");
int cmd_attack(const ExperimentConfig& cfg, const std::string& type);
int cmd_prove(const ExperimentConfig& cfg);
int cmd_report(const ExperimentConfig& cfg);

int run_cli(int argc, char** argv);

}  // namespace wdm

#endif
