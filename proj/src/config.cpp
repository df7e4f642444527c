#include "wdm/config.hpp"

#include <fstream>
#include <sstream>

#include "wdm/checkpoint.hpp"
#include "wdm/errors.hpp"

namespace wdm {

using nlohmann::json;

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig c;
    try {
        if (j.contains("schedule")) {
            const auto& s = j.at("schedule");
            c.T = s.value("T", c.T);
            c.beta_1 = s.value("beta_1", c.beta_1);
            c.beta_T = s.value("beta_T", c.beta_T);
        }
        if (j.contains("arch")) {
            const auto& a = j.at("arch");
            c.arch.input_dim = a.value("input_dim", c.arch.input_dim);
            if (a.contains("hidden"))
                c.arch.hidden = a.at("hidden").get<std::vector<std::size_t>>();
            c.arch.time_embed_dim = a.value("time_embed_dim", c.arch.time_embed_dim);
        }
        if (j.contains("train")) {
            const auto& t = j.at("train");
            c.train.epochs = t.value("epochs", c.train.epochs);
            c.train.batch_size = t.value("batch_size", c.train.batch_size);
            c.train.task_per_batch = t.value("task_per_batch", c.train.task_per_batch);
            c.train.wm_per_batch = t.value("wm_per_batch", c.train.wm_per_batch);
            c.train.lr = t.value("lr", c.train.lr);
            c.train.gamma1 = t.value("gamma1", c.train.gamma1);
            c.train.gamma2 = t.value("gamma2", c.train.gamma2);
        }
        if (j.contains("watermark")) {
            const auto& w = j.at("watermark");
            c.trigger_source = w.value("trigger_source", c.trigger_source);
            c.prf_key = w.value("prf_key", c.prf_key);
            c.trigger_low = w.value("trigger_low", c.trigger_low);
            c.trigger_high = w.value("trigger_high", c.trigger_high);
            c.trigger_path = w.value("trigger_path", c.trigger_path);
            c.wm_mode = w.value("mode", c.wm_mode);
            if (w.contains("sample"))
                c.wm_sample = w.at("sample").get<std::vector<double>>();
            c.wm_data_path = w.value("data_path", c.wm_data_path);
            c.wm_data_format = w.value("data_format", c.wm_data_format);
        }
        if (j.contains("dataset")) {
            const auto& d = j.at("dataset");
            c.data_path = d.value("path", c.data_path);
            c.data_format = d.value("format", c.data_format);
            if (d.contains("raw_shape"))
                c.raw_shape = d.at("raw_shape").get<std::vector<std::size_t>>();
            c.idx_resolution = d.value("idx_resolution", c.idx_resolution);
            c.max_samples = d.value("max_samples", c.max_samples);
            c.holdout_fraction = d.value("holdout_fraction", c.holdout_fraction);
        }
        if (j.contains("attack")) {
            const auto& a = j.at("attack");
            if (a.contains("perturb_stds"))
                c.perturb_stds = a.at("perturb_stds").get<std::vector<double>>();
            c.finetune_epochs = a.value("finetune_epochs", c.finetune_epochs);
            c.snapshot_interval = a.value("snapshot_interval", c.snapshot_interval);
        }
        if (j.contains("verify")) {
            const auto& v = j.at("verify");
            c.alpha = v.value("alpha", c.alpha);
            c.mse_repetitions = v.value("mse_repetitions", c.mse_repetitions);
            c.fid_repetitions = v.value("fid_repetitions", c.fid_repetitions);
            c.fid_batch = v.value("fid_batch", c.fid_batch);
            c.fidelity_samples = v.value("fidelity_samples", c.fidelity_samples);
            c.extract_seed = v.value("extract_seed", c.extract_seed);
        }
        if (j.contains("files")) {
            const auto& f = j.at("files");
            c.baseline_ckpt = f.value("baseline_ckpt", c.baseline_ckpt);
            c.watermarked_ckpt = f.value("watermarked_ckpt", c.watermarked_ckpt);
            c.control_ckpt = f.value("control_ckpt", c.control_ckpt);
            c.suspect_ckpt = f.value("suspect_ckpt", c.suspect_ckpt);
            c.extracted_csv = f.value("extracted_csv", c.extracted_csv);
        }
        c.embed_mode = j.value("embed_mode", c.embed_mode);
        c.output_dir = j.value("output_dir", c.output_dir);
        c.seed = j.value("seed", c.seed);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse: ") + e.what());
    }
    return c;
}

json ExperimentConfig::to_json() const {
    json j;
    j["schedule"] = {{"T", T}, {"beta_1", beta_1}, {"beta_T", beta_T}};
    j["arch"] = {{"input_dim", arch.input_dim},
                 {"hidden", arch.hidden},
                 {"time_embed_dim", arch.time_embed_dim}};
    j["train"] = {{"epochs", train.epochs},
                  {"batch_size", train.batch_size},
                  {"task_per_batch", train.task_per_batch},
                  {"wm_per_batch", train.wm_per_batch},
                  {"lr", train.lr},
                  {"gamma1", train.gamma1},
                  {"gamma2", train.gamma2}};
    j["watermark"] = {{"trigger_source", trigger_source},
                      {"prf_key", prf_key},
                      {"trigger_low", trigger_low},
                      {"trigger_high", trigger_high},
                      {"trigger_path", trigger_path},
                      {"mode", wm_mode},
                      {"sample", wm_sample},
                      {"data_path", wm_data_path},
                      {"data_format", wm_data_format}};
    j["dataset"] = {{"path", data_path},
                    {"format", data_format},
                    {"raw_shape", raw_shape},
                    {"idx_resolution", idx_resolution},
                    {"max_samples", max_samples},
                    {"holdout_fraction", holdout_fraction}};
    j["attack"] = {{"perturb_stds", perturb_stds},
                   {"finetune_epochs", finetune_epochs},
                   {"snapshot_interval", snapshot_interval}};
    j["verify"] = {{"alpha", alpha},
                   {"mse_repetitions", mse_repetitions},
                   {"fid_repetitions", fid_repetitions},
                   {"fid_batch", fid_batch},
                   {"fidelity_samples", fidelity_samples},
                   {"extract_seed", extract_seed}};
    j["files"] = {{"baseline_ckpt", baseline_ckpt},
                  {"watermarked_ckpt", watermarked_ckpt},
                  {"control_ckpt", control_ckpt},
                  {"suspect_ckpt", suspect_ckpt},
                  {"extracted_csv", extracted_csv}};
    j["embed_mode"] = embed_mode;
    j["output_dir"] = output_dir;
    j["seed"] = seed;
    return j;
}

ExperimentConfig ExperimentConfig::load(const std::string& path,
                                        const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    for (const auto& ov : overrides) {
        auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw ConfigError("override must look like key.path=value: " + ov);
        std::string key = ov.substr(0, eq);
        std::string val = ov.substr(eq + 1);
        // Dotted path -> JSON pointer.
        std::string ptr = "/";
        for (char ch : key) ptr += (ch == '.') ? '/' : ch;
        json parsed;
        try {
            parsed = json::parse(val);
        } catch (const json::exception&) {
            parsed = val;  // plain string
        }
        try {
            j[json::json_pointer(ptr)] = parsed;
        } catch (const json::exception& e) {
            throw ConfigError("cannot apply override '" + ov + "': " + e.what());
        }
    }
    ExperimentConfig c = from_json(j);
    c.validate();
    return c;
}

std::uint64_t ExperimentConfig::hash() const {
    std::string canon = to_json().dump();
    return fnv1a64(canon.data(), canon.size());
}

std::string ExperimentConfig::hash_hex() const {
    std::ostringstream os;
    os << std::hex << hash();
    return os.str();
}

void ExperimentConfig::validate() const {
    if (T < 1) throw ConfigError("schedule.T must be >= 1");
    if (!(beta_1 > 0.0 && beta_1 <= beta_T && beta_T < 1.0))
        throw ConfigError("schedule betas must satisfy 0 < beta_1 <= beta_T < 1");
    train.validate();
    if (trigger_source != "prf" && trigger_source != "file")
        throw ConfigError("watermark.trigger_source must be 'prf' or 'file'");
    if (wm_mode != "single" && wm_mode != "multi")
        throw ConfigError("watermark.mode must be 'single' or 'multi'");
    if (embed_mode != "scratch" && embed_mode != "finetune")
        throw ConfigError("embed_mode must be 'scratch' or 'finetune'");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("verify.alpha outside [0,1]");
    if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0))
        throw ConfigError("dataset.holdout_fraction outside [0,1)");
}

}  // namespace wdm
