#include "wdm/harness.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "wdm/attacks.hpp"
#include "wdm/checkpoint.hpp"
#include "wdm/errors.hpp"
#include "wdm/sampler.hpp"
#include "wdm/theorems.hpp"

namespace fs = std::filesystem;

namespace wdm {

namespace {

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void ensure_output_dir(const ExperimentConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw IoError("cannot create output dir " + cfg.output_dir + ": " + ec.message());
    // Archive the effective config next to the results it produces.
    std::ofstream out(join_path(cfg.output_dir, "effective_config.json"));
    if (!out) throw IoError("cannot write effective config");
    out << cfg.to_json().dump(2) << "\n";
}

std::string csv_escape(const std::string& field) {
    bool needs_quote = field.find_first_of(",\"\r\n") != std::string::npos;
    if (!needs_quote) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

Tensor build_trigger(const ExperimentConfig& cfg, std::size_t dim) {
    if (cfg.trigger_source == "prf") {
        return prf_trigger(cfg.prf_key, {dim}, cfg.trigger_low, cfg.trigger_high);
    }
    Dataset d = load_dataset(cfg.trigger_path, DataFormat::CsvPoints);
    if (d.dim() != dim)
        throw ConfigError("trigger file dimension " + std::to_string(d.dim()) +
                          " does not match data dimension " + std::to_string(dim));
    return d.sample(0);
}

DenoiserModel load_model(const ExperimentConfig& cfg, const std::string& name) {
    Checkpoint ck = load_checkpoint(join_path(cfg.output_dir, name));
    if (ck.arch != cfg.arch)
        throw ConfigError("checkpoint " + name + " was built for a different architecture");
    return ck.model();
}

void save_model(const ExperimentConfig& cfg, const DenoiserModel& m,
                const NoiseSchedule& sched, const std::string& name) {
    save_checkpoint(m, sched, cfg.beta_1, cfg.beta_T, join_path(cfg.output_dir, name));
}

void write_loss_csv(const ExperimentConfig& cfg, const std::string& name,
                    const std::vector<double>& trace) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i)
        rows.push_back({std::to_string(i), fmt(trace[i])});
    write_csv(join_path(cfg.output_dir, name), {"iteration", "loss"}, rows,
              cfg.hash_hex());
}

void write_report(const ExperimentConfig& cfg, const std::string& name,
                  const nlohmann::json& j) {
    std::ofstream out(join_path(cfg.output_dir, name));
    if (!out) throw IoError("cannot write report " + name);
    out << j.dump(2) << "\n";
}

std::vector<Tensor> task_batch(const DenoiserModel& m, const Experiment& ex, int n,
                               std::uint64_t seed) {
    return sample_task(m, ex.sched, n, seed);
}

double fidelity_score(const DenoiserModel& m, const Experiment& ex) {
    int n = ex.cfg.fidelity_samples;
    std::vector<Tensor> gen = task_batch(m, ex, n, ex.cfg.extract_seed + 0x5151);
    std::vector<Tensor> held;
    held.reserve(ex.task_holdout.size());
    for (std::size_t i = 0; i < ex.task_holdout.size(); ++i)
        held.push_back(ex.task_holdout.sample(i).reshape({ex.task_holdout.dim()}));
    return frechet_similarity(gen, held);
}

}  // namespace

Experiment Experiment::make(const ExperimentConfig& cfg) {
    cfg.validate();
    Experiment ex;
    ex.cfg = cfg;
    ex.sched = linear_schedule(cfg.T, cfg.beta_1, cfg.beta_T);

    LoadOptions opts;
    opts.raw_shape = cfg.raw_shape;
    opts.idx_resolution = cfg.idx_resolution;
    opts.max_samples = cfg.max_samples;
    Dataset all = load_dataset(cfg.data_path, data_format_from_string(cfg.data_format), opts);
    if (all.dim() != cfg.arch.input_dim)
        throw ConfigError("dataset dimension " + std::to_string(all.dim()) +
                          " does not match arch.input_dim " +
                          std::to_string(cfg.arch.input_dim));

    std::size_t holdout = static_cast<std::size_t>(
        static_cast<double>(all.size()) * cfg.holdout_fraction);
    std::size_t train_n = all.size() - holdout;
    if (train_n == 0) throw ConfigError("holdout fraction leaves no training data");
    ex.task_train.sample_shape = all.sample_shape;
    ex.task_holdout.sample_shape = all.sample_shape;
    ex.task_train.samples.assign(all.samples.begin(), all.samples.begin() + train_n);
    ex.task_holdout.samples.assign(all.samples.begin() + train_n, all.samples.end());

    ex.wm.gamma1 = cfg.train.gamma1;
    ex.wm.trigger = build_trigger(cfg, all.dim());
    if (cfg.wm_mode == "single") {
        ex.wm.mode = WatermarkMode::SingleSample;
        if (!cfg.wm_sample.empty()) {
            if (cfg.wm_sample.size() != all.dim())
                throw ConfigError("watermark.sample dimension mismatch");
            ex.wm.wm_data.sample_shape = {all.dim()};
            ex.wm.wm_data.samples = {cfg.wm_sample};
        } else if (!cfg.wm_data_path.empty()) {
            Dataset w = load_dataset(cfg.wm_data_path,
                                     data_format_from_string(cfg.wm_data_format), opts);
            ex.wm.wm_data.sample_shape = w.sample_shape;
            ex.wm.wm_data.samples = {w.samples.at(0)};
        } else {
            throw ConfigError("single-sample watermark needs watermark.sample or data_path");
        }
    } else {
        ex.wm.mode = WatermarkMode::MultiSample;
        if (cfg.wm_data_path.empty())
            throw ConfigError("multi-sample watermark needs watermark.data_path");
        ex.wm.wm_data = load_dataset(cfg.wm_data_path,
                                     data_format_from_string(cfg.wm_data_format), opts);
    }
    ex.wm.validate(all.dim());
    return ex;
}

std::vector<double> similarity_scores(const DenoiserModel& model, const Experiment& ex,
                                      std::uint64_t extract_seed) {
    std::vector<double> scores;
    if (ex.wm.mode == WatermarkMode::SingleSample) {
        Tensor target = ex.wm.wm_data.sample(0).reshape({ex.wm.wm_data.dim()});
        std::vector<Tensor> hats =
            extract_watermark(model, ex.wm, ex.sched, ex.cfg.mse_repetitions, extract_seed);
        scores.reserve(hats.size());
        for (const auto& h : hats) scores.push_back(mse_similarity(target, h));
    } else {
        std::vector<Tensor> ref;
        ref.reserve(ex.wm.wm_data.size());
        for (std::size_t i = 0; i < ex.wm.wm_data.size(); ++i)
            ref.push_back(ex.wm.wm_data.sample(i).reshape({ex.wm.wm_data.dim()}));
        for (int r = 0; r < ex.cfg.fid_repetitions; ++r) {
            std::vector<Tensor> batch = extract_watermark(
                model, ex.wm, ex.sched, ex.cfg.fid_batch,
                extract_seed + static_cast<std::uint64_t>(r) * 0x9E37ULL);
            scores.push_back(frechet_similarity(ref, batch));
        }
    }
    return scores;
}

nlohmann::json report_to_json(const VerificationReport& rep,
                              const std::string& config_hash) {
    nlohmann::json j;
    j["config_hash"] = config_hash;
    j["d_s"] = rep.d_s;
    j["d_c"] = rep.d_c;
    j["mu_s"] = rep.mu_s;
    j["mu_c"] = rep.mu_c;
    j["t_stat"] = rep.t_stat;
    j["dof"] = rep.dof;
    j["p_value"] = rep.p_value;
    j["alpha"] = rep.alpha;
    j["verdict"] = rep.verdict;
    return j;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows,
               const std::string& config_hash) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write csv: " + path);
    std::string sep;
    for (const auto& h : header) {
        out << sep << csv_escape(h);
        sep = ",";
    }
    out << ",config_hash\r\n";
    for (const auto& row : rows) {
        sep.clear();
        for (const auto& f : row) {
            out << sep << csv_escape(f);
            sep = ",";
        }
        out << "," << config_hash << "\r\n";
    }
    if (!out) throw IoError("short write to csv: " + path);
}

int cmd_train(const ExperimentConfig& cfg) {
    ensure_output_dir(cfg);
    Experiment ex = Experiment::make(cfg);
    DenoiserModel init = DenoiserModel::init(cfg.arch, cfg.seed);
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    TrainResult tr = train_baseline(init, ex.task_train, ex.sched, tc);
    save_model(cfg, tr.model, ex.sched, cfg.baseline_ckpt);
    write_loss_csv(cfg, "baseline_loss.csv", tr.loss_trace);
    std::cout << "trained baseline -> " << join_path(cfg.output_dir, cfg.baseline_ckpt)
              << " (" << tr.loss_trace.size() << " iterations)\n";
    return exit_code::ok;
}

int cmd_embed(const ExperimentConfig& cfg) {
    ensure_output_dir(cfg);
    Experiment ex = Experiment::make(cfg);
    DenoiserModel start = (cfg.embed_mode == "finetune")
                              ? load_model(cfg, cfg.baseline_ckpt)
                              : DenoiserModel::init(cfg.arch, cfg.seed);
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    TrainResult tr = embed_watermark(start, ex.task_train, ex.wm, ex.sched, tc);
    save_model(cfg, tr.model, ex.sched, cfg.watermarked_ckpt);
    write_loss_csv(cfg, "embed_loss.csv", tr.loss_trace);
    std::cout << "embedded watermark (" << cfg.embed_mode << ") -> "
              << join_path(cfg.output_dir, cfg.watermarked_ckpt) << "\n";
    return exit_code::ok;
}

int cmd_extract(const ExperimentConfig& cfg) {
    ensure_output_dir(cfg);
    Experiment ex = Experiment::make(cfg);
    DenoiserModel suspect = load_model(cfg, cfg.suspect_ckpt);
    int n = (ex.wm.mode == WatermarkMode::SingleSample) ? cfg.mse_repetitions
                                                        : cfg.fid_batch;
    std::vector<Tensor> hats =
        extract_watermark(suspect, ex.wm, ex.sched, n, cfg.extract_seed);
    std::vector<std::vector<std::string>> rows;
    rows.reserve(hats.size());
    std::vector<std::string> header;
    for (std::size_t j = 0; j < hats[0].size(); ++j)
        header.push_back("x" + std::to_string(j));
    for (const auto& h : hats) {
        std::vector<std::string> row;
        row.reserve(h.size());
        for (std::size_t j = 0; j < h.size(); ++j) row.push_back(fmt(h.at(j)));
        rows.push_back(std::move(row));
    }
    write_csv(join_path(cfg.output_dir, cfg.extracted_csv), header, rows, cfg.hash_hex());
    std::cout << "extracted " << hats.size() << " samples -> "
              << join_path(cfg.output_dir, cfg.extracted_csv) << "\n";
    return exit_code::ok;
}

int cmd_verify(const ExperimentConfig& cfg, const std::string& polarity) {
    if (polarity != "stolen" && polarity != "clean")
        throw ConfigError("verify polarity must be 'stolen' or 'clean'");
    ensure_output_dir(cfg);
    Experiment ex = Experiment::make(cfg);
    DenoiserModel suspect = load_model(cfg, cfg.suspect_ckpt);
    DenoiserModel control = load_model(cfg, cfg.control_ckpt);
    // Same extraction seeds for suspect and control.
    std::vector<double> d_s = similarity_scores(suspect, ex, cfg.extract_seed);
    std::vector<double> d_c = similarity_scores(control, ex, cfg.extract_seed);
    VerificationReport rep = verify(std::move(d_s), std::move(d_c), cfg.alpha);
    write_report(cfg, "report.json", report_to_json(rep, cfg.hash_hex()));
    std::cout << "mu_s=" << rep.mu_s << " mu_c=" << rep.mu_c << " t=" << rep.t_stat
              << " dof=" << rep.dof << " p=" << rep.p_value
              << " verdict=" << (rep.verdict ? "stolen" : "not-stolen") << "\n";
    bool zero = (polarity == "stolen") ? rep.verdict : !rep.verdict;
    return zero ? exit_code::ok : exit_code::verdict_negative;
}

int cmd_attack(const ExperimentConfig& cfg, const std::string& type) {
    ensure_output_dir(cfg);
    Experiment ex = Experiment::make(cfg);
    DenoiserModel suspect = load_model(cfg, cfg.suspect_ckpt);
    DenoiserModel control = load_model(cfg, cfg.control_ckpt);
    std::vector<double> d_c = similarity_scores(control, ex, cfg.extract_seed);
    std::string hash = cfg.hash_hex();

    if (type == "quantize") {
        QuantizeResult q = quantize_weights(suspect);
        save_model(cfg, q.model, ex.sched, "quantized.ckpt");
        std::vector<double> before = similarity_scores(suspect, ex, cfg.extract_seed);
        std::vector<double> after = similarity_scores(q.model, ex, cfg.extract_seed);
        VerificationReport vb = verify(before, d_c, cfg.alpha);
        VerificationReport va = verify(after, d_c, cfg.alpha);
        nlohmann::json j = report_to_json(va, hash);
        j["attack"] = "quantize";
        j["saturated_params"] = q.saturated;
        j["mu_s_before"] = vb.mu_s;
        j["delta_ws"] = std::fabs(va.mu_s - vb.mu_s);
        j["p_before"] = vb.p_value;
        write_report(cfg, "attack_quantize.json", j);
        std::cout << "quantize: mu_s " << vb.mu_s << " -> " << va.mu_s
                  << " p=" << va.p_value << " verdict="
                  << (va.verdict ? "stolen" : "not-stolen") << "\n";
        return exit_code::ok;
    }

    if (type == "perturb") {
        std::vector<std::vector<std::string>> rows;
        for (double std_v : cfg.perturb_stds) {
            DenoiserModel attacked = perturb_weights(suspect, std_v, cfg.seed);
            std::vector<double> d_s = similarity_scores(attacked, ex, cfg.extract_seed);
            VerificationReport r = verify(d_s, d_c, cfg.alpha);
            rows.push_back({fmt(std_v), fmt(r.mu_s), fmt(r.mu_c), fmt(r.t_stat),
                            fmt(r.p_value), r.verdict ? "1" : "0"});
            std::cout << "perturb std=" << std_v << " mu_s=" << r.mu_s
                      << " p=" << r.p_value << "\n";
        }
        write_csv(join_path(cfg.output_dir, "attack_perturb.csv"),
                  {"std", "mu_s", "mu_c", "t_stat", "p_value", "verdict"}, rows, hash);
        return exit_code::ok;
    }

    if (type == "finetune") {
        TrainConfig tc = cfg.train;
        tc.seed = cfg.seed + 0xA77ACC;
        tc.epochs = cfg.finetune_epochs > 0 ? cfg.finetune_epochs : cfg.train.epochs;
        // The attacker trains with the plain task loss on the full batch.
        tc.task_per_batch = tc.batch_size;
        tc.wm_per_batch = 0;
        FinetuneResult ft =
            finetune_attack(suspect, ex.task_train, ex.sched, tc, cfg.snapshot_interval);
        std::vector<std::vector<std::string>> rows;
        for (const auto& [epoch, snap] : ft.snapshots) {
            std::vector<double> d_s = similarity_scores(snap, ex, cfg.extract_seed);
            VerificationReport r = verify(d_s, d_c, cfg.alpha);
            double fid = fidelity_score(snap, ex);
            rows.push_back({std::to_string(epoch), fmt(fid), fmt(r.mu_s), fmt(r.p_value),
                            r.verdict ? "1" : "0"});
            std::cout << "finetune epoch=" << epoch << " ws=" << r.mu_s
                      << " p=" << r.p_value << " fidelity=" << fid << "\n";
        }
        write_csv(join_path(cfg.output_dir, "attack_finetune.csv"),
                  {"epoch", "fidelity", "ws", "p_value", "verdict"}, rows, hash);
        nlohmann::json j;
        j["config_hash"] = hash;
        j["attack"] = "finetune";
        j["attacker_lr"] = tc.lr;  // attacker reuses the defender's learning rate
        j["epochs"] = tc.epochs;
        write_report(cfg, "attack_finetune.json", j);
        return exit_code::ok;
    }

    throw ConfigError("unknown attack type: " + type);
}

int cmd_prove(const ExperimentConfig& cfg) {
    ensure_output_dir(cfg);
    ProofReport rep = run_proof_suite(cfg.seed);
    nlohmann::json checks = nlohmann::json::array();
    bool ok = rep.all_ok();
    for (const auto& c : rep.checks) {
        bool healthy = c.is_negative_control ? !c.pass : c.pass;
        std::cout << (healthy ? "[PASS] " : "[FAIL] ") << c.name
                  << " (statistic=" << c.statistic << ", threshold=" << c.threshold
                  << (c.is_negative_control ? ", negative control" : "") << ")\n";
        checks.push_back({{"name", c.name},
                          {"pass", c.pass},
                          {"negative_control", c.is_negative_control},
                          {"statistic", c.statistic},
                          {"threshold", c.threshold},
                          {"healthy", healthy}});
    }
    nlohmann::json j;
    j["config_hash"] = cfg.hash_hex();
    j["checks"] = checks;
    j["all_ok"] = ok;
    write_report(cfg, "prove.json", j);
    return ok ? exit_code::ok : exit_code::failure;
}

int cmd_report(const ExperimentConfig& cfg) {
    ensure_output_dir(cfg);
    std::vector<std::vector<std::string>> rows;
    for (const auto& entry : fs::recursive_directory_iterator(cfg.output_dir)) {
        if (!entry.is_regular_file()) continue;
        std::string name = entry.path().filename().string();
        if (name.size() < 5 || name.substr(name.size() - 5) != ".json") continue;
        if (name.find("report") == std::string::npos &&
            name.find("attack") == std::string::npos)
            continue;
        std::ifstream in(entry.path());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception&) {
            continue;  // not a report
        }
        if (!j.contains("p_value")) continue;
        rows.push_back({entry.path().lexically_relative(cfg.output_dir).string(),
                        fmt(j.value("mu_s", 0.0)), fmt(j.value("mu_c", 0.0)),
                        fmt(j.value("t_stat", 0.0)), fmt(j.value("p_value", 1.0)),
                        j.value("verdict", false) ? "1" : "0",
                        j.value("config_hash", std::string())});
    }
    write_csv(join_path(cfg.output_dir, "summary.csv"),
              {"report", "mu_s", "mu_c", "t_stat", "p_value", "verdict", "source_hash"},
              rows, cfg.hash_hex());
    std::cout << "merged " << rows.size() << " reports -> "
              << join_path(cfg.output_dir, "summary.csv") << "\n";
    return exit_code::ok;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"wdm: diffusion-model watermarking toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::int64_t seed_override = -1;
    std::string attack_type = "quantize";
    std::string polarity = "stolen";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--set", overrides, "override config keys (a.b.c=value)");
        sub->add_option("--seed", seed_override, "override the experiment seed");
    };

    CLI::App* train = app.add_subcommand("train", "train an unwatermarked model");
    CLI::App* embed = app.add_subcommand("embed", "embed the watermark");
    CLI::App* extract = app.add_subcommand("extract", "extract the watermark");
    CLI::App* verify_cmd = app.add_subcommand("verify", "similarity + hypothesis test");
    CLI::App* attack = app.add_subcommand("attack", "run a removal attack");
    CLI::App* prove = app.add_subcommand("prove", "run the kernel property checks");
    CLI::App* report = app.add_subcommand("report", "merge run reports into a summary");
    for (CLI::App* sub : {train, embed, extract, verify_cmd, attack, prove, report})
        add_common(sub);
    attack->add_option("--type", attack_type, "quantize | perturb | finetune");
    verify_cmd->add_option("--polarity", polarity,
                           "stolen: exit 0 when flagged stolen; clean: inverse");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        ExperimentConfig cfg = ExperimentConfig::load(config_path, overrides);
        if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
        if (train->parsed()) return cmd_train(cfg);
        if (embed->parsed()) return cmd_embed(cfg);
        if (extract->parsed()) return cmd_extract(cfg);
        if (verify_cmd->parsed()) return cmd_verify(cfg, polarity);
        if (attack->parsed()) return cmd_attack(cfg, attack_type);
        if (prove->parsed()) return cmd_prove(cfg);
        if (report->parsed()) return cmd_report(cfg);
        return exit_code::failure;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_code::config;
    } catch (const CorruptionError& e) {
        std::cerr << "corruption error: " << e.what() << "\n";
        return exit_code::corruption;
    } catch (const MigrationError& e) {
        std::cerr << "migration error: " << e.what() << "\n";
        return exit_code::corruption;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return exit_code::parse;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return exit_code::io;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return exit_code::numeric;
    } catch (const StatisticalError& e) {
        std::cerr << "statistical error: " << e.what() << "\n";
        return exit_code::statistical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code::failure;
    }
}

}  // namespace wdm
