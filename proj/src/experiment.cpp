#include "njode/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "njode/checkpoint.hpp"
#include "njode/dataset_io.hpp"
#include "njode/errors.hpp"
#include "njode/svg.hpp"

namespace njode {

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::Relu;
    if (s == "tanh") return Activation::Tanh;
    throw ConfigError("unknown activation: " + s);
}

ModelConfig model_config_from_json(const Json& j) {
    check_keys(j,
               {"d_h", "hidden", "activation", "sig_level", "recurrent_encoder", "encoder_residual",
                "decoder_residual"},
               "model config");
    ModelConfig m;
    if (j.contains("d_h")) m.d_h = j.at("d_h").get<int>();
    if (j.contains("hidden")) m.hidden = j.at("hidden").get<std::vector<int>>();
    if (j.contains("activation")) m.activation = activation_from_string(j.at("activation"));
    if (j.contains("sig_level")) m.sig_level = j.at("sig_level").get<int>();
    if (j.contains("recurrent_encoder")) m.flags.recurrent_encoder = j.at("recurrent_encoder");
    if (j.contains("encoder_residual")) m.flags.encoder_residual = j.at("encoder_residual");
    if (j.contains("decoder_residual")) m.flags.decoder_residual = j.at("decoder_residual");
    return m;
}

TrainConfig train_config_from_json(const Json& j, std::uint64_t seed) {
    check_keys(j,
               {"epochs", "batch_size", "lr", "beta1", "beta2", "adam_eps", "weight_decay",
                "dropout", "loss", "old_loss_eps"},
               "train config");
    TrainConfig t;
    t.seed = seed;
    if (j.contains("epochs")) t.epochs = j.at("epochs").get<int>();
    if (j.contains("batch_size")) t.batch_size = j.at("batch_size").get<int>();
    if (j.contains("lr")) t.lr = j.at("lr").get<double>();
    if (j.contains("beta1")) t.beta1 = j.at("beta1").get<double>();
    if (j.contains("beta2")) t.beta2 = j.at("beta2").get<double>();
    if (j.contains("adam_eps")) t.adam_eps = j.at("adam_eps").get<double>();
    if (j.contains("weight_decay")) t.weight_decay = j.at("weight_decay").get<double>();
    if (j.contains("dropout")) t.dropout = j.at("dropout").get<double>();
    if (j.contains("loss")) t.variant = loss_variant_from_string(j.at("loss"));
    if (j.contains("old_loss_eps")) t.old_loss_eps = j.at("old_loss_eps").get<double>();
    return t;
}

EvalSettings eval_settings_from_json(const Json& j) {
    check_keys(j,
               {"reference", "pf_particles", "dk", "eval_times", "n_plot_samples", "stored_traces"},
               "evaluation config");
    EvalSettings e;
    if (j.contains("reference")) e.reference = reference_kind_from_string(j.at("reference"));
    if (j.contains("pf_particles")) e.pf_particles = j.at("pf_particles").get<int>();
    if (j.contains("dk")) e.dk = j.at("dk").get<std::vector<int>>();
    if (j.contains("eval_times")) e.eval_times = j.at("eval_times").get<std::vector<double>>();
    if (j.contains("n_plot_samples")) e.n_plot_samples = j.at("n_plot_samples").get<int>();
    if (j.contains("stored_traces")) e.stored_traces = j.at("stored_traces").get<std::string>();
    return e;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& file) {
    std::ifstream f(file);
    if (!f) throw ConfigError("cannot open config file " + file);
    Json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw ConfigError("config parse error in " + file + ": " + e.what());
    }
    check_keys(j, {"version", "name", "seed", "dataset", "model", "train", "evaluation", "out_dir"},
               "experiment config");
    if (!j.contains("version") || j.at("version").get<int>() != 1)
        throw ConfigError("experiment config: missing or unsupported 'version' (expected 1)");

    ExperimentConfig cfg;
    if (j.contains("name")) cfg.name = j.at("name").get<std::string>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();

    if (!j.contains("dataset")) throw ConfigError("experiment config: missing 'dataset'");
    const Json& d = j.at("dataset");
    check_keys(d, {"path", "spec", "generation"}, "dataset config");
    if (d.contains("path")) {
        cfg.dataset_path = d.at("path").get<std::string>();
    } else {
        if (!d.contains("spec")) throw ConfigError("dataset config: need 'path' or 'spec'");
        cfg.spec = spec_from_json(d.at("spec"));
        if (d.contains("generation")) cfg.gen = generation_config_from_json(d.at("generation"));
        cfg.gen.seed = cfg.gen.seed ? cfg.gen.seed : cfg.seed;
    }
    if (j.contains("model")) cfg.model = model_config_from_json(j.at("model"));
    if (j.contains("train")) cfg.train = train_config_from_json(j.at("train"), cfg.seed);
    cfg.train.seed = cfg.seed;
    if (j.contains("evaluation")) cfg.eval = eval_settings_from_json(j.at("evaluation"));
    return cfg;
}

DatasetSplits experiment_datasets(const ExperimentConfig& cfg) {
    if (!cfg.dataset_path.empty()) {
        DatasetSplits splits;
        splits.train = read_dataset((fs::path(cfg.dataset_path) / "train").string());
        splits.val = read_dataset((fs::path(cfg.dataset_path) / "val").string());
        splits.test = read_dataset((fs::path(cfg.dataset_path) / "test").string());
        return splits;
    }
    return generate(cfg.spec, cfg.gen);
}

NjodeParams experiment_model(const ExperimentConfig& cfg, const Dataset& train_ds) {
    return make_njode(train_ds.d_u(), train_ds.d_v(), cfg.model.d_h, cfg.model.hidden,
                      cfg.model.activation, cfg.model.sig_level, cfg.model.flags,
                      stream_key(cfg.seed, 0xA11C));
}

void write_history_csv(const std::vector<EpochRecord>& history, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    f << "epoch,train_loss,val_loss,wall_time\n";
    char buf[40];
    for (const auto& r : history) {
        f << r.epoch;
        std::snprintf(buf, sizeof(buf), "%.17g", r.train_loss);
        f << "," << buf;
        std::snprintf(buf, sizeof(buf), "%.17g", r.val_loss);
        f << "," << buf;
        std::snprintf(buf, sizeof(buf), "%.6f", r.wall_time);
        f << "," << buf << "\n";
    }
}

TrainResult run_training(const ExperimentConfig& cfg, const DatasetSplits& data,
                         const std::string& out_dir) {
    fs::create_directories(out_dir);
    NjodeParams params0 = experiment_model(cfg, data.train);
    TrainResult res = train(params0, data.train, data.val, cfg.train);
    save_checkpoint(res.best_params, (fs::path(out_dir) / "checkpoint.json").string());
    write_history_csv(res.history, (fs::path(out_dir) / "history.csv").string());
    return res;
}

void write_metrics_json(const MetricsReport& report, const ExperimentConfig& cfg,
                        const std::string& path) {
    Json j;
    j["name"] = cfg.name;
    j["seed"] = cfg.seed;
    j["val_loss_min"] = report.val_loss_min;
    j["best_epoch"] = report.best_epoch;
    j["test_loss"] = report.test_loss;
    j["eval_metric"] = report.eval_metric;
    Json dk = Json::object();
    for (const auto& [k, v] : report.dk) dk[std::to_string(k)] = v;
    j["dk"] = dk;
    j["runtime_sec"] = report.runtime_sec;
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    f << j.dump(2) << "\n";
}

MetricsReport run_evaluation(const ExperimentConfig& cfg, const NjodeParams& params,
                             const Dataset& test_ds, double val_loss_min, int best_epoch,
                             const std::string& out_dir) {
    fs::create_directories(out_dir);
    fs::create_directories(fs::path(out_dir) / "plots");
    const auto t0 = std::chrono::steady_clock::now();

    MetricsReport report;
    report.val_loss_min = val_loss_min;
    report.best_epoch = best_epoch;
    report.test_loss = dataset_loss(params, test_ds, LossVariant::Io);

    const std::vector<ForwardTrace> model = model_traces(params, test_ds);
    std::vector<ForwardTrace> reference;
    if (cfg.eval.reference == ReferenceKind::Stored) {
        if (cfg.eval.stored_traces.empty())
            throw ConfigError("evaluation: stored reference needs 'stored_traces'");
        reference = read_traces_csv(cfg.eval.stored_traces);
    } else {
        reference = build_reference_traces(test_ds, cfg.eval.reference, cfg.eval.pf_particles,
                                           cfg.seed);
    }
    report.eval_metric = evaluation_metric(model, reference);
    for (int k : cfg.eval.dk) report.dk.emplace_back(k, dk_estimate(model, reference, k));

    std::vector<double> eval_times = cfg.eval.eval_times;
    if (eval_times.empty()) {
        const double T = test_ds.grid->T;
        eval_times = {test_ds.grid->t[test_ds.grid->size() / 2], T};
    }
    report.error_rows = error_distribution(model, test_ds, eval_times);

    write_traces_csv(model, test_ds.output_names, (fs::path(out_dir) / "traces_model.csv").string());
    write_traces_csv(reference, test_ds.output_names,
                     (fs::path(out_dir) / "traces_reference.csv").string());
    {
        std::ofstream f(fs::path(out_dir) / "error_distribution.csv");
        f << "time,coordinate,name,mean_err,std_err\n";
        char buf[40];
        for (const auto& r : report.error_rows) {
            std::snprintf(buf, sizeof(buf), "%.17g", r.time);
            f << buf << "," << r.coordinate << "," << r.name << ",";
            std::snprintf(buf, sizeof(buf), "%.17g", r.mean_err);
            f << buf << ",";
            std::snprintf(buf, sizeof(buf), "%.17g", r.std_err);
            f << buf << "\n";
        }
    }

    const bool with_var = test_ds.config.include_squared_target && test_ds.d_v() >= 2;
    for (int i = 0; i < std::min(cfg.eval.n_plot_samples, test_ds.n()); ++i)
        write_sample_plot_svg(test_ds.samples[i], model[i], &reference[i], test_ds.output_names,
                              (fs::path(out_dir) / "plots" / ("sample_" + std::to_string(i) + ".svg"))
                                  .string(),
                              with_var ? 0 : -1, with_var ? 1 : -1);

    report.runtime_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_metrics_json(report, cfg, (fs::path(out_dir) / "metrics.json").string());
    return report;
}

MetricsReport run_experiment(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const DatasetSplits data = experiment_datasets(cfg);
    const TrainResult tr = run_training(cfg, data, cfg.out_dir);
    MetricsReport report =
        run_evaluation(cfg, tr.best_params, data.test, tr.best_val_loss, tr.best_epoch, cfg.out_dir);
    report.runtime_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_metrics_json(report, cfg, (fs::path(cfg.out_dir) / "metrics.json").string());
    return report;
}

LossComparison compare_losses(const ExperimentConfig& cfg) {
    const DatasetSplits data = experiment_datasets(cfg);
    fs::create_directories(cfg.out_dir);

    TrainConfig tc_old = cfg.train;
    tc_old.variant = LossVariant::Old;
    tc_old.track_jump_loss = true;
    TrainConfig tc_io = cfg.train;
    tc_io.variant = LossVariant::Io;
    tc_io.track_jump_loss = true;

    const NjodeParams params0 = experiment_model(cfg, data.train);
    const TrainResult r_old = train(params0, data.train, data.val, tc_old);
    const TrainResult r_io = train(params0, data.train, data.val, tc_io);

    {
        std::ofstream f(fs::path(cfg.out_dir) / "loss_comparison.csv");
        f << "epoch,jump_loss_old,jump_loss_io,val_loss_old,val_loss_io\n";
        char buf[40];
        for (std::size_t i = 0; i < r_old.history.size(); ++i) {
            f << r_old.history[i].epoch;
            std::snprintf(buf, sizeof(buf), "%.17g", r_old.history[i].val_jump_loss);
            f << "," << buf;
            std::snprintf(buf, sizeof(buf), "%.17g", r_io.history[i].val_jump_loss);
            f << "," << buf;
            std::snprintf(buf, sizeof(buf), "%.17g", r_old.history[i].val_loss);
            f << "," << buf;
            std::snprintf(buf, sizeof(buf), "%.17g", r_io.history[i].val_loss);
            f << "," << buf << "\n";
        }
    }

    LossComparison out;
    out.jump_old_final = r_old.history.back().val_jump_loss;
    out.jump_io_final = r_io.history.back().val_jump_loss;
    out.jump_old_min = out.jump_old_final;
    out.jump_io_min = out.jump_io_final;
    for (const auto& r : r_old.history) out.jump_old_min = std::min(out.jump_old_min, r.val_jump_loss);
    for (const auto& r : r_io.history) out.jump_io_min = std::min(out.jump_io_min, r.val_jump_loss);
    return out;
}

}  // namespace njode
