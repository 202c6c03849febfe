#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "njode/checkpoint.hpp"
#include "njode/dataset_io.hpp"
#include "njode/errors.hpp"
#include "njode/experiment.hpp"
#include "njode/parallel.hpp"

namespace fs = std::filesystem;
using njode::ConfigError;
using njode::DivergenceError;
using Json = nlohmann::json;

namespace {

struct GenerateSpecFile {
    njode::ModelSpec spec;
    njode::GenerationConfig gen;
};

GenerateSpecFile load_generate_spec(const std::string& file) {
    std::ifstream f(file);
    if (!f) throw ConfigError("cannot open spec file " + file);
    Json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw ConfigError("spec parse error: " + std::string(e.what()));
    }
    njode::check_keys(j, {"version", "spec", "generation"}, "generate spec");
    if (!j.contains("version") || j.at("version").get<int>() != 1)
        throw ConfigError("generate spec: missing or unsupported 'version' (expected 1)");
    GenerateSpecFile out;
    out.spec = njode::spec_from_json(j.at("spec"));
    if (j.contains("generation")) out.gen = njode::generation_config_from_json(j.at("generation"));
    return out;
}

int cmd_generate(const std::string& spec_file, const std::string& out_dir) {
    const GenerateSpecFile g = load_generate_spec(spec_file);
    const njode::DatasetSplits splits = njode::generate(g.spec, g.gen);
    njode::write_dataset(splits.train, (fs::path(out_dir) / "train").string());
    njode::write_dataset(splits.val, (fs::path(out_dir) / "val").string());
    njode::write_dataset(splits.test, (fs::path(out_dir) / "test").string());
    std::cout << "wrote " << splits.train.n() << "/" << splits.val.n() << "/" << splits.test.n()
              << " train/val/test paths to " << out_dir << "\n";
    return 0;
}

int cmd_train(const std::string& config_file, const std::string& out_override) {
    njode::ExperimentConfig cfg = njode::load_experiment_config(config_file);
    if (!out_override.empty()) cfg.out_dir = out_override;
    const njode::DatasetSplits data = njode::experiment_datasets(cfg);
    const njode::TrainResult res = njode::run_training(cfg, data, cfg.out_dir);
    std::cout << "best val loss " << res.best_val_loss << " at epoch " << res.best_epoch
              << "; checkpoint in " << cfg.out_dir << "\n";
    return 0;
}

int cmd_evaluate(const std::string& model_file, const std::string& data_dir,
                 const std::string& reference, const std::string& out_dir, int pf_particles,
                 const std::string& stored) {
    njode::ExperimentConfig cfg;
    cfg.eval.reference = njode::reference_kind_from_string(reference);
    cfg.eval.pf_particles = pf_particles;
    cfg.eval.stored_traces = stored;
    cfg.out_dir = out_dir;
    const njode::Dataset test = njode::read_dataset(data_dir);
    const njode::NjodeParams params = njode::load_checkpoint(model_file);
    const njode::MetricsReport rep = njode::run_evaluation(cfg, params, test, 0.0, -1, out_dir);
    std::cout << "test loss " << rep.test_loss << ", eval metric " << rep.eval_metric << "\n";
    for (const auto& [k, v] : rep.dk) std::cout << "d_" << k << " = " << v << "\n";
    return 0;
}

int cmd_baseline(const std::string& data_dir, const std::string& reference,
                 const std::string& out_dir, int pf_particles, std::uint64_t seed) {
    const njode::Dataset ds = njode::read_dataset(data_dir);
    int resets = 0;
    const auto traces = njode::build_reference_traces(
        ds, njode::reference_kind_from_string(reference), pf_particles, seed,
        njode::par::Exec::OpenMP, &resets);
    fs::create_directories(out_dir);
    const std::string file = (fs::path(out_dir) / ("traces_" + reference + ".csv")).string();
    njode::write_traces_csv(traces, ds.output_names, file);
    // baseline quality in the model's own objective
    double loss = 0.0;
    for (int i = 0; i < ds.n(); ++i) loss += njode::io_loss(traces[i], ds.samples[i]);
    loss /= std::max(1, ds.n());
    std::cout << "baseline '" << reference << "' io loss " << loss;
    if (reference == "pf") std::cout << ", weight resets " << resets;
    std::cout << "; traces in " << file << "\n";
    return 0;
}

int cmd_compare_losses(const std::string& config_file) {
    const njode::ExperimentConfig cfg = njode::load_experiment_config(config_file);
    const njode::LossComparison cmp = njode::compare_losses(cfg);
    std::cout << "final jump loss: old-trained " << cmp.jump_old_final << ", io-trained "
              << cmp.jump_io_final << " (ratio " << cmp.ratio_final() << ")\n";
    std::cout << "min jump loss:   old-trained " << cmp.jump_old_min << ", io-trained "
              << cmp.jump_io_min << "\n";
    return 0;
}

int cmd_report(const std::string& in_dir) {
    const fs::path dir(in_dir);
    if (fs::exists(dir / "metrics.json")) {
        std::ifstream f(dir / "metrics.json");
        Json j;
        f >> j;
        std::cout << "experiment: " << j.value("name", std::string("?")) << "\n";
        std::cout << "  best val loss: " << j.value("val_loss_min", 0.0) << " (epoch "
                  << j.value("best_epoch", -1) << ")\n";
        std::cout << "  test loss:     " << j.value("test_loss", 0.0) << "\n";
        std::cout << "  eval metric:   " << j.value("eval_metric", 0.0) << "\n";
        if (j.contains("dk"))
            for (const auto& [k, v] : j.at("dk").items())
                std::cout << "  d_" << k << ":          " << v.get<double>() << "\n";
    }
    if (fs::exists(dir / "error_distribution.csv")) {
        std::ifstream f(dir / "error_distribution.csv");
        std::string line;
        std::getline(f, line);
        std::cout << "error distribution (time, coordinate, name, mean, std):\n";
        while (std::getline(f, line)) std::cout << "  " << line << "\n";
    }
    if (fs::exists(dir / "loss_comparison.csv")) {
        std::ifstream f(dir / "loss_comparison.csv");
        std::string line, last;
        std::getline(f, line);
        while (std::getline(f, line))
            if (!line.empty()) last = line;
        std::cout << "loss comparison (final epoch row): " << last << "\n";
    }
    if (!fs::exists(dir / "metrics.json") && !fs::exists(dir / "error_distribution.csv") &&
        !fs::exists(dir / "loss_comparison.csv"))
        throw ConfigError("report: no report files found in " + in_dir);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Input-Output Neural Jump ODE: datasets, training, filtering baselines"};
    app.require_subcommand(1);

    std::string spec_file, config_file, out_dir, model_file, data_dir, in_dir, stored;
    std::string reference = "analytic";
    int pf_particles = 1000;
    std::uint64_t seed = 0;

    auto* gen = app.add_subcommand("generate", "generate train/val/test datasets from a spec file");
    gen->add_option("--spec", spec_file, "JSON spec file")->required();
    gen->add_option("--out", out_dir, "output directory")->required();

    auto* tr = app.add_subcommand("train", "train a model per experiment config");
    tr->add_option("--config", config_file, "experiment config JSON")->required();
    tr->add_option("--out", out_dir, "override output directory");

    auto* ev = app.add_subcommand("evaluate", "evaluate a checkpoint against a reference");
    ev->add_option("--model", model_file, "checkpoint file")->required();
    ev->add_option("--data", data_dir, "dataset directory (one split)")->required();
    ev->add_option("--reference", reference, "analytic|pf|kalman|stored");
    ev->add_option("--out", out_dir, "output directory")->required();
    ev->add_option("--pf-particles", pf_particles, "particle count for the pf reference");
    ev->add_option("--stored", stored, "trace CSV for the stored reference");

    auto* bl = app.add_subcommand("baseline", "run a reference filter over a dataset");
    bl->add_option("--data", data_dir, "dataset directory (one split)")->required();
    bl->add_option("--reference", reference, "analytic|pf|kalman");
    bl->add_option("--out", out_dir, "output directory")->required();
    bl->add_option("--pf-particles", pf_particles, "particle count");
    bl->add_option("--seed", seed, "seed for the pf reference");

    auto* cl = app.add_subcommand("compare-losses", "train twice (old vs io loss), log jump loss");
    cl->add_option("--config", config_file, "experiment config JSON")->required();

    auto* rp = app.add_subcommand("report", "render tables from a result directory");
    rp->add_option("--in", in_dir, "directory with metrics/report CSVs")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_generate(spec_file, out_dir);
        if (tr->parsed()) return cmd_train(config_file, out_dir);
        if (ev->parsed())
            return cmd_evaluate(model_file, data_dir, reference, out_dir, pf_particles, stored);
        if (bl->parsed()) return cmd_baseline(data_dir, reference, out_dir, pf_particles, seed);
        if (cl->parsed()) return cmd_compare_losses(config_file);
        if (rp->parsed()) return cmd_report(in_dir);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const njode::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const DivergenceError& e) {
        std::cerr << "numerical divergence: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
