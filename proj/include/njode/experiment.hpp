#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "njode/datasets.hpp"
#include "njode/metrics.hpp"
#include "njode/model.hpp"
#include "njode/references.hpp"
#include "njode/train.hpp"

namespace njode {

struct ModelConfig {
    int d_h = 100;
    std::vector<int> hidden{100};
    Activation activation = Activation::Tanh;
    int sig_level = 3;
    NjodeFlags flags;
};

struct EvalSettings {
    ReferenceKind reference = ReferenceKind::Analytic;
    int pf_particles = 1000;
    std::vector<int> dk{1, 2, 3};
    std::vector<double> eval_times;  // defaults to {T/2, T}
    int n_plot_samples = 2;
    std::string stored_traces;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::uint64_t seed = 0;
    std::string dataset_path;  // nonempty: load train/val/test subdirectories
    ModelSpec spec;
    GenerationConfig gen;
    ModelConfig model;
    TrainConfig train;
    EvalSettings eval;
    std::string out_dir = "out";
};

ExperimentConfig load_experiment_config(const std::string& file);

struct MetricsReport {
    double val_loss_min = 0.0;
    int best_epoch = -1;
    double test_loss = 0.0;
    double eval_metric = 0.0;
    std::vector<std::pair<int, double>> dk;
    std::vector<ErrorRow> error_rows;
    double runtime_sec = 0.0;
};

/// Loads or generates the datasets per config (deterministic in the seed).
DatasetSplits experiment_datasets(const ExperimentConfig& cfg);
NjodeParams experiment_model(const ExperimentConfig& cfg, const Dataset& train_ds);

/// Training phase: writes checkpoint.json and history.csv into out_dir.
TrainResult run_training(const ExperimentConfig& cfg, const DatasetSplits& data,
                         const std::string& out_dir);

/// Evaluation phase: metrics.json, error_distribution.csv, model/reference
/// trace CSVs and SVG sample plots.
MetricsReport run_evaluation(const ExperimentConfig& cfg, const NjodeParams& params,
                             const Dataset& test_ds, double val_loss_min, int best_epoch,
                             const std::string& out_dir);

/// Full pipeline: generate-or-load, train, evaluate, write artifacts.
MetricsReport run_experiment(const ExperimentConfig& cfg);

struct LossComparison {
    double jump_old_final = 0.0, jump_io_final = 0.0;
    double jump_old_min = 0.0, jump_io_min = 0.0;
    double ratio_final() const { return jump_io_final / jump_old_final; }
};

/// Trains the same architecture twice (original vs IO loss) on the config's
/// dataset, monitoring the pure jump loss on validation; writes
/// loss_comparison.csv into out_dir.
LossComparison compare_losses(const ExperimentConfig& cfg);

void write_history_csv(const std::vector<EpochRecord>& history, const std::string& path);
void write_metrics_json(const MetricsReport& report, const ExperimentConfig& cfg,
                        const std::string& path);

}  // namespace njode
