#pragma once

#include <cstdint>
#include <vector>

#include "njode/datasets.hpp"
#include "njode/losses.hpp"
#include "njode/model.hpp"
#include "njode/parallel.hpp"

namespace njode {

struct TrainConfig {
    int epochs = 200;
    int batch_size = 200;
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 0.0005;
    double dropout = 0.1;
    std::uint64_t seed = 0;
    LossVariant variant = LossVariant::Io;
    double old_loss_eps = 1e-10;
    bool track_jump_loss = false;  // also evaluate the pure jump loss on val
    par::Exec exec = par::Exec::OpenMP;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;  // validation IO loss, the early-stopping metric
    double wall_time = 0.0;
    double val_jump_loss = 0.0;  // filled when track_jump_loss
};

struct TrainResult {
    NjodeParams best_params;
    std::vector<EpochRecord> history;
    int best_epoch = -1;
    double best_val_loss = 0.0;
};

/// Mini-batch training with Adam. Per-path gradients within a batch are
/// computed in parallel over fixed chunks and reduced in path-index order, so
/// two runs with identical seeds produce identical histories regardless of
/// the thread count. Returns the parameters at the epoch of minimal
/// validation IO loss.
TrainResult train(const NjodeParams& params0, const Dataset& train_ds, const Dataset& val_ds,
                  const TrainConfig& cfg);

/// Mean per-path loss of an evaluation-mode forward pass over the dataset.
double dataset_loss(const NjodeParams& params, const Dataset& ds, LossVariant variant,
                    double eps = 1e-10, par::Exec exec = par::Exec::OpenMP);
LossReport dataset_loss_report(const NjodeParams& params, const Dataset& ds, LossVariant variant,
                               double eps = 1e-10, par::Exec exec = par::Exec::OpenMP);

/// Loss assembled on the tape from the per-observation readout nodes; value
/// matches the pure loss functions on the same trace.
int tape_loss_node(Tape& tape, const TapedForward& fwd, const PathSample& sample, LossVariant v,
                   double eps);

/// One mini-batch gradient: mean per-path loss over `indices`, gradients
/// accumulated into `grads` (overwritten). Exposed for tests and benchmarks.
double batch_gradient(const NjodeParams& params, const Dataset& ds, const std::vector<int>& indices,
                      const TrainConfig& cfg, int epoch, NjodeParams& grads, par::Exec exec);

}  // namespace njode
