#include "njode/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "njode/adam.hpp"
#include "njode/errors.hpp"

namespace njode {

void TrainConfig::validate() const {
    if (epochs < 0) throw InvalidInputError("TrainConfig: epochs >= 0 required");
    if (batch_size < 1) throw InvalidInputError("TrainConfig: batch_size >= 1 required");
    if (!(lr > 0.0)) throw InvalidInputError("TrainConfig: lr > 0 required");
    if (dropout < 0.0 || dropout >= 1.0) throw InvalidInputError("TrainConfig: dropout in [0, 1)");
}

int tape_loss_node(Tape& tape, const TapedForward& fwd, const PathSample& sample, LossVariant v,
                   double eps) {
    const int d_u = sample.d_u(), d_v = sample.d_v();
    const int n = sample.pattern.n_obs() - 1;
    if (n == 0) return tape.scalar_zero();
    if (v == LossVariant::Noisy && !sample.v_obs_noisy)
        throw InvalidInputError("tape_loss_node: sample carries no observation noise values");

    int acc = -1;
    for (int i = 1; i <= n; ++i) {
        const int gi = sample.pattern.obs_indices[i];
        const double* target = (v == LossVariant::Noisy) ? &(*sample.v_obs_noisy)(i, 0)
                                                         : &sample.v_dense(gi, 0);
        const double* mask = &sample.pattern.mask(i, d_u);
        int term = -1;
        switch (v) {
            case LossVariant::Io: {
                const int post = tape.sq_err_masked(fwd.g_post_node[i], target, mask, d_v);
                const int pre = tape.sq_err_masked(fwd.g_left_node[i], target, mask, d_v);
                term = tape.scalar_add(post, pre);
                break;
            }
            case LossVariant::Old: {
                const int post = tape.sq_err_masked(fwd.g_post_node[i], target, mask, d_v);
                const int pre = tape.sq_err_masked(fwd.g_left_node[i], target, mask, d_v);
                const int sa = tape.scalar_sqrt_shift(post, eps);
                const int sb = tape.scalar_sqrt_shift(pre, eps);
                term = tape.scalar_square(tape.scalar_add(sa, sb));
                break;
            }
            case LossVariant::Jump:
                term = tape.sq_err_masked(fwd.g_post_node[i], target, mask, d_v);
                break;
            case LossVariant::Noisy:
                term = tape.sq_err_masked(fwd.g_left_node[i], target, mask, d_v);
                break;
        }
        acc = (acc < 0) ? term : tape.scalar_add(acc, term);
    }
    return tape.scalar_scale(acc, 1.0 / n);
}

namespace {

struct Worker {
    Tape tape;
    NjodeParams grads;
    GradSink sink;
    double loss_sum = 0.0;
    bool initialized = false;
};

constexpr int kChunk = 8;  // fixed chunking keeps reductions thread-count independent

double batch_gradient_ws(const NjodeParams& params, const Dataset& ds, const int* idx, int count,
                         const TrainConfig& cfg, int epoch, NjodeParams& grads,
                         std::vector<Worker>& workers, par::Exec exec) {
    const int n_chunks = (count + kChunk - 1) / kChunk;
    if (static_cast<int>(workers.size()) < n_chunks) workers.resize(n_chunks);

    par::for_each_index(n_chunks, exec, [&](int c) {
        Worker& w = workers[c];
        if (!w.initialized) {
            w.grads = njode_zero_grads(params);
            w.sink = njode_grad_sink(w.grads);
            w.initialized = true;
        } else {
            njode_scale(w.grads, 0.0);
        }
        w.loss_sum = 0.0;
        const int lo = c * kChunk, hi = std::min(count, lo + kChunk);
        for (int p = lo; p < hi; ++p) {
            const int i = idx[p];
            Rng rng(cfg.seed, 0xD407, static_cast<std::uint64_t>(epoch),
                    static_cast<std::uint64_t>(i));
            const TapedForward fwd =
                forward_path_train(params, ds.samples[i], w.tape, cfg.dropout, rng, false);
            const int loss = tape_loss_node(w.tape, fwd, ds.samples[i], cfg.variant, cfg.old_loss_eps);
            w.loss_sum += w.tape.scalar_value(loss);
            w.tape.backward(loss, w.sink);
        }
    });

    double loss_total = 0.0;
    for (int c = 0; c < n_chunks; ++c) {
        njode_accumulate(grads, workers[c].grads);
        loss_total += workers[c].loss_sum;
    }
    njode_scale(grads, 1.0 / count);
    return loss_total / count;
}

}  // namespace

double batch_gradient(const NjodeParams& params, const Dataset& ds, const std::vector<int>& indices,
                      const TrainConfig& cfg, int epoch, NjodeParams& grads, par::Exec exec) {
    std::vector<Worker> workers;
    njode_scale(grads, 0.0);
    return batch_gradient_ws(params, ds, indices.data(), static_cast<int>(indices.size()), cfg,
                             epoch, grads, workers, exec);
}

double dataset_loss(const NjodeParams& params, const Dataset& ds, LossVariant variant, double eps,
                    par::Exec exec) {
    return dataset_loss_report(params, ds, variant, eps, exec).total;
}

LossReport dataset_loss_report(const NjodeParams& params, const Dataset& ds, LossVariant variant,
                               double eps, par::Exec exec) {
    const int n = ds.n();
    std::vector<double> per_path(n);
    std::vector<int> n_terms(n);
    par::for_each_index(n, exec, [&](int i) {
        const ForwardTrace tr = forward_path(params, ds.samples[i], false);
        per_path[i] = path_loss(variant, tr, ds.samples[i], eps, &n_terms[i]);
    });
    return LossReport::from_per_path(std::move(per_path), std::move(n_terms));
}

TrainResult train(const NjodeParams& params0, const Dataset& train_ds, const Dataset& val_ds,
                  const TrainConfig& cfg) {
    cfg.validate();
    params0.validate();
    if (train_ds.n() == 0 || val_ds.n() == 0)
        throw InvalidInputError("train: datasets must be nonempty");
    if (train_ds.d_u() != params0.d_u || train_ds.d_v() != params0.d_v ||
        val_ds.d_u() != params0.d_u || val_ds.d_v() != params0.d_v)
        throw InvalidInputError("train: dataset dimensions do not match the model");

    TrainResult res;
    res.best_params = params0;
    res.best_val_loss = std::numeric_limits<double>::infinity();
    if (cfg.epochs == 0) return res;

    NjodeParams params = params0;
    NjodeParams grads = njode_zero_grads(params0);
    ParamSpans pspans = njode_param_spans(params);
    ParamSpans gspans = njode_param_spans(grads);
    AdamState adam = AdamState::init(pspans.total, cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps,
                                     cfg.weight_decay);
    std::vector<Worker> workers;
    std::vector<int> order(train_ds.n());
    std::iota(order.begin(), order.end(), 0);

    const auto t_start = std::chrono::steady_clock::now();
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::mt19937_64 shuffle_rng(stream_key(cfg.seed, 0x5F, static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double epoch_loss = 0.0;
        int n_batches = 0;
        try {
            for (int start = 0; start < train_ds.n(); start += cfg.batch_size) {
                const int count = std::min(cfg.batch_size, train_ds.n() - start);
                njode_scale(grads, 0.0);
                epoch_loss += batch_gradient_ws(params, train_ds, order.data() + start, count, cfg,
                                                epoch, grads, workers, cfg.exec);
                ++n_batches;
                adam_step(pspans, gspans, adam);
            }
        } catch (const DivergenceError& e) {
            throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ": " +
                                  e.what());
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = epoch_loss / std::max(1, n_batches);
        rec.val_loss = dataset_loss(params, val_ds, LossVariant::Io, cfg.old_loss_eps, cfg.exec);
        if (cfg.track_jump_loss)
            rec.val_jump_loss =
                dataset_loss(params, val_ds, LossVariant::Jump, cfg.old_loss_eps, cfg.exec);
        rec.wall_time =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        res.history.push_back(rec);

        if (rec.val_loss < res.best_val_loss) {
            res.best_val_loss = rec.val_loss;
            res.best_epoch = epoch;
            res.best_params = params;
        }
    }
    return res;
}

}  // namespace njode
