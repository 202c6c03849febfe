#pragma once

#include <string>
#include <vector>

#include "njode/datasets.hpp"
#include "njode/model.hpp"

namespace njode {

/// Mean over test paths of the mean over grid points of |G_t - ref_t|_2^2
/// (squared-L2 convention for the distance to the reference prediction).
double evaluation_metric(const std::vector<ForwardTrace>& model,
                         const std::vector<ForwardTrace>& reference);

/// Monte Carlo estimate of the pseudo-metric d_k between the two prediction
/// processes: conditional on a path having at least k observations after t_0,
/// the expected |.|_1 discrepancy of the pre- and post-jump values at the
/// k-th observation. Throws when no path has k observations.
double dk_estimate(const std::vector<ForwardTrace>& model,
                   const std::vector<ForwardTrace>& reference, int k);

/// max(0, E[mu^2] - E[mu]^2) per grid point from a trace that predicts both
/// moments in columns mean_col and sq_col.
Vec cond_variance(const ForwardTrace& trace, int mean_col = 0, int sq_col = 1);

struct ErrorRow {
    double time = 0.0;
    int coordinate = 0;
    std::string name;
    double mean_err = 0.0;
    double std_err = 0.0;
};

/// Signed prediction errors (prediction - truth) against the dataset's dense
/// target values, summarized per (eval time, output coordinate).
std::vector<ErrorRow> error_distribution(const std::vector<ForwardTrace>& predictions,
                                         const Dataset& ds, const std::vector<double>& eval_times);

/// Same summary for per-path scalar estimates (baseline estimators evaluated
/// at a single time).
ErrorRow summarize_errors(const std::vector<double>& errors, double time, int coordinate,
                          const std::string& name);

}  // namespace njode
