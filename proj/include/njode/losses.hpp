#pragma once

#include <string>
#include <vector>

#include "njode/model.hpp"
#include "njode/paths.hpp"

namespace njode {

enum class LossVariant { Io, Old, Jump, Noisy };

LossVariant loss_variant_from_string(const std::string& s);
std::string to_string(LossVariant v);

/// Batch-level summary; total is the mean of per_path.
struct LossReport {
    double total = 0.0;
    std::vector<double> per_path;
    std::vector<int> n_terms;
    bool any_zero_obs = false;

    static LossReport from_per_path(std::vector<double> per_path, std::vector<int> n_terms);
};

/// Two-term squared objective: post-jump and pre-jump errors at observations
/// i >= 1, masked to the observed output coordinates, averaged over the
/// path's observation count. A path without observations after t_0 scores 0.
double io_loss(const ForwardTrace& trace, const PathSample& sample, int* n_terms = nullptr);

/// Original objective: the two masked norms are summed before squaring; eps
/// stabilizes the square roots.
double old_loss(const ForwardTrace& trace, const PathSample& sample, double eps = 1e-10,
                int* n_terms = nullptr);

/// Post-jump term only; monitors how well observations are reconstructed
/// right after they are fed to the model.
double jump_loss(const ForwardTrace& trace, const PathSample& sample, int* n_terms = nullptr);

/// Pre-jump term against the noisy observed targets O. Requires the sample to
/// carry observation noise values.
double noisy_loss(const ForwardTrace& trace, const PathSample& sample, int* n_terms = nullptr);

double path_loss(LossVariant v, const ForwardTrace& trace, const PathSample& sample,
                 double eps = 1e-10, int* n_terms = nullptr);

}  // namespace njode
