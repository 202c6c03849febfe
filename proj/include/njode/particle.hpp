#pragma once

#include <cstdint>

#include "njode/datasets.hpp"
#include "njode/parallel.hpp"
#include "njode/paths.hpp"

namespace njode {

/// Sequential importance sampling state: one parameter vector per particle
/// with normalized weights. No resampling; when every particle's transition
/// density degenerates numerically, the weights are reset to uniform and
/// reset_events is incremented.
struct ParticleSet {
    RowMat particles;  // (N, n_params); GBM: (mu, sigma), CIR: (a, b0, sigma)
    Vec log_weights;   // normalized: logsumexp == 0
    Vec weights;
    int reset_events = 0;

    int n() const { return static_cast<int>(particles.rows()); }
    void validate() const;
};

/// Particles drawn from the prior of the spec (GBMUncertain or CIRUncertain),
/// uniform weights.
ParticleSet pf_init(const ModelSpec& spec, int n_particles, std::uint64_t seed);

/// One correction step with the transition density from x_prev (at time
/// t_prev) to x_new over dt. For the time-dependent CIR variant the mean
/// parameter is frozen at its value at t_prev.
ParticleSet pf_update(const ParticleSet& ps, const ModelSpec& spec, double x_prev, double x_new,
                      double dt, double t_prev = 0.0, par::Exec exec = par::Exec::OpenMP);

/// Weighted mean of the particle parameters.
Vec pf_estimate(const ParticleSet& ps);

/// Delta-method standard error of the weighted mean of column `col`.
double pf_weighted_se(const ParticleSet& ps, int col);

}  // namespace njode
