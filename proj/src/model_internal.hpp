#pragma once

#include <cmath>
#include <cstring>
#include <vector>

#include "njode/model.hpp"

// Shared between the grid forward pass and the online predictor so both sides
// run identical floating-point operations.
namespace njode::detail {

inline void apply_activation(double* v, int n, Activation act) {
    if (act == Activation::Relu) {
        for (int i = 0; i < n; ++i) v[i] = v[i] > 0.0 ? v[i] : 0.0;
    } else {
        for (int i = 0; i < n; ++i) v[i] = std::tanh(v[i]);
    }
}

/// Per-observation feature blocks; entry e covers t in [t_e, t_{e+1}).
struct ObsCache {
    int grid_idx = 0;
    double t = 0.0;
    double u_star = 0.0;
    double n_count = 0.0;
    double delta = 0.0;
    TruncatedSignature sig;
    Vec obs_imputed;
    Vec mask_u;
};

std::vector<ObsCache> build_obs_caches(const NjodeParams& p, const PathSample& s);

/// Drift tail: [t, tau, sig, U0, u_star, n, delta]; slot 0 is rewritten per step.
void fill_drift_tail(std::vector<double>& tail, const ObsCache& c, const Vec& u0);

/// Jump tail: [t_i, sig, U0, u_star, n, delta, obs zero-imputed, mask].
void fill_jump_tail(std::vector<double>& tail, const ObsCache& c, const Vec& u0);

Vec eval_mlp(const MlpParams& p, const Vec& x);
Vec eval_bounded(const BoundedNetParams& p, const Vec& x);
Vec eval_readout(const NjodeParams& p, const Vec& H);
Vec assemble(const Vec& head, const std::vector<double>& tail, bool use_head);

}  // namespace njode::detail
