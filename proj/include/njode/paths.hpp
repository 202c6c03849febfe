#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace njode {

using Vec = Eigen::VectorXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Simulation/evaluation grid on [0, T]. Strictly increasing, starts at 0,
/// ends at T (within 1e-12 * T), no gap larger than the nominal step dt.
struct TimeGrid {
    std::vector<double> t;
    double T = 0.0;
    double dt = 0.0;

    int size() const { return static_cast<int>(t.size()); }
    double time_tol() const { return 1e-12 * std::max(T, 1.0); }
    /// Throws InvalidInputError when the invariants fail.
    void validate() const;
    /// Index of grid point equal to `time` within tolerance, or -1.
    int index_of(double time) const;

    static TimeGrid regular(double T, int n_steps);
};

/// Which grid points carry an observation and which of the d = d_U + d_V
/// coordinates are visible there. Index 0 (t_0 = 0) is always an observation
/// with all input coordinates visible.
struct ObservationPattern {
    std::vector<int> obs_indices;  // ascending grid indices, first is 0
    RowMat mask;                   // (n_obs, d), entries in {0,1}

    int n_obs() const { return static_cast<int>(obs_indices.size()); }
    void validate(int grid_size, int d_u) const;
};

enum class MaskMode { Full, PerCoordinate };

/// Draws the observation pattern: each grid index >= 1 keeps an observation
/// independently with probability p; index 0 is forced. In PerCoordinate mode
/// every coordinate is visible independently with probability p_mask, and an
/// observation whose mask would be all-zero is dropped.
ObservationPattern sample_observation_pattern(const TimeGrid& grid, double p, int d_u, int d_v,
                                              MaskMode mode, double p_mask, std::uint64_t rng_seed);

/// One realization of an input-output path on a shared grid. `latent` keeps
/// the generative parameters (ground truth for evaluation).
struct PathSample {
    std::shared_ptr<const TimeGrid> grid;
    RowMat u_dense;  // (n_grid, d_U)
    RowMat v_dense;  // (n_grid, d_V)
    ObservationPattern pattern;
    std::map<std::string, double> latent;
    /// Noisy observed targets O_{t_i} (one row per observation), present only
    /// when the dataset was generated with observation noise on V.
    std::optional<RowMat> v_obs_noisy;

    int d_u() const { return static_cast<int>(u_dense.cols()); }
    int d_v() const { return static_cast<int>(v_dense.cols()); }
    void validate() const;
};

/// Last observation time <= t (0 when only t_0 was seen).
double tau(const ObservationPattern& pattern, const TimeGrid& grid, double t);

/// Forward-fill interpolation of the observed input coordinates without
/// lookahead: the value at `query` uses only observations up to `cutoff`.
/// A coordinate stays at its last observed value until the observation event
/// preceding its next visible observation in (query, cutoff], then moves
/// linearly to it.
Vec interpolate_forward_fill(const PathSample& sample, double cutoff, double query);

struct PathStats {
    double u_star = 0.0;   // running max of |interpolated U|_1 on grid points <= t
    int n_t = 0;           // observations with t_i <= t, excluding t_0
    double delta_t = 0.0;  // min gap between consecutive observations <= t, or T
};

PathStats path_stats(const PathSample& sample, double t);

}  // namespace njode
