#include "njode/paths.hpp"

#include <algorithm>
#include <cmath>

#include "njode/errors.hpp"
#include "njode/rng.hpp"

namespace njode {

void TimeGrid::validate() const {
    if (t.empty()) throw InvalidInputError("TimeGrid: empty grid");
    if (std::abs(t.front()) > time_tol()) throw InvalidInputError("TimeGrid: first point must be 0");
    if (std::abs(t.back() - T) > time_tol())
        throw InvalidInputError("TimeGrid: last point must equal T");
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (!(t[i] > t[i - 1])) throw InvalidInputError("TimeGrid: times must be strictly increasing");
        if (t[i] - t[i - 1] > dt + 1e-12) throw InvalidInputError("TimeGrid: gap exceeds nominal dt");
    }
    if (!std::isfinite(T) || !std::isfinite(dt) || dt <= 0.0)
        throw InvalidInputError("TimeGrid: T and dt must be finite, dt > 0");
}

int TimeGrid::index_of(double time) const {
    auto it = std::lower_bound(t.begin(), t.end(), time - time_tol());
    if (it == t.end()) return -1;
    if (std::abs(*it - time) <= time_tol()) return static_cast<int>(it - t.begin());
    return -1;
}

TimeGrid TimeGrid::regular(double T, int n_steps) {
    if (n_steps < 1 || T <= 0.0) throw InvalidInputError("TimeGrid::regular: need n_steps >= 1, T > 0");
    TimeGrid g;
    g.T = T;
    g.dt = T / n_steps;
    g.t.resize(n_steps + 1);
    for (int i = 0; i <= n_steps; ++i) g.t[i] = T * i / n_steps;
    g.t.back() = T;
    g.validate();
    return g;
}

void ObservationPattern::validate(int grid_size, int d_u) const {
    if (obs_indices.empty() || obs_indices.front() != 0)
        throw InvalidInputError("ObservationPattern: index 0 must be present");
    for (std::size_t i = 1; i < obs_indices.size(); ++i)
        if (obs_indices[i] <= obs_indices[i - 1])
            throw InvalidInputError("ObservationPattern: indices must be strictly increasing");
    if (obs_indices.back() >= grid_size)
        throw InvalidInputError("ObservationPattern: index beyond grid");
    if (mask.rows() != n_obs()) throw InvalidInputError("ObservationPattern: mask row count mismatch");
    for (Eigen::Index i = 0; i < mask.rows(); ++i)
        for (Eigen::Index j = 0; j < mask.cols(); ++j)
            if (mask(i, j) != 0.0 && mask(i, j) != 1.0)
                throw InvalidInputError("ObservationPattern: mask entries must be 0 or 1");
    for (int j = 0; j < d_u; ++j)
        if (mask(0, j) != 1.0)
            throw InvalidInputError("ObservationPattern: inputs must be fully observed at t_0");
}

ObservationPattern sample_observation_pattern(const TimeGrid& grid, double p, int d_u, int d_v,
                                              MaskMode mode, double p_mask, std::uint64_t rng_seed) {
    if (grid.t.empty()) throw InvalidInputError("sample_observation_pattern: empty grid");
    if (!(p > 0.0 && p <= 1.0)) throw InvalidInputError("sample_observation_pattern: need 0 < p <= 1");
    if (mode == MaskMode::PerCoordinate && !(p_mask > 0.0 && p_mask <= 1.0))
        throw InvalidInputError("sample_observation_pattern: need 0 < p_mask <= 1");
    const int d = d_u + d_v;
    Rng rng(rng_seed);

    std::vector<int> indices{0};
    std::vector<std::vector<double>> rows;
    {
        std::vector<double> row0(d, 1.0);
        // inputs forced visible at t_0; per-coordinate mode still draws outputs
        if (mode == MaskMode::PerCoordinate)
            for (int j = d_u; j < d; ++j) row0[j] = rng.bernoulli(p_mask) ? 1.0 : 0.0;
        rows.push_back(std::move(row0));
    }
    for (int i = 1; i < grid.size(); ++i) {
        if (!rng.bernoulli(p)) continue;
        std::vector<double> row(d, 1.0);
        if (mode == MaskMode::PerCoordinate) {
            double any = 0.0;
            for (int j = 0; j < d; ++j) {
                row[j] = rng.bernoulli(p_mask) ? 1.0 : 0.0;
                any += row[j];
            }
            if (any == 0.0) continue;  // all-masked observations are dropped
        }
        indices.push_back(i);
        rows.push_back(std::move(row));
    }

    ObservationPattern pattern;
    pattern.obs_indices = std::move(indices);
    pattern.mask.resize(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (int j = 0; j < d; ++j) pattern.mask(static_cast<Eigen::Index>(i), j) = rows[i][j];
    pattern.validate(grid.size(), d_u);
    return pattern;
}

void PathSample::validate() const {
    if (!grid) throw InvalidInputError("PathSample: missing grid");
    grid->validate();
    if (u_dense.rows() != grid->size() || v_dense.rows() != grid->size())
        throw InvalidInputError("PathSample: dense values must cover the grid");
    pattern.validate(grid->size(), d_u());
    if (pattern.mask.cols() != d_u() + d_v())
        throw InvalidInputError("PathSample: mask width must be d_U + d_V");
    for (const auto& [k, v] : latent)
        if (!std::isfinite(v)) throw InvalidInputError("PathSample: non-finite latent value " + k);
    if (v_obs_noisy && v_obs_noisy->rows() != pattern.n_obs())
        throw InvalidInputError("PathSample: noisy targets must have one row per observation");
}

double tau(const ObservationPattern& pattern, const TimeGrid& grid, double t) {
    double best = 0.0;
    for (int idx : pattern.obs_indices) {
        const double ti = grid.t[idx];
        if (ti <= t + grid.time_tol())
            best = ti;
        else
            break;
    }
    return best;
}

namespace {

// Observation event times of the pattern (grid times), plus per-event values.
inline double event_time(const PathSample& s, int event) {
    return s.grid->t[s.pattern.obs_indices[event]];
}

}  // namespace

Vec interpolate_forward_fill(const PathSample& sample, double cutoff, double query) {
    const auto& pat = sample.pattern;
    const auto& grid = *sample.grid;
    const double tol = grid.time_tol();
    const int d_u = sample.d_u();
    const int n = pat.n_obs();
    Vec out(d_u);

    for (int j = 0; j < d_u; ++j) {
        // a: last event with coordinate j visible at time <= min(query, cutoff)
        const double amax = std::min(query, cutoff) + tol;
        int a = 0;
        for (int e = 0; e < n; ++e) {
            if (event_time(sample, e) > amax) break;
            if (pat.mask(e, j) == 1.0) a = e;
        }
        // b: first event with coordinate j visible and query <= t_b <= cutoff
        int b = -1;
        for (int e = a + 1; e < n; ++e) {
            const double te = event_time(sample, e);
            if (te > cutoff + tol) break;
            if (te >= query - tol && pat.mask(e, j) == 1.0) {
                b = e;
                break;
            }
        }
        const double va = sample.u_dense(pat.obs_indices[a], j);
        if (b < 0) {
            out[j] = va;  // constant extension
            continue;
        }
        const double t_prev = event_time(sample, b - 1);  // event right before b, any mask
        if (query <= t_prev + tol) {
            out[j] = va;
        } else {
            const double tb = event_time(sample, b);
            const double vb = sample.u_dense(pat.obs_indices[b], j);
            const double w = (query - t_prev) / (tb - t_prev);
            out[j] = va * (1.0 - w) + vb * w;
        }
    }
    return out;
}

PathStats path_stats(const PathSample& sample, double t) {
    const auto& grid = *sample.grid;
    const double tol = grid.time_tol();
    PathStats st;
    st.delta_t = grid.T;

    // n_t excludes t_0; delta_t is the min gap between consecutive observation
    // events <= t (the gap t_1 - t_0 counts), with sentinel T before t_1.
    int events = 0;
    double prev = 0.0, min_gap = grid.T;
    for (int idx : sample.pattern.obs_indices) {
        const double ti = grid.t[idx];
        if (ti > t + tol) break;
        if (events >= 1) min_gap = std::min(min_gap, ti - prev);
        prev = ti;
        ++events;
    }
    st.n_t = events - 1;
    st.delta_t = (events >= 2) ? min_gap : grid.T;

    double u_star = 0.0;
    for (int k = 0; k < grid.size(); ++k) {
        if (grid.t[k] > t + tol) break;
        u_star = std::max(u_star, interpolate_forward_fill(sample, t, grid.t[k]).lpNorm<1>());
    }
    st.u_star = u_star;
    return st;
}

}  // namespace njode
