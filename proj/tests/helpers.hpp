#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <vector>

#include "njode/adam.hpp"
#include "njode/paths.hpp"
#include "njode/signature.hpp"

namespace testutil {

using njode::RowMat;
using njode::Vec;

/// Independent signature oracle: iterated integrals of a piecewise-linear
/// path by trapezoidal quadrature on a fine grid, level by level. Values are
/// the path at the breakpoints; the result is flattened like
/// TruncatedSignature (level 0 first).
inline Vec quadrature_signature(const std::vector<double>& times, const std::vector<Vec>& values,
                                int m, int steps_per_segment = 2500) {
    const int d = static_cast<int>(values.front().size());
    const int n_seg = static_cast<int>(times.size()) - 1;
    const int N = n_seg * steps_per_segment;

    // fine path
    std::vector<Vec> x(N + 1);
    for (int s = 0; s < n_seg; ++s)
        for (int i = 0; i <= steps_per_segment; ++i) {
            const double w = static_cast<double>(i) / steps_per_segment;
            x[s * steps_per_segment + i] = values[s] * (1.0 - w) + values[s + 1] * w;
        }

    Vec out(njode::sig_dim(d, m));
    out[0] = 1.0;
    // traj holds the running iterated integrals of the previous level at
    // every fine grid point
    std::vector<Vec> prev(N + 1, Vec::Ones(1));
    std::int64_t offset = 1;
    std::int64_t level_len = 1;
    for (int level = 1; level <= m; ++level) {
        level_len *= d;
        std::vector<Vec> cur(N + 1, Vec::Zero(level_len));
        for (int i = 0; i < N; ++i) {
            cur[i + 1] = cur[i];
            const Vec dx = x[i + 1] - x[i];
            const Vec avg = 0.5 * (prev[i] + prev[i + 1]);
            for (Eigen::Index p = 0; p < avg.size(); ++p)
                for (int j = 0; j < d; ++j) cur[i + 1][p * d + j] += avg[p] * dx[j];
        }
        out.segment(offset, level_len) = cur[N];
        offset += level_len;
        prev = std::move(cur);
    }
    return out;
}

/// Central finite differences of a scalar function over all parameter spans.
inline std::vector<double> fd_gradient(njode::ParamSpans& spans,
                                       const std::function<double()>& loss, double h = 1e-5) {
    std::vector<double> grad;
    for (auto& [ptr, n] : spans.spans)
        for (std::size_t i = 0; i < n; ++i) {
            const double orig = ptr[i];
            ptr[i] = orig + h;
            const double up = loss();
            ptr[i] = orig - h;
            const double down = loss();
            ptr[i] = orig;
            grad.push_back((up - down) / (2.0 * h));
        }
    return grad;
}

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
}

/// Builds a PathSample directly from observation data (for unit tests).
/// obs: list of (grid_index, mask row of width d_u + d_v).
inline njode::PathSample make_sample(const njode::TimeGrid& grid, const RowMat& u_dense,
                                     const RowMat& v_dense, const std::vector<int>& obs_indices,
                                     const RowMat& mask) {
    njode::PathSample s;
    s.grid = std::make_shared<njode::TimeGrid>(grid);
    s.u_dense = u_dense;
    s.v_dense = v_dense;
    s.pattern.obs_indices = obs_indices;
    s.pattern.mask = mask;
    s.validate();
    return s;
}

}  // namespace testutil
