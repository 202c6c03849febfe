#include "njode/signature.hpp"

#include <cmath>
#include <limits>

#include "njode/errors.hpp"

namespace njode {

std::int64_t sig_dim(int d, int m) {
    if (d < 1 || m < 0) throw InvalidInputError("sig_dim: need d >= 1, m >= 0");
    if (d == 1) return static_cast<std::int64_t>(m) + 1;
    std::int64_t total = 1, level_len = 1;
    for (int k = 1; k <= m; ++k) {
        if (level_len > std::numeric_limits<std::int64_t>::max() / d)
            throw InvalidInputError("sig_dim: coefficient count overflows");
        level_len *= d;
        if (total > std::numeric_limits<std::int64_t>::max() - level_len)
            throw InvalidInputError("sig_dim: coefficient count overflows");
        total += level_len;
    }
    return total;
}

std::int64_t sig_level_offset(int d, int k) {
    std::int64_t off = 0, level_len = 1;
    for (int l = 0; l < k; ++l) {
        off += level_len;
        level_len *= d;
    }
    return off;
}

TruncatedSignature TruncatedSignature::trivial(int dim, int level) {
    TruncatedSignature s;
    s.dim = dim;
    s.level = level;
    s.coeffs = Eigen::VectorXd::Zero(sig_dim(dim, level));
    s.coeffs[0] = 1.0;
    return s;
}

TruncatedSignature signature_of_segment(const Eigen::VectorXd& increment, int m) {
    const int d = static_cast<int>(increment.size());
    if (d < 1) throw InvalidInputError("signature_of_segment: empty increment");
    if (!increment.allFinite()) throw InvalidInputError("signature_of_segment: non-finite increment");
    TruncatedSignature s = TruncatedSignature::trivial(d, m);
    std::int64_t prev_off = 0, prev_len = 1;
    for (int k = 1; k <= m; ++k) {
        const std::int64_t off = prev_off + prev_len;
        const double inv_k = 1.0 / k;
        std::int64_t w = off;
        for (std::int64_t i = 0; i < prev_len; ++i) {
            const double base = s.coeffs[prev_off + i] * inv_k;
            for (int j = 0; j < d; ++j) s.coeffs[w++] = base * increment[j];
        }
        prev_off = off;
        prev_len *= d;
    }
    return s;
}

void chen_concat_inplace(TruncatedSignature& a, const TruncatedSignature& b) {
    if (a.dim != b.dim || a.level != b.level)
        throw InvalidInputError("chen_concat: dimension/level mismatch");
    const int d = a.dim, m = a.level;
    // Work top level down so lower levels of `a` are still the originals when
    // the cross terms for higher levels are formed.
    for (int k = m; k >= 1; --k) {
        const std::int64_t off_k = sig_level_offset(d, k);
        std::int64_t len_k = 1;
        for (int l = 0; l < k; ++l) len_k *= d;
        // cross terms a_i (x) b_{k-i}, 1 <= i <= k-1
        for (int i = k - 1; i >= 1; --i) {
            const int j = k - i;
            const std::int64_t off_i = sig_level_offset(d, i);
            const std::int64_t off_j = sig_level_offset(d, j);
            std::int64_t len_i = 1, len_j = 1;
            for (int l = 0; l < i; ++l) len_i *= d;
            for (int l = 0; l < j; ++l) len_j *= d;
            std::int64_t w = off_k;
            for (std::int64_t p = 0; p < len_i; ++p) {
                const double ai = a.coeffs[off_i + p];
                if (ai != 0.0) {
                    for (std::int64_t q = 0; q < len_j; ++q) a.coeffs[w + q] += ai * b.coeffs[off_j + q];
                }
                w += len_j;
            }
        }
        // plus b's own level k (a's level-0 is 1)
        a.coeffs.segment(off_k, len_k) += b.coeffs.segment(off_k, len_k);
    }
}

TruncatedSignature chen_concat(const TruncatedSignature& a, const TruncatedSignature& b) {
    TruncatedSignature out = a;
    chen_concat_inplace(out, b);
    return out;
}

TruncatedSignature signature_of_interpolated_path(const PathSample& sample, double cutoff, int m,
                                                  const Eigen::VectorXd& base_shift) {
    const int d_u = sample.d_u();
    if (base_shift.size() != d_u)
        throw InvalidInputError("signature_of_interpolated_path: base_shift must be d_U wide");
    const auto& grid = *sample.grid;
    const double tol = grid.time_tol();

    TruncatedSignature sig = TruncatedSignature::trivial(d_u, m);
    if (cutoff <= tol) return sig;

    // The interpolated path is linear on each interval between consecutive
    // observation events (a coordinate not observed at an event simply has a
    // zero increment there), so folding segment signatures is exact.
    Eigen::VectorXd held = sample.u_dense.row(sample.pattern.obs_indices[0]).transpose();
    for (int e = 1; e < sample.pattern.n_obs(); ++e) {
        const int idx = sample.pattern.obs_indices[e];
        const double te = grid.t[idx];
        if (te > cutoff + tol) break;
        Eigen::VectorXd next = held;
        for (int j = 0; j < d_u; ++j)
            if (sample.pattern.mask(e, j) == 1.0) next[j] = sample.u_dense(idx, j);
        chen_concat_inplace(sig, signature_of_segment(next - held, m));
        held = std::move(next);
    }
    return sig;
}

}  // namespace njode
