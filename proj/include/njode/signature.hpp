#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "njode/paths.hpp"

namespace njode {

/// Levels 0..m of the signature of a d-dimensional piecewise-linear path,
/// flattened level by level; within a level the multi-indices are in
/// lexicographic (row-major tensor) order. Level 0 is the scalar 1.
struct TruncatedSignature {
    int dim = 0;
    int level = 0;
    Eigen::VectorXd coeffs;

    /// Signature of the empty path: (1, 0, ..., 0).
    static TruncatedSignature trivial(int dim, int level);
};

/// Number of coefficients in levels 0..m: m+1 for d = 1, else (d^{m+1}-1)/(d-1).
/// Throws InvalidInputError when the count overflows.
std::int64_t sig_dim(int d, int m);

/// Offset of level k inside the flattened coefficient vector.
std::int64_t sig_level_offset(int d, int k);

/// Signature of a single linear segment with the given total increment:
/// level k equals increment^{tensor k} / k!.
TruncatedSignature signature_of_segment(const Eigen::VectorXd& increment, int m);

/// Chen identity: signature of the concatenated path. Level-k block of the
/// result is sum over i+j=k of (level i of a) tensor (level j of b).
TruncatedSignature chen_concat(const TruncatedSignature& a, const TruncatedSignature& b);

/// In-place variant: a <- chen_concat(a, b). Used by the incremental feature
/// pipeline so the per-observation update allocates nothing.
void chen_concat_inplace(TruncatedSignature& a, const TruncatedSignature& b);

/// Signature of s -> (forward-fill interpolation of sample up to cutoff) - U_0
/// over [0, cutoff]. The path is piecewise linear with kinks only at
/// observation events, so the signature is an exact Chen fold over the
/// inter-event segments. cutoff = 0 gives the trivial signature.
TruncatedSignature signature_of_interpolated_path(const PathSample& sample, double cutoff, int m,
                                                  const Eigen::VectorXd& base_shift);

}  // namespace njode
