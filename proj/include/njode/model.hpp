#pragma once

#include <cstdint>
#include <vector>

#include "njode/adam.hpp"
#include "njode/nn.hpp"
#include "njode/paths.hpp"
#include "njode/signature.hpp"

namespace njode {

struct NjodeFlags {
    bool recurrent_encoder = true;  // jump net receives H_{t-}
    bool encoder_residual = true;   // H <- H_{t-} + rho(...)
    bool decoder_residual = true;   // readout adds the first d_V latent coordinates
};

/// Parameters of the three networks plus architecture metadata. f_net drives
/// the latent ODE between observations, rho_net is the jump/encoder network,
/// g_net the readout.
struct NjodeParams {
    BoundedNetParams f_net;
    BoundedNetParams rho_net;
    MlpParams g_net;
    int d_h = 0, d_u = 0, d_v = 0;
    int sig_level = 3;
    NjodeFlags flags;

    int sig_len() const { return static_cast<int>(sig_dim(d_u, sig_level)); }
    /// [H, t, tau, signature, U_0, u_star, n, delta]
    int drift_feature_width() const { return d_h + 2 + sig_len() + d_u + 3; }
    /// [H (if recurrent), t, signature, U_0, u_star, n, delta, obs, mask]
    int jump_feature_width() const {
        return (flags.recurrent_encoder ? d_h : 0) + 1 + sig_len() + d_u + 3 + 2 * d_u;
    }
    void validate() const;
};

NjodeParams make_njode(int d_u, int d_v, int d_h, const std::vector<int>& hidden, Activation act,
                       int sig_level, NjodeFlags flags, std::uint64_t seed);

/// Latent state and readout along the grid, with both one-sided readouts at
/// every observation. At non-observation grid points the left limit equals
/// the value, so only the per-observation columns are stored separately.
struct ForwardTrace {
    std::vector<double> times;
    std::vector<int> obs_grid_idx;
    RowMat H;       // (n_grid, d_H)
    RowMat G;       // (n_grid, d_V), post-jump value at observation points
    RowMat G_left;  // (n_obs, d_V), pre-jump readout; row 0 duplicates G_post
    RowMat G_post;  // (n_obs, d_V)
};

enum class FeatureKind { Drift, Jump };

/// Reference feature builder; the forward pass assembles the same blocks
/// incrementally. For Jump, t must be an observation time of the sample.
Vec model_features(const NjodeParams& p, const PathSample& sample, double t, const Vec& H,
                   FeatureKind kind);

/// Evaluation-mode forward pass (pure function of params and sample). With
/// full_trace = false the grid readouts at non-observation points are skipped
/// (left as zero); the per-observation readouts are always filled.
ForwardTrace forward_path(const NjodeParams& p, const PathSample& sample, bool full_trace = true);

/// Training-mode forward pass recorded on a tape. Readouts used by the loss
/// live on the tape; `g_left_node`/`g_post_node` give their node ids per
/// observation. Grid readouts at non-observation points are filled
/// deterministically (no dropout) for inspection only when full_trace is set.
struct TapedForward {
    ForwardTrace trace;
    std::vector<int> g_left_node, g_post_node;
};
TapedForward forward_path_train(const NjodeParams& p, const PathSample& sample, Tape& tape,
                                double dropout_rate, Rng& rng, bool full_trace = false);

/// Gradient holder with the shapes of `p`; gamma fields hold d(loss)/d(gamma).
NjodeParams njode_zero_grads(const NjodeParams& p);
/// Slot-indexed sink over a gradient holder; slot order: f layers, rho layers,
/// g layers; gamma slots f=0, rho=1.
GradSink njode_grad_sink(NjodeParams& grads);
/// Flat span view over all trainable values; order matches between params
/// and gradient holders so Adam moments line up.
ParamSpans njode_param_spans(NjodeParams& p);
void njode_accumulate(NjodeParams& into, const NjodeParams& from);
void njode_scale(NjodeParams& p, double c);

}  // namespace njode
