#include "njode/online.hpp"

#include <algorithm>
#include <string>

#include "model_internal.hpp"
#include "njode/errors.hpp"

namespace njode {

using detail::assemble;
using detail::eval_bounded;
using detail::eval_readout;

OnlinePredictor::OnlinePredictor(const NjodeParams& params, const TimeGrid& grid)
    : params_(params), grid_(grid) {
    grid_.validate();
    params_.validate();
    H_ = Vec::Zero(params_.d_h);
    sig_ = TruncatedSignature::trivial(params_.d_u, params_.sig_level);
}

namespace {

detail::ObsCache make_cache(double t, double u_star, double n_count, double delta,
                            const TruncatedSignature& sig, const Vec& obs_imputed,
                            const Vec& mask_u) {
    detail::ObsCache c;
    c.t = t;
    c.u_star = u_star;
    c.n_count = n_count;
    c.delta = delta;
    c.sig = sig;
    c.obs_imputed = obs_imputed;
    c.mask_u = mask_u;
    return c;
}

}  // namespace

void OnlinePredictor::refresh_drift_tail() {
    const detail::ObsCache c = make_cache(last_event_t_, u_star_,
                                          static_cast<double>(n_events_ - 1), delta_, sig_,
                                          Vec(), Vec());
    detail::fill_drift_tail(drift_tail_, c, u0_);
}

void OnlinePredictor::advance_to(int target_idx) {
    while (cur_idx_ < target_idx) {
        drift_tail_[0] = grid_.t[cur_idx_];
        const Vec f = eval_bounded(params_.f_net, assemble(H_, drift_tail_, true));
        H_ += (grid_.t[cur_idx_ + 1] - grid_.t[cur_idx_]) * f;
        ++cur_idx_;
        if (!H_.allFinite())
            throw DivergenceError("OnlinePredictor: non-finite latent state at grid index " +
                                  std::to_string(cur_idx_));
    }
}

void OnlinePredictor::observe(double t, const Vec& values, const Vec& mask) {
    const int d_u = params_.d_u;
    if (values.size() != d_u + params_.d_v || mask.size() != values.size())
        throw InvalidInputError("OnlinePredictor::observe: values/mask must be d_U + d_V wide");
    for (Eigen::Index j = 0; j < mask.size(); ++j)
        if (mask[j] != 0.0 && mask[j] != 1.0)
            throw InvalidInputError("OnlinePredictor::observe: mask entries must be 0 or 1");
    const int idx = grid_.index_of(t);
    if (idx < 0) throw InvalidInputError("OnlinePredictor::observe: time not on the model grid");

    if (!started_) {
        if (idx != 0)
            throw InvalidInputError("OnlinePredictor::observe: first event must be at t = 0");
        for (int j = 0; j < d_u; ++j)
            if (mask[j] != 1.0)
                throw InvalidInputError(
                    "OnlinePredictor::observe: inputs must be fully observed at t = 0");
        u0_ = values.head(d_u);
        held_ = u0_;
        u_star_ = held_.lpNorm<1>();
        delta_ = grid_.T;
        n_events_ = 1;
        last_event_t_ = 0.0;
        started_ = true;
    } else {
        if (idx < cur_idx_ || t <= last_event_t_)
            throw InvalidInputError("OnlinePredictor::observe: out-of-order event");
        advance_to(idx);
        Vec next = held_;
        for (int j = 0; j < d_u; ++j)
            if (mask[j] == 1.0) next[j] = values[j];
        chen_concat_inplace(sig_, signature_of_segment(next - held_, params_.sig_level));
        held_ = std::move(next);
        u_star_ = std::max(u_star_, held_.lpNorm<1>());
        const double gap = t - last_event_t_;
        delta_ = (n_events_ == 1) ? gap : std::min(delta_, gap);
        last_event_t_ = t;
        ++n_events_;
    }

    Vec obs_imputed = Vec::Zero(d_u), mask_u(d_u);
    for (int j = 0; j < d_u; ++j) {
        mask_u[j] = mask[j];
        if (mask[j] == 1.0) obs_imputed[j] = values[j];
    }
    const detail::ObsCache c = make_cache(t, u_star_, static_cast<double>(n_events_ - 1), delta_,
                                          sig_, obs_imputed, mask_u);
    detail::fill_jump_tail(jump_tail_, c, u0_);
    const Vec rho =
        eval_bounded(params_.rho_net, assemble(H_, jump_tail_, params_.flags.recurrent_encoder));
    H_ = params_.flags.encoder_residual ? Vec(H_ + rho) : rho;
    if (!H_.allFinite())
        throw DivergenceError("OnlinePredictor: non-finite latent state after jump at t = " +
                              std::to_string(t));
    refresh_drift_tail();
}

Vec OnlinePredictor::predict(double t) {
    if (!started_) throw InvalidInputError("OnlinePredictor::predict: no observation at t = 0 yet");
    const double tol = grid_.time_tol();
    if (t < grid_.t[cur_idx_] - tol)
        throw InvalidInputError("OnlinePredictor::predict: query times must be ascending");
    if (t > grid_.T + tol) throw InvalidInputError("OnlinePredictor::predict: query beyond horizon");

    // last grid point <= t
    auto it = std::upper_bound(grid_.t.begin(), grid_.t.end(), t + tol);
    const int idx = static_cast<int>(it - grid_.t.begin()) - 1;
    advance_to(idx);
    if (t > grid_.t[idx] + tol) {
        // partial Euler step off the lattice; persistent state stays on grid
        drift_tail_[0] = grid_.t[idx];
        const Vec f = eval_bounded(params_.f_net, assemble(H_, drift_tail_, true));
        const Vec h = H_ + (t - grid_.t[idx]) * f;
        return eval_readout(params_, h);
    }
    return eval_readout(params_, H_);
}

}  // namespace njode
