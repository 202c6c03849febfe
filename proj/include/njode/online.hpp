#pragma once

#include "njode/model.hpp"
#include "njode/paths.hpp"

namespace njode {

/// Incremental predictor over an ordered stream of (time, values, mask)
/// events. Holds the latent state, the running signature and the path
/// statistics, so each new event costs one jump plus the Euler steps since
/// the previous time. Values and masks are d_U + d_V wide; only the input
/// coordinates enter the model. Event and query times must be grid points of
/// the model's integration grid and globally ascending; the first event must
/// be at t = 0 with all input coordinates observed.
///
/// predict(t) returns G_t from the events observed so far (all of them are
/// <= t by the ordering contract) and agrees with forward_path on the same
/// data to within 1e-10.
class OnlinePredictor {
public:
    OnlinePredictor(const NjodeParams& params, const TimeGrid& grid);

    void observe(double t, const Vec& values, const Vec& mask);
    Vec predict(double t);

    double current_time() const { return grid_.t[cur_idx_]; }
    int n_observations() const { return n_events_ - 1; }  // excluding t_0

private:
    void advance_to(int target_idx);
    void refresh_drift_tail();

    const NjodeParams& params_;
    TimeGrid grid_;
    int cur_idx_ = 0;
    bool started_ = false;

    Vec H_;
    Vec u0_;
    Vec held_;
    TruncatedSignature sig_;
    double u_star_ = 0.0;
    double delta_ = 0.0;
    double last_event_t_ = 0.0;
    int n_events_ = 0;
    std::vector<double> drift_tail_, jump_tail_;
};

}  // namespace njode
