#include "njode/model.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "model_internal.hpp"
#include "njode/errors.hpp"

namespace njode {

void NjodeParams::validate() const {
    f_net.net.validate();
    rho_net.net.validate();
    g_net.validate();
    if (d_h < 1 || d_u < 1 || d_v < 1 || sig_level < 0)
        throw InvalidInputError("NjodeParams: bad dimensions");
    if (f_net.net.input_dim() != drift_feature_width() || f_net.net.output_dim() != d_h)
        throw InvalidInputError("NjodeParams: drift net width mismatch");
    if (rho_net.net.input_dim() != jump_feature_width() || rho_net.net.output_dim() != d_h)
        throw InvalidInputError("NjodeParams: jump net width mismatch");
    if (g_net.input_dim() != d_h || g_net.output_dim() != d_v)
        throw InvalidInputError("NjodeParams: readout width mismatch");
    if (flags.decoder_residual && d_h < d_v)
        throw InvalidInputError("NjodeParams: decoder residual needs d_H >= d_V");
    if (!(f_net.gamma > 0.0) || !(rho_net.gamma > 0.0))
        throw InvalidInputError("NjodeParams: gamma must be positive");
}

NjodeParams make_njode(int d_u, int d_v, int d_h, const std::vector<int>& hidden, Activation act,
                       int sig_level, NjodeFlags flags, std::uint64_t seed) {
    NjodeParams p;
    p.d_u = d_u;
    p.d_v = d_v;
    p.d_h = d_h;
    p.sig_level = sig_level;
    p.flags = flags;
    Rng rf(seed, 1), rr(seed, 2), rg(seed, 3);
    p.f_net.net = make_mlp(p.drift_feature_width(), hidden, d_h, act, rf);
    p.f_net.gamma = 100.0;
    p.rho_net.net = make_mlp(p.jump_feature_width(), hidden, d_h, act, rr);
    p.rho_net.gamma = 100.0;
    p.g_net = make_mlp(d_h, hidden, d_v, act, rg);
    p.validate();
    return p;
}

namespace detail {

std::vector<ObsCache> build_obs_caches(const NjodeParams& p, const PathSample& s) {
    const auto& pat = s.pattern;
    const auto& grid = *s.grid;
    const int d_u = p.d_u;
    std::vector<ObsCache> caches(pat.n_obs());

    Vec held = s.u_dense.row(pat.obs_indices[0]).transpose();
    TruncatedSignature sig = TruncatedSignature::trivial(d_u, p.sig_level);
    double u_star = held.lpNorm<1>();
    double delta = grid.T;

    for (int e = 0; e < pat.n_obs(); ++e) {
        const int idx = pat.obs_indices[e];
        ObsCache& c = caches[e];
        c.grid_idx = idx;
        c.t = grid.t[idx];
        if (e > 0) {
            Vec next = held;
            for (int j = 0; j < d_u; ++j)
                if (pat.mask(e, j) == 1.0) next[j] = s.u_dense(idx, j);
            chen_concat_inplace(sig, signature_of_segment(next - held, p.sig_level));
            held = std::move(next);
            u_star = std::max(u_star, held.lpNorm<1>());
            const double gap = c.t - caches[e - 1].t;
            delta = (e == 1) ? gap : std::min(delta, gap);
        }
        c.u_star = u_star;
        c.n_count = static_cast<double>(e);
        c.delta = delta;
        c.sig = sig;
        c.obs_imputed = Vec::Zero(d_u);
        c.mask_u = Vec::Zero(d_u);
        for (int j = 0; j < d_u; ++j) {
            c.mask_u[j] = pat.mask(e, j);
            if (pat.mask(e, j) == 1.0) c.obs_imputed[j] = s.u_dense(idx, j);
        }
    }
    return caches;
}

/// Drift tail: [t, tau, sig, U0, u_star, n, delta]; slot 0 is rewritten per step.
void fill_drift_tail(std::vector<double>& tail, const ObsCache& c, const Vec& u0) {
    const int s_len = static_cast<int>(c.sig.coeffs.size());
    const int d_u = static_cast<int>(u0.size());
    tail.resize(2 + s_len + d_u + 3);
    tail[0] = c.t;  // placeholder for t
    tail[1] = c.t;  // tau
    std::memcpy(tail.data() + 2, c.sig.coeffs.data(), sizeof(double) * s_len);
    std::memcpy(tail.data() + 2 + s_len, u0.data(), sizeof(double) * d_u);
    tail[2 + s_len + d_u] = c.u_star;
    tail[2 + s_len + d_u + 1] = c.n_count;
    tail[2 + s_len + d_u + 2] = c.delta;
}

/// Jump tail: [t_i, sig, U0, u_star, n, delta, obs zero-imputed, mask].
void fill_jump_tail(std::vector<double>& tail, const ObsCache& c, const Vec& u0) {
    const int s_len = static_cast<int>(c.sig.coeffs.size());
    const int d_u = static_cast<int>(u0.size());
    tail.resize(1 + s_len + d_u + 3 + 2 * d_u);
    tail[0] = c.t;
    std::memcpy(tail.data() + 1, c.sig.coeffs.data(), sizeof(double) * s_len);
    std::memcpy(tail.data() + 1 + s_len, u0.data(), sizeof(double) * d_u);
    tail[1 + s_len + d_u] = c.u_star;
    tail[1 + s_len + d_u + 1] = c.n_count;
    tail[1 + s_len + d_u + 2] = c.delta;
    std::memcpy(tail.data() + 1 + s_len + d_u + 3, c.obs_imputed.data(), sizeof(double) * d_u);
    std::memcpy(tail.data() + 1 + s_len + d_u + 3 + d_u, c.mask_u.data(), sizeof(double) * d_u);
}

Vec eval_mlp(const MlpParams& p, const Vec& x) {
    Vec h = x;
    for (int l = 0; l < p.n_layers(); ++l) {
        Vec a(p.W[l].rows());
        a.noalias() = p.W[l] * h;
        a += p.b[l];
        if (l + 1 < p.n_layers()) apply_activation(a.data(), static_cast<int>(a.size()), p.hidden_act);
        h = std::move(a);
    }
    return h;
}

Vec eval_bounded(const BoundedNetParams& p, const Vec& x) {
    Vec y = eval_mlp(p.net, x);
    const double norm = y.norm();
    if (norm > p.gamma) y *= p.gamma / norm;
    return y;
}

Vec eval_readout(const NjodeParams& p, const Vec& H) {
    Vec g = eval_mlp(p.g_net, H);
    if (p.flags.decoder_residual) g += H.head(p.d_v);
    return g;
}

Vec assemble(const Vec& head, const std::vector<double>& tail, bool use_head) {
    const int hlen = use_head ? static_cast<int>(head.size()) : 0;
    Vec f(hlen + static_cast<int>(tail.size()));
    if (use_head) f.head(hlen) = head;
    std::memcpy(f.data() + hlen, tail.data(), sizeof(double) * tail.size());
    return f;
}

}  // namespace detail

using detail::assemble;
using detail::build_obs_caches;
using detail::eval_bounded;
using detail::eval_mlp;
using detail::eval_readout;
using detail::fill_drift_tail;
using detail::fill_jump_tail;
using detail::ObsCache;

Vec model_features(const NjodeParams& p, const PathSample& sample, double t, const Vec& H,
                   FeatureKind kind) {
    if (t < -sample.grid->time_tol() || t > sample.grid->T + sample.grid->time_tol())
        throw InvalidInputError("model_features: t outside [0, T]");
    const auto caches = build_obs_caches(p, sample);
    int e = 0;
    for (std::size_t i = 0; i < caches.size(); ++i)
        if (caches[i].t <= t + sample.grid->time_tol()) e = static_cast<int>(i);
    const Vec u0 = sample.u_dense.row(sample.pattern.obs_indices[0]).transpose();
    std::vector<double> tail;
    if (kind == FeatureKind::Drift) {
        fill_drift_tail(tail, caches[e], u0);
        tail[0] = t;
        return assemble(H, tail, true);
    }
    if (std::abs(caches[e].t - t) > sample.grid->time_tol())
        throw InvalidInputError("model_features: jump features need an observation time");
    fill_jump_tail(tail, caches[e], u0);
    return assemble(H, tail, p.flags.recurrent_encoder);
}

ForwardTrace forward_path(const NjodeParams& p, const PathSample& sample, bool full_trace) {
    if (sample.d_u() != p.d_u || sample.d_v() != p.d_v)
        throw InvalidInputError("forward_path: sample dimensions mismatch");
    const auto& grid = *sample.grid;
    const int n_grid = grid.size();
    const auto caches = build_obs_caches(p, sample);
    const int n_obs = static_cast<int>(caches.size());
    const Vec u0 = sample.u_dense.row(sample.pattern.obs_indices[0]).transpose();

    ForwardTrace tr;
    tr.times = grid.t;
    tr.obs_grid_idx = sample.pattern.obs_indices;
    tr.H.resize(n_grid, p.d_h);
    tr.G.setZero(n_grid, p.d_v);
    tr.G_left.resize(n_obs, p.d_v);
    tr.G_post.resize(n_obs, p.d_v);

    std::vector<double> drift_tail, jump_tail;
    Vec H = Vec::Zero(p.d_h);

    // jump at t_0 initializes the latent state
    fill_jump_tail(jump_tail, caches[0], u0);
    {
        Vec rho = eval_bounded(p.rho_net, assemble(H, jump_tail, p.flags.recurrent_encoder));
        H = p.flags.encoder_residual ? Vec(H + rho) : rho;
        if (!H.allFinite())
            throw DivergenceError("forward_path: non-finite latent state at grid index 0");
    }
    tr.H.row(0) = H;
    Vec g0 = eval_readout(p, H);
    tr.G.row(0) = g0;
    tr.G_left.row(0) = g0;
    tr.G_post.row(0) = g0;

    int next_obs = 1;
    fill_drift_tail(drift_tail, caches[0], u0);
    for (int k = 0; k + 1 < n_grid; ++k) {
        drift_tail[0] = grid.t[k];
        const Vec f = eval_bounded(p.f_net, assemble(H, drift_tail, true));
        H += (grid.t[k + 1] - grid.t[k]) * f;
        if (!H.allFinite())
            throw DivergenceError("forward_path: non-finite latent state at grid index " +
                                  std::to_string(k + 1));
        const int kk = k + 1;
        tr.H.row(kk) = H;  // overwritten below when kk is an observation
        if (next_obs < n_obs && caches[next_obs].grid_idx == kk) {
            tr.G_left.row(next_obs) = eval_readout(p, H);
            fill_jump_tail(jump_tail, caches[next_obs], u0);
            const Vec rho = eval_bounded(p.rho_net, assemble(H, jump_tail, p.flags.recurrent_encoder));
            H = p.flags.encoder_residual ? Vec(H + rho) : rho;
            if (!H.allFinite())
                throw DivergenceError("forward_path: non-finite latent state at grid index " +
                                      std::to_string(kk));
            tr.G_post.row(next_obs) = eval_readout(p, H);
            tr.H.row(kk) = H;
            tr.G.row(kk) = tr.G_post.row(next_obs);
            fill_drift_tail(drift_tail, caches[next_obs], u0);
            ++next_obs;
        } else if (full_trace) {
            tr.G.row(kk) = eval_readout(p, H);
        }
    }
    return tr;
}

TapedForward forward_path_train(const NjodeParams& p, const PathSample& sample, Tape& tape,
                                double dropout_rate, Rng& rng, bool full_trace) {
    if (sample.d_u() != p.d_u || sample.d_v() != p.d_v)
        throw InvalidInputError("forward_path_train: sample dimensions mismatch");
    const auto& grid = *sample.grid;
    const int n_grid = grid.size();
    const auto caches = build_obs_caches(p, sample);
    const int n_obs = static_cast<int>(caches.size());
    const Vec u0 = sample.u_dense.row(sample.pattern.obs_indices[0]).transpose();
    const DropoutConfig drop{dropout_rate, &rng};

    tape.reset();
    TapedForward out;
    ForwardTrace& tr = out.trace;
    tr.times = grid.t;
    tr.obs_grid_idx = sample.pattern.obs_indices;
    tr.H.resize(n_grid, p.d_h);
    tr.G.setZero(n_grid, p.d_v);
    tr.G_left.resize(n_obs, p.d_v);
    tr.G_post.resize(n_obs, p.d_v);
    out.g_left_node.assign(n_obs, -1);
    out.g_post_node.assign(n_obs, -1);

    const int lf = p.f_net.net.n_layers(), lr = p.rho_net.net.n_layers();
    const int slot_f = 0, slot_rho = lf, slot_g = lf + lr;

    const Vec zeros = Vec::Zero(p.d_h);
    std::vector<double> drift_tail, jump_tail;

    auto readout = [&](int h_node) {
        int g = mlp_forward_tape(tape, p.g_net, h_node, slot_g, drop);
        if (p.flags.decoder_residual) g = tape.add_head(g, h_node);
        return g;
    };
    auto jump = [&](int h_node, int e) {
        fill_jump_tail(jump_tail, caches[e], u0);
        int feat;
        if (p.flags.recurrent_encoder)
            feat = tape.concat_h_const(h_node, jump_tail.data(), static_cast<int>(jump_tail.size()));
        else
            feat = tape.concat_h_const(-1, jump_tail.data(), static_cast<int>(jump_tail.size()));
        int rho = mlp_forward_tape(tape, p.rho_net, feat, slot_rho, 1, drop);
        if (p.flags.encoder_residual) rho = tape.add(h_node, rho);
        return rho;
    };

    int h = tape.input(zeros.data(), p.d_h);
    h = jump(h, 0);
    if (!tape.value(h).allFinite())
        throw DivergenceError("forward_path_train: non-finite latent state at grid index 0");
    tr.H.row(0) = tape.value(h);
    {
        const int g0 = readout(h);
        out.g_left_node[0] = g0;
        out.g_post_node[0] = g0;
        tr.G_left.row(0) = tape.value(g0);
        tr.G_post.row(0) = tape.value(g0);
        tr.G.row(0) = tape.value(g0);
    }

    int next_obs = 1;
    fill_drift_tail(drift_tail, caches[0], u0);
    for (int k = 0; k + 1 < n_grid; ++k) {
        drift_tail[0] = grid.t[k];
        const int feat = tape.concat_h_const(h, drift_tail.data(), static_cast<int>(drift_tail.size()));
        const int f = mlp_forward_tape(tape, p.f_net, feat, slot_f, 0, drop);
        h = tape.axpy(h, grid.t[k + 1] - grid.t[k], f);
        if (!tape.value(h).allFinite())
            throw DivergenceError("forward_path_train: non-finite latent state at grid index " +
                                  std::to_string(k + 1));
        const int kk = k + 1;
        bool is_obs = false;
        if (next_obs < n_obs && caches[next_obs].grid_idx == kk) {
            is_obs = true;
            const int gl = readout(h);
            out.g_left_node[next_obs] = gl;
            tr.G_left.row(next_obs) = tape.value(gl);
            h = jump(h, next_obs);
            if (!tape.value(h).allFinite())
                throw DivergenceError("forward_path_train: non-finite latent state at grid index " +
                                      std::to_string(kk));
            const int gp = readout(h);
            out.g_post_node[next_obs] = gp;
            tr.G_post.row(next_obs) = tape.value(gp);
            tr.G.row(kk) = tape.value(gp);
            fill_drift_tail(drift_tail, caches[next_obs], u0);
            ++next_obs;
        }
        tr.H.row(kk) = tape.value(h);
        if (full_trace && !is_obs) tr.G.row(kk) = eval_readout(p, tr.H.row(kk).transpose());
    }
    return out;
}

NjodeParams njode_zero_grads(const NjodeParams& p) {
    NjodeParams g = p;
    g.f_net = zero_like(p.f_net);
    g.rho_net = zero_like(p.rho_net);
    g.g_net = zero_like(p.g_net);
    return g;
}

GradSink njode_grad_sink(NjodeParams& g) {
    GradSink s;
    auto add_mlp = [&](MlpParams& m) {
        for (std::size_t l = 0; l < m.W.size(); ++l) {
            s.W.push_back(&m.W[l]);
            s.b.push_back(&m.b[l]);
        }
    };
    add_mlp(g.f_net.net);
    add_mlp(g.rho_net.net);
    add_mlp(g.g_net);
    s.gamma.push_back(&g.f_net.gamma);
    s.gamma.push_back(&g.rho_net.gamma);
    return s;
}

ParamSpans njode_param_spans(NjodeParams& p) {
    ParamSpans s = param_spans(p.f_net);
    const ParamSpans sr = param_spans(p.rho_net);
    const ParamSpans sg = param_spans(p.g_net);
    for (const auto& sp : sr.spans) s.add(sp.first, sp.second);
    for (const auto& sp : sg.spans) s.add(sp.first, sp.second);
    return s;
}

void njode_accumulate(NjodeParams& into, const NjodeParams& from) {
    NjodeParams& f = const_cast<NjodeParams&>(from);
    ParamSpans a = njode_param_spans(into), b = njode_param_spans(f);
    for (std::size_t i = 0; i < a.spans.size(); ++i)
        Eigen::Map<Vec>(a.spans[i].first, static_cast<Eigen::Index>(a.spans[i].second)) +=
            Eigen::Map<const Vec>(b.spans[i].first, static_cast<Eigen::Index>(b.spans[i].second));
}

void njode_scale(NjodeParams& p, double c) {
    ParamSpans a = njode_param_spans(p);
    for (auto& [ptr, n] : a.spans)
        Eigen::Map<Vec>(ptr, static_cast<Eigen::Index>(n)) *= c;
}

}  // namespace njode
