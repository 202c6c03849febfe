#include "njode/particle.hpp"

#include <cmath>
#include <limits>

#include "njode/errors.hpp"
#include "njode/rng.hpp"
#include "njode/special_functions.hpp"

namespace njode {

namespace {

// compensated summation: the 1e-12 sum invariant must not drown in the
// accumulation error of 10^5 naive adds
double kahan_sum(const Vec& v) {
    double s = 0.0, c = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double y = v[i] - c;
        const double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    return s;
}

}  // namespace

void ParticleSet::validate() const {
    if (particles.rows() != weights.size() || particles.rows() != log_weights.size())
        throw InvalidInputError("ParticleSet: size mismatch");
    for (Eigen::Index i = 0; i < weights.size(); ++i)
        if (!(weights[i] >= 0.0)) throw InvalidInputError("ParticleSet: negative weight");
    if (std::abs(kahan_sum(weights) - 1.0) > 1e-12)
        throw InvalidInputError("ParticleSet: weights must sum to 1");
}

ParticleSet pf_init(const ModelSpec& spec, int n_particles, std::uint64_t seed) {
    if (n_particles < 1) throw InvalidInputError("pf_init: need at least one particle");
    spec.validate();
    Rng rng(seed, 23);
    ParticleSet ps;
    switch (spec.kind) {
        case ModelKind::GBMUncertain:
            ps.particles.resize(n_particles, 2);
            for (int i = 0; i < n_particles; ++i) {
                ps.particles(i, 0) = rng.gaussian(spec.a, spec.b);
                ps.particles(i, 1) = rng.uniform(spec.sigma_min, spec.sigma_max);
            }
            break;
        case ModelKind::CIRUncertain:
            ps.particles.resize(n_particles, 3);
            for (int i = 0; i < n_particles; ++i) {
                ps.particles(i, 0) = rng.uniform(spec.a_min, spec.a_max);
                ps.particles(i, 1) = rng.uniform(spec.b_min, spec.b_max);
                ps.particles(i, 2) = rng.uniform(spec.sigma_min, spec.sigma_max);
            }
            break;
        default:
            throw InvalidInputError("pf_init: spec must be GBMUncertain or CIRUncertain");
    }
    ps.log_weights = Vec::Constant(n_particles, -std::log(static_cast<double>(n_particles)));
    ps.weights = Vec::Constant(n_particles, 1.0 / n_particles);
    return ps;
}

namespace {

double gbm_log_density(double mu, double sigma, double x_prev, double x_new, double dt) {
    if (!(x_prev > 0.0) || !(x_new > 0.0) || !(sigma > 0.0) || !(dt > 0.0))
        return -std::numeric_limits<double>::infinity();
    const double r = std::log(x_new / x_prev) - (mu - 0.5 * sigma * sigma) * dt;
    return -std::log(x_new) - std::log(sigma) - 0.5 * std::log(2.0 * M_PI * dt) -
           r * r / (2.0 * sigma * sigma * dt);
}

double cir_log_density(double a, double b, double sigma, double x_prev, double x_new, double dt) {
    const double s2 = sigma * sigma;
    const double c = 2.0 * a / ((1.0 - std::exp(-a * dt)) * s2);
    const double q = (2.0 * a * b - s2) / s2;
    const double u = c * x_prev * std::exp(-a * dt);
    const double v = c * x_new;
    const double log_pow = 0.5 * q * std::log(v / u);
    const double log_bessel = log_bessel_i(q, 2.0 * std::sqrt(u * v));
    // The density counts as numerically zero/undefined exactly when its
    // linear-space factors degenerate in double precision: exp(-u-v)
    // underflows to 0, I_q overflows to inf, or the power term leaves the
    // representable range. This is the documented instability regime that
    // forces the uniform-weight reset.
    constexpr double kLogMax = 709.78;
    if (std::exp(-u - v) == 0.0 || !(log_bessel < kLogMax) || std::abs(log_pow) > kLogMax ||
        !std::isfinite(log_pow))
        return -std::numeric_limits<double>::infinity();
    return std::log(c) - u - v + log_pow + log_bessel;
}

}  // namespace

ParticleSet pf_update(const ParticleSet& ps, const ModelSpec& spec, double x_prev, double x_new,
                      double dt, double t_prev, par::Exec exec) {
    if (!(dt > 0.0)) throw InvalidInputError("pf_update: need dt > 0");
    ParticleSet out = ps;
    const int n = ps.n();
    Vec logp(n);

    par::for_each_index(n, exec, [&](int i) {
        if (spec.kind == ModelKind::GBMUncertain) {
            logp[i] = gbm_log_density(ps.particles(i, 0), ps.particles(i, 1), x_prev, x_new, dt);
        } else if (spec.kind == ModelKind::CIRUncertain) {
            double b = ps.particles(i, 1);
            if (spec.w) b *= 1.0 + std::sin(*spec.w * t_prev) / 2.0;  // frozen at last observation
            logp[i] = cir_log_density(ps.particles(i, 0), b, ps.particles(i, 2), x_prev, x_new, dt);
        } else {
            logp[i] = std::numeric_limits<double>::quiet_NaN();
        }
    });
    if (spec.kind != ModelKind::GBMUncertain && spec.kind != ModelKind::CIRUncertain)
        throw InvalidInputError("pf_update: spec must be GBMUncertain or CIRUncertain");

    bool any_alive = false;
    for (int i = 0; i < n; ++i)
        if (std::isfinite(logp[i]) && std::isfinite(ps.log_weights[i])) any_alive = true;

    if (!any_alive) {
        out.log_weights = Vec::Constant(n, -std::log(static_cast<double>(n)));
        out.weights = Vec::Constant(n, 1.0 / n);
        out.reset_events = ps.reset_events + 1;
        return out;
    }

    double max_lw = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double lw = std::isfinite(logp[i])
                              ? ps.log_weights[i] + logp[i]
                              : -std::numeric_limits<double>::infinity();
        out.log_weights[i] = lw;
        if (lw > max_lw) max_lw = lw;
    }
    // fixed-order reduction keeps the normalization deterministic
    const double sum_exp = par::sum_indexed(n, exec, [&](int i) {
        const double lw = out.log_weights[i];
        return std::isfinite(lw) ? std::exp(lw - max_lw) : 0.0;
    });
    const double lse = max_lw + std::log(sum_exp);
    for (int i = 0; i < n; ++i) {
        out.log_weights[i] -= lse;
        out.weights[i] = std::isfinite(out.log_weights[i]) ? std::exp(out.log_weights[i]) : 0.0;
    }
    out.weights /= kahan_sum(out.weights);
    return out;
}

Vec pf_estimate(const ParticleSet& ps) {
    if (ps.n() == 0) throw InvalidInputError("pf_estimate: empty particle set");
    return ps.particles.transpose() * ps.weights;
}

double pf_weighted_se(const ParticleSet& ps, int col) {
    const double mean = ps.particles.col(col).dot(ps.weights);
    double s = 0.0;
    for (int i = 0; i < ps.n(); ++i) {
        const double d = ps.particles(i, col) - mean;
        s += ps.weights[i] * ps.weights[i] * d * d;
    }
    return std::sqrt(s);
}

}  // namespace njode
