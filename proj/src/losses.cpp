#include "njode/losses.hpp"

#include <cmath>

#include "njode/errors.hpp"

namespace njode {

LossVariant loss_variant_from_string(const std::string& s) {
    if (s == "io") return LossVariant::Io;
    if (s == "old") return LossVariant::Old;
    if (s == "jump") return LossVariant::Jump;
    if (s == "noisy") return LossVariant::Noisy;
    throw ConfigError("unknown loss variant: " + s);
}

std::string to_string(LossVariant v) {
    switch (v) {
        case LossVariant::Io: return "io";
        case LossVariant::Old: return "old";
        case LossVariant::Jump: return "jump";
        case LossVariant::Noisy: return "noisy";
    }
    return "io";
}

LossReport LossReport::from_per_path(std::vector<double> per_path, std::vector<int> n_terms) {
    LossReport r;
    r.per_path = std::move(per_path);
    r.n_terms = std::move(n_terms);
    double s = 0.0;
    for (double v : r.per_path) s += v;
    r.total = r.per_path.empty() ? 0.0 : s / static_cast<double>(r.per_path.size());
    for (int n : r.n_terms)
        if (n == 0) r.any_zero_obs = true;
    return r;
}

namespace {

void check_alignment(const ForwardTrace& trace, const PathSample& sample) {
    if (trace.obs_grid_idx != sample.pattern.obs_indices ||
        trace.G_post.rows() != sample.pattern.n_obs() || trace.G_post.cols() != sample.d_v())
        throw InvalidInputError("loss: trace not aligned with sample observations");
}

// sum over masked output coordinates of (v - g)^2 at observation row i
double masked_sq(const PathSample& s, const Eigen::Ref<const RowMat>& g_rows, int i,
                 const double* target_row) {
    const int d_u = s.d_u(), d_v = s.d_v();
    double acc = 0.0;
    for (int j = 0; j < d_v; ++j) {
        const double m = s.pattern.mask(i, d_u + j);
        const double e = m * (target_row[j] - g_rows(i, j));
        acc += e * e;
    }
    return acc;
}

}  // namespace

double io_loss(const ForwardTrace& trace, const PathSample& sample, int* n_terms) {
    check_alignment(trace, sample);
    const int n = sample.pattern.n_obs() - 1;
    if (n_terms) *n_terms = n;
    if (n == 0) return 0.0;
    double acc = 0.0;
    for (int i = 1; i <= n; ++i) {
        const double* v = &sample.v_dense(sample.pattern.obs_indices[i], 0);
        acc += masked_sq(sample, trace.G_post, i, v) + masked_sq(sample, trace.G_left, i, v);
    }
    return acc / n;
}

double old_loss(const ForwardTrace& trace, const PathSample& sample, double eps, int* n_terms) {
    check_alignment(trace, sample);
    const int n = sample.pattern.n_obs() - 1;
    if (n_terms) *n_terms = n;
    if (n == 0) return 0.0;
    double acc = 0.0;
    for (int i = 1; i <= n; ++i) {
        const double* v = &sample.v_dense(sample.pattern.obs_indices[i], 0);
        const double a = std::sqrt(masked_sq(sample, trace.G_post, i, v) + eps);
        const double b = std::sqrt(masked_sq(sample, trace.G_left, i, v) + eps);
        acc += (a + b) * (a + b);
    }
    return acc / n;
}

double jump_loss(const ForwardTrace& trace, const PathSample& sample, int* n_terms) {
    check_alignment(trace, sample);
    const int n = sample.pattern.n_obs() - 1;
    if (n_terms) *n_terms = n;
    if (n == 0) return 0.0;
    double acc = 0.0;
    for (int i = 1; i <= n; ++i) {
        const double* v = &sample.v_dense(sample.pattern.obs_indices[i], 0);
        acc += masked_sq(sample, trace.G_post, i, v);
    }
    return acc / n;
}

double noisy_loss(const ForwardTrace& trace, const PathSample& sample, int* n_terms) {
    check_alignment(trace, sample);
    if (!sample.v_obs_noisy)
        throw InvalidInputError("noisy_loss: sample carries no observation noise values");
    const int n = sample.pattern.n_obs() - 1;
    if (n_terms) *n_terms = n;
    if (n == 0) return 0.0;
    double acc = 0.0;
    for (int i = 1; i <= n; ++i) {
        const double* o = &(*sample.v_obs_noisy)(i, 0);
        acc += masked_sq(sample, trace.G_left, i, o);
    }
    return acc / n;
}

double path_loss(LossVariant v, const ForwardTrace& trace, const PathSample& sample, double eps,
                 int* n_terms) {
    switch (v) {
        case LossVariant::Io: return io_loss(trace, sample, n_terms);
        case LossVariant::Old: return old_loss(trace, sample, eps, n_terms);
        case LossVariant::Jump: return jump_loss(trace, sample, n_terms);
        case LossVariant::Noisy: return noisy_loss(trace, sample, n_terms);
    }
    return 0.0;
}

}  // namespace njode
