#include "njode/baselines.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "njode/errors.hpp"
#include "njode/special_functions.hpp"

namespace njode {

namespace {

void check_times(const std::vector<double>& times, const std::vector<double>& values) {
    if (times.size() != values.size())
        throw InvalidInputError("baseline: times/values length mismatch");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] > 0.0)) throw InvalidInputError("baseline: observation times must be > 0");
        if (i > 0 && !(times[i] > times[i - 1]))
            throw InvalidInputError("baseline: times must be strictly increasing");
    }
}

/// LLT solve with one 1e-12 diagonal jitter retry (min(t_i,t_j) Gram matrices
/// can be near-singular for close observation times).
Vec solve_psd(Eigen::MatrixXd A, const Vec& rhs) {
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) {
        A.diagonal().array() += 1e-12;
        llt.compute(A);
        if (llt.info() != Eigen::Success)
            throw NumericalError("baseline: covariance not positive definite after jitter");
    }
    return llt.solve(rhs);
}

}  // namespace

PosteriorGaussian bm_drift_posterior(const std::vector<double>& times,
                                     const std::vector<double>& values, double x0, double sigma,
                                     double a, double b) {
    check_times(times, values);
    PosteriorGaussian post;
    post.mean = Vec::Constant(1, a);
    post.cov = Eigen::MatrixXd::Constant(1, 1, b * b);
    const int k = static_cast<int>(times.size());
    if (k == 0) return post;

    Eigen::MatrixXd S(k, k);
    Vec cross(k), z(k);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j)
            S(i, j) = sigma * sigma * std::min(times[i], times[j]) + b * b * times[i] * times[j];
        cross[i] = b * b * times[i];
        z[i] = values[i] - x0 - times[i] * a;
    }
    const Vec w = solve_psd(S, z);
    const Vec wc = solve_psd(S, cross);
    post.mean[0] = a + cross.dot(w);
    post.cov(0, 0) = b * b - cross.dot(wc);
    return post;
}

PosteriorGaussian bm_filter_posterior(const std::vector<double>& times,
                                      const std::vector<double>& y_values, double alpha,
                                      double query_time) {
    check_times(times, y_values);
    const int k = static_cast<int>(times.size());
    PosteriorGaussian post;
    post.mean = Vec::Zero(1);
    if (k == 0) {
        post.cov = Eigen::MatrixXd::Constant(1, 1, std::max(query_time, 0.0));
        return post;
    }
    const double tk = times.back();
    if (query_time < tk - 1e-12)
        throw InvalidInputError("bm_filter_posterior: query must be at or after the last observation");

    Eigen::MatrixXd S(k, k);
    Vec cross(k), y(k);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) S(i, j) = (alpha * alpha + 1.0) * std::min(times[i], times[j]);
        cross[i] = alpha * times[i];  // Cov(Y_{t_i}, X_{t_k}) = alpha * min(t_i, t_k)
        y[i] = y_values[i];
    }
    const Vec w = solve_psd(S, y);
    const Vec wc = solve_psd(S, cross);
    post.mean[0] = cross.dot(w);
    post.cov = Eigen::MatrixXd::Constant(1, 1, tk - cross.dot(wc) + (query_time - tk));
    return post;
}

double bm_class_prob(double w, double tau, double t, double alpha) {
    if (t < tau) throw InvalidInputError("bm_class_prob: need t >= tau");
    if (t <= tau) return (w >= alpha) ? 1.0 : 0.0;
    return 1.0 - normal_cdf((alpha - w) / std::sqrt(t - tau));
}

PosteriorGaussian kalman_posterior(const std::vector<double>& times,
                                   const std::vector<double>& values, double x0, double sigma,
                                   double a, double b) {
    check_times(times, values);
    PosteriorGaussian post;
    post.mean = Vec::Constant(1, a);
    post.cov = Eigen::MatrixXd::Constant(1, 1, b * b);
    const int k = static_cast<int>(times.size());
    if (k == 0) return post;

    // single predict/update block: constant state, H = (t_1..t_n)^T,
    // R_ij = sigma^2 min(t_i, t_j), S = P H H^T + R
    Vec H(k), innov(k);
    Eigen::MatrixXd S(k, k);
    const double P = b * b;
    for (int i = 0; i < k; ++i) {
        H[i] = times[i];
        innov[i] = (values[i] - x0) - times[i] * a;
        for (int j = 0; j < k; ++j)
            S(i, j) = P * times[i] * times[j] + sigma * sigma * std::min(times[i], times[j]);
    }
    const Vec Sinv_innov = solve_psd(S, innov);
    const Vec Sinv_H = solve_psd(S, H);
    const double KH = P * H.dot(Sinv_H);
    post.mean[0] = a + P * H.dot(Sinv_innov);
    post.cov(0, 0) = (1.0 - KH) * P;
    return post;
}

PosteriorGaussian kalman_posterior_recursive(const std::vector<double>& times,
                                             const std::vector<double>& values, double x0,
                                             double sigma, double a, double b) {
    check_times(times, values);
    double xhat = a, P = b * b;
    double prev_t = 0.0, prev_x = x0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double dt = times[i] - prev_t;
        const double z = values[i] - prev_x;  // increment observation, H = dt
        const double S = dt * dt * P + sigma * sigma * dt;
        const double K = P * dt / S;
        xhat += K * (z - dt * xhat);
        P *= (1.0 - K * dt);
        prev_t = times[i];
        prev_x = values[i];
    }
    PosteriorGaussian post;
    post.mean = Vec::Constant(1, xhat);
    post.cov = Eigen::MatrixXd::Constant(1, 1, P);
    return post;
}

FinancialEstimate financial_estimator(const std::vector<double>& times,
                                      const std::vector<double>& values) {
    if (times.size() != values.size())
        throw InvalidInputError("financial_estimator: times/values length mismatch");
    if (times.size() < 2)
        throw InsufficientDataError("financial_estimator: need at least 2 observations");
    const int N = static_cast<int>(times.size()) - 1;
    double m_hat = 0.0;
    std::vector<double> r(N), dt(N);
    for (int i = 0; i < N; ++i) {
        if (!(values[i] > 0.0) || !(values[i + 1] > 0.0))
            throw InvalidInputError("financial_estimator: values must be positive");
        dt[i] = times[i + 1] - times[i];
        if (!(dt[i] > 0.0)) throw InvalidInputError("financial_estimator: times must increase");
        r[i] = std::log(values[i + 1] / values[i]);
        m_hat += r[i] / dt[i];
    }
    m_hat /= N;
    double s2 = 0.0;
    for (int i = 0; i < N; ++i) {
        const double resid = r[i] / std::sqrt(dt[i]) - m_hat * std::sqrt(dt[i]);
        s2 += resid * resid;
    }
    s2 /= N;
    FinancialEstimate est;
    est.sigma_hat = std::sqrt(s2);
    est.mu_hat = m_hat + 0.5 * s2;
    return est;
}

}  // namespace njode
