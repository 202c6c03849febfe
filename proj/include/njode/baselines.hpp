#pragma once

#include <Eigen/Core>
#include <vector>

#include "njode/paths.hpp"

namespace njode {

struct PosteriorGaussian {
    Vec mean;
    Eigen::MatrixXd cov;

    double scalar_mean() const { return mean[0]; }
    double scalar_var() const { return cov(0, 0); }
    /// E[theta^2 | A] = var + mean^2 (second-moment reference for the
    /// conditional-variance experiments).
    double second_moment() const { return cov(0, 0) + mean[0] * mean[0]; }
};

/// Exact conditional distribution of the Gaussian drift mu given observations
/// of X_t = x0 + mu t + sigma W_t. No observations return the prior (a, b^2).
PosteriorGaussian bm_drift_posterior(const std::vector<double>& times,
                                     const std::vector<double>& values, double x0, double sigma,
                                     double a, double b);

/// Conditional distribution of the signal X_{t_k} given observations of
/// Y = alpha X + W; the prediction at any query time s >= t_k keeps the mean
/// and gains (s - t_k) variance.
PosteriorGaussian bm_filter_posterior(const std::vector<double>& times,
                                      const std::vector<double>& y_values, double alpha,
                                      double query_time);

/// P[W_t >= alpha | W_tau = w] = 1 - Phi((alpha - w) / sqrt(t - tau));
/// t = tau returns the indicator (limit convention).
double bm_class_prob(double w, double tau, double t, double alpha);

/// Kalman filter solution of the bm_drift problem, batch form: one update
/// with H = (t_1..t_n)^T and R_ij = sigma^2 min(t_i, t_j).
PosteriorGaussian kalman_posterior(const std::vector<double>& times,
                                   const std::vector<double>& values, double x0, double sigma,
                                   double a, double b);

/// Recursive variant over independent increments; agrees with the batch form.
PosteriorGaussian kalman_posterior_recursive(const std::vector<double>& times,
                                             const std::vector<double>& values, double x0,
                                             double sigma, double a, double b);

struct FinancialEstimate {
    double mu_hat = 0.0;
    double sigma_hat = 0.0;
};

/// Log-return moment estimator of GBM drift and volatility over irregular
/// observation times. Needs at least 2 observations with positive values.
FinancialEstimate financial_estimator(const std::vector<double>& times,
                                      const std::vector<double>& values);

}  // namespace njode
