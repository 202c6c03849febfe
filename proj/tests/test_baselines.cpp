#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "njode/baselines.hpp"
#include "njode/datasets.hpp"
#include "njode/errors.hpp"
#include "njode/particle.hpp"
#include "njode/rng.hpp"
#include "njode/special_functions.hpp"

using namespace njode;

TEST_CASE("bm_drift_posterior") {
    const double x0 = 0.0, sigma = 0.2, a = 0.05, b = 0.1;

    SUBCASE("no observations returns the prior") {
        const auto p = bm_drift_posterior({}, {}, x0, sigma, a, b);
        CHECK(p.scalar_mean() == a);
        CHECK(p.scalar_var() == b * b);
        CHECK(p.second_moment() == doctest::Approx(b * b + a * a).epsilon(1e-15));
    }
    SUBCASE("one observation matches the 1x1 closed form") {
        const double t1 = 0.4, x1 = 0.1;
        const auto p = bm_drift_posterior({t1}, {x1}, x0, sigma, a, b);
        const double want =
            a + (b * b * t1 / (b * b * t1 * t1 + sigma * sigma * t1)) * (x1 - x0 - t1 * a);
        CHECK(p.scalar_mean() == doctest::Approx(want).epsilon(1e-12));
    }
    SUBCASE("one observation cross-checked by a weighted Bayes Monte Carlo oracle") {
        const double t1 = 0.3, x1 = 0.08;
        const auto p = bm_drift_posterior({t1}, {x1}, x0, sigma, a, b);
        // sample mu from the prior, weight by the Gaussian likelihood of x1
        Rng rng(42);
        const int n = 1000000;
        double wsum = 0.0, msum = 0.0, msq = 0.0;
        for (int i = 0; i < n; ++i) {
            const double mu = rng.gaussian(a, b);
            const double resid = x1 - x0 - mu * t1;
            const double w = std::exp(-resid * resid / (2.0 * sigma * sigma * t1));
            wsum += w;
            msum += w * mu;
            msq += w * mu * mu;
        }
        const double oracle_mean = msum / wsum;
        const double oracle_var = msq / wsum - oracle_mean * oracle_mean;
        const double se = std::sqrt(oracle_var / (wsum * wsum / (n * 1.0)));  // effective n ~ n
        CHECK(std::abs(p.scalar_mean() - oracle_mean) < 3.0 * std::max(se, 1e-4));
    }
    SUBCASE("posterior variance shrinks with more observations") {
        const ModelSpec spec = ModelSpec::bm_drift(x0, sigma, a, b);
        GenerationConfig cfg;
        cfg.n_paths = 2;
        cfg.test_paths = 0;
        cfg.seed = 13;
        const Dataset ds = generate_role(spec, cfg, DatasetRole::Train, 100);
        for (const auto& s : ds.samples) {
            std::vector<double> times, values;
            double prev_var = b * b;
            for (int e = 1; e < s.pattern.n_obs(); ++e) {
                const int idx = s.pattern.obs_indices[e];
                times.push_back(s.grid->t[idx]);
                values.push_back(s.u_dense(idx, 0));
                const double var = bm_drift_posterior(times, values, x0, sigma, a, b).scalar_var();
                CHECK(var <= prev_var + 1e-12);
                prev_var = var;
            }
        }
    }
}

TEST_CASE("bm_filter_posterior") {
    SUBCASE("alpha = 0 carries no information") {
        const auto p = bm_filter_posterior({0.2, 0.5}, {0.3, -0.1}, 0.0, 0.5);
        CHECK(p.scalar_mean() == doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("single observation closed form") {
        const double t1 = 0.4, y1 = 0.25, alpha = 1.0;
        const auto p = bm_filter_posterior({t1}, {y1}, alpha, t1);
        CHECK(p.scalar_mean() == doctest::Approx(alpha * y1 / (alpha * alpha + 1.0)).epsilon(1e-12));
    }
    SUBCASE("posterior mean is linear in the observations") {
        const std::vector<double> ts{0.1, 0.3, 0.7};
        const std::vector<double> ys{0.2, -0.4, 0.5};
        std::vector<double> ys2 = ys;
        for (auto& y : ys2) y *= 2.0;
        const double m1 = bm_filter_posterior(ts, ys, 1.5, 0.7).scalar_mean();
        const double m2 = bm_filter_posterior(ts, ys2, 1.5, 0.7).scalar_mean();
        CHECK(m2 == doctest::Approx(2.0 * m1).epsilon(1e-12));
    }
    SUBCASE("Monte Carlo cross-check of the one-observation case") {
        Rng rng(7);
        const double alpha = 1.0, t1 = 0.5;
        const int n = 500000;
        // simulate (X, Y) at t1, estimate E[X | Y in a small bin]
        double acc = 0.0, cnt = 0.0;
        const double y_target = 0.3, bin = 0.02;
        for (int i = 0; i < n; ++i) {
            const double x = std::sqrt(t1) * rng.gaussian();
            const double w = std::sqrt(t1) * rng.gaussian();
            const double y = alpha * x + w;
            if (std::abs(y - y_target) < bin) {
                acc += x;
                cnt += 1.0;
            }
        }
        const double mc = acc / cnt;
        const double want = bm_filter_posterior({t1}, {y_target}, alpha, t1).scalar_mean();
        CHECK(std::abs(mc - want) < 3.0 * std::sqrt(t1 / 2.0 / cnt) + 0.01);
    }
}

TEST_CASE("bm_class_prob") {
    CHECK(bm_class_prob(0.3, 0.2, 0.5, 0.3) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(bm_class_prob(5.0, 0.0, 0.001, 0.0) > 0.999999);
    // 1 - Phi(1) via the erfc series value
    CHECK(bm_class_prob(0.0, 0.0, 1.0, 1.0) == doctest::Approx(0.15865525393145705).epsilon(1e-9));
    // limit convention at t = tau
    CHECK(bm_class_prob(0.2, 0.5, 0.5, 0.1) == 1.0);
    CHECK(bm_class_prob(0.05, 0.5, 0.5, 0.1) == 0.0);
    // range and monotonicity in w
    Rng rng(3);
    double prev = 0.0;
    for (double w = -3.0; w <= 3.0; w += 0.25) {
        const double p = bm_class_prob(w, 0.3, 0.8, 0.2);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        CHECK(p >= prev);
        prev = p;
    }
    (void)rng;
}

TEST_CASE("kalman equals the analytic Gaussian conditioning") {
    Rng rng(17);
    for (int rep = 0; rep < 100; ++rep) {
        const double x0 = rng.gaussian(), sigma = 0.05 + rng.uniform(),
                     a = 0.2 * rng.gaussian(), b = 0.05 + 0.3 * rng.uniform();
        const int k = 1 + static_cast<int>(rng.integer() % 12);
        std::vector<double> times, values;
        double t = 0.0;
        for (int i = 0; i < k; ++i) {
            t += 0.01 + 0.2 * rng.uniform();
            times.push_back(t);
            values.push_back(x0 + a * t + sigma * std::sqrt(t) * rng.gaussian());
        }
        const auto kal = kalman_posterior(times, values, x0, sigma, a, b);
        const auto ana = bm_drift_posterior(times, values, x0, sigma, a, b);
        CHECK(std::abs(kal.scalar_mean() - ana.scalar_mean()) < 1e-10);
        CHECK(std::abs(kal.scalar_var() - ana.scalar_var()) < 1e-10);

        const auto rec = kalman_posterior_recursive(times, values, x0, sigma, a, b);
        CHECK(std::abs(rec.scalar_mean() - kal.scalar_mean()) < 1e-8);
        CHECK(std::abs(rec.scalar_var() - kal.scalar_var()) < 1e-8);
    }
    SUBCASE("no observations returns the prior") {
        const auto p = kalman_posterior({}, {}, 0.0, 0.2, 0.05, 0.1);
        CHECK(p.scalar_mean() == 0.05);
        CHECK(p.scalar_var() == doctest::Approx(0.01).epsilon(1e-15));
    }
}

TEST_CASE("financial_estimator") {
    SUBCASE("noiseless exponential path") {
        std::vector<double> times, values;
        for (int i = 0; i <= 20; ++i) {
            times.push_back(0.05 * i + 0.01);
            values.push_back(std::exp(0.7 * times.back()));
        }
        const auto est = financial_estimator(times, values);
        CHECK(est.sigma_hat == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(est.mu_hat == doctest::Approx(0.7).epsilon(1e-10));
    }
    SUBCASE("two observations give zero variance by construction") {
        // the single residual cancels after centering; only rounding remains
        const auto est = financial_estimator({0.1, 0.3}, {1.0, 1.2});
        CHECK(est.sigma_hat < 1e-12);
    }
    SUBCASE("needs two observations") {
        CHECK_THROWS_AS(financial_estimator({0.5}, {1.0}), InsufficientDataError);
    }
    SUBCASE("consistency on exact GBM paths") {
        // 10^4 equidistant observations, (mu, sigma) = (0.05, 0.2)
        Rng rng(23);
        const double mu = 0.05, sigma = 0.2, dt = 1e-4;
        double mean_sig = 0.0;
        const int paths = 50;
        for (int p = 0; p < paths; ++p) {
            std::vector<double> times(10001), values(10001);
            double x = 1.0;
            times[0] = 1e-9;
            values[0] = x;
            for (int i = 1; i <= 10000; ++i) {
                x *= std::exp((mu - 0.5 * sigma * sigma) * dt + sigma * std::sqrt(dt) * rng.gaussian());
                times[i] = times[0] + i * dt;
                values[i] = x;
            }
            mean_sig += financial_estimator(times, values).sigma_hat;
        }
        mean_sig /= paths;
        CHECK(std::abs(mean_sig - sigma) / sigma < 0.02);
    }
}

TEST_CASE("log_bessel_i") {
    SUBCASE("I_0(1) against a long-double series oracle") {
        long double acc = 0.0L;
        for (int k = 0; k < 50; ++k) {
            long double term = 1.0L;
            for (int j = 1; j <= k; ++j) term *= (0.5L) * (0.5L) / (j * (long double)j);
            acc += term;
        }
        const double want = static_cast<double>(std::log(acc));
        CHECK(log_bessel_i(0.0, 1.0) == doctest::Approx(want).epsilon(1e-10));
        CHECK(std::exp(log_bessel_i(0.0, 1.0)) == doctest::Approx(1.2660658777520084).epsilon(1e-10));
    }
    SUBCASE("half order identity I_{1/2}(z) = sqrt(2/(pi z)) sinh z") {
        for (double z : {0.1, 1.0, 10.0}) {
            const double want = std::log(std::sqrt(2.0 / (M_PI * z)) * std::sinh(z));
            CHECK(log_bessel_i(0.5, z) == doctest::Approx(want).epsilon(1e-9));
        }
    }
    SUBCASE("series and asymptotic branches agree at the switch point") {
        for (double q : {0.0, 1.0, 2.5, 5.0}) {
            const double series = log_bessel_i(q, 500.0);
            const double corr = -(4.0 * q * q - 1.0) / (8.0 * 500.0);
            const double asym = 500.0 - 0.5 * std::log(2.0 * M_PI * 500.0) + std::log1p(corr);
            CHECK(std::abs(series - asym) / std::abs(series) < 1e-6);
        }
    }
    SUBCASE("edge values") {
        CHECK(log_bessel_i(0.0, 0.0) == 0.0);
        CHECK(std::isinf(log_bessel_i(2.0, 0.0)));
        CHECK(log_bessel_i(2.0, 0.0) < 0.0);
    }
}

TEST_CASE("particle filter") {
    const ModelSpec gbm = ModelSpec::gbm_uncertain(1.0, 0.05, 0.1, 0.05, 0.5);

    SUBCASE("init: uniform weights, prior moments, seeded determinism") {
        const auto ps = pf_init(gbm, 100000, 5);
        ps.validate();
        CHECK(ps.weights.maxCoeff() == doctest::Approx(1e-5).epsilon(1e-12));
        const Vec mean = pf_estimate(ps);
        CHECK(std::abs(mean[0] - 0.05) < 3.0 * 0.1 / std::sqrt(1e5));
        CHECK(std::abs(mean[1] - 0.275) < 3.0 * (0.45 / std::sqrt(12.0)) / std::sqrt(1e5));
        const auto ps2 = pf_init(gbm, 100000, 5);
        CHECK((ps.particles - ps2.particles).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("identical particles keep uniform weights") {
        auto ps = pf_init(gbm, 100, 2);
        for (int i = 0; i < ps.n(); ++i) {
            ps.particles(i, 0) = 0.05;
            ps.particles(i, 1) = 0.2;
        }
        const auto out = pf_update(ps, gbm, 1.0, 1.02, 0.01);
        CHECK(out.weights.maxCoeff() == doctest::Approx(0.01).epsilon(1e-12));
        CHECK(out.reset_events == 0);
    }
    SUBCASE("forced underflow resets to uniform weights without NaNs") {
        auto ps = pf_init(gbm, 64, 3);
        const auto out = pf_update(ps, gbm, 1.0, -5.0, 0.01);  // impossible observation
        CHECK(out.reset_events == 1);
        out.validate();
        CHECK(out.weights.minCoeff() == doctest::Approx(1.0 / 64).epsilon(1e-12));
    }
    SUBCASE("pf_estimate basics") {
        auto ps = pf_init(gbm, 3, 9);
        ps.particles << 1.0, 0.1, 2.0, 0.2, 3.0, 0.3;
        ps.weights << 1.0, 0.0, 0.0;
        ps.log_weights << 0.0, -1e308, -1e308;
        CHECK(pf_estimate(ps)[0] == 1.0);
        ps.weights << 1.0 / 3, 1.0 / 3, 1.0 / 3;
        CHECK(pf_estimate(ps)[0] == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("GBM single update matches the conjugate-Gaussian closed form with known sigma") {
        // degenerate sigma prior: only mu is uncertain; one lognormal
        // observation is conjugate to the Gaussian prior on mu
        const double sig = 0.2;
        const ModelSpec fixed = ModelSpec::gbm_uncertain(1.0, 0.05, 0.1, sig, sig);
        auto ps = pf_init(fixed, 100000, 11);
        const double dt = 0.25, x1 = 1.03;
        const auto out = pf_update(ps, fixed, 1.0, x1, dt);
        const double pf_mean = pf_estimate(out)[0];

        // posterior of mu with r = log(x1) ~ N((mu - sig^2/2) dt, sig^2 dt)
        const double r = std::log(x1);
        const double prior_var = 0.1 * 0.1, like_var = sig * sig / dt;
        const double obs_mu = r / dt + 0.5 * sig * sig;
        const double post_var = 1.0 / (1.0 / prior_var + 1.0 / like_var);
        const double want = post_var * (0.05 / prior_var + obs_mu / like_var);
        CHECK(std::abs(pf_mean - want) < 3.0 * pf_weighted_se(out, 0) + 1e-6);
    }
    SUBCASE("init rejects non-filtering specs") {
        CHECK_THROWS_AS(pf_init(ModelSpec::bm_class(0.0), 10, 1), InvalidInputError);
    }
}
