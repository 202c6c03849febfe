#include "njode/datasets.hpp"

#include <cmath>

#include "njode/errors.hpp"
#include "njode/rng.hpp"

namespace njode {

ModelSpec ModelSpec::bm_drift(double x0, double sigma, double a, double b) {
    ModelSpec s;
    s.kind = ModelKind::BMDrift;
    s.x0 = x0;
    s.sigma = sigma;
    s.a = a;
    s.b = b;
    return s;
}

ModelSpec ModelSpec::gbm_uncertain(double x0, double a, double b, double sigma_min, double sigma_max) {
    ModelSpec s;
    s.kind = ModelKind::GBMUncertain;
    s.x0 = x0;
    s.a = a;
    s.b = b;
    s.sigma_min = sigma_min;
    s.sigma_max = sigma_max;
    return s;
}

ModelSpec ModelSpec::cir_uncertain(double x0, double a_min, double a_max, double b_min, double b_max,
                                   double sigma_min, double sigma_max, std::optional<double> w) {
    ModelSpec s;
    s.kind = ModelKind::CIRUncertain;
    s.x0 = x0;
    s.a_min = a_min;
    s.a_max = a_max;
    s.b_min = b_min;
    s.b_max = b_max;
    s.sigma_min = sigma_min;
    s.sigma_max = sigma_max;
    s.w = w;
    return s;
}

ModelSpec ModelSpec::bm_filter(double alpha) {
    ModelSpec s;
    s.kind = ModelKind::BMFilter;
    s.alpha = alpha;
    return s;
}

ModelSpec ModelSpec::bm_class(double alpha) {
    ModelSpec s;
    s.kind = ModelKind::BMClass;
    s.alpha = alpha;
    return s;
}

ModelSpec ModelSpec::gbm_self(double x0, double mu, double sigma) {
    ModelSpec s;
    s.kind = ModelKind::GBMSelf;
    s.x0 = x0;
    s.mu = mu;
    s.sigma = sigma;
    return s;
}

int ModelSpec::d_v(bool include_squared) const {
    switch (kind) {
        case ModelKind::BMDrift: return include_squared ? 2 : 1;
        case ModelKind::GBMUncertain: return 2;
        case ModelKind::CIRUncertain: return 3;
        case ModelKind::BMFilter:
        case ModelKind::BMClass:
        case ModelKind::GBMSelf: return 1;
    }
    return 1;
}

std::vector<std::string> ModelSpec::output_names(bool include_squared) const {
    switch (kind) {
        case ModelKind::BMDrift:
            return include_squared ? std::vector<std::string>{"mu", "mu_sq"}
                                   : std::vector<std::string>{"mu"};
        case ModelKind::GBMUncertain: return {"mu", "sigma"};
        case ModelKind::CIRUncertain: return {"a", "b", "sigma"};
        case ModelKind::BMFilter: return {"x"};
        case ModelKind::BMClass: return {"prob"};
        case ModelKind::GBMSelf: return {"x"};
    }
    return {};
}

void ModelSpec::validate() const {
    auto range_ok = [](double lo, double hi) { return std::isfinite(lo) && std::isfinite(hi) && lo <= hi; };
    switch (kind) {
        case ModelKind::BMDrift:
            if (!(sigma > 0.0) || !(b > 0.0)) throw InvalidInputError("BMDrift: need sigma > 0, b > 0");
            break;
        case ModelKind::GBMUncertain:
            if (!(b > 0.0)) throw InvalidInputError("GBMUncertain: need b > 0");
            if (!(sigma_min > 0.0) || !range_ok(sigma_min, sigma_max))
                throw InvalidInputError("GBMUncertain: need 0 < sigma_min <= sigma_max");
            if (!(x0 > 0.0)) throw InvalidInputError("GBMUncertain: need x0 > 0");
            break;
        case ModelKind::CIRUncertain:
            if (!range_ok(a_min, a_max) || !range_ok(b_min, b_max) || !range_ok(sigma_min, sigma_max))
                throw InvalidInputError("CIRUncertain: empty parameter range");
            if (!(a_min > 0.0) || !(b_min > 0.0) || !(sigma_min > 0.0))
                throw InvalidInputError("CIRUncertain: ranges must be positive");
            if (!w && cir_strict_positivity && 2.0 * a_min * b_min < sigma_max * sigma_max)
                throw InvalidInputError("CIRUncertain: 2 a_min b_min >= sigma_max^2 required");
            if (!(x0 >= 0.0)) throw InvalidInputError("CIRUncertain: need x0 >= 0");
            break;
        case ModelKind::BMFilter:
        case ModelKind::BMClass:
            if (!std::isfinite(alpha)) throw InvalidInputError("alpha must be finite");
            break;
        case ModelKind::GBMSelf:
            if (!(sigma > 0.0) || !(x0 > 0.0)) throw InvalidInputError("GBMSelf: need sigma > 0, x0 > 0");
            break;
    }
}

void GenerationConfig::validate(const ModelSpec& spec) const {
    if (n_paths < 1) throw InvalidInputError("GenerationConfig: n_paths >= 1 required");
    if (!(obs_probability > 0.0 && obs_probability <= 1.0))
        throw InvalidInputError("GenerationConfig: need 0 < p <= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw InvalidInputError("GenerationConfig: split fractions must sum to 1 with both positive");
    if (test_paths < 0) throw InvalidInputError("GenerationConfig: test_paths >= 0");
    if (include_squared_target && spec.kind != ModelKind::BMDrift)
        throw InvalidInputError("GenerationConfig: squared target only applies to BMDrift");
    if (noise_std < 0.0) throw InvalidInputError("GenerationConfig: noise_std >= 0");
    spec.validate();
}

std::string to_string(DatasetRole role) {
    switch (role) {
        case DatasetRole::Train: return "train";
        case DatasetRole::Val: return "val";
        case DatasetRole::Test: return "test";
    }
    return "train";
}

double cir_euler_step(double x, double a, double b_t, double sigma, double dt, double dW) {
    const double xp = std::max(x, 0.0);
    const double next = x + a * (b_t - x) * dt + sigma * std::sqrt(xp) * dW;
    return std::max(next, 0.0);
}

namespace {

std::uint64_t role_tag(DatasetRole role) {
    switch (role) {
        case DatasetRole::Train: return 1;
        case DatasetRole::Val: return 2;
        case DatasetRole::Test: return 3;
    }
    return 1;
}

PathSample simulate_one(const ModelSpec& spec, const GenerationConfig& cfg,
                        const std::shared_ptr<const TimeGrid>& grid, DatasetRole role, int path_idx) {
    const auto& t = grid->t;
    const int n_grid = grid->size();
    const int d_v = spec.d_v(cfg.include_squared_target);
    Rng rng(cfg.seed, role_tag(role), static_cast<std::uint64_t>(path_idx), 11);

    PathSample s;
    s.grid = grid;
    s.u_dense.resize(n_grid, 1);
    s.v_dense.resize(n_grid, d_v);
    bool v_known_at_t0 = true;

    switch (spec.kind) {
        case ModelKind::BMDrift: {
            const double mu = rng.gaussian(spec.a, spec.b);
            s.u_dense(0, 0) = spec.x0;
            for (int k = 1; k < n_grid; ++k) {
                const double dt = t[k] - t[k - 1];
                s.u_dense(k, 0) =
                    s.u_dense(k - 1, 0) + mu * dt + spec.sigma * std::sqrt(dt) * rng.gaussian();
            }
            for (int k = 0; k < n_grid; ++k) {
                s.v_dense(k, 0) = mu;
                if (d_v > 1) s.v_dense(k, 1) = mu * mu;
            }
            s.latent["mu"] = mu;
            v_known_at_t0 = false;
            break;
        }
        case ModelKind::GBMUncertain: {
            const double mu = rng.gaussian(spec.a, spec.b);
            const double sig = rng.uniform(spec.sigma_min, spec.sigma_max);
            s.u_dense(0, 0) = spec.x0;
            for (int k = 1; k < n_grid; ++k) {
                const double dt = t[k] - t[k - 1];
                // exact in log space per step, matching the estimators' model
                s.u_dense(k, 0) = s.u_dense(k - 1, 0) *
                                  std::exp((mu - 0.5 * sig * sig) * dt +
                                           sig * std::sqrt(dt) * rng.gaussian());
            }
            for (int k = 0; k < n_grid; ++k) {
                s.v_dense(k, 0) = mu;
                s.v_dense(k, 1) = sig;
            }
            s.latent["mu"] = mu;
            s.latent["sigma"] = sig;
            v_known_at_t0 = false;
            break;
        }
        case ModelKind::CIRUncertain: {
            const double a = rng.uniform(spec.a_min, spec.a_max);
            const double b0 = rng.uniform(spec.b_min, spec.b_max);
            const double sig = rng.uniform(spec.sigma_min, spec.sigma_max);
            auto b_at = [&](double time) {
                return spec.w ? b0 * (1.0 + std::sin(*spec.w * time) / 2.0) : b0;
            };
            s.u_dense(0, 0) = spec.x0;
            for (int k = 1; k < n_grid; ++k) {
                const double dt = t[k] - t[k - 1];
                s.u_dense(k, 0) = cir_euler_step(s.u_dense(k - 1, 0), a, b_at(t[k - 1]), sig, dt,
                                                 std::sqrt(dt) * rng.gaussian());
            }
            for (int k = 0; k < n_grid; ++k) {
                s.v_dense(k, 0) = a;
                s.v_dense(k, 1) = b_at(t[k]);
                s.v_dense(k, 2) = sig;
            }
            s.latent["a"] = a;
            s.latent["b0"] = b0;
            s.latent["sigma"] = sig;
            v_known_at_t0 = false;
            break;
        }
        case ModelKind::BMFilter: {
            double x = 0.0, w = 0.0;
            s.u_dense(0, 0) = 0.0;
            s.v_dense(0, 0) = 0.0;
            for (int k = 1; k < n_grid; ++k) {
                const double sq = std::sqrt(t[k] - t[k - 1]);
                x += sq * rng.gaussian();
                w += sq * rng.gaussian();
                s.v_dense(k, 0) = x;
                s.u_dense(k, 0) = spec.alpha * x + w;
            }
            break;
        }
        case ModelKind::BMClass: {
            double w = 0.0;
            s.u_dense(0, 0) = 0.0;
            s.v_dense(0, 0) = (0.0 >= spec.alpha) ? 1.0 : 0.0;
            for (int k = 1; k < n_grid; ++k) {
                w += std::sqrt(t[k] - t[k - 1]) * rng.gaussian();
                s.u_dense(k, 0) = w;
                s.v_dense(k, 0) = (w >= spec.alpha) ? 1.0 : 0.0;
            }
            break;
        }
        case ModelKind::GBMSelf: {
            s.u_dense(0, 0) = spec.x0;
            for (int k = 1; k < n_grid; ++k) {
                const double dt = t[k] - t[k - 1];
                s.u_dense(k, 0) = s.u_dense(k - 1, 0) *
                                  std::exp((spec.mu - 0.5 * spec.sigma * spec.sigma) * dt +
                                           spec.sigma * std::sqrt(dt) * rng.gaussian());
            }
            s.v_dense = s.u_dense;
            s.latent["mu"] = spec.mu;
            s.latent["sigma"] = spec.sigma;
            break;
        }
    }

    s.pattern = sample_observation_pattern(*grid, cfg.obs_probability, 1, d_v, cfg.mask_mode,
                                           cfg.p_mask,
                                           stream_key(cfg.seed, role_tag(role),
                                                      static_cast<std::uint64_t>(path_idx), 13));
    if (!v_known_at_t0)
        for (int j = 0; j < d_v; ++j) s.pattern.mask(0, 1 + j) = 0.0;

    if (cfg.noise_std > 0.0) {
        Rng nrng(cfg.seed, role_tag(role), static_cast<std::uint64_t>(path_idx), 17);
        RowMat noisy(s.pattern.n_obs(), d_v);
        for (int i = 0; i < s.pattern.n_obs(); ++i)
            for (int j = 0; j < d_v; ++j)
                noisy(i, j) = s.v_dense(s.pattern.obs_indices[i], j) + cfg.noise_std * nrng.gaussian();
        s.v_obs_noisy = std::move(noisy);
    }
    return s;
}

}  // namespace

Dataset generate_role(const ModelSpec& spec, const GenerationConfig& config, DatasetRole role, int n,
                      par::Exec exec) {
    config.validate(spec);
    Dataset ds;
    ds.spec = spec;
    ds.config = config;
    ds.role = role;
    ds.output_names = spec.output_names(config.include_squared_target);
    auto grid = std::make_shared<TimeGrid>(TimeGrid::regular(config.T, config.n_steps));
    ds.grid = grid;
    ds.samples.resize(n);
    par::for_each_index(n, exec, [&](int i) { ds.samples[i] = simulate_one(spec, config, grid, role, i); });
    return ds;
}

DatasetSplits generate(const ModelSpec& spec, const GenerationConfig& config, par::Exec exec) {
    config.validate(spec);
    const int n_train = static_cast<int>(std::lround(config.train_fraction * config.n_paths));
    const int n_val = config.n_paths - n_train;
    if (n_train < 1 || n_val < 1)
        throw InvalidInputError("generate: both train and val splits must be nonempty");
    DatasetSplits out;
    out.train = generate_role(spec, config, DatasetRole::Train, n_train, exec);
    out.val = generate_role(spec, config, DatasetRole::Val, n_val, exec);
    out.test = generate_role(spec, config, DatasetRole::Test, config.test_paths, exec);
    return out;
}

}  // namespace njode
