#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "njode/parallel.hpp"
#include "njode/paths.hpp"

namespace njode {

enum class ModelKind { BMDrift, GBMUncertain, CIRUncertain, BMFilter, BMClass, GBMSelf };

/// Generative model for one experiment family. Unused fields stay at their
/// defaults; validate() checks only the fields of the active kind.
struct ModelSpec {
    ModelKind kind = ModelKind::BMDrift;
    double x0 = 0.0;
    double sigma = 0.0;                    // BMDrift (fixed vol), GBMSelf
    double a = 0.0, b = 0.0;               // prior mean/std of the Gaussian drift
    double sigma_min = 0.0, sigma_max = 0.0;
    double a_min = 0.0, a_max = 0.0;       // CIR speed range
    double b_min = 0.0, b_max = 0.0;       // CIR mean range
    std::optional<double> w;               // CIR: b_t = b_0 (1 + sin(w t)/2)
    bool cir_strict_positivity = true;
    double alpha = 0.0;                    // BMFilter / BMClass
    double mu = 0.0;                       // GBMSelf (fixed drift)

    static ModelSpec bm_drift(double x0, double sigma, double a, double b);
    static ModelSpec gbm_uncertain(double x0, double a, double b, double sigma_min, double sigma_max);
    static ModelSpec cir_uncertain(double x0, double a_min, double a_max, double b_min, double b_max,
                                   double sigma_min, double sigma_max,
                                   std::optional<double> w = std::nullopt);
    static ModelSpec bm_filter(double alpha);
    static ModelSpec bm_class(double alpha);
    static ModelSpec gbm_self(double x0, double mu, double sigma);

    int d_u() const { return 1; }
    int d_v(bool include_squared) const;
    std::vector<std::string> output_names(bool include_squared) const;
    void validate() const;
};

struct GenerationConfig {
    int n_paths = 20000;  // train + val combined
    double T = 1.0;
    int n_steps = 100;
    double obs_probability = 0.1;
    std::uint64_t seed = 0;
    double train_fraction = 0.8;
    int test_paths = 5000;
    bool include_squared_target = false;
    double noise_std = 0.0;  // i.i.d. Gaussian noise on observed V values
    MaskMode mask_mode = MaskMode::Full;
    double p_mask = 1.0;

    void validate(const ModelSpec& spec) const;
};

enum class DatasetRole { Train, Val, Test };
std::string to_string(DatasetRole role);

struct Dataset {
    ModelSpec spec;
    GenerationConfig config;
    DatasetRole role = DatasetRole::Train;
    std::shared_ptr<const TimeGrid> grid;
    std::vector<PathSample> samples;
    std::vector<std::string> output_names;

    int n() const { return static_cast<int>(samples.size()); }
    int d_u() const { return samples.empty() ? 0 : samples.front().d_u(); }
    int d_v() const { return samples.empty() ? 0 : samples.front().d_v(); }
};

struct DatasetSplits {
    Dataset train, val, test;
};

/// Euler-Maruyama generation: each path draws its latent parameters, its
/// Brownian increments and its observation pattern from an independent stream
/// keyed by (seed, role, path index), so splits are disjoint and the result
/// does not depend on scheduling.
DatasetSplits generate(const ModelSpec& spec, const GenerationConfig& config,
                       par::Exec exec = par::Exec::OpenMP);

/// Single dataset of `n` paths for one role (used by tests and baselines).
Dataset generate_role(const ModelSpec& spec, const GenerationConfig& config, DatasetRole role, int n,
                      par::Exec exec = par::Exec::OpenMP);

/// Full-truncation Euler step for the CIR process: the diffusion sees
/// max(x, 0), and the result is clamped at 0.
double cir_euler_step(double x, double a, double b_t, double sigma, double dt, double dW);

}  // namespace njode
