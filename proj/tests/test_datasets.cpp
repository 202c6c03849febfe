#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "njode/dataset_io.hpp"
#include "njode/datasets.hpp"
#include "njode/errors.hpp"

using namespace njode;
namespace fs = std::filesystem;

TEST_CASE("GBM terminal mean matches the lognormal moment oracle") {
    // sigma degenerate, b = 0: E[X_T] = x0 exp(a T)
    ModelSpec spec = ModelSpec::gbm_uncertain(1.0, 0.3, 1e-9, 0.25, 0.25);
    GenerationConfig cfg;
    cfg.n_paths = 2;
    cfg.test_paths = 0;
    cfg.seed = 21;
    const int n = 100000;
    const Dataset ds = generate_role(spec, cfg, DatasetRole::Train, n);

    double mean = 0.0, sq = 0.0;
    for (const auto& s : ds.samples) {
        const double xT = s.u_dense(s.grid->size() - 1, 0);
        mean += xT;
        sq += xT * xT;
    }
    mean /= n;
    const double sd = std::sqrt(sq / n - mean * mean);
    const double expected = std::exp(0.3);  // x0 e^{aT}
    CHECK(std::abs(mean - expected) < 3.0 * sd / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("BMClass average state at t = 1 is 1/2 by symmetry") {
    ModelSpec spec = ModelSpec::bm_class(0.0);
    GenerationConfig cfg;
    cfg.n_paths = 2;
    cfg.test_paths = 0;
    cfg.seed = 4;
    const int n = 100000;
    const Dataset ds = generate_role(spec, cfg, DatasetRole::Train, n);
    double mean = 0.0;
    for (const auto& s : ds.samples) mean += s.v_dense(s.grid->size() - 1, 0);
    mean /= n;
    CHECK(std::abs(mean - 0.5) < 3.0 * 0.5 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("same seed gives bit-identical datasets, disjoint roles differ") {
    const ModelSpec spec = ModelSpec::cir_uncertain(1.0, 2.0, 3.0, 1.0, 2.0, 1.0, 2.0);
    GenerationConfig cfg;
    cfg.n_paths = 20;
    cfg.test_paths = 5;
    cfg.seed = 31;
    const DatasetSplits a = generate(spec, cfg);
    const DatasetSplits b = generate(spec, cfg);
    REQUIRE(a.train.n() == b.train.n());
    for (int i = 0; i < a.train.n(); ++i) {
        CHECK((a.train.samples[i].u_dense - b.train.samples[i].u_dense).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a.train.samples[i].v_dense - b.train.samples[i].v_dense).cwiseAbs().maxCoeff() == 0.0);
        CHECK(a.train.samples[i].pattern.obs_indices == b.train.samples[i].pattern.obs_indices);
    }
    CHECK((a.train.samples[0].u_dense - a.val.samples[0].u_dense).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("serial and OpenMP generation agree bit-exactly") {
    const ModelSpec spec = ModelSpec::bm_drift(0.0, 0.2, 0.05, 0.1);
    GenerationConfig cfg;
    cfg.n_paths = 2;
    cfg.test_paths = 0;
    cfg.seed = 77;
    const Dataset s = generate_role(spec, cfg, DatasetRole::Train, 64, par::Exec::Serial);
    const Dataset p = generate_role(spec, cfg, DatasetRole::Train, 64, par::Exec::OpenMP);
    for (int i = 0; i < 64; ++i)
        CHECK((s.samples[i].u_dense - p.samples[i].u_dense).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cir_euler_step") {
    SUBCASE("drift fixed point") { CHECK(cir_euler_step(1.5, 2.0, 1.5, 0.3, 0.01, 0.0) == 1.5); }
    SUBCASE("diffusion vanishes at zero") {
        CHECK(cir_euler_step(0.0, 2.0, 1.5, 0.3, 0.01, 5.0) ==
              doctest::Approx(2.0 * 1.5 * 0.01).epsilon(1e-14));
    }
    SUBCASE("clamps at zero") { CHECK(cir_euler_step(0.01, 2.0, 1.0, 3.0, 0.01, -10.0) == 0.0); }
    SUBCASE("ergodic long-run mean approx b") {
        // single long path, T = 50: time-average over [T/2, T] near b
        const double a = 2.0, b = 1.0, sigma = 0.2, dt = 0.01;
        Rng rng(12345);
        double x = 1.0, acc = 0.0;
        const int steps = 5000;
        for (int k = 0; k < steps; ++k) {
            x = cir_euler_step(x, a, b, sigma, dt, std::sqrt(dt) * rng.gaussian());
            if (k >= steps / 2) acc += x;
        }
        acc /= steps / 2;
        CHECK(std::abs(acc - b) / b < 0.05);
    }
}

TEST_CASE("BMDrift one-step increments match N(mu dt, sigma^2 dt)") {
    const ModelSpec spec = ModelSpec::bm_drift(0.0, 0.2, 0.05, 0.1);
    GenerationConfig cfg;
    cfg.n_paths = 2;
    cfg.test_paths = 0;
    cfg.seed = 9;
    const int n = 100000;
    const Dataset ds = generate_role(spec, cfg, DatasetRole::Train, n);
    double mean = 0.0, sq = 0.0;
    for (const auto& s : ds.samples) {
        const double inc = s.u_dense(1, 0) - s.u_dense(0, 0) - s.latent.at("mu") * 0.01;
        mean += inc;
        sq += inc * inc;
    }
    mean /= n;
    const double var = sq / n - mean * mean;
    const double want_var = 0.2 * 0.2 * 0.01;
    CHECK(std::abs(mean) < 3.0 * std::sqrt(want_var / n));
    CHECK(std::abs(var - want_var) < 3.0 * want_var * std::sqrt(2.0 / n));
}

TEST_CASE("BMFilter covariance structure") {
    const ModelSpec spec = ModelSpec::bm_filter(1.0);
    GenerationConfig cfg;
    cfg.n_paths = 2;
    cfg.test_paths = 0;
    cfg.seed = 14;
    const int n = 100000;
    const Dataset ds = generate_role(spec, cfg, DatasetRole::Train, n);
    const int idx = 50;  // t = 0.5
    double cov = 0.0, var_y = 0.0;
    for (const auto& s : ds.samples) {
        cov += s.u_dense(idx, 0) * s.v_dense(idx, 0);
        var_y += s.u_dense(idx, 0) * s.u_dense(idx, 0);
    }
    cov /= n;
    var_y /= n;
    const double t = 0.5;
    CHECK(std::abs(cov - 1.0 * t) < 0.02);        // alpha t
    CHECK(std::abs(var_y - 2.0 * t) < 0.03);      // (alpha^2 + 1) t
}

TEST_CASE("CIR paths stay nonnegative and store exact latents") {
    const ModelSpec spec = ModelSpec::cir_uncertain(1.0, 0.2, 2.0, 1.0, 5.0, 0.05, 0.5, 2.0 * M_PI);
    GenerationConfig cfg;
    cfg.n_paths = 2;
    cfg.test_paths = 0;
    cfg.seed = 3;
    const Dataset ds = generate_role(spec, cfg, DatasetRole::Train, 200);
    for (const auto& s : ds.samples) {
        CHECK(s.u_dense.minCoeff() >= 0.0);
        const double b0 = s.latent.at("b0");
        // dense targets carry b_t = b0 (1 + sin(w t)/2) on the grid
        const double t = s.grid->t[30];
        CHECK(s.v_dense(30, 1) ==
              doctest::Approx(b0 * (1.0 + std::sin(2.0 * M_PI * t) / 2.0)).epsilon(1e-14));
    }
}

TEST_CASE("squared target is BMDrift-only and appends mu^2") {
    GenerationConfig cfg;
    cfg.n_paths = 4;
    cfg.test_paths = 0;
    cfg.seed = 2;
    cfg.include_squared_target = true;

    const Dataset ds = generate_role(ModelSpec::bm_drift(0.0, 0.2, 0.05, 0.1), cfg, DatasetRole::Train, 4);
    CHECK(ds.d_v() == 2);
    CHECK(ds.output_names == std::vector<std::string>{"mu", "mu_sq"});
    const double mu = ds.samples[0].latent.at("mu");
    CHECK(ds.samples[0].v_dense(10, 1) == mu * mu);

    CHECK_THROWS_AS(generate_role(ModelSpec::bm_filter(1.0), cfg, DatasetRole::Train, 4),
                    InvalidInputError);
}

TEST_CASE("observation noise lands on observed targets only when enabled") {
    GenerationConfig cfg;
    cfg.n_paths = 4;
    cfg.test_paths = 0;
    cfg.seed = 6;
    cfg.noise_std = 0.1;
    const Dataset ds = generate_role(ModelSpec::bm_filter(1.0), cfg, DatasetRole::Train, 4);
    for (const auto& s : ds.samples) {
        REQUIRE(s.v_obs_noisy.has_value());
        CHECK(s.v_obs_noisy->rows() == s.pattern.n_obs());
        // noise is nonzero but dense targets are untouched
        double diff = 0.0;
        for (int i = 0; i < s.pattern.n_obs(); ++i)
            diff += std::abs((*s.v_obs_noisy)(i, 0) - s.v_dense(s.pattern.obs_indices[i], 0));
        CHECK(diff > 0.0);
    }
}

TEST_CASE("dataset round-trip is bit-exact") {
    const ModelSpec spec = ModelSpec::gbm_uncertain(1.0, 0.05, 0.1, 0.05, 0.5);
    GenerationConfig cfg;
    cfg.n_paths = 6;
    cfg.test_paths = 0;
    cfg.seed = 19;
    cfg.noise_std = 0.05;
    const Dataset ds = generate_role(spec, cfg, DatasetRole::Val, 6);

    const fs::path dir = fs::temp_directory_path() / "njode_ds_test";
    fs::remove_all(dir);
    write_dataset(ds, dir.string());
    const Dataset back = read_dataset(dir.string());

    REQUIRE(back.n() == ds.n());
    CHECK(back.role == DatasetRole::Val);
    for (int i = 0; i < ds.n(); ++i) {
        CHECK((back.samples[i].u_dense - ds.samples[i].u_dense).cwiseAbs().maxCoeff() == 0.0);
        CHECK((back.samples[i].v_dense - ds.samples[i].v_dense).cwiseAbs().maxCoeff() == 0.0);
        CHECK(back.samples[i].pattern.obs_indices == ds.samples[i].pattern.obs_indices);
        CHECK((back.samples[i].pattern.mask - ds.samples[i].pattern.mask).cwiseAbs().maxCoeff() == 0.0);
        CHECK(back.samples[i].latent == ds.samples[i].latent);
        CHECK((*back.samples[i].v_obs_noisy - *ds.samples[i].v_obs_noisy).cwiseAbs().maxCoeff() == 0.0);
    }
    fs::remove_all(dir);
}

TEST_CASE("malformed dataset files raise parse/config errors") {
    const ModelSpec spec = ModelSpec::bm_drift(0.0, 0.2, 0.05, 0.1);
    GenerationConfig cfg;
    cfg.n_paths = 3;
    cfg.test_paths = 0;
    cfg.seed = 1;
    const Dataset ds = generate_role(spec, cfg, DatasetRole::Train, 3);
    const fs::path dir = fs::temp_directory_path() / "njode_ds_bad";
    fs::remove_all(dir);
    write_dataset(ds, dir.string());

    SUBCASE("truncated paths file") {
        std::ifstream in(dir / "paths.jsonl");
        std::string first;
        std::getline(in, first);
        in.close();
        std::ofstream out(dir / "paths.jsonl", std::ios::trunc);
        out << first << "\n";
        out.close();
        CHECK_THROWS_AS(read_dataset(dir.string()), ParseError);
    }
    SUBCASE("corrupt record names the line") {
        std::ofstream out(dir / "paths.jsonl", std::ios::app);
        out << "{not json\n";
        out.close();
        try {
            read_dataset(dir.string());
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("line 4") != std::string::npos);
        }
    }
    SUBCASE("version mismatch is an explicit unsupported-version error") {
        std::ifstream in(dir / "meta.json");
        std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        const auto pos = all.find("\"version\": 1");
        REQUIRE(pos != std::string::npos);
        all.replace(pos, std::string("\"version\": 1").size(), "\"version\": 99");
        std::ofstream out(dir / "meta.json", std::ios::trunc);
        out << all;
        out.close();
        CHECK_THROWS_AS(read_dataset(dir.string()), ConfigError);
    }
    fs::remove_all(dir);
}
