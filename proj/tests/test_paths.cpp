#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "njode/datasets.hpp"
#include "njode/errors.hpp"
#include "njode/paths.hpp"

using namespace njode;
using testutil::make_sample;

namespace {

PathSample two_obs_sample() {
    // observations (t=0, u=0) and (t=0.5, u=1) on a 10-step grid
    const TimeGrid grid = TimeGrid::regular(1.0, 10);
    RowMat u = RowMat::Zero(11, 1), v = RowMat::Zero(11, 1);
    u(5, 0) = 1.0;
    RowMat mask = RowMat::Ones(2, 2);
    return make_sample(grid, u, v, {0, 5}, mask);
}

}  // namespace

TEST_CASE("TimeGrid invariants") {
    const TimeGrid g = TimeGrid::regular(1.0, 100);
    CHECK(g.size() == 101);
    CHECK(g.t.front() == 0.0);
    CHECK(g.t.back() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(g.index_of(0.5) == 50);
    CHECK(g.index_of(0.505) == -1);

    TimeGrid bad = g;
    bad.t[3] = bad.t[2];
    CHECK_THROWS_AS(bad.validate(), InvalidInputError);

    CHECK_THROWS_AS(TimeGrid::regular(0.0, 10), InvalidInputError);
}

TEST_CASE("sample_observation_pattern basics") {
    const TimeGrid grid = TimeGrid::regular(1.0, 100);

    SUBCASE("p = 1 full: every index observed, all masks 1") {
        const auto p = sample_observation_pattern(grid, 1.0, 1, 1, MaskMode::Full, 1.0, 42);
        CHECK(p.n_obs() == 101);
        CHECK(p.mask.minCoeff() == 1.0);
    }

    SUBCASE("same seed twice gives identical patterns") {
        const auto a = sample_observation_pattern(grid, 0.3, 2, 1, MaskMode::PerCoordinate, 0.6, 7);
        const auto b = sample_observation_pattern(grid, 0.3, 2, 1, MaskMode::PerCoordinate, 0.6, 7);
        CHECK(a.obs_indices == b.obs_indices);
        CHECK((a.mask - b.mask).cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("empty grid rejected") {
        TimeGrid empty;
        CHECK_THROWS_AS(sample_observation_pattern(empty, 0.5, 1, 1, MaskMode::Full, 1.0, 1),
                        InvalidInputError);
    }

    SUBCASE("invalid p rejected") {
        CHECK_THROWS_AS(sample_observation_pattern(grid, 0.0, 1, 1, MaskMode::Full, 1.0, 1),
                        InvalidInputError);
    }
}

TEST_CASE("observation count matches the binomial Monte Carlo oracle") {
    // p = 0.1 on a 100-step grid: expected observations = 1 (forced t_0) + 100 * 0.1
    const TimeGrid grid = TimeGrid::regular(1.0, 100);
    const int reps = 10000;
    double total = 0.0;
    for (int r = 0; r < reps; ++r)
        total += sample_observation_pattern(grid, 0.1, 1, 1, MaskMode::Full, 1.0, 1000 + r).n_obs();
    const double mean = total / reps;
    const double expected = 1.0 + 100 * 0.1;
    const double se = std::sqrt(100 * 0.1 * 0.9 / reps);
    CHECK(std::abs(mean - expected) < 3.0 * se);
}

TEST_CASE("pattern invariants hold over random seeds") {
    const TimeGrid grid = TimeGrid::regular(1.0, 50);
    for (int seed = 0; seed < 200; ++seed) {
        const auto p =
            sample_observation_pattern(grid, 0.25, 2, 2, MaskMode::PerCoordinate, 0.5, seed);
        p.validate(grid.size(), 2);  // throws on violation
        for (int e = 1; e < p.n_obs(); ++e) CHECK(p.mask.row(e).sum() > 0.0);
    }
}

TEST_CASE("tau returns the last observation time") {
    const PathSample s = two_obs_sample();
    CHECK(tau(s.pattern, *s.grid, 0.3) == 0.0);   // t < t_1 --> 0
    CHECK(tau(s.pattern, *s.grid, 0.5) == 0.5);   // closed from the left
    CHECK(tau(s.pattern, *s.grid, 0.75) == 0.5);  // between observations
}

TEST_CASE("forward-fill interpolation") {
    const PathSample s = two_obs_sample();

    SUBCASE("linear segment midpoint") {
        CHECK(interpolate_forward_fill(s, 1.0, 0.25)[0] == doctest::Approx(0.5).epsilon(1e-14));
    }
    SUBCASE("no information leakage: cutoff hides the next observation") {
        CHECK(interpolate_forward_fill(s, 0.25, 0.25)[0] == 0.0);
    }
    SUBCASE("single observation extends constantly") {
        const TimeGrid grid = TimeGrid::regular(1.0, 4);
        RowMat u = RowMat::Constant(5, 1, 3.25), v = RowMat::Zero(5, 1);
        const PathSample c = make_sample(grid, u, v, {0}, RowMat::Ones(1, 2));
        for (double q : {0.0, 0.3, 1.0}) CHECK(interpolate_forward_fill(c, 1.0, q)[0] == 3.25);
    }
    SUBCASE("hits observed values exactly") {
        CHECK(interpolate_forward_fill(s, 1.0, 0.5)[0] == 1.0);
        CHECK(interpolate_forward_fill(s, 0.5, 0.0)[0] == 0.0);
    }
}

TEST_CASE("interpolation is flat until the event before the next visible observation") {
    // coordinate 0 observed at t_0 and t_4; an intermediate event at t_2
    // observes only coordinate 1, so coordinate 0 stays flat on [0, t_2]
    const TimeGrid grid = TimeGrid::regular(1.0, 4);
    RowMat u(5, 2), v = RowMat::Zero(5, 1);
    u << 0, 0, 1, 1, 2, 2, 3, 3, 4, 4;
    RowMat mask(3, 3);
    mask << 1, 1, 1, 0, 1, 1, 1, 0, 1;
    const PathSample s = make_sample(grid, u, v, {0, 2, 4}, mask);

    CHECK(interpolate_forward_fill(s, 1.0, 0.25)[0] == 0.0);                          // flat branch
    CHECK(interpolate_forward_fill(s, 1.0, 0.75)[0] == doctest::Approx(2.0));         // linear rise
    CHECK(interpolate_forward_fill(s, 1.0, 0.25)[1] == doctest::Approx(1.0));         // coord 1 linear
    CHECK(interpolate_forward_fill(s, 1.0, 0.75)[1] == doctest::Approx(2.0));         // then flat
}

TEST_CASE("forward-fill time-consistency and no-leakage properties") {
    const ModelSpec spec = ModelSpec::bm_drift(0.0, 0.2, 0.05, 0.1);
    GenerationConfig cfg;
    cfg.n_paths = 2;
    cfg.test_paths = 0;
    cfg.seed = 99;
    cfg.mask_mode = MaskMode::PerCoordinate;
    cfg.p_mask = 0.7;
    cfg.obs_probability = 0.25;
    const Dataset ds = generate_role(spec, cfg, DatasetRole::Train, 40);

    for (const PathSample& s : ds.samples) {
        const auto& grid = *s.grid;
        for (double t : {0.31, 0.57, 0.93}) {
            const double tt = tau(s.pattern, grid, t);
            for (double r : {t, t + 0.02, 1.0}) {
                const double tr = tau(s.pattern, grid, r);
                for (double q = 0.0; q <= tt + 1e-12; q += 0.07) {
                    const Vec a = interpolate_forward_fill(s, tt, q);
                    const Vec b = interpolate_forward_fill(s, tr, q);
                    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);  // exact, by construction
                }
            }
        }

        // deleting observations strictly after the cutoff changes nothing
        const double cutoff = 0.4;
        PathSample clipped = s;
        int keep = 0;
        while (keep < s.pattern.n_obs() &&
               grid.t[s.pattern.obs_indices[keep]] <= cutoff + grid.time_tol())
            ++keep;
        clipped.pattern.obs_indices.resize(keep);
        clipped.pattern.mask = s.pattern.mask.topRows(keep);
        for (double q = 0.0; q <= 1.0; q += 0.13) {
            const Vec a = interpolate_forward_fill(s, cutoff, q);
            const Vec b = interpolate_forward_fill(clipped, cutoff, q);
            CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
        }
    }
}

TEST_CASE("path_stats") {
    const TimeGrid grid = TimeGrid::regular(1.0, 10);
    RowMat u = RowMat::Constant(11, 1, 2.0), v = RowMat::Zero(11, 1);
    const PathSample s = make_sample(grid, u, v, {0, 3, 4}, RowMat::Ones(3, 2));

    SUBCASE("before the first observation") {
        const PathStats st = path_stats(s, 0.2);
        CHECK(st.n_t == 0);
        CHECK(st.delta_t == 1.0);        // sentinel T
        CHECK(st.u_star == 2.0);         // |U_0|_1
    }
    SUBCASE("counting and min gap") {
        const PathStats st = path_stats(s, 0.5);
        CHECK(st.n_t == 2);
        CHECK(st.delta_t == doctest::Approx(0.1));
    }
    SUBCASE("u_star is nondecreasing in t") {
        const ModelSpec spec = ModelSpec::bm_drift(0.0, 0.3, 0.0, 0.2);
        GenerationConfig cfg;
        cfg.n_paths = 2;
        cfg.test_paths = 0;
        cfg.seed = 5;
        const Dataset ds = generate_role(spec, cfg, DatasetRole::Train, 10);
        for (const auto& sample : ds.samples)
            CHECK(path_stats(sample, 0.9).u_star >= path_stats(sample, 0.5).u_star);
    }
}
