#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "njode/baselines.hpp"
#include "njode/datasets.hpp"
#include "njode/errors.hpp"
#include "njode/losses.hpp"
#include "njode/references.hpp"
#include "njode/rng.hpp"

using namespace njode;
using testutil::make_sample;

namespace {

/// Single observation at t = 0.5 with V = 1; trace with G_left = 0, G_post = 0.5.
struct SingleObsCase {
    PathSample sample;
    ForwardTrace trace;
};

SingleObsCase single_obs_case(double mask_v = 1.0) {
    SingleObsCase c;
    const TimeGrid grid = TimeGrid::regular(1.0, 10);
    RowMat u = RowMat::Zero(11, 1), v = RowMat::Ones(11, 1);
    RowMat mask(2, 2);
    mask << 1, 1, 1, mask_v;
    c.sample = make_sample(grid, u, v, {0, 5}, mask);
    c.trace.times = grid.t;
    c.trace.obs_grid_idx = {0, 5};
    c.trace.G.setZero(11, 1);
    c.trace.G_left.setZero(2, 1);
    c.trace.G_post.setZero(2, 1);
    c.trace.G_left(1, 0) = 0.0;
    c.trace.G_post(1, 0) = 0.5;
    return c;
}

}  // namespace

TEST_CASE("io_loss") {
    SUBCASE("exact predictions score zero") {
        auto c = single_obs_case();
        c.trace.G_left(1, 0) = 1.0;
        c.trace.G_post(1, 0) = 1.0;
        CHECK(io_loss(c.trace, c.sample) == 0.0);
    }
    SUBCASE("hand evaluation: 1^2 + 0.5^2") {
        const auto c = single_obs_case();
        CHECK(io_loss(c.trace, c.sample) == doctest::Approx(1.25).epsilon(1e-15));
    }
    SUBCASE("all output masks zero scores zero") {
        const auto c = single_obs_case(0.0);
        CHECK(io_loss(c.trace, c.sample) == 0.0);
    }
    SUBCASE("t_0 is excluded from the sum") {
        auto c = single_obs_case();
        c.trace.G_post(0, 0) = -100.0;  // error at t_0 must not matter
        c.trace.G_left(0, 0) = -100.0;
        CHECK(io_loss(c.trace, c.sample) == doctest::Approx(1.25).epsilon(1e-15));
    }
}

TEST_CASE("old_loss") {
    SUBCASE("floor at 4 eps for perfect predictions") {
        auto c = single_obs_case();
        c.trace.G_left(1, 0) = 1.0;
        c.trace.G_post(1, 0) = 1.0;
        CHECK(old_loss(c.trace, c.sample, 1e-10) == doctest::Approx(4e-10).epsilon(1e-6));
    }
    SUBCASE("single observation formula") {
        const auto c = single_obs_case();
        const double eps = 1e-10;
        const double want = std::pow(std::sqrt(1.0 + eps) + std::sqrt(0.25 + eps), 2);
        CHECK(old_loss(c.trace, c.sample, eps) == doctest::Approx(want).epsilon(1e-14));
        CHECK(old_loss(c.trace, c.sample, eps) == doctest::Approx(2.25).epsilon(1e-4));
    }
}

TEST_CASE("jump_loss isolates the post-jump term") {
    auto c = single_obs_case();
    c.trace.G_post(1, 0) = 1.0;  // post-jump exact, pre-jump wrong
    CHECK(jump_loss(c.trace, c.sample) == 0.0);

    const auto d = single_obs_case();
    CHECK(jump_loss(d.trace, d.sample) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("noisy_loss") {
    auto c = single_obs_case();
    SUBCASE("requires noise values") {
        CHECK_THROWS_AS(noisy_loss(c.trace, c.sample), InvalidInputError);
    }
    SUBCASE("pre-jump term against noisy targets") {
        RowMat noisy(2, 1);
        noisy << 1.0, 1.2;
        c.sample.v_obs_noisy = noisy;
        c.trace.G_left(1, 0) = 1.0;
        CHECK(noisy_loss(c.trace, c.sample) == doctest::Approx(0.04).epsilon(1e-12));
        c.trace.G_left(1, 0) = 1.2;
        CHECK(noisy_loss(c.trace, c.sample) == 0.0);
    }
}

TEST_CASE("loss identities on random traces") {
    const ModelSpec spec = ModelSpec::gbm_uncertain(1.0, 0.05, 0.1, 0.05, 0.5);
    GenerationConfig cfg;
    cfg.n_paths = 2;
    cfg.test_paths = 0;
    cfg.seed = 55;
    const Dataset ds = generate_role(spec, cfg, DatasetRole::Train, 50);
    Rng rng(1);

    for (const auto& s : ds.samples) {
        ForwardTrace tr;
        tr.times = s.grid->t;
        tr.obs_grid_idx = s.pattern.obs_indices;
        tr.G.setZero(s.grid->size(), 2);
        tr.G_left.setZero(s.pattern.n_obs(), 2);
        tr.G_post.setZero(s.pattern.n_obs(), 2);
        for (int i = 0; i < s.pattern.n_obs(); ++i)
            for (int j = 0; j < 2; ++j) {
                tr.G_left(i, j) = rng.gaussian();
                tr.G_post(i, j) = rng.gaussian();
            }

        const double io = io_loss(tr, s);
        const double old_v = old_loss(tr, s);
        const double jump = jump_loss(tr, s);

        // (a + b)^2 >= a^2 + b^2 pointwise, so old dominates io up to eps
        CHECK(old_v >= io - 1e-9);
        // io = jump + pre-jump term; isolate the pre-jump part by making the
        // post-jump predictions exact
        ForwardTrace pre_only = tr;
        for (int i = 0; i < s.pattern.n_obs(); ++i)
            pre_only.G_post.row(i) = s.v_dense.row(s.pattern.obs_indices[i]);
        const double pre_term = io_loss(pre_only, s);
        CHECK(io == doctest::Approx(jump + pre_term).epsilon(1e-12));

        // zeroing a mask coordinate never increases any loss
        PathSample masked = s;
        masked.pattern.mask.col(1 + 1).setZero();  // output coordinate 1
        CHECK(io_loss(tr, masked) <= io + 1e-15);
        CHECK(jump_loss(tr, masked) <= jump + 1e-15);
    }
}

TEST_CASE("per-path losses are independent of dataset ordering") {
    const ModelSpec spec = ModelSpec::bm_drift(0.0, 0.2, 0.05, 0.1);
    GenerationConfig cfg;
    cfg.n_paths = 2;
    cfg.test_paths = 0;
    cfg.seed = 8;
    Dataset ds = generate_role(spec, cfg, DatasetRole::Train, 16);
    const auto traces = build_reference_traces(ds, ReferenceKind::Analytic, 0, 0);

    std::vector<double> a;
    for (int i = 0; i < ds.n(); ++i) a.push_back(io_loss(traces[i], ds.samples[i]));
    std::vector<double> b;
    for (int i = ds.n() - 1; i >= 0; --i) b.push_back(io_loss(traces[i], ds.samples[i]));
    std::reverse(b.begin(), b.end());
    CHECK(a == b);
}

TEST_CASE("zero-observation paths score zero with a warning flag") {
    const TimeGrid grid = TimeGrid::regular(1.0, 4);
    const PathSample s = make_sample(grid, RowMat::Zero(5, 1), RowMat::Zero(5, 1), {0},
                                     RowMat::Ones(1, 2));
    ForwardTrace tr;
    tr.times = grid.t;
    tr.obs_grid_idx = {0};
    tr.G.setZero(5, 1);
    tr.G_left.setZero(1, 1);
    tr.G_post.setZero(1, 1);
    int n = -1;
    CHECK(io_loss(tr, s, &n) == 0.0);
    CHECK(n == 0);
    const LossReport rep = LossReport::from_per_path({0.0}, {0});
    CHECK(rep.any_zero_obs);
}

TEST_CASE("analytic conditional expectation beats its perturbations in io loss") {
    // empirical form of the L2-optimality of the conditional expectation
    const ModelSpec spec = ModelSpec::bm_drift(0.0, 0.2, 0.05, 0.1);
    GenerationConfig cfg;
    cfg.n_paths = 2;
    cfg.test_paths = 0;
    cfg.seed = 1234;
    const Dataset ds = generate_role(spec, cfg, DatasetRole::Test, 4000);
    const auto reference = build_reference_traces(ds, ReferenceKind::Analytic, 0, 0);

    double base = 0.0;
    for (int i = 0; i < ds.n(); ++i) base += io_loss(reference[i], ds.samples[i]);
    base /= ds.n();

    Rng rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        double perturbed = 0.0;
        for (int i = 0; i < ds.n(); ++i) {
            ForwardTrace tr = reference[i];
            for (Eigen::Index r = 0; r < tr.G_left.rows(); ++r) {
                tr.G_left(r, 0) += 0.05 * rng.gaussian();
                tr.G_post(r, 0) += 0.05 * rng.gaussian();
            }
            perturbed += io_loss(tr, ds.samples[i]);
        }
        perturbed /= ds.n();
        CHECK(perturbed > base);
    }
}
