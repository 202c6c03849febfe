#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "njode/errors.hpp"
#include "njode/rng.hpp"
#include "njode/signature.hpp"

using namespace njode;
using testutil::make_sample;
using testutil::quadrature_signature;

TEST_CASE("sig_dim") {
    CHECK(sig_dim(1, 3) == 4);  // m + 1 for d = 1
    CHECK(sig_dim(2, 2) == 7);  // (2^3 - 1) / (2 - 1)
    CHECK(sig_dim(3, 0) == 1);  // level-0 only
    CHECK(sig_dim(5, 3) == 1 + 5 + 25 + 125);
    CHECK_THROWS_AS(sig_dim(10, 30), InvalidInputError);  // overflow
    CHECK_THROWS_AS(sig_dim(0, 2), InvalidInputError);
}

TEST_CASE("signature_of_segment") {
    SUBCASE("zero increment gives the trivial signature") {
        const auto s = signature_of_segment(Vec::Zero(3), 2);
        CHECK(s.coeffs[0] == 1.0);
        CHECK(s.coeffs.tail(s.coeffs.size() - 1).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("d = 1: powers over factorials") {
        const auto s = signature_of_segment(Vec::Ones(1), 3);
        CHECK(s.coeffs[0] == 1.0);
        CHECK(s.coeffs[1] == 1.0);
        CHECK(s.coeffs[2] == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(s.coeffs[3] == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    }
    SUBCASE("d = 2 level-2 block matches the quadrature oracle") {
        Vec inc(2);
        inc << 1.0, 2.0;
        const auto s = signature_of_segment(inc, 2);
        // closed form: (0.5, 1, 1, 2)
        CHECK(s.coeffs[3] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(s.coeffs[4] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(s.coeffs[5] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(s.coeffs[6] == doctest::Approx(2.0).epsilon(1e-12));
        const Vec oracle = quadrature_signature({0.0, 1.0}, {Vec::Zero(2), inc}, 2, 10000);
        for (int i = 0; i < 7; ++i) CHECK(std::abs(s.coeffs[i] - oracle[i]) < 1e-6);
    }
}

TEST_CASE("chen_concat") {
    Rng rng(31);
    auto random_sig = [&](int d, int m) {
        Vec inc(d);
        for (int j = 0; j < d; ++j) inc[j] = rng.gaussian();
        return signature_of_segment(inc, m);
    };

    SUBCASE("trivial signature is the neutral element") {
        const auto a = random_sig(3, 3);
        const auto e = TruncatedSignature::trivial(3, 3);
        CHECK((chen_concat(a, e).coeffs - a.coeffs).cwiseAbs().maxCoeff() < 1e-15);
        CHECK((chen_concat(e, a).coeffs - a.coeffs).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("two collinear segments equal one double segment") {
        Vec inc(2);
        inc << 0.3, -0.7;
        const auto one = signature_of_segment(inc, 3);
        const auto both = chen_concat(one, one);
        const auto direct = signature_of_segment(Vec(2 * inc), 3);
        CHECK((both.coeffs - direct.coeffs).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("two-segment path matches the quadrature oracle") {
        Vec a(2), b(2);
        a << 1.0, 0.5;
        b << -0.25, 1.5;
        const auto sig = chen_concat(signature_of_segment(a, 3), signature_of_segment(b, 3));
        const Vec oracle = quadrature_signature({0.0, 1.0, 2.0}, {Vec::Zero(2), a, a + b}, 3, 4000);
        for (Eigen::Index i = 0; i < sig.coeffs.size(); ++i)
            CHECK(std::abs(sig.coeffs[i] - oracle[i]) < 1e-6);
    }
    SUBCASE("associativity") {
        for (int rep = 0; rep < 20; ++rep) {
            const auto a = random_sig(2, 3), b = random_sig(2, 3), c = random_sig(2, 3);
            const auto left = chen_concat(chen_concat(a, b), c);
            const auto right = chen_concat(a, chen_concat(b, c));
            CHECK((left.coeffs - right.coeffs).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
    SUBCASE("shape mismatch rejected") {
        CHECK_THROWS_AS(chen_concat(random_sig(2, 3), random_sig(3, 3)), InvalidInputError);
    }
}

namespace {

PathSample staggered_sample() {
    // 3 coordinates with staggered masks on a 10-step grid
    const TimeGrid grid = TimeGrid::regular(1.0, 10);
    Rng rng(77);
    RowMat u(11, 3), v = RowMat::Zero(11, 1);
    for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 3; ++j) u(i, j) = rng.gaussian();
    RowMat mask(4, 4);
    mask << 1, 1, 1, 1,  // t_0 fully observed
        1, 0, 1, 0,      // t = 0.2
        0, 1, 0, 1,      // t = 0.5
        1, 1, 0, 1;      // t = 0.9
    return make_sample(grid, u, v, {0, 2, 5, 9}, mask);
}

}  // namespace

TEST_CASE("signature_of_interpolated_path") {
    const PathSample s = staggered_sample();
    const Vec u0 = s.u_dense.row(0).transpose();

    SUBCASE("cutoff 0 is trivial") {
        const auto sig = signature_of_interpolated_path(s, 0.0, 3, u0);
        CHECK(sig.coeffs[0] == 1.0);
        CHECK(sig.coeffs.tail(sig.coeffs.size() - 1).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("single observed segment, d = 1") {
        const TimeGrid grid = TimeGrid::regular(1.0, 10);
        RowMat u = RowMat::Zero(11, 1), v = RowMat::Zero(11, 1);
        u(5, 0) = 1.0;
        const PathSample p = make_sample(grid, u, v, {0, 5}, RowMat::Ones(2, 2));
        const auto sig = signature_of_interpolated_path(p, 0.5, 2, Vec::Zero(1));
        CHECK(sig.coeffs[0] == 1.0);
        CHECK(sig.coeffs[1] == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(sig.coeffs[2] == doctest::Approx(0.5).epsilon(1e-14));
    }
    SUBCASE("staggered masks match the quadrature oracle on the interpolation") {
        const double cutoff = 0.9;
        const auto sig = signature_of_interpolated_path(s, cutoff, 3, u0);
        // breakpoints are the observation events; evaluate the interpolated
        // path there via the public interpolation routine
        std::vector<double> times;
        std::vector<Vec> values;
        for (int idx : s.pattern.obs_indices) {
            const double t = s.grid->t[idx];
            if (t > cutoff) break;
            times.push_back(t);
            values.push_back(interpolate_forward_fill(s, cutoff, t) - u0);
        }
        const Vec oracle = quadrature_signature(times, values, 3, 4000);
        for (Eigen::Index i = 0; i < sig.coeffs.size(); ++i)
            CHECK(std::abs(sig.coeffs[i] - oracle[i]) < 1e-6);
    }
    SUBCASE("level-1 block equals the total increment") {
        const auto sig = signature_of_interpolated_path(s, 1.0, 3, u0);
        const Vec total = interpolate_forward_fill(s, 1.0, 1.0) - u0;
        // telescoping sum of increments, exact up to accumulation ulps
        for (int j = 0; j < 3; ++j) CHECK(std::abs(sig.coeffs[1 + j] - total[j]) < 1e-13);
    }
}

TEST_CASE("time-reparameterization invariance") {
    // doubling all segment durations while keeping values leaves the
    // signature unchanged
    const PathSample s = staggered_sample();
    const Vec u0 = s.u_dense.row(0).transpose();
    const auto sig = signature_of_interpolated_path(s, 1.0, 3, u0);

    PathSample stretched = s;
    TimeGrid g2 = *s.grid;
    g2.T = 2.0;
    g2.dt = 0.2;
    for (auto& t : g2.t) t *= 2.0;
    stretched.grid = std::make_shared<TimeGrid>(g2);
    const auto sig2 = signature_of_interpolated_path(stretched, 2.0, 3, u0);
    CHECK((sig.coeffs - sig2.coeffs).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("random piecewise-linear paths agree with the quadrature oracle") {
    Rng rng(123);
    for (int rep = 0; rep < 12; ++rep) {
        const int d = 1 + static_cast<int>(rng.integer() % 3);
        const int m = 1 + static_cast<int>(rng.integer() % 3);
        const int n_seg = 1 + static_cast<int>(rng.integer() % 4);
        std::vector<double> times{0.0};
        std::vector<Vec> values{Vec::Zero(d)};
        TruncatedSignature sig = TruncatedSignature::trivial(d, m);
        for (int s = 0; s < n_seg; ++s) {
            Vec inc(d);
            for (int j = 0; j < d; ++j) inc[j] = rng.gaussian();
            times.push_back(times.back() + 1.0);
            values.push_back(values.back() + inc);
            chen_concat_inplace(sig, signature_of_segment(inc, m));
        }
        const Vec oracle = quadrature_signature(times, values, m, 3000);
        for (Eigen::Index i = 0; i < sig.coeffs.size(); ++i) {
            const double scale = std::max(1.0, std::abs(oracle[i]));
            CHECK(std::abs(sig.coeffs[i] - oracle[i]) / scale < 1e-5);
        }
    }
}
