#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cyllab/delbar_solve.hpp"
#include "cyllab/estimates.hpp"

using namespace cyllab;
constexpr double pi = std::numbers::pi;

namespace {

SpectralField single_mode(double r, std::size_t S, cplx a)
{
    Cylinder c(r, S, 16, 1);
    SpectralField u(c);
    for (std::size_t i = 0; i < S; ++i)
        u.at(i, 1, 0) = a * std::exp(2 * pi * c.s(i));
    return u;
}

SpectralField solved_instance(double eps)
{
    Cylinder c(10.0, 2001, 16, 1);
    SpectralBoundaryData b;
    b.left.push_back({0, {cplx(0.4, 0.1)}});
    b.left.push_back({-1, {cplx(0.1, 0.0)}});
    b.right.push_back({1, {cplx(0.1, 0.0)}});
    return solve_nonlinear(c, b, VectorFieldModel::scalar_linear(2, 0.5), eps).field;
}

}  // namespace

TEST_CASE("constants")
{
    CHECK(decay_delta * decay_delta == doctest::Approx(1.0 / (4.0 * poincare_constant)));
    CHECK(decay_c == doctest::Approx(decay_delta / 2));
}

TEST_CASE("single holomorphic mode: gamma'' - pi^2 gamma - rhs = 7 pi^2 gamma")
{
    auto u = single_mode(2.0, 801, cplx(0.001, 0.0));
    auto p = gamma_profile(u);
    const auto& c = p.cyl;
    double worst = 0.0;
    for (std::size_t i = c.interior_first(); i <= c.interior_last(); ++i) {
        double margin = p.gamma_dd[i] - pi * pi * p.gamma[i] - p.rhs[i];
        worst = std::max(worst, std::abs(margin / (7 * pi * pi * p.gamma[i]) - 1.0));
        // gamma = |c|^2 / 2
        CHECK(p.gamma[i] == doctest::Approx(0.5 * std::norm(u.at(i, 1, 0))).epsilon(1e-14));
    }
    CHECK(worst <= 1e-8);
    CHECK(check_diff_inequality(p).pass);
    auto q = gamma_by_quadrature(u);
    for (std::size_t i = 0; i < c.s_samples; i += 40)
        CHECK(q[i] == doctest::Approx(p.gamma[i]).epsilon(1e-12));
}

TEST_CASE("constant field passes trivially")
{
    Cylinder c(3.0, 601, 8, 1);
    SpectralField u(c);
    for (std::size_t i = 0; i < c.s_samples; ++i)
        u.at(i, 0, 0) = cplx(0.3, 0.2);
    auto p = gamma_profile(u);
    CHECK(p.max_gamma() == 0.0);
    CHECK(check_diff_inequality(p).pass);
    auto cm = center_of_mass(u);
    CHECK(cm.at(10)[0] == doctest::Approx(0.3));
    CHECK(cm.prime_at(10).norm() < 1e-14);
    auto res = com_residual(u, VectorFieldModel::zero(2), 0.1);
    CHECK(*std::max_element(res.begin(), res.end()) < 1e-12);
}

TEST_CASE("decay fit recovers an exact profile")
{
    Cylinder c(5.0, 1001, 8, 1);
    std::vector<double> f(c.s_samples);
    for (std::size_t i = 0; i < c.s_samples; ++i)
        f[i] = 0.7 * (std::exp(-pi * (5.0 + c.s(i))) + std::exp(-pi * (5.0 - c.s(i))));
    auto fit = fit_decay(c, f, pi, -5.0, 5.0, 4.0);
    CHECK(fit.fitted == doctest::Approx(0.7));
    CHECK(fit.boundary_scale == doctest::Approx(0.7));
    CHECK(fit.ratio == doctest::Approx(1.0));
    CHECK(fit.pass);
    // a bump in the middle breaks the bound
    f[500] = 1.0;
    CHECK_FALSE(fit_decay(c, f, pi, -5.0, 5.0, 4.0).pass);
}

TEST_CASE("applicability of the differential inequality")
{
    auto lin = VectorFieldModel::scalar_linear(2, 0.5);
    auto a = diff_inequality_applicable(lin, 0.05, 1.0);
    CHECK(a.limit == doctest::Approx(0.25));
    CHECK(a.c2_estimate == doctest::Approx(2 * 2 * 0.5 * std::sqrt(2.0)));
    CHECK(a.applicable);
    CHECK_FALSE(diff_inequality_applicable(lin, 0.1, 1.0).applicable);
}

TEST_CASE("bump function norms")
{
    auto b = build_bump();
    CHECK(b.eval(0.0) == doctest::Approx(1.0));
    CHECK(b.eval(0.5) == doctest::Approx(1.0));
    CHECK(b.eval(-1.2) == 0.0);
    CHECK(b.eval(0.999) < 1e-6);
    CHECK(b.l1 == doctest::Approx(1.5).epsilon(1e-6));
    // unmollified cosine ramps of length L give ||rho''||_1 = 2 pi / L
    CHECK(b.dd_l1 == doctest::Approx(2 * pi / (0.5 - 2 * b.eta)).epsilon(0.01));
    CHECK(b.l1 <= 2.0);
    CHECK(b.dd_l1 <= 40.0);
    auto k = estimate_constants(b);
    CHECK(k.bump_dd_l1 == b.dd_l1);
}

TEST_CASE("elliptic probe")
{
    Cylinder c(2.0, 401, 8, 1);
    SpectralField u(c);
    for (std::size_t i = 0; i < c.s_samples; ++i)
        u.at(i, 0, 0) = 0.5;
    // constant: ||u||_{W^1} on width 2d over ||u||_{W^0} on width 4d
    CHECK(elliptic_constant_probe({u}, 0, 0.5) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
    auto a = random_corpus(c, 5, 11), b = random_corpus(c, 5, 11);
    CHECK(max_coeff_diff(a[4], b[4]) == 0.0);
    double k1 = elliptic_constant_probe(a, 1, 0.5);
    CHECK(std::isfinite(k1));
    CHECK(k1 > 0.0);
}

TEST_CASE("solved instances satisfy every estimate")
{
    for (double eps : {0.01, 0.05}) {
        CAPTURE(eps);
        auto u = solved_instance(eps);
        auto p = gamma_profile(u);
        CHECK(check_diff_inequality(p).pass);
        auto e = exp_bound_check(p);
        CHECK(e.pass);
        CHECK(window_decay_check(p).pass);
        CHECK(pointwise_decay_check(u, 0).pass);
        CHECK(pointwise_decay_check(u, 1).pass);
        auto cv = convolution_window_check(p, build_bump(), e.fitted);
        CHECK(cv.pass);
        auto res = com_residual(u, VectorFieldModel::scalar_linear(2, 0.5), eps);
        const auto& c = u.cylinder();
        double m = 0.0;
        for (std::size_t i = c.interior_first(); i <= c.interior_last(); ++i)
            m = std::max(m, res[i]);
        CHECK(m <= 1e-7);
        auto w = window_energy(p);
        CHECK(w.size() == c.s_samples);
    }
}
