#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cyllab/calculus.hpp"

using namespace cyllab;
constexpr double pi = std::numbers::pi;

namespace {

// a e^{2 pi k (s + i t)}: holomorphic, so delbar vanishes.
SpectralField holomorphic_mode(const Cylinder& c, int k, cplx a)
{
    SpectralField u(c);
    for (std::size_t i = 0; i < c.s_samples; ++i)
        u.at(i, k, 0) = a * std::exp(2 * pi * k * c.s(i));
    return u;
}

}  // namespace

TEST_CASE("t derivative multiplies by 2 pi i k")
{
    Cylinder c(1.0, 41, 8, 1);
    SpectralField u(c);
    u.at(5, 3, 0) = cplx(1.0, 0.5);
    auto d2 = t_derivative(u, 2);
    CHECK(std::abs(d2.at(5, 3, 0) - std::pow(cplx(0, 2 * pi * 3), 2) * cplx(1.0, 0.5)) < 1e-12);
}

TEST_CASE("s derivative of a smooth profile")
{
    Cylinder c(1.0, 201, 4, 1);
    SpectralField u(c);
    for (std::size_t i = 0; i < c.s_samples; ++i)
        u.at(i, 0, 0) = std::sin(2.0 * c.s(i));
    auto d = s_derivative(u, 1);
    auto dd = s_derivative(u, 2);
    double e1 = 0.0, e2 = 0.0;
    for (std::size_t i = 0; i < c.s_samples; ++i) {
        e1 = std::max(e1, std::abs(d.at(i, 0, 0) - 2.0 * std::cos(2.0 * c.s(i))));
        e2 = std::max(e2, std::abs(dd.at(i, 0, 0) + 4.0 * std::sin(2.0 * c.s(i))));
    }
    CHECK(e1 < 1e-10);
    CHECK(e2 < 1e-8);
    auto row = s_derivative_row(u, 1, 100);
    CHECK(std::abs(row[c.mode_index(0)] - d.at(100, 0, 0)) < 1e-15);
}

TEST_CASE("delbar annihilates holomorphic modes")
{
    Cylinder c(1.0, 401, 8, 1);
    for (int k : {-2, 1, 3}) {
        auto u = holomorphic_mode(c, k, cplx(0.01, 0.02));
        auto d = apply_delbar(u);
        double scale = 2 * pi * std::abs(k) * sup_norm(u);
        double worst = 0.0;
        for (std::size_t i = 0; i < c.s_samples; ++i)
            worst = std::max(worst, std::abs(d.at(i, k, 0)));
        CHECK(worst / scale < 1e-7);
    }
}

TEST_CASE("sup norm and circle sup")
{
    Cylinder c(1.0, 401, 8, 1);
    auto u = holomorphic_mode(c, 1, cplx(0.001, 0.0));
    CHECK(sup_norm(u) == doctest::Approx(0.001 * std::exp(2 * pi * 2.0)).epsilon(1e-12));
    SpectralField v(c);
    v.at(7, 0, 0) = 0.3;
    v.at(7, 2, 0) = 0.4;
    CHECK(circle_sup(v.row(7), 8, 1) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("interpolate_row between samples")
{
    Cylinder c(1.0, 201, 4, 1);
    SpectralField u(c);
    for (std::size_t i = 0; i < c.s_samples; ++i)
        u.at(i, 1, 0) = cplx(std::exp(0.7 * c.s(i)), 0.0);
    auto row = interpolate_row(u, 0.1234);
    CHECK(std::abs(row[c.mode_index(1)] - std::exp(0.7 * 0.1234)) < 1e-13);
}

TEST_CASE("derivative density of a holomorphic mode")
{
    Cylinder c(1.0, 801, 8, 1);
    auto u = holomorphic_mode(c, 1, cplx(0.01, 0.0));
    auto d1 = derivative_density(u, 1);
    std::size_t i = c.first_at_or_after(0.0);
    double c0 = std::norm(u.at(i, 1, 0));
    // |d_s u|^2 + |d_t u|^2 = 2 (2 pi)^2 |c|^2
    CHECK(d1[i] == doctest::Approx(2 * 4 * pi * pi * c0).epsilon(1e-8));
    auto d0 = derivative_density(u, 0);
    CHECK(d0[i] == doctest::Approx(c0).epsilon(1e-14));
}

TEST_CASE("integrals over windows")
{
    Cylinder c(1.0, 2001, 4, 1);
    std::vector<double> g(c.s_samples);
    for (std::size_t i = 0; i < c.s_samples; ++i)
        g[i] = c.s(i) * c.s(i);
    CHECK(integrate_samples(g, c, -1.0, 1.05) == doctest::Approx((1.05 * 1.05 * 1.05 + 1.0) / 3.0).epsilon(1e-6));

    SpectralField u(c);
    for (std::size_t i = 0; i < c.s_samples; ++i)
        u.at(i, 0, 0) = cplx(0.3, 0.4);
    CHECK(window_sobolev_sq(u, {0.0, 0.5}, false) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(window_sobolev_sq(u, {0.0, 0.5}, true) == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(sobolev_sq(u, {0.0, 0.5}, 2) == doctest::Approx(0.25).epsilon(1e-10));
}

TEST_CASE("sup of the gradient")
{
    Cylinder c(1.0, 801, 8, 1);
    auto u = holomorphic_mode(c, 1, cplx(0.01, 0.0));
    // Jacobian of a holomorphic map: Frobenius norm sqrt(2) |f'|
    double expect = std::sqrt(2.0) * 2 * pi * 0.01 * std::exp(2 * pi * 0.5);
    CHECK(sup_derivative_norm(u, 1, {0.0, 0.5}) == doctest::Approx(expect).epsilon(1e-6));
    CHECK_THROWS_AS(sup_derivative_norm(u, 1, {0.8, 0.5}), OutOfWindow);
}

TEST_CASE("Poincare ratios")
{
    for (int k : {1, 2}) {
        std::vector<cplx> loop(8);
        loop[std::size_t(k + 3)] = cplx(0.6, -0.8);
        auto p = poincare_check(loop, 8, 1);
        double grad = p.rhs / poincare_constant;
        CHECK(std::abs(p.lhs / grad - 1.0 / (4 * pi * pi * k * k)) < 1e-12);
        CHECK(p.lhs <= p.rhs * (1 + 1e-15));
    }
}
