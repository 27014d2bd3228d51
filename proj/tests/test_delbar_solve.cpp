#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cyllab/calculus.hpp"
#include "cyllab/delbar_solve.hpp"

using namespace cyllab;
constexpr double pi = std::numbers::pi;

namespace {

SpectralBoundaryData sample_data()
{
    SpectralBoundaryData b;
    b.left.push_back({0, {cplx(0.4, 0.1)}});
    b.left.push_back({-1, {cplx(0.1, 0.0)}});
    b.right.push_back({1, {cplx(0.1, 0.0)}});
    return b;
}

Point pt2(double a, double b)
{
    Point p(2);
    p << a, b;
    return p;
}

}  // namespace

TEST_CASE("homogeneous modes follow the closed form")
{
    Cylinder c(3.0, 513, 8, 1);
    SpectralBoundaryData b;
    b.left.push_back({-3, {cplx(0.2, 0.1)}});
    b.left.push_back({0, {cplx(-0.3, 0.0)}});
    b.right.push_back({2, {cplx(0.0, 0.5)}});
    auto u = LinearSolver(c).homogeneous(b);
    for (std::size_t i = 0; i < c.s_samples; i += 17) {
        double s = c.s(i);
        CHECK(std::abs(u.at(i, -3, 0) - cplx(0.2, 0.1) * std::exp(-6 * pi * (s - c.lower()))) < 1e-14);
        CHECK(std::abs(u.at(i, 0, 0) - cplx(-0.3, 0.0)) < 1e-15);
        CHECK(std::abs(u.at(i, 2, 0) - cplx(0.0, 0.5) * std::exp(4 * pi * (s - c.upper()))) < 1e-14);
        CHECK(u.at(i, 1, 0) == cplx(0.0));
    }
    CHECK(homogeneous_sup(c, b) <= 0.3 + 0.5 + std::abs(cplx(0.2, 0.1)) + 1e-12);
}

TEST_CASE("particular solution inverts delbar")
{
    Cylinder c(2.0, 1024, 8, 1);
    SpectralField f(c);
    for (std::size_t i = 0; i < c.s_samples; ++i) {
        double s = c.s(i);
        f.at(i, 0, 0) = 0.1;
        f.at(i, -1, 0) = cplx(std::sin(s), 0.0);
        f.at(i, 1, 0) = cplx(0.0, std::cos(0.5 * s));
    }
    LinearSolver L(c);
    auto u = L.particular(f);
    // zero mode: c_0' = f_0 with c_0(lower) = 0
    for (std::size_t i = 0; i < c.s_samples; i += 31)
        CHECK(std::abs(u.at(i, 0, 0) - 0.1 * (c.s(i) - c.lower())) < 1e-13);
    auto res = apply_delbar(u) - f;
    CHECK(sup_norm(res) < 1e-8);
    CHECK(L.operator_norm() == doctest::Approx(6.0));
    // Linearity: solve = homogeneous + particular
    auto b = sample_data();
    CHECK(max_coeff_diff(L.solve(b, f), L.homogeneous(b) + u) < 1e-13);
}

TEST_CASE("boundary data validation")
{
    Cylinder c(1.0, 101, 8, 1);
    SpectralBoundaryData wrong_side;
    wrong_side.left.push_back({1, {cplx(0.1)}});
    CHECK_THROWS_AS(wrong_side.validate(c), BandError);
    SpectralBoundaryData out_of_band;
    out_of_band.right.push_back({5, {cplx(0.1)}});
    CHECK_THROWS_AS(out_of_band.validate(c), BandError);
    SpectralBoundaryData dims;
    dims.left.push_back({0, {cplx(0.1), cplx(0.2)}});
    CHECK_THROWS_AS(dims.validate(c), PreconditionError);
    auto big = sample_data().scaled(10.0);
    big.ball_safe = true;
    CHECK_THROWS_AS(big.validate(c), BallViolation);
    CHECK(sample_data().scaled(2.0).left[1].value[0] == cplx(0.2));
}

TEST_CASE("boundary data json")
{
    auto j = nlohmann::json::parse(R"([{"side": "left", "k": 0, "re": [0.5]},
                                       {"side": "right", "k": 1, "re": [0.1], "im": [0.2]}])");
    auto b = boundary_from_json(j);
    REQUIRE(b.left.size() == 1);
    REQUIRE(b.right.size() == 1);
    CHECK(b.right[0].value[0] == cplx(0.1, 0.2));
    CHECK(b.dim() == 1);
    auto again = boundary_from_json(to_json(b));
    CHECK(to_json(again) == to_json(b));
    CHECK_THROWS_AS(boundary_from_json(nlohmann::json::parse(R"([{"side": "top", "k": 0, "re": [1]}])")),
                    ConfigError);
}

TEST_CASE("grid spec picks the sample count")
{
    GridSpec g;
    g.max_spacing = 0.01;
    auto c = g.cylinder_for(10.0, 1);
    CHECK(c.spacing() <= 0.01 + 1e-15);
    CHECK(c.s_samples == 2201);
    g.s_samples = 300;
    CHECK(g.cylinder_for(10.0, 2).s_samples == 300);
}

TEST_CASE("nonlinear solves")
{
    Cylinder c(4.0, 1001, 16, 1);
    auto b = sample_data();
    SUBCASE("eps = 0 takes one iteration and returns the homogeneous solution")
    {
        auto r = solve_nonlinear(c, b, VectorFieldModel::scalar_linear(2, 0.5), 0.0);
        CHECK(r.report.iterations == 1);
        CHECK(max_coeff_diff(r.field, LinearSolver(c).homogeneous(b)) == 0.0);
    }
    SUBCASE("linear field")
    {
        auto r = solve_nonlinear(c, b, VectorFieldModel::scalar_linear(2, 0.5), 0.05);
        CHECK(r.report.iterations <= 30);
        CHECK(r.report.fixed_point_residual <= 1e-10);
        CHECK(r.report.final_residual <= 1e-8);
        CHECK(equation_residual(r.field, VectorFieldModel::scalar_linear(2, 0.5), 0.05) ==
              doctest::Approx(r.report.final_residual));
    }
    SUBCASE("nonlinear gradient with Picard only")
    {
        SolveOptions o;
        o.newton = false;
        auto m = VectorFieldModel::gradient(pt2(0.5, 0.5), pt2(0.2, 0.0), pt2(0.0, 0.0));
        auto r = solve_nonlinear(c, b, m, 0.02, o);
        CHECK(r.report.final_residual <= 1e-8);
        auto n = solve_nonlinear(c, b, m, 0.02);
        CHECK(n.report.iterations <= r.report.iterations);
        CHECK(max_coeff_diff(n.field, r.field) < 1e-9);
    }
    SUBCASE("no contraction")
    {
        CHECK_THROWS_AS(solve_nonlinear(c, b, VectorFieldModel::scalar_linear(2, 0.5), 1.0), NoContraction);
    }
    SUBCASE("iteration cap")
    {
        SolveOptions o;
        o.max_iterations = 1;
        o.tol = 1e-14;
        CHECK_THROWS_AS(solve_nonlinear(c, b, VectorFieldModel::rotation(2, 1.0), 0.05, o), NonConvergence);
    }
}

TEST_CASE("instances must stay in the unit ball")
{
    Cylinder c(2.0, 401, 8, 1);
    SpectralBoundaryData b;
    b.left.push_back({0, {cplx(2.0, 0.0)}});
    VectorFieldSequence seq(VectorFieldModel::scalar_linear(2, 0.5));
    CHECK_THROWS_AS(make_instance(c, 0.01, b, seq, 1), BallViolation);
    auto ok = make_instance(c, 0.01, sample_data(), seq, 1);
    CHECK(ok.field.ball_constrained());
    CHECK(ok.report.ball_violation == 0.0);
}
