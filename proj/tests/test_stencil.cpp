#include <doctest.h>

#include <cmath>
#include <vector>

#include "cyllab/stencil.hpp"

using namespace cyllab;

TEST_CASE("three point weights")
{
    std::vector<double> nodes{-1.0, 0.0, 1.0};
    auto d1 = fd_weights(0.0, nodes, 1);
    CHECK(d1[0] == doctest::Approx(-0.5));
    CHECK(d1[1] == doctest::Approx(0.0));
    CHECK(d1[2] == doctest::Approx(0.5));
    auto d2 = fd_weights(0.0, nodes, 2);
    CHECK(d2[0] == doctest::Approx(1.0));
    CHECK(d2[1] == doctest::Approx(-2.0));
    CHECK(d2[2] == doctest::Approx(1.0));
}

TEST_CASE("nine point weights differentiate degree 8 exactly")
{
    std::vector<double> nodes;
    for (int j = -4; j <= 4; ++j)
        nodes.push_back(j);
    for (double x0 : {0.0, -3.0, 2.5}) {
        auto w = fd_weights(x0, nodes, 1);
        for (int p = 1; p <= 8; ++p) {
            double acc = 0.0;
            for (std::size_t m = 0; m < nodes.size(); ++m)
                acc += w[m] * std::pow(nodes[m], p);
            CHECK(acc == doctest::Approx(p * std::pow(x0, p - 1)).epsilon(1e-9));
        }
    }
}

TEST_CASE("lagrange weights reproduce polynomials")
{
    std::vector<double> nodes{0, 1, 2, 3, 4, 5, 6, 7};
    auto w = lagrange_weights(3.3, nodes);
    double sum = 0.0, cubic = 0.0;
    for (std::size_t m = 0; m < nodes.size(); ++m) {
        sum += w[m];
        cubic += w[m] * std::pow(nodes[m], 7);
    }
    CHECK(sum == doctest::Approx(1.0));
    CHECK(cubic == doctest::Approx(std::pow(3.3, 7)).epsilon(1e-10));
}

TEST_CASE("uniform stencil order on a smooth function")
{
    UniformStencil d1(1);
    auto err = [&](std::size_t n) {
        double h = 2.0 / double(n - 1);
        std::vector<double> f(n);
        for (std::size_t i = 0; i < n; ++i)
            f[i] = std::sin(5.0 * (-1.0 + double(i) * h));
        double e = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            e = std::max(e, std::abs(d1.apply(f.data(), 1, n, i, h) - 5.0 * std::cos(5.0 * (-1.0 + double(i) * h))));
        return e;
    };
    double e1 = err(81), e2 = err(161);
    CHECK(std::log2(e1 / e2) > 7.5);
    CHECK(d1.width() == 9);
    CHECK(d1.start(0, 100) == 0);
    CHECK(d1.start(50, 100) == 46);
    CHECK(d1.start(99, 100) == 91);
}
