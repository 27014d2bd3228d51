#include "cyllab/calculus.hpp"

#include <algorithm>
#include <cmath>

#include "cyllab/fourier.hpp"

namespace cyllab {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double binomial(int n, int k)
{
    double b = 1.0;
    for (int i = 1; i <= k; ++i)
        b = b * double(n - k + i) / double(i);
    return b;
}

cplx i_pow(int m)
{
    switch (((m % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
    }
}

// (2 pi i k)^m
cplx t_symbol(int k, int m) { return i_pow(m) * std::pow(two_pi * k, m); }

void require_order(int k)
{
    if (k < 0 || k > max_derivative_order)
        throw PreconditionError("derivative order must be in [0, 4]");
}

}  // namespace

std::vector<cplx> s_derivative_row(const SpectralField& u, int order, std::size_t i, std::size_t width)
{
    const auto& cyl = u.cylinder();
    const std::size_t row = u.row_size();
    std::vector<cplx> out(row);
    if (order == 0) {
        auto r = u.row(i);
        std::copy(r.begin(), r.end(), out.begin());
        return out;
    }
    UniformStencil st(order, width);
    const cplx* base = u.data().data();
    for (std::size_t m = 0; m < row; ++m)
        out[m] = st.apply(base + m, row, cyl.s_samples, i, cyl.spacing());
    return out;
}

SpectralField s_derivative(const SpectralField& u, int order, std::size_t width)
{
    if (u.cylinder().s_samples < width)
        throw InvalidGrid("too few s-samples for the derivative stencil");
    SpectralField out(u.cylinder());
    if (order == 0)
        return u;
    const auto& cyl = u.cylinder();
    const std::size_t row = u.row_size();
    UniformStencil st(order, width);
    const cplx* base = u.data().data();
    auto dst = out.data();
    const double h = cyl.spacing();
    for (std::size_t i = 0; i < cyl.s_samples; ++i)
        for (std::size_t m = 0; m < row; ++m)
            dst[i * row + m] = st.apply(base + m, row, cyl.s_samples, i, h);
    return out;
}

SpectralField t_derivative(const SpectralField& u, int order)
{
    SpectralField out = u;
    const auto& cyl = u.cylinder();
    for (std::size_t i = 0; i < cyl.s_samples; ++i)
        for (int k = cyl.k_min(); k <= cyl.k_max(); ++k) {
            cplx f = t_symbol(k, order);
            for (std::size_t c = 0; c < cyl.dim; ++c)
                out.at(i, k, c) *= f;
        }
    return out;
}

SpectralField apply_delbar(const SpectralField& u)
{
    const auto& cyl = u.cylinder();
    if (cyl.s_samples < UniformStencil::default_width)
        throw InvalidGrid("apply_delbar needs at least 9 s-samples");
    SpectralField out = s_derivative(u, 1);
    for (std::size_t i = 0; i < cyl.s_samples; ++i)
        for (int k = cyl.k_min(); k <= cyl.k_max(); ++k)
            for (std::size_t c = 0; c < cyl.dim; ++c)
                out.at(i, k, c) -= two_pi * k * u.at(i, k, c);
    return out;
}

std::vector<cplx> interpolate_row(const SpectralField& u, double s)
{
    const auto& cyl = u.cylinder();
    if (s < cyl.lower() - 1e-9 || s > cyl.upper() + 1e-9)
        throw OutOfWindow("interpolation point outside the cylinder");
    constexpr std::size_t width = 8;
    double x = (s - cyl.lower()) / cyl.spacing();
    auto cell = std::size_t(std::clamp(std::floor(x), 0.0, double(cyl.s_samples - 2)));
    std::size_t b = cell >= 3 ? cell - 3 : 0;
    b = std::min(b, cyl.s_samples - width);
    std::vector<double> nodes(width);
    for (std::size_t m = 0; m < width; ++m)
        nodes[m] = double(b + m);
    auto w = lagrange_weights(x, nodes);
    std::vector<cplx> out(u.row_size());
    for (std::size_t m = 0; m < width; ++m) {
        auto r = u.row(b + m);
        for (std::size_t j = 0; j < out.size(); ++j)
            out[j] += w[m] * r[j];
    }
    return out;
}

double circle_sup(std::span<const cplx> row, std::size_t t_modes, std::size_t dim)
{
    const auto& grid = fourier_grid(t_modes, dim, 4 * t_modes);
    std::vector<cplx> vals(grid.points() * dim);
    grid.to_physical(row, vals);
    double best = 0.0;
    for (std::size_t m = 0; m < grid.points(); ++m) {
        double sq = 0.0;
        for (std::size_t c = 0; c < dim; ++c)
            sq += std::norm(vals[m * dim + c]);
        best = std::max(best, sq);
    }
    return std::sqrt(best);
}

double sup_norm(const SpectralField& u)
{
    const auto& cyl = u.cylinder();
    double best = 0.0;
    for (std::size_t i = 0; i < cyl.s_samples; ++i)
        best = std::max(best, circle_sup(u.row(i), cyl.t_modes, cyl.dim));
    return best;
}

std::vector<double> derivative_density(const SpectralField& u, int j)
{
    if (j < 0 || j > max_derivative_order + 1)
        throw PreconditionError("derivative density order out of range");
    const auto& cyl = u.cylinder();
    std::vector<double> dens(cyl.s_samples, 0.0);
    for (int i = 0; i <= j; ++i) {
        SpectralField ds = s_derivative(u, i);
        double w = binomial(j, i);
        for (std::size_t n = 0; n < cyl.s_samples; ++n)
            for (int k = cyl.k_min(); k <= cyl.k_max(); ++k) {
                double sym = std::pow(two_pi * k, 2 * (j - i));
                if (sym == 0.0)
                    continue;
                for (std::size_t c = 0; c < cyl.dim; ++c)
                    dens[n] += w * sym * std::norm(ds.at(n, k, c));
            }
    }
    return dens;
}

double integrate_samples(std::span<const double> g, const Cylinder& cyl, double a, double b)
{
    if (b < a)
        return -integrate_samples(g, cyl, b, a);
    const double h = cyl.spacing();
    auto value_at = [&](double s) {
        double x = std::clamp((s - cyl.lower()) / h, 0.0, double(cyl.s_samples - 1));
        auto i = std::min(std::size_t(x), cyl.s_samples - 2);
        double f = x - double(i);
        return (1.0 - f) * g[i] + f * g[i + 1];
    };
    std::size_t first = cyl.first_at_or_after(a);
    std::size_t last = cyl.last_at_or_before(b);
    if (first > last || first >= cyl.s_samples)
        return 0.5 * (value_at(a) + value_at(b)) * (b - a);
    double total = 0.0;
    double sa = cyl.s(first);
    double sb = cyl.s(last);
    total += 0.5 * (value_at(a) + g[first]) * std::max(0.0, sa - a);
    for (std::size_t i = first; i < last; ++i)
        total += 0.5 * (g[i] + g[i + 1]) * h;
    total += 0.5 * (g[last] + value_at(b)) * std::max(0.0, b - sb);
    return total;
}

double sup_derivative_norm(const SpectralField& u, int k, const Window& region)
{
    require_order(k);
    const auto& cyl = u.cylinder();
    require_in_interior(cyl, region);
    const auto& grid = fourier_grid(cyl.t_modes, cyl.dim, sup_points(cyl));
    const std::size_t M = grid.points();
    std::size_t first = cyl.first_at_or_after(region.lo());
    std::size_t last = cyl.last_at_or_before(region.hi());
    double best = 0.0;
    std::vector<cplx> vals(M * cyl.dim);
    for (std::size_t i = first; i <= last && i < cyl.s_samples; ++i) {
        std::vector<double> sq(M, 0.0);
        for (int j = 0; j <= k; ++j) {
            auto row = s_derivative_row(u, j, i);
            for (int kk = cyl.k_min(); kk <= cyl.k_max(); ++kk) {
                cplx f = t_symbol(kk, k - j);
                for (std::size_t c = 0; c < cyl.dim; ++c)
                    row[cyl.mode_index(kk) * cyl.dim + c] *= f;
            }
            grid.to_physical(row, vals);
            double w = binomial(k, j);
            for (std::size_t m = 0; m < M; ++m)
                for (std::size_t c = 0; c < cyl.dim; ++c)
                    sq[m] += w * std::norm(vals[m * cyl.dim + c]);
        }
        best = std::max(best, *std::max_element(sq.begin(), sq.end()));
    }
    return std::sqrt(best);
}

double window_sobolev_sq(const SpectralField& u, const Window& w, bool include_derivs)
{
    return sobolev_sq(u, w, include_derivs ? 1 : 0);
}

double sobolev_sq(const SpectralField& u, const Window& w, int k)
{
    require_in_domain(u.cylinder(), w);
    double total = 0.0;
    for (int j = 0; j <= k; ++j) {
        auto dens = derivative_density(u, j);
        total += integrate_samples(dens, u.cylinder(), w.lo(), w.hi());
    }
    return total;
}

PoincareResult poincare_check(std::span<const cplx> coeffs, std::size_t t_modes, std::size_t dim)
{
    if (coeffs.size() != t_modes * dim)
        throw PreconditionError("loop coefficients do not match the band");
    const int kmin = 1 - int(t_modes / 2);
    PoincareResult res;
    for (std::size_t j = 0; j < t_modes; ++j) {
        int k = int(j) + kmin;
        for (std::size_t c = 0; c < dim; ++c) {
            double a = std::norm(coeffs[j * dim + c]);
            if (k == 0) {
                if (a > 0.0)
                    throw PreconditionError("loop has nonzero mean");
                continue;
            }
            res.lhs += a;
            res.rhs += poincare_constant * std::pow(two_pi * k, 2) * a;
        }
    }
    return res;
}

}  // namespace cyllab
