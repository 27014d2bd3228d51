#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "cyllab/cylinder.hpp"
#include "cyllab/stencil.hpp"

namespace cyllab {

/// Poincare constant on R/Z for mean-zero loops: ||f||^2 <= c_pc ||f'||^2.
inline constexpr double poincare_constant = 1.0 / (4.0 * std::numbers::pi * std::numbers::pi);

/// Highest total derivative order supported by the pointwise norms.
inline constexpr int max_derivative_order = 4;

/// d^order/ds^order, computed row-wise with the nine-point stencil.
SpectralField s_derivative(const SpectralField& u, int order,
                           std::size_t width = UniformStencil::default_width);

/// d^order/dt^order: mode k is multiplied by (2 pi i k)^order.
SpectralField t_derivative(const SpectralField& u, int order);

/// (d_s + J0 d_t) u. Per mode: c_k' - 2 pi k c_k. Exact in t; s-derivative
/// is eighth order in the interior and seventh order at the ends.
SpectralField apply_delbar(const SpectralField& u);

/// One row (T x n coefficients) of the s-derivative of the given order.
std::vector<cplx> s_derivative_row(const SpectralField& u, int order, std::size_t i,
                                   std::size_t width = UniformStencil::default_width);

/// Coefficients at an arbitrary s by eight-point Lagrange interpolation.
std::vector<cplx> interpolate_row(const SpectralField& u, double s);

/// sup_t |f(t)| for one coefficient row, sampled on 4T points.
double circle_sup(std::span<const cplx> row, std::size_t t_modes, std::size_t dim);

/// sup over the whole grid of |u(s, t)|.
double sup_norm(const SpectralField& u);

/// Per-sample ||grad^j u(s, .)||^2 over the circle (Frobenius norm of the
/// j-tensor of partial derivatives, evaluated by Parseval).
std::vector<double> derivative_density(const SpectralField& u, int j);

/// Integral of grid samples g over [a, b]: trapezoid rule, partial cells
/// by linear interpolation.
double integrate_samples(std::span<const double> g, const Cylinder& cyl, double a, double b);

/// sup over region x R/Z of |grad^k u|, Frobenius norm of the k-tensor.
/// Region must lie in [-r, r].
double sup_derivative_norm(const SpectralField& u, int k, const Window& region);

/// int_w ||u||^2 ds, plus ||d_s u||^2 + ||d_t u||^2 when include_derivs.
double window_sobolev_sq(const SpectralField& u, const Window& w, bool include_derivs);

/// Squared W^{k,2} norm of u over the window: sum_{j<=k} int ||grad^j u||^2.
double sobolev_sq(const SpectralField& u, const Window& w, int k);

struct PoincareResult {
    double lhs = 0.0;  // ||f||^2
    double rhs = 0.0;  // c_pc ||d_t f||^2
};

/// Both sides of the Poincare inequality for a loop given by its band
/// coefficients (T x n, mode-major). The zero mode must vanish.
PoincareResult poincare_check(std::span<const cplx> coeffs, std::size_t t_modes, std::size_t dim);

}  // namespace cyllab
