#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace cyllab {

/// Finite-difference weights for the derivative of given order at x0 from
/// values at `nodes` (Fornberg's recursion).
std::vector<double> fd_weights(double x0, std::span<const double> nodes, int order);

/// Lagrange interpolation weights at x0 for the given nodes.
std::vector<double> lagrange_weights(double x0, std::span<const double> nodes);

/// Uniform-grid derivative stencil of fixed width. Centered in the interior,
/// shifted (one-sided) within `width / 2` samples of either end.
///
/// Widths 9 and 7 give orders 8 and 6 for first and second derivatives in the
/// interior; near the ends the shifted stencils lose one order.
class UniformStencil {
public:
    UniformStencil(int derivative, std::size_t width = default_width);

    static constexpr std::size_t default_width = 9;

    int derivative() const { return derivative_; }
    std::size_t width() const { return width_; }

    /// First sample index used for output index i on a grid of n samples.
    std::size_t start(std::size_t i, std::size_t n) const
    {
        std::size_t half = width_ / 2;
        std::size_t b = i > half ? i - half : 0;
        return std::min(b, n - width_);
    }

    /// Derivative at index i of samples f[j * stride], j < n.
    template <class T>
    T apply(const T* f, std::size_t stride, std::size_t n, std::size_t i, double h) const
    {
        std::size_t b = start(i, n);
        const auto& w = offset_weights_[i - b];
        T acc{};
        for (std::size_t m = 0; m < width_; ++m)
            acc += w[m] * f[(b + m) * stride];
        return acc * scale(h);
    }

private:
    double scale(double h) const;

    int derivative_;
    std::size_t width_;
    std::vector<std::vector<double>> offset_weights_;
};

}  // namespace cyllab
