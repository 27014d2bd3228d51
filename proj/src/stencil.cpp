#include "cyllab/stencil.hpp"

#include <cmath>
#include <stdexcept>

namespace cyllab {

std::vector<double> fd_weights(double x0, std::span<const double> nodes, int order)
{
    const int n = int(nodes.size());
    if (order < 0 || order >= n)
        throw std::invalid_argument("fd_weights: derivative order needs more nodes");
    // c[j][m]: weight of node j for derivative m, built up node by node.
    std::vector<std::vector<double>> c(n, std::vector<double>(order + 1, 0.0));
    double c1 = 1.0;
    double c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        int mn = std::min(i, order);
        double c2 = 1.0;
        double c5 = c4;
        c4 = nodes[i] - x0;
        for (int j = 0; j < i; ++j) {
            double c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k)
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (int j = 0; j < n; ++j)
        w[j] = c[j][order];
    return w;
}

std::vector<double> lagrange_weights(double x0, std::span<const double> nodes)
{
    std::vector<double> w(nodes.size(), 1.0);
    for (std::size_t j = 0; j < nodes.size(); ++j)
        for (std::size_t m = 0; m < nodes.size(); ++m)
            if (m != j)
                w[j] *= (x0 - nodes[m]) / (nodes[j] - nodes[m]);
    return w;
}

UniformStencil::UniformStencil(int derivative, std::size_t width)
    : derivative_(derivative), width_(width)
{
    if (width_ < 3 || width_ % 2 == 0 || derivative_ < 0 || std::size_t(derivative_) >= width_)
        throw std::invalid_argument("UniformStencil: bad width/derivative combination");
    std::vector<double> nodes(width_);
    for (std::size_t m = 0; m < width_; ++m)
        nodes[m] = double(m);
    for (std::size_t o = 0; o < width_; ++o)
        offset_weights_.push_back(fd_weights(double(o), nodes, derivative_));
}

double UniformStencil::scale(double h) const { return 1.0 / std::pow(h, derivative_); }

}  // namespace cyllab
