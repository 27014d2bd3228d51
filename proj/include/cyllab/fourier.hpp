#pragma once

#include <cstddef>
#include <span>

#include "cyllab/cylinder.hpp"

namespace cyllab {

/// Transforms between one s-row of band coefficients (T modes x n components)
/// and values at M equispaced points t_m = m / M (layout [m][component]).
/// Instances are shared and immutable; use fourier_grid() to obtain one.
class FourierGrid {
public:
    FourierGrid(std::size_t t_modes, std::size_t dim, std::size_t points);
    ~FourierGrid();
    FourierGrid(const FourierGrid&) = delete;
    FourierGrid& operator=(const FourierGrid&) = delete;

    std::size_t t_modes() const { return t_modes_; }
    std::size_t dim() const { return dim_; }
    std::size_t points() const { return points_; }

    /// u(t_m) = sum_k c_k e^{2 pi i k t_m}.
    void to_physical(std::span<const cplx> row, std::span<cplx> values) const;
    /// Discrete coefficients of the samples, truncated to the band.
    void from_physical(std::span<const cplx> values, std::span<cplx> row) const;

private:
    std::size_t t_modes_, dim_, points_;
    void* backward_ = nullptr;
    void* forward_ = nullptr;
};

/// Cached grid; `points` must be at least t_modes.
const FourierGrid& fourier_grid(std::size_t t_modes, std::size_t dim, std::size_t points);

/// Physical points used for pseudo-spectral products (dealiased: 2T).
inline std::size_t product_points(const Cylinder& cyl) { return 2 * cyl.t_modes; }
/// Physical points used when measuring sup norms over a circle (4T).
inline std::size_t sup_points(const Cylinder& cyl) { return 4 * cyl.t_modes; }

}  // namespace cyllab
