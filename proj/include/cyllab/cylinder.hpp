#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "cyllab/errors.hpp"

namespace cyllab {

using cplx = std::complex<double>;

/// Finite flat cylinder [-r-1, r+1] x R/Z with a uniform s-grid and a
/// band of T Fourier modes k in {-T/2+1, ..., T/2} in t. The target is C^n,
/// identified with R^{2n} by z_j = x_{2j} + i x_{2j+1}; J0 is multiplication
/// by i.
struct Cylinder {
    double half_length = 1.0;  // r
    std::size_t s_samples = 0;  // S
    std::size_t t_modes = 0;    // T
    std::size_t dim = 1;        // n

    static constexpr double padding = 1.0;

    Cylinder() = default;
    Cylinder(double r, std::size_t S, std::size_t T, std::size_t n);

    /// Throws InvalidGrid unless the invariants hold.
    void validate() const;

    double lower() const { return -half_length - padding; }
    double upper() const { return half_length + padding; }
    double spacing() const { return (upper() - lower()) / double(s_samples - 1); }
    double s(std::size_t i) const { return lower() + double(i) * spacing(); }

    int k_min() const { return 1 - int(t_modes / 2); }
    int k_max() const { return int(t_modes / 2); }
    bool in_band(int k) const { return k >= k_min() && k <= k_max(); }
    std::size_t mode_index(int k) const { return std::size_t(k - k_min()); }
    int mode(std::size_t j) const { return int(j) + k_min(); }

    /// Index range [first, last] of samples with |s| <= r.
    std::size_t interior_first() const;
    std::size_t interior_last() const;

    /// Index range of samples inside [a, b] (inclusive, with a small tolerance).
    std::size_t first_at_or_after(double a) const;
    std::size_t last_at_or_before(double b) const;

    bool operator==(const Cylinder&) const = default;
};

/// Sub-cylinder [center - half_width, center + half_width] x R/Z.
struct Window {
    double center = 0.0;
    double half_width = 0.5;

    double lo() const { return center - half_width; }
    double hi() const { return center + half_width; }
};

/// Throws OutOfWindow if w leaves [-r-1, r+1].
void require_in_domain(const Cylinder& cyl, const Window& w);
/// Throws OutOfWindow if w touches the padding collar (leaves [-r, r]).
void require_in_interior(const Cylinder& cyl, const Window& w);

/// C^n-valued field on a cylinder stored as per-sample Fourier coefficients
/// in t. Layout is [s][mode][component].
class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(const Cylinder& cyl);

    const Cylinder& cylinder() const { return cyl_; }
    std::size_t row_size() const { return cyl_.t_modes * cyl_.dim; }

    cplx& at(std::size_t i, int k, std::size_t c) {
        return data_[i * row_size() + cyl_.mode_index(k) * cyl_.dim + c];
    }
    const cplx& at(std::size_t i, int k, std::size_t c) const {
        return data_[i * row_size() + cyl_.mode_index(k) * cyl_.dim + c];
    }

    std::span<cplx> row(std::size_t i) { return {data_.data() + i * row_size(), row_size()}; }
    std::span<const cplx> row(std::size_t i) const {
        return {data_.data() + i * row_size(), row_size()};
    }

    std::span<cplx> data() { return data_; }
    std::span<const cplx> data() const { return data_; }

    bool ball_constrained() const { return ball_constrained_; }
    void set_ball_constrained(bool flag) { ball_constrained_ = flag; }

    SpectralField& operator+=(const SpectralField& other);
    SpectralField& operator-=(const SpectralField& other);
    SpectralField& operator*=(double a);

private:
    Cylinder cyl_;
    std::vector<cplx> data_;
    bool ball_constrained_ = false;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double a, SpectralField f);

/// Max over all coefficients of |a - b|; grids must match.
double max_coeff_diff(const SpectralField& a, const SpectralField& b);

}  // namespace cyllab
