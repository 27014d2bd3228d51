#include "cyllab/cylinder.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cyllab {

namespace {
constexpr double grid_tol = 1e-9;
}

Cylinder::Cylinder(double r, std::size_t S, std::size_t T, std::size_t n)
    : half_length(r), s_samples(S), t_modes(T), dim(n)
{
    validate();
}

void Cylinder::validate() const
{
    std::ostringstream why;
    if (!(half_length > 0.0) || !std::isfinite(half_length))
        why << "half length r must be positive and finite; ";
    // Nine-point stencils need at least nine samples.
    if (s_samples < 9)
        why << "need at least 9 s-samples (got " << s_samples << "); ";
    if (t_modes < 2 || t_modes % 2 != 0)
        why << "t_modes must be even and >= 2 (got " << t_modes << "); ";
    if (dim < 1)
        why << "ambient dimension must be >= 1; ";
    if (why.str().empty()) {
        std::size_t inside = interior_last() + 1 - interior_first();
        if (interior_first() > interior_last() || inside < 8)
            why << "interior [-r, r] holds fewer than 8 s-samples; ";
    }
    if (!why.str().empty())
        throw InvalidGrid("invalid cylinder: " + why.str());
}

std::size_t Cylinder::first_at_or_after(double a) const
{
    double x = (a - lower()) / spacing();
    double c = std::ceil(x - grid_tol);
    if (c <= 0.0)
        return 0;
    return std::min(std::size_t(c), s_samples);
}

std::size_t Cylinder::last_at_or_before(double b) const
{
    double x = (b - lower()) / spacing();
    double f = std::floor(x + grid_tol);
    if (f < 0.0)
        return 0;
    return std::min(std::size_t(f), s_samples - 1);
}

std::size_t Cylinder::interior_first() const { return first_at_or_after(-half_length); }
std::size_t Cylinder::interior_last() const { return last_at_or_before(half_length); }

void require_in_domain(const Cylinder& cyl, const Window& w)
{
    if (!(w.half_width > 0.0) || w.lo() < cyl.lower() - grid_tol || w.hi() > cyl.upper() + grid_tol)
        throw OutOfWindow("window leaves the cylinder domain");
}

void require_in_interior(const Cylinder& cyl, const Window& w)
{
    if (!(w.half_width > 0.0) || w.lo() < -cyl.half_length - grid_tol ||
        w.hi() > cyl.half_length + grid_tol)
        throw OutOfWindow("window touches the padding collar outside [-r, r]");
}

SpectralField::SpectralField(const Cylinder& cyl)
    : cyl_(cyl), data_(cyl.s_samples * cyl.t_modes * cyl.dim, cplx{})
{
    cyl_.validate();
}

SpectralField& SpectralField::operator+=(const SpectralField& other)
{
    if (!(cyl_ == other.cyl_))
        throw InvalidGrid("field grids differ");
    for (std::size_t i = 0; i < data_.size(); ++i)
        data_[i] += other.data_[i];
    return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other)
{
    if (!(cyl_ == other.cyl_))
        throw InvalidGrid("field grids differ");
    for (std::size_t i = 0; i < data_.size(); ++i)
        data_[i] -= other.data_[i];
    return *this;
}

SpectralField& SpectralField::operator*=(double a)
{
    for (auto& z : data_)
        z *= a;
    return *this;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double a, SpectralField f) { return f *= a; }

double max_coeff_diff(const SpectralField& a, const SpectralField& b)
{
    if (!(a.cylinder() == b.cylinder()))
        throw InvalidGrid("field grids differ");
    double m = 0.0;
    auto x = a.data();
    auto y = b.data();
    for (std::size_t i = 0; i < x.size(); ++i)
        m = std::max(m, std::abs(x[i] - y[i]));
    return m;
}

}  // namespace cyllab
