#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "cyllab/cylinder.hpp"
#include "cyllab/vfield.hpp"

namespace cyllab {

struct BoundaryMode {
    int k = 0;
    std::vector<cplx> value;  // one entry per component of C^n
};

/// Mode-split boundary data: modes k <= 0 are prescribed on the left circle
/// s = -r-1, modes k > 0 on the right circle s = r+1.
struct SpectralBoundaryData {
    std::vector<BoundaryMode> left;
    std::vector<BoundaryMode> right;
    bool ball_safe = false;

    /// Throws BandError for modes outside the band or on the wrong side,
    /// PreconditionError for dimension mismatches.
    void validate(const Cylinder& cyl) const;
    SpectralBoundaryData scaled(double factor) const;
    std::size_t dim() const;
};

nlohmann::json to_json(const SpectralBoundaryData& b);
/// Accepts a list of {side, k, re[], im[]} or {"modes": [...], "ball_safe": bool}.
SpectralBoundaryData boundary_from_json(const nlohmann::json& j);

/// Grid resolution rule for cylinders of varying length.
struct GridSpec {
    std::size_t t_modes = 16;
    double max_spacing = 0.01;    // used when s_samples == 0
    std::size_t s_samples = 0;    // fixed S when nonzero

    Cylinder cylinder_for(double r, std::size_t dim) const;
};

/// Exponential integrator for the per-mode equations c_k' - 2 pi k c_k = f_k.
/// Each mode is propagated in its decaying direction (k <= 0 left to right,
/// k > 0 right to left), with the forcing interpolated by degree-7
/// polynomials on eight neighbouring samples. Homogeneous modes are exact up
/// to rounding.
class LinearSolver {
public:
    explicit LinearSolver(const Cylinder& cyl);

    const Cylinder& cylinder() const { return cyl_; }

    SpectralField solve(const SpectralBoundaryData& bdata, const SpectralField& f) const;
    SpectralField homogeneous(const SpectralBoundaryData& bdata) const;
    /// Zero boundary data.
    SpectralField particular(const SpectralField& f) const;

    /// Sup-norm bound of f -> particular(f): the zero mode integrates over
    /// the full length 2r + 2, the other modes gain at most 1 / (2 pi |k|).
    double operator_norm() const { return cyl_.upper() - cyl_.lower(); }

private:
    void propagate(const SpectralBoundaryData* bdata, const SpectralField* f, SpectralField& out) const;

    Cylinder cyl_;
    // weights_[mode][offset][m], decay_[mode] = exp(-|2 pi k| h)
    std::vector<std::vector<std::vector<double>>> weights_;
    std::vector<double> decay_;
};

SpectralField solve_linear(const Cylinder& cyl, const SpectralBoundaryData& bdata, const SpectralField& f);

/// sup |u| of the homogeneous solution carrying bdata.
double homogeneous_sup(const Cylinder& cyl, const SpectralBoundaryData& bdata);

struct SolveOptions {
    double tol = 1e-10;
    std::size_t max_iterations = 200;
    bool newton = true;
    double contraction_limit = 0.9;
};

struct SolveReport {
    std::size_t iterations = 0;
    double final_residual = 0.0;         // sup |delbar u - eps V(u)|
    double fixed_point_residual = 0.0;   // sup bound of u - H - L(eps V(u))
    double ball_violation = 0.0;         // max(0, sup|u| - 1)
    double contraction_estimate = 0.0;   // eps * Lip(V) * |L|
    std::size_t picard_fallbacks = 0;
    std::vector<double> history;         // fixed-point residual per iteration
};

nlohmann::json to_json(const SolveReport& r);

struct SolveResult {
    SpectralField field;
    SolveReport report;
};

/// sup over the grid of |delbar u - eps V(u)|.
double equation_residual(const SpectralField& u, const VectorFieldModel& model, double eps);

/// Solves delbar u = eps V(u) with mode-split data: Newton steps on
/// u = H + L(eps V(u)) (H carries the data, L solves with zero data), the
/// linearization frozen at the current iterate and solved by inner Picard
/// sweeps; plain Picard when that stalls.
SolveResult solve_nonlinear(const Cylinder& cyl, const SpectralBoundaryData& bdata,
                            const VectorFieldModel& model, double eps, const SolveOptions& opts = {});

/// Member n of a family: solve_nonlinear with V_n, then require sup|u| <= 1.
/// Throws BallViolation otherwise. The returned field is flagged ball-constrained.
SolveResult make_instance(const Cylinder& cyl, double eps, const SpectralBoundaryData& bdata,
                          const VectorFieldSequence& sequence, std::size_t n,
                          const SolveOptions& opts = {});

}  // namespace cyllab
