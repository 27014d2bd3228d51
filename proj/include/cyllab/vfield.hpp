#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cyllab/cylinder.hpp"

namespace cyllab {

using Point = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Points further than this beyond the unit sphere are rejected.
inline constexpr double ball_tolerance = 1e-9;

/// V(x) = A x + b.
struct LinearField {
    Matrix matrix;
    Point offset;
};

/// Gradient of f(x) = sum_i (a_i x_i^2 / 2 + b_i x_i^3 / 3 + c_i x_i^4 / 4),
/// i.e. V_i = a_i x_i + b_i x_i^2 + c_i x_i^3.
struct PolynomialGradient {
    Point quadratic;
    Point cubic;
    Point quartic;
};

/// V(x) = rate * (-x_1, x_0, 0, ..., 0).
struct RotationField {
    double rate = 1.0;
};

/// Values on a uniform tensor grid over [-1, 1]^d, multilinear in between.
/// `values` holds points_per_axis^d nodes (first axis fastest), d entries each.
struct TabulatedField {
    std::size_t points_per_axis = 2;
    std::vector<double> values;
};

using FieldTerm = std::variant<LinearField, PolynomialGradient, RotationField, TabulatedField>;

/// Sup bounds on the closed unit ball; matrix and tensor sizes are Frobenius.
struct FieldBounds {
    double sup_v = 0.0;
    double sup_dv = 0.0;
    double sup_d2v = 0.0;

    double c1() const { return std::max(sup_v, sup_dv); }
    double c2() const { return std::max(c1(), sup_d2v); }
};

/// A vector field on the closed unit ball of R^d (d = 2n), given as a
/// weighted sum of primitive terms. Immutable after construction.
class VectorFieldModel {
public:
    VectorFieldModel() = default;
    VectorFieldModel(std::size_t real_dim, std::vector<std::pair<double, FieldTerm>> terms);

    static VectorFieldModel zero(std::size_t real_dim);
    static VectorFieldModel linear(Matrix a, Point b);
    static VectorFieldModel scalar_linear(std::size_t real_dim, double lambda);
    static VectorFieldModel constant(Point w);
    static VectorFieldModel gradient(Point quadratic, Point cubic, Point quartic);
    static VectorFieldModel rotation(std::size_t real_dim, double rate);
    static VectorFieldModel tabulated(std::size_t real_dim, std::size_t points_per_axis,
                                      std::vector<double> values);

    std::size_t real_dim() const { return dim_; }
    /// Kind of the single term, or "sum" / "zero".
    std::string kind() const;
    const std::vector<std::pair<double, FieldTerm>>& terms() const { return terms_; }

    /// Checked evaluation; throws OutOfBall when |x| > 1 + ball_tolerance.
    Point eval_v(const Point& x) const;
    Matrix eval_dv(const Point& x) const;

    /// Unchecked evaluation, used inside iterations that may overshoot.
    Point value(const Point& x) const;
    Matrix jacobian(const Point& x) const;

    const FieldBounds& bounds() const { return bounds_; }
    double reported_c1_bound() const { return bounds_.c1(); }
    double reported_c2_bound() const { return bounds_.c2(); }

    /// (A, b) when V(x) = A x + b exactly.
    const std::optional<std::pair<Matrix, Point>>& affine() const { return affine_; }

    /// this + weight * other.
    VectorFieldModel plus(double weight, const VectorFieldModel& other) const;

private:
    void finish();

    std::size_t dim_ = 0;
    std::vector<std::pair<double, FieldTerm>> terms_;
    FieldBounds bounds_;
    std::optional<std::pair<Matrix, Point>> affine_;
};

/// V_n = limit + a_n * perturbation with a_n = scale / n^power.
class VectorFieldSequence {
public:
    VectorFieldSequence() = default;
    VectorFieldSequence(VectorFieldModel limit, VectorFieldModel perturbation, double scale = 1.0,
                        double power = 1.0);
    explicit VectorFieldSequence(VectorFieldModel limit);

    const VectorFieldModel& limit() const { return limit_; }
    const VectorFieldModel& perturbation() const { return perturbation_; }
    double scale() const { return scale_; }
    double power() const { return power_; }

    /// a_n for n >= 1.
    double coefficient(std::size_t n) const;
    VectorFieldModel member(std::size_t n) const;

    /// Sampled sup over the ball of |V_n - V| and of max(|V_n - V|, |DV_n - DV|).
    double c0_distance(std::size_t n) const;
    double c1_distance(std::size_t n) const;

private:
    VectorFieldModel limit_;
    VectorFieldModel perturbation_;
    double scale_ = 1.0;
    double power_ = 1.0;
};

/// Deterministic sample of points in the closed unit ball of R^d.
std::vector<Point> ball_samples(std::size_t real_dim, std::size_t count, std::uint64_t seed = 7);

/// Sampled sup of |V| and |DV| (Frobenius) over ball_samples.
FieldBounds sampled_bounds(const VectorFieldModel& model, std::size_t count = 200);

struct FlowSegment {
    Point start;
    double duration = 0.0;
    double step = 0.0;
    std::vector<double> times;
    std::vector<Point> samples;
    bool escaped = false;
};

/// Classical RK4 for x' = V(x) with a fixed step; a negative duration
/// integrates backwards. The last step is shortened to land on the end time.
FlowSegment flow_ode(const VectorFieldModel& model, const Point& start, double duration, double step);

/// RK4 through the given monotone times (first entry is the start time),
/// taking substeps no longer than max_step between consecutive times.
FlowSegment flow_through(const VectorFieldModel& model, const Point& start,
                         const std::vector<double>& times, double max_step);

/// A(t) = int_0^1 DV((1 - tau) q + tau u(t)) dtau for each loop sample,
/// by 8-node Gauss-Legendre quadrature.
std::vector<Matrix> mean_value_matrix(const VectorFieldModel& model, const Point& q,
                                      const std::vector<Point>& loop);

// Field-level application. Points of C^n map to R^{2n} as (re z_0, im z_0, ...).

Point to_real(std::span<const cplx> z);
std::vector<cplx> to_complex(const Point& x);

/// Coefficients of V(u). Affine fields act exactly in coefficient space;
/// others are evaluated on 2T points per circle and truncated to the band.
SpectralField apply_field(const VectorFieldModel& model, const SpectralField& u);

/// Coefficients of DV(u) . w, with the same treatment as apply_field.
SpectralField apply_jacobian(const VectorFieldModel& model, const SpectralField& u,
                             const SpectralField& w);

nlohmann::json to_json(const VectorFieldModel& model);
/// Parses a model acting on R^{real_dim}.
VectorFieldModel model_from_json(const nlohmann::json& j, std::size_t real_dim);

nlohmann::json to_json(const VectorFieldSequence& seq);
/// Accepts either a sequence object {limit, perturbation, schedule} or a
/// bare model (constant sequence).
VectorFieldSequence sequence_from_json(const nlohmann::json& j, std::size_t real_dim);

}  // namespace cyllab
