#include "cyllab/vfield.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <random>

#include "cyllab/fourier.hpp"

namespace cyllab {

namespace {

std::size_t node_count(std::size_t g, std::size_t d)
{
    std::size_t n = 1;
    for (std::size_t a = 0; a < d; ++a)
        n *= g;
    return n;
}

void check_dim(const Point& x, std::size_t d)
{
    if (std::size_t(x.size()) != d)
        throw PreconditionError("point has wrong dimension for this vector field");
}

// Multilinear interpolation helpers for TabulatedField.
struct Cell {
    std::vector<std::size_t> index;
    std::vector<double> frac;
};

Cell locate(const TabulatedField& f, const Point& x)
{
    const std::size_t d = std::size_t(x.size());
    const double h = 2.0 / double(f.points_per_axis - 1);
    Cell c{std::vector<std::size_t>(d), std::vector<double>(d)};
    for (std::size_t a = 0; a < d; ++a) {
        double y = (std::clamp(x[a], -1.0, 1.0) + 1.0) / h;
        auto i = std::min(std::size_t(std::floor(y)), f.points_per_axis - 2);
        c.index[a] = i;
        c.frac[a] = y - double(i);
    }
    return c;
}

Point node_value(const TabulatedField& f, std::size_t node, std::size_t d)
{
    Point v(d);
    for (std::size_t c = 0; c < d; ++c)
        v[c] = f.values[node * d + c];
    return v;
}

std::size_t corner_node(const TabulatedField& f, const Cell& cell, std::size_t mask)
{
    std::size_t node = 0, stride = 1;
    for (std::size_t a = 0; a < cell.index.size(); ++a) {
        node += (cell.index[a] + ((mask >> a) & 1u)) * stride;
        stride *= f.points_per_axis;
    }
    return node;
}

Point tab_value(const TabulatedField& f, const Point& x)
{
    const std::size_t d = std::size_t(x.size());
    Cell cell = locate(f, x);
    Point v = Point::Zero(d);
    for (std::size_t mask = 0; mask < (std::size_t(1) << d); ++mask) {
        double w = 1.0;
        for (std::size_t a = 0; a < d; ++a)
            w *= ((mask >> a) & 1u) ? cell.frac[a] : 1.0 - cell.frac[a];
        v += w * node_value(f, corner_node(f, cell, mask), d);
    }
    return v;
}

Matrix tab_jacobian(const TabulatedField& f, const Point& x)
{
    const std::size_t d = std::size_t(x.size());
    const double h = 2.0 / double(f.points_per_axis - 1);
    Cell cell = locate(f, x);
    Matrix m = Matrix::Zero(d, d);
    for (std::size_t mask = 0; mask < (std::size_t(1) << d); ++mask) {
        Point val = node_value(f, corner_node(f, cell, mask), d);
        for (std::size_t a = 0; a < d; ++a) {
            double w = ((mask >> a) & 1u) ? 1.0 / h : -1.0 / h;
            for (std::size_t b = 0; b < d; ++b)
                if (b != a)
                    w *= ((mask >> b) & 1u) ? cell.frac[b] : 1.0 - cell.frac[b];
            m.col(a) += w * val;
        }
    }
    return m;
}

FieldBounds tab_bounds(const TabulatedField& f, std::size_t d)
{
    const std::size_t g = f.points_per_axis;
    const double h = 2.0 / double(g - 1);
    const std::size_t nodes = node_count(g, d);
    FieldBounds b;
    std::vector<double> edge(d, 0.0);
    std::vector<std::vector<double>> twist(d, std::vector<double>(d, 0.0));
    std::vector<std::size_t> idx(d);
    for (std::size_t node = 0; node < nodes; ++node) {
        std::size_t rem = node;
        for (std::size_t a = 0; a < d; ++a) {
            idx[a] = rem % g;
            rem /= g;
        }
        Point v = node_value(f, node, d);
        b.sup_v = std::max(b.sup_v, v.norm());
        std::size_t stride_a = 1;
        for (std::size_t a = 0; a < d; ++a, stride_a *= g) {
            if (idx[a] + 1 >= g)
                continue;
            Point va = node_value(f, node + stride_a, d);
            edge[a] = std::max(edge[a], (va - v).norm() / h);
            std::size_t stride_b = 1;
            for (std::size_t bb = 0; bb < d; ++bb, stride_b *= g) {
                if (bb == a || idx[bb] + 1 >= g)
                    continue;
                Point vb = node_value(f, node + stride_b, d);
                Point vab = node_value(f, node + stride_a + stride_b, d);
                twist[a][bb] = std::max(twist[a][bb], (vab - va - vb + v).norm() / (h * h));
            }
        }
    }
    double dv = 0.0, d2v = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
        dv += edge[a] * edge[a];
        for (std::size_t bb = 0; bb < d; ++bb)
            d2v += twist[a][bb] * twist[a][bb];
    }
    b.sup_dv = std::sqrt(dv);
    b.sup_d2v = std::sqrt(d2v);
    return b;
}

struct TermOps {
    std::size_t d;

    Point value(const LinearField& f, const Point& x) const { return f.matrix * x + f.offset; }
    Point value(const PolynomialGradient& f, const Point& x) const
    {
        Point v(d);
        for (std::size_t i = 0; i < d; ++i)
            v[i] = x[i] * (f.quadratic[i] + x[i] * (f.cubic[i] + x[i] * f.quartic[i]));
        return v;
    }
    Point value(const RotationField& f, const Point& x) const
    {
        Point v = Point::Zero(d);
        v[0] = -f.rate * x[1];
        v[1] = f.rate * x[0];
        return v;
    }
    Point value(const TabulatedField& f, const Point& x) const { return tab_value(f, x); }

    Matrix jacobian(const LinearField& f, const Point&) const { return f.matrix; }
    Matrix jacobian(const PolynomialGradient& f, const Point& x) const
    {
        Matrix m = Matrix::Zero(d, d);
        for (std::size_t i = 0; i < d; ++i)
            m(i, i) = f.quadratic[i] + x[i] * (2.0 * f.cubic[i] + 3.0 * x[i] * f.quartic[i]);
        return m;
    }
    Matrix jacobian(const RotationField& f, const Point&) const
    {
        Matrix m = Matrix::Zero(d, d);
        m(0, 1) = -f.rate;
        m(1, 0) = f.rate;
        return m;
    }
    Matrix jacobian(const TabulatedField& f, const Point& x) const { return tab_jacobian(f, x); }

    FieldBounds bounds(const LinearField& f) const
    {
        double a = f.matrix.norm();
        return {a + f.offset.norm(), a, 0.0};
    }
    FieldBounds bounds(const PolynomialGradient& f) const
    {
        double v = 0.0, dv = 0.0, d2v = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            double a = std::abs(f.quadratic[i]), b = std::abs(f.cubic[i]), c = std::abs(f.quartic[i]);
            v += std::pow(a + b + c, 2);
            dv += std::pow(a + 2 * b + 3 * c, 2);
            d2v += std::pow(2 * b + 6 * c, 2);
        }
        return {std::sqrt(v), std::sqrt(dv), std::sqrt(d2v)};
    }
    FieldBounds bounds(const RotationField& f) const
    {
        return {std::abs(f.rate), std::abs(f.rate) * std::sqrt(2.0), 0.0};
    }
    FieldBounds bounds(const TabulatedField& f) const { return tab_bounds(f, d); }

    std::optional<std::pair<Matrix, Point>> affine(const LinearField& f) const
    {
        return std::pair{f.matrix, f.offset};
    }
    std::optional<std::pair<Matrix, Point>> affine(const PolynomialGradient& f) const
    {
        if (f.cubic.isZero(0.0) && f.quartic.isZero(0.0))
            return std::pair<Matrix, Point>{f.quadratic.asDiagonal(), Point::Zero(d)};
        return std::nullopt;
    }
    std::optional<std::pair<Matrix, Point>> affine(const RotationField& f) const
    {
        return std::pair<Matrix, Point>{jacobian(f, Point::Zero(d)), Point::Zero(d)};
    }
    std::optional<std::pair<Matrix, Point>> affine(const TabulatedField&) const { return std::nullopt; }
};

void validate_term(const FieldTerm& term, std::size_t d)
{
    auto bad = [](const char* what) { throw ConfigError(std::string("vector field: ") + what); };
    std::visit(
        [&](const auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, LinearField>) {
                if (std::size_t(f.matrix.rows()) != d || std::size_t(f.matrix.cols()) != d ||
                    std::size_t(f.offset.size()) != d)
                    bad("linear field has wrong dimensions");
            } else if constexpr (std::is_same_v<T, PolynomialGradient>) {
                if (std::size_t(f.quadratic.size()) != d || std::size_t(f.cubic.size()) != d ||
                    std::size_t(f.quartic.size()) != d)
                    bad("gradient coefficients have wrong length");
            } else if constexpr (std::is_same_v<T, RotationField>) {
                if (d < 2)
                    bad("rotation needs at least two real dimensions");
            } else {
                if (f.points_per_axis < 2)
                    bad("tabulated field needs at least 2 points per axis");
                if (f.values.size() != node_count(f.points_per_axis, d) * d)
                    bad("tabulated field has wrong number of values");
            }
        },
        term);
}

}  // namespace

VectorFieldModel::VectorFieldModel(std::size_t real_dim, std::vector<std::pair<double, FieldTerm>> terms)
    : dim_(real_dim), terms_(std::move(terms))
{
    if (dim_ == 0)
        throw ConfigError("vector field dimension must be positive");
    for (const auto& [w, t] : terms_)
        validate_term(t, dim_);
    finish();
}

void VectorFieldModel::finish()
{
    TermOps ops{dim_};
    bounds_ = {};
    Matrix a = Matrix::Zero(dim_, dim_);
    Point b = Point::Zero(dim_);
    bool is_affine = true;
    for (const auto& [w, t] : terms_) {
        FieldBounds tb = std::visit([&](const auto& f) { return ops.bounds(f); }, t);
        bounds_.sup_v += std::abs(w) * tb.sup_v;
        bounds_.sup_dv += std::abs(w) * tb.sup_dv;
        bounds_.sup_d2v += std::abs(w) * tb.sup_d2v;
        auto aff = std::visit([&](const auto& f) { return ops.affine(f); }, t);
        if (aff) {
            a += w * aff->first;
            b += w * aff->second;
        } else {
            is_affine = false;
        }
    }
    if (is_affine)
        affine_ = std::pair{a, b};
    else
        affine_.reset();
}

VectorFieldModel VectorFieldModel::zero(std::size_t real_dim) { return {real_dim, {}}; }

VectorFieldModel VectorFieldModel::linear(Matrix a, Point b)
{
    std::size_t d = std::size_t(a.rows());
    return {d, {{1.0, LinearField{std::move(a), std::move(b)}}}};
}

VectorFieldModel VectorFieldModel::scalar_linear(std::size_t real_dim, double lambda)
{
    return linear(lambda * Matrix::Identity(real_dim, real_dim), Point::Zero(real_dim));
}

VectorFieldModel VectorFieldModel::constant(Point w)
{
    std::size_t d = std::size_t(w.size());
    return linear(Matrix::Zero(d, d), std::move(w));
}

VectorFieldModel VectorFieldModel::gradient(Point quadratic, Point cubic, Point quartic)
{
    std::size_t d = std::size_t(quadratic.size());
    return {d, {{1.0, PolynomialGradient{std::move(quadratic), std::move(cubic), std::move(quartic)}}}};
}

VectorFieldModel VectorFieldModel::rotation(std::size_t real_dim, double rate)
{
    return {real_dim, {{1.0, RotationField{rate}}}};
}

VectorFieldModel VectorFieldModel::tabulated(std::size_t real_dim, std::size_t points_per_axis,
                                             std::vector<double> values)
{
    return {real_dim, {{1.0, TabulatedField{points_per_axis, std::move(values)}}}};
}

std::string VectorFieldModel::kind() const
{
    if (terms_.empty())
        return "zero";
    if (terms_.size() > 1)
        return "sum";
    static const char* names[] = {"linear", "gradient", "rotation", "tabulated"};
    return names[terms_.front().second.index()];
}

Point VectorFieldModel::value(const Point& x) const
{
    check_dim(x, dim_);
    TermOps ops{dim_};
    Point v = Point::Zero(dim_);
    for (const auto& [w, t] : terms_)
        v += w * std::visit([&](const auto& f) { return ops.value(f, x); }, t);
    return v;
}

Matrix VectorFieldModel::jacobian(const Point& x) const
{
    check_dim(x, dim_);
    TermOps ops{dim_};
    Matrix m = Matrix::Zero(dim_, dim_);
    for (const auto& [w, t] : terms_)
        m += w * std::visit([&](const auto& f) { return ops.jacobian(f, x); }, t);
    return m;
}

Point VectorFieldModel::eval_v(const Point& x) const
{
    check_dim(x, dim_);
    if (x.norm() > 1.0 + ball_tolerance)
        throw OutOfBall("vector field evaluated outside the closed unit ball");
    return value(x);
}

Matrix VectorFieldModel::eval_dv(const Point& x) const
{
    check_dim(x, dim_);
    if (x.norm() > 1.0 + ball_tolerance)
        throw OutOfBall("vector field derivative evaluated outside the closed unit ball");
    return jacobian(x);
}

VectorFieldModel VectorFieldModel::plus(double weight, const VectorFieldModel& other) const
{
    if (other.dim_ != dim_)
        throw ConfigError("cannot add vector fields of different dimensions");
    auto terms = terms_;
    for (const auto& [w, t] : other.terms_)
        terms.emplace_back(weight * w, t);
    return {dim_, std::move(terms)};
}

VectorFieldSequence::VectorFieldSequence(VectorFieldModel limit, VectorFieldModel perturbation,
                                         double scale, double power)
    : limit_(std::move(limit)), perturbation_(std::move(perturbation)), scale_(scale), power_(power)
{
    if (limit_.real_dim() != perturbation_.real_dim())
        throw ConfigError("limit and perturbation dimensions differ");
    if (!(power_ > 0.0))
        throw ConfigError("schedule power must be positive so that a_n -> 0");
}

VectorFieldSequence::VectorFieldSequence(VectorFieldModel limit)
    : VectorFieldSequence(limit, VectorFieldModel::zero(limit.real_dim()), 0.0, 1.0)
{
}

double VectorFieldSequence::coefficient(std::size_t n) const
{
    if (n == 0)
        throw PreconditionError("sequence index starts at 1");
    return scale_ / std::pow(double(n), power_);
}

VectorFieldModel VectorFieldSequence::member(std::size_t n) const
{
    double a = coefficient(n);
    if (a == 0.0 || perturbation_.terms().empty())
        return limit_;
    return limit_.plus(a, perturbation_);
}

double VectorFieldSequence::c0_distance(std::size_t n) const
{
    double a = std::abs(coefficient(n));
    return a * sampled_bounds(perturbation_).sup_v;
}

double VectorFieldSequence::c1_distance(std::size_t n) const
{
    double a = std::abs(coefficient(n));
    return a * sampled_bounds(perturbation_).c1();
}

std::vector<Point> ball_samples(std::size_t real_dim, std::size_t count, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Point> pts;
    pts.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Point p(real_dim);
        for (auto& x : p)
            x = normal(rng);
        double radius = std::pow(unif(rng), 1.0 / double(real_dim));
        // Every fourth point on the sphere itself, where bounds are sharpest.
        if (i % 4 == 0)
            radius = 1.0;
        pts.push_back(p.normalized() * radius);
    }
    return pts;
}

FieldBounds sampled_bounds(const VectorFieldModel& model, std::size_t count)
{
    FieldBounds b;
    for (const auto& p : ball_samples(model.real_dim(), count)) {
        b.sup_v = std::max(b.sup_v, model.value(p).norm());
        b.sup_dv = std::max(b.sup_dv, model.jacobian(p).norm());
    }
    return b;
}

namespace {

Point rk4_step(const VectorFieldModel& model, const Point& x, double h)
{
    Point k1 = model.value(x);
    Point k2 = model.value(x + 0.5 * h * k1);
    Point k3 = model.value(x + 0.5 * h * k2);
    Point k4 = model.value(x + h * k3);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

bool outside(const Point& x) { return x.norm() > 1.0 + ball_tolerance; }

}  // namespace

FlowSegment flow_ode(const VectorFieldModel& model, const Point& start, double duration, double step)
{
    check_dim(start, model.real_dim());
    if (outside(start))
        throw OutOfBall("flow start point outside the closed unit ball");
    if (!(step > 0.0))
        throw PreconditionError("flow step must be positive");
    if (step > std::abs(duration) && duration != 0.0)
        throw PreconditionError("flow step exceeds the duration");
    FlowSegment seg;
    seg.start = start;
    seg.duration = duration;
    seg.step = step;
    seg.times.push_back(0.0);
    seg.samples.push_back(start);
    double sign = duration < 0.0 ? -1.0 : 1.0;
    double total = std::abs(duration);
    auto steps = std::size_t(std::ceil(total / step - 1e-12));
    Point x = start;
    for (std::size_t i = 0; i < steps; ++i) {
        double t0 = double(i) * step;
        double t1 = std::min(total, double(i + 1) * step);
        x = rk4_step(model, x, sign * (t1 - t0));
        seg.times.push_back(sign * t1);
        seg.samples.push_back(x);
        seg.escaped = seg.escaped || outside(x);
    }
    return seg;
}

FlowSegment flow_through(const VectorFieldModel& model, const Point& start,
                         const std::vector<double>& times, double max_step)
{
    check_dim(start, model.real_dim());
    if (!(max_step > 0.0))
        throw PreconditionError("flow step must be positive");
    FlowSegment seg;
    seg.start = start;
    seg.step = max_step;
    if (times.empty())
        return seg;
    seg.duration = times.back() - times.front();
    seg.escaped = outside(start);
    Point x = start;
    seg.times.push_back(times.front());
    seg.samples.push_back(x);
    for (std::size_t i = 1; i < times.size(); ++i) {
        double gap = times[i] - times[i - 1];
        auto sub = std::max<std::size_t>(1, std::size_t(std::ceil(std::abs(gap) / max_step - 1e-12)));
        for (std::size_t m = 0; m < sub; ++m)
            x = rk4_step(model, x, gap / double(sub));
        seg.times.push_back(times[i]);
        seg.samples.push_back(x);
        seg.escaped = seg.escaped || outside(x);
    }
    return seg;
}

std::vector<Matrix> mean_value_matrix(const VectorFieldModel& model, const Point& q,
                                      const std::vector<Point>& loop)
{
    using boost::math::quadrature::gauss;
    if (outside(q))
        throw OutOfBall("center point outside the closed unit ball");
    const std::size_t d = model.real_dim();
    std::vector<Matrix> out;
    out.reserve(loop.size());
    for (const auto& u : loop) {
        if (outside(u))
            throw OutOfBall("loop point outside the closed unit ball");
        Matrix acc = Matrix::Zero(d, d);
        const auto& nodes = gauss<double, 8>::abscissa();
        const auto& weights = gauss<double, 8>::weights();
        // Nodes are stored for the positive half of [-1, 1].
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            for (double sgn : {1.0, -1.0}) {
                double tau = 0.5 * (1.0 + sgn * nodes[j]);
                acc += 0.5 * weights[j] * model.jacobian((1.0 - tau) * q + tau * u);
            }
        }
        out.push_back(acc);
    }
    return out;
}

Point to_real(std::span<const cplx> z)
{
    Point x(2 * z.size());
    for (std::size_t c = 0; c < z.size(); ++c) {
        x[2 * c] = z[c].real();
        x[2 * c + 1] = z[c].imag();
    }
    return x;
}

std::vector<cplx> to_complex(const Point& x)
{
    std::vector<cplx> z(std::size_t(x.size()) / 2);
    for (std::size_t c = 0; c < z.size(); ++c)
        z[c] = {x[2 * c], x[2 * c + 1]};
    return z;
}

namespace {

// Real-linear map on C^n from a real 2n x 2n matrix: w = P z + Q conj(z).
struct RealLinear {
    Eigen::MatrixXcd p, q;
};

RealLinear split_real_linear(const Matrix& a)
{
    const Eigen::Index n = a.rows() / 2;
    RealLinear m{Eigen::MatrixXcd::Zero(n, n), Eigen::MatrixXcd::Zero(n, n)};
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) {
            double a11 = a(2 * r, 2 * c), a12 = a(2 * r, 2 * c + 1);
            double a21 = a(2 * r + 1, 2 * c), a22 = a(2 * r + 1, 2 * c + 1);
            m.p(r, c) = cplx(a11 + a22, a21 - a12) * 0.5;
            m.q(r, c) = cplx(a11 - a22, a21 + a12) * 0.5;
        }
    return m;
}

// Coefficient-space application of w -> A w (+ b on the zero mode).
SpectralField apply_affine(const Matrix& a, const Point* b, const SpectralField& w)
{
    const auto& cyl = w.cylinder();
    const std::size_t n = cyl.dim;
    RealLinear m = split_real_linear(a);
    SpectralField out(cyl);
    Eigen::VectorXcd z(n), zc(n);
    for (std::size_t i = 0; i < cyl.s_samples; ++i) {
        for (int k = cyl.k_min(); k <= cyl.k_max(); ++k) {
            for (std::size_t c = 0; c < n; ++c) {
                z[c] = w.at(i, k, c);
                // Mode k of conj(w) is conj of mode -k; outside the band it is truncated.
                zc[c] = cyl.in_band(-k) ? std::conj(w.at(i, -k, c)) : cplx{};
            }
            Eigen::VectorXcd r = m.p * z + m.q * zc;
            for (std::size_t c = 0; c < n; ++c)
                out.at(i, k, c) = r[c];
        }
        if (b) {
            for (std::size_t c = 0; c < n; ++c)
                out.at(i, 0, c) += cplx((*b)[2 * c], (*b)[2 * c + 1]);
        }
    }
    return out;
}

void require_matching(const VectorFieldModel& model, const Cylinder& cyl)
{
    if (model.real_dim() != 2 * cyl.dim)
        throw ConfigError("vector field dimension does not match the field's target C^n");
}

}  // namespace

SpectralField apply_field(const VectorFieldModel& model, const SpectralField& u)
{
    const auto& cyl = u.cylinder();
    require_matching(model, cyl);
    if (const auto& aff = model.affine())
        return apply_affine(aff->first, &aff->second, u);
    const auto& grid = fourier_grid(cyl.t_modes, cyl.dim, product_points(cyl));
    const std::size_t M = grid.points();
    SpectralField out(cyl);
    std::vector<cplx> vals(M * cyl.dim);
    for (std::size_t i = 0; i < cyl.s_samples; ++i) {
        grid.to_physical(u.row(i), vals);
        for (std::size_t m = 0; m < M; ++m) {
            std::span<cplx> z(vals.data() + m * cyl.dim, cyl.dim);
            Point v = model.value(to_real(z));
            for (std::size_t c = 0; c < cyl.dim; ++c)
                z[c] = {v[2 * c], v[2 * c + 1]};
        }
        grid.from_physical(vals, out.row(i));
    }
    return out;
}

SpectralField apply_jacobian(const VectorFieldModel& model, const SpectralField& u,
                             const SpectralField& w)
{
    const auto& cyl = u.cylinder();
    require_matching(model, cyl);
    if (!(w.cylinder() == cyl))
        throw InvalidGrid("field grids differ");
    if (const auto& aff = model.affine())
        return apply_affine(aff->first, nullptr, w);
    const auto& grid = fourier_grid(cyl.t_modes, cyl.dim, product_points(cyl));
    const std::size_t M = grid.points();
    SpectralField out(cyl);
    std::vector<cplx> uv(M * cyl.dim), wv(M * cyl.dim);
    for (std::size_t i = 0; i < cyl.s_samples; ++i) {
        grid.to_physical(u.row(i), uv);
        grid.to_physical(w.row(i), wv);
        for (std::size_t m = 0; m < M; ++m) {
            std::span<const cplx> zu(uv.data() + m * cyl.dim, cyl.dim);
            std::span<cplx> zw(wv.data() + m * cyl.dim, cyl.dim);
            Point r = model.jacobian(to_real(zu)) * to_real(zw);
            for (std::size_t c = 0; c < cyl.dim; ++c)
                zw[c] = {r[2 * c], r[2 * c + 1]};
        }
        grid.from_physical(wv, out.row(i));
    }
    return out;
}

// JSON ----------------------------------------------------------------------

namespace {

using nlohmann::json;

Point read_vector(const json& j, const char* key, std::size_t d, bool required)
{
    if (!j.contains(key)) {
        if (required)
            throw ConfigError(std::string("vector field: missing key '") + key + "'");
        return Point::Zero(d);
    }
    auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != d)
        throw ConfigError(std::string("vector field: '") + key + "' must have " + std::to_string(d) +
                          " entries");
    return Eigen::Map<Point>(v.data(), Eigen::Index(d));
}

json write_vector(const Point& p) { return std::vector<double>(p.begin(), p.end()); }

json term_to_json(const FieldTerm& t)
{
    return std::visit(
        [](const auto& f) -> json {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, LinearField>) {
                json rows = json::array();
                for (Eigen::Index r = 0; r < f.matrix.rows(); ++r)
                    rows.push_back(write_vector(f.matrix.row(r).transpose()));
                return {{"kind", "linear"}, {"matrix", rows}, {"offset", write_vector(f.offset)}};
            } else if constexpr (std::is_same_v<T, PolynomialGradient>) {
                return {{"kind", "gradient"},
                        {"quadratic", write_vector(f.quadratic)},
                        {"cubic", write_vector(f.cubic)},
                        {"quartic", write_vector(f.quartic)}};
            } else if constexpr (std::is_same_v<T, RotationField>) {
                return {{"kind", "rotation"}, {"rate", f.rate}};
            } else {
                return {{"kind", "tabulated"}, {"points_per_axis", f.points_per_axis}, {"values", f.values}};
            }
        },
        t);
}

}  // namespace

json to_json(const VectorFieldModel& model)
{
    const auto& terms = model.terms();
    if (terms.empty())
        return {{"kind", "zero"}};
    if (terms.size() == 1 && terms.front().first == 1.0)
        return term_to_json(terms.front().second);
    json arr = json::array();
    for (const auto& [w, t] : terms)
        arr.push_back({{"weight", w}, {"field", term_to_json(t)}});
    return {{"kind", "sum"}, {"terms", arr}};
}

VectorFieldModel model_from_json(const json& j, std::size_t d)
{
    if (!j.is_object() || !j.contains("kind"))
        throw ConfigError("vector field: expected an object with a 'kind'");
    const auto kind = j.at("kind").get<std::string>();
    try {
        if (kind == "zero")
            return VectorFieldModel::zero(d);
        if (kind == "linear") {
            if (j.contains("lambda"))
                return VectorFieldModel::linear(j.at("lambda").get<double>() * Matrix::Identity(d, d),
                                                read_vector(j, "offset", d, false));
            auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
            if (rows.size() != d)
                throw ConfigError("vector field: matrix must have " + std::to_string(d) + " rows");
            Matrix a(d, d);
            for (std::size_t r = 0; r < d; ++r) {
                if (rows[r].size() != d)
                    throw ConfigError("vector field: matrix rows must have " + std::to_string(d) + " entries");
                for (std::size_t c = 0; c < d; ++c)
                    a(r, c) = rows[r][c];
            }
            return VectorFieldModel::linear(a, read_vector(j, "offset", d, false));
        }
        if (kind == "constant")
            return VectorFieldModel::constant(read_vector(j, "value", d, true));
        if (kind == "gradient")
            return VectorFieldModel::gradient(read_vector(j, "quadratic", d, false),
                                              read_vector(j, "cubic", d, false),
                                              read_vector(j, "quartic", d, false));
        if (kind == "rotation")
            return VectorFieldModel::rotation(d, j.value("rate", 1.0));
        if (kind == "tabulated")
            return VectorFieldModel::tabulated(d, j.at("points_per_axis").get<std::size_t>(),
                                               j.at("values").get<std::vector<double>>());
        if (kind == "sum") {
            VectorFieldModel acc = VectorFieldModel::zero(d);
            for (const auto& t : j.at("terms"))
                acc = acc.plus(t.value("weight", 1.0), model_from_json(t.at("field"), d));
            return acc;
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("vector field: ") + e.what());
    }
    throw ConfigError("vector field: unknown kind '" + kind + "'");
}

json to_json(const VectorFieldSequence& seq)
{
    return {{"limit", to_json(seq.limit())},
            {"perturbation", to_json(seq.perturbation())},
            {"schedule", {{"scale", seq.scale()}, {"power", seq.power()}}}};
}

VectorFieldSequence sequence_from_json(const json& j, std::size_t d)
{
    if (j.is_object() && j.contains("kind"))
        return VectorFieldSequence(model_from_json(j, d));
    if (!j.is_object() || !j.contains("limit"))
        throw ConfigError("vector field config: expected a model or {limit, perturbation, schedule}");
    auto limit = model_from_json(j.at("limit"), d);
    if (!j.contains("perturbation"))
        return VectorFieldSequence(limit);
    auto pert = model_from_json(j.at("perturbation"), d);
    double scale = 1.0, power = 1.0;
    if (j.contains("schedule")) {
        scale = j.at("schedule").value("scale", 1.0);
        power = j.at("schedule").value("power", 1.0);
    }
    return VectorFieldSequence(limit, pert, scale, power);
}

}  // namespace cyllab
