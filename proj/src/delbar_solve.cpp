#include "cyllab/delbar_solve.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cyllab/calculus.hpp"
#include "cyllab/stencil.hpp"

namespace cyllab {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr std::size_t interp_width = 8;

std::size_t interval_start(std::size_t i, std::size_t n)
{
    std::size_t b = i >= 3 ? i - 3 : 0;
    return std::min(b, n - interp_width);
}

// max over s of sum_k |c_k(s)|: an upper bound on the sup norm.
double sup_bound(const SpectralField& u)
{
    const auto& cyl = u.cylinder();
    double best = 0.0;
    for (std::size_t i = 0; i < cyl.s_samples; ++i) {
        auto row = u.row(i);
        std::vector<double> per_comp(cyl.dim, 0.0);
        for (std::size_t j = 0; j < cyl.t_modes; ++j)
            for (std::size_t c = 0; c < cyl.dim; ++c)
                per_comp[c] += std::abs(row[j * cyl.dim + c]);
        double sq = 0.0;
        for (double v : per_comp)
            sq += v * v;
        best = std::max(best, std::sqrt(sq));
    }
    return best;
}

}  // namespace

// Boundary data ---------------------------------------------------------------

std::size_t SpectralBoundaryData::dim() const
{
    if (!left.empty())
        return left.front().value.size();
    if (!right.empty())
        return right.front().value.size();
    return 0;
}

void SpectralBoundaryData::validate(const Cylinder& cyl) const
{
    auto check = [&](const BoundaryMode& m, bool is_left) {
        if (!cyl.in_band(m.k))
            throw BandError("boundary mode k=" + std::to_string(m.k) + " lies outside the band [" +
                            std::to_string(cyl.k_min()) + ", " + std::to_string(cyl.k_max()) + "]");
        if (is_left && m.k > 0)
            throw BandError("left boundary data may only carry modes k <= 0 (got k=" +
                            std::to_string(m.k) + ")");
        if (!is_left && m.k <= 0)
            throw BandError("right boundary data may only carry modes k > 0 (got k=" +
                            std::to_string(m.k) + ")");
        if (m.value.size() != cyl.dim)
            throw PreconditionError("boundary mode has " + std::to_string(m.value.size()) +
                                    " components, expected " + std::to_string(cyl.dim));
    };
    for (const auto& m : left)
        check(m, true);
    for (const auto& m : right)
        check(m, false);
    if (ball_safe && homogeneous_sup(cyl, *this) > 1.0 + ball_tolerance)
        throw BallViolation("boundary data flagged ball_safe leaves the unit ball");
}

SpectralBoundaryData SpectralBoundaryData::scaled(double factor) const
{
    SpectralBoundaryData out = *this;
    for (auto* side : {&out.left, &out.right})
        for (auto& m : *side)
            for (auto& z : m.value)
                z *= factor;
    return out;
}

nlohmann::json to_json(const SpectralBoundaryData& b)
{
    nlohmann::json modes = nlohmann::json::array();
    auto emit = [&](const BoundaryMode& m, const char* side) {
        std::vector<double> re, im;
        for (auto z : m.value) {
            re.push_back(z.real());
            im.push_back(z.imag());
        }
        modes.push_back({{"side", side}, {"k", m.k}, {"re", re}, {"im", im}});
    };
    for (const auto& m : b.left)
        emit(m, "left");
    for (const auto& m : b.right)
        emit(m, "right");
    return {{"modes", modes}, {"ball_safe", b.ball_safe}};
}

SpectralBoundaryData boundary_from_json(const nlohmann::json& j)
{
    SpectralBoundaryData b;
    const nlohmann::json* modes = &j;
    if (j.is_object()) {
        if (!j.contains("modes"))
            throw ConfigError("boundary data: expected a list of modes or {\"modes\": [...]}");
        modes = &j.at("modes");
        b.ball_safe = j.value("ball_safe", false);
    }
    if (!modes->is_array())
        throw ConfigError("boundary data: modes must be a list");
    try {
        for (const auto& m : *modes) {
            auto side = m.at("side").get<std::string>();
            BoundaryMode bm;
            bm.k = m.at("k").get<int>();
            auto re = m.at("re").get<std::vector<double>>();
            auto im = m.contains("im") ? m.at("im").get<std::vector<double>>()
                                       : std::vector<double>(re.size(), 0.0);
            if (re.size() != im.size())
                throw ConfigError("boundary data: re and im lengths differ");
            for (std::size_t c = 0; c < re.size(); ++c)
                bm.value.emplace_back(re[c], im[c]);
            if (side == "left")
                b.left.push_back(std::move(bm));
            else if (side == "right")
                b.right.push_back(std::move(bm));
            else
                throw ConfigError("boundary data: side must be 'left' or 'right'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("boundary data: ") + e.what());
    }
    return b;
}

Cylinder GridSpec::cylinder_for(double r, std::size_t dim) const
{
    std::size_t S = s_samples;
    if (S == 0) {
        if (!(max_spacing > 0.0))
            throw ConfigError("grid spacing must be positive");
        S = std::size_t(std::ceil((2.0 * r + 2.0) / max_spacing)) + 1;
    }
    return Cylinder(r, S, t_modes, dim);
}

// Linear solver -----------------------------------------------------------------

LinearSolver::LinearSolver(const Cylinder& cyl) : cyl_(cyl)
{
    using boost::math::quadrature::gauss;
    cyl_.validate();
    const double h = cyl_.spacing();
    for (std::size_t j = 0; j < cyl_.t_modes; ++j) {
        const int k = cyl_.mode(j);
        const double lam = two_pi * k;
        decay_.push_back(std::exp(-std::abs(lam) * h));
        std::vector<std::vector<double>> per_offset;
        for (std::size_t o = 0; o + 1 < interp_width; ++o) {
            std::vector<double> nodes(interp_width);
            for (std::size_t m = 0; m < interp_width; ++m)
                nodes[m] = double(m) - double(o);
            std::vector<double> w(interp_width);
            for (std::size_t m = 0; m < interp_width; ++m) {
                auto integrand = [&](double x) {
                    double basis = lagrange_weights(x, nodes)[m];
                    // Forward sweep (k <= 0) weights e^{lam h (1 - x)}, backward
                    // sweep (k > 0) weights e^{-lam h x}; both exponents are <= 0.
                    double e = k <= 0 ? std::exp(lam * h * (1.0 - x)) : std::exp(-lam * h * x);
                    return e * basis;
                };
                w[m] = h * gauss<double, 20>::integrate(integrand, 0.0, 1.0);
            }
            per_offset.push_back(std::move(w));
        }
        weights_.push_back(std::move(per_offset));
    }
}

void LinearSolver::propagate(const SpectralBoundaryData* bdata, const SpectralField* f,
                             SpectralField& out) const
{
    const std::size_t S = cyl_.s_samples;
    const std::size_t n = cyl_.dim;
    const std::size_t row = cyl_.t_modes * n;
    auto u = out.data();
    const cplx* src = f ? f->data().data() : nullptr;

    std::vector<cplx> start(row, cplx{});
    if (bdata) {
        for (const auto& m : bdata->left)
            for (std::size_t c = 0; c < n; ++c)
                start[cyl_.mode_index(m.k) * n + c] += m.value[c];
        for (const auto& m : bdata->right)
            for (std::size_t c = 0; c < n; ++c)
                start[cyl_.mode_index(m.k) * n + c] += m.value[c];
    }

    for (std::size_t j = 0; j < cyl_.t_modes; ++j) {
        const int k = cyl_.mode(j);
        const double e = decay_[j];
        const auto& w = weights_[j];
        for (std::size_t c = 0; c < n; ++c) {
            const std::size_t col = j * n + c;
            auto forcing = [&](std::size_t i) {
                cplx acc{};
                if (!src)
                    return acc;
                std::size_t b = interval_start(i, S);
                const auto& wo = w[i - b];
                for (std::size_t m = 0; m < interp_width; ++m)
                    acc += wo[m] * src[(b + m) * row + col];
                return acc;
            };
            if (k <= 0) {
                u[col] = start[col];
                for (std::size_t i = 0; i + 1 < S; ++i)
                    u[(i + 1) * row + col] = e * u[i * row + col] + forcing(i);
            } else {
                u[(S - 1) * row + col] = start[col];
                for (std::size_t i = S - 1; i-- > 0;)
                    u[i * row + col] = e * u[(i + 1) * row + col] - forcing(i);
            }
        }
    }
}

SpectralField LinearSolver::solve(const SpectralBoundaryData& bdata, const SpectralField& f) const
{
    if (!(f.cylinder() == cyl_))
        throw InvalidGrid("forcing lives on a different grid");
    bdata.validate(cyl_);
    SpectralField out(cyl_);
    propagate(&bdata, &f, out);
    return out;
}

SpectralField LinearSolver::homogeneous(const SpectralBoundaryData& bdata) const
{
    bdata.validate(cyl_);
    SpectralField out(cyl_);
    propagate(&bdata, nullptr, out);
    return out;
}

SpectralField LinearSolver::particular(const SpectralField& f) const
{
    if (!(f.cylinder() == cyl_))
        throw InvalidGrid("forcing lives on a different grid");
    SpectralField out(cyl_);
    propagate(nullptr, &f, out);
    return out;
}

SpectralField solve_linear(const Cylinder& cyl, const SpectralBoundaryData& bdata, const SpectralField& f)
{
    return LinearSolver(cyl).solve(bdata, f);
}

double homogeneous_sup(const Cylinder& cyl, const SpectralBoundaryData& bdata)
{
    SpectralBoundaryData unflagged = bdata;
    unflagged.ball_safe = false;
    return sup_norm(LinearSolver(cyl).homogeneous(unflagged));
}

// Nonlinear solver ----------------------------------------------------------------

nlohmann::json to_json(const SolveReport& r)
{
    return {{"iterations", r.iterations},
            {"final_residual", r.final_residual},
            {"fixed_point_residual", r.fixed_point_residual},
            {"ball_violation", r.ball_violation},
            {"contraction_estimate", r.contraction_estimate},
            {"picard_fallbacks", r.picard_fallbacks},
            {"history", r.history}};
}

double equation_residual(const SpectralField& u, const VectorFieldModel& model, double eps)
{
    SpectralField res = apply_delbar(u);
    if (eps != 0.0)
        res -= eps * apply_field(model, u);
    return sup_norm(res);
}

SolveResult solve_nonlinear(const Cylinder& cyl, const SpectralBoundaryData& bdata,
                            const VectorFieldModel& model, double eps, const SolveOptions& opts)
{
    if (!(opts.tol > 0.0))
        throw PreconditionError("solver tolerance must be positive");
    if (model.real_dim() != 2 * cyl.dim)
        throw ConfigError("vector field dimension does not match the cylinder target");
    LinearSolver solver(cyl);
    SolveReport report;
    report.contraction_estimate = std::abs(eps) * model.bounds().sup_dv * solver.operator_norm();
    if (report.contraction_estimate >= opts.contraction_limit)
        throw NoContraction("eps * Lip(V) * |L| = " + std::to_string(report.contraction_estimate) +
                            " is not below " + std::to_string(opts.contraction_limit));

    const SpectralField homog = solver.homogeneous(bdata);
    SpectralField u = homog;
    bool converged = false;
    for (std::size_t iter = 1; iter <= opts.max_iterations; ++iter) {
        report.iterations = iter;
        SpectralField image = homog;
        if (eps != 0.0)
            image += solver.particular(eps * apply_field(model, u));
        SpectralField defect = u - image;
        double res = sup_bound(defect);
        report.history.push_back(res);
        report.fixed_point_residual = res;
        if (res <= opts.tol) {
            converged = true;
            break;
        }
        if (!opts.newton) {
            u = std::move(image);
            continue;
        }
        // Newton step: delta = -defect + L(eps DV(u) delta), by inner sweeps.
        SpectralField delta = -1.0 * defect;
        bool solved = false;
        double prev = std::numeric_limits<double>::infinity();
        std::size_t stalls = 0;
        for (std::size_t sweep = 0; sweep < 100; ++sweep) {
            SpectralField next = solver.particular(eps * apply_jacobian(model, u, delta));
            next -= defect;
            double change = sup_bound(next - delta);
            double size = sup_bound(next);
            delta = std::move(next);
            if (change <= std::max(1e-3 * opts.tol, 1e-15 * size)) {
                solved = true;
                break;
            }
            stalls = change < 0.95 * prev ? 0 : stalls + 1;
            if (stalls >= 5)
                break;
            prev = change;
        }
        if (solved) {
            u += delta;
        } else {
            ++report.picard_fallbacks;
            u = std::move(image);
        }
    }
    if (!converged)
        throw NonConvergence("nonlinear solve did not reach tol " + std::to_string(opts.tol) + " in " +
                                 std::to_string(opts.max_iterations) + " iterations",
                             report.fixed_point_residual);
    report.final_residual = equation_residual(u, model, eps);
    report.ball_violation = std::max(0.0, sup_norm(u) - 1.0);
    return {std::move(u), std::move(report)};
}

SolveResult make_instance(const Cylinder& cyl, double eps, const SpectralBoundaryData& bdata,
                          const VectorFieldSequence& sequence, std::size_t n, const SolveOptions& opts)
{
    auto result = solve_nonlinear(cyl, bdata, sequence.member(n), eps, opts);
    if (result.report.ball_violation > ball_tolerance)
        throw BallViolation("instance leaves the closed unit ball: sup|u| = " +
                            std::to_string(1.0 + result.report.ball_violation));
    result.field.set_ball_constrained(true);
    return result;
}

}  // namespace cyllab
