#include "cyllab/estimates.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cyllab/fourier.hpp"
#include "cyllab/stencil.hpp"

namespace cyllab {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double two_pi = 2.0 * pi;

double decay_weight(double r, double s, double rate)
{
    return std::exp(-rate * (r + s)) + std::exp(-rate * (r - s));
}

double binomial(int n, int k)
{
    double b = 1.0;
    for (int i = 1; i <= k; ++i)
        b = b * double(n - k + i) / double(i);
    return b;
}

// (2 pi i k)^m
cplx t_symbol(int k, int m)
{
    cplx z(1.0, 0.0);
    for (int i = 0; i < m; ++i)
        z *= cplx(0.0, two_pi * k);
    return z;
}

}  // namespace

// Constants -------------------------------------------------------------------

EstimateConstants estimate_constants(const BumpFunction& bump)
{
    EstimateConstants k;
    k.bump_l1 = bump.l1;
    k.bump_dd_l1 = bump.dd_l1;
    return k;
}

nlohmann::json to_json(const EstimateConstants& k)
{
    return {{"c_pc", k.c_pc}, {"delta", k.delta}, {"c", k.c}, {"bump_l1", k.bump_l1},
            {"bump_dd_l1", k.bump_dd_l1}};
}

// Center of mass ----------------------------------------------------------------

Point CenterOfMassCurve::at(std::size_t i) const
{
    return to_real(std::span<const cplx>(q.data() + i * cyl.dim, cyl.dim));
}

Point CenterOfMassCurve::prime_at(std::size_t i) const
{
    return to_real(std::span<const cplx>(q_prime.data() + i * cyl.dim, cyl.dim));
}

CenterOfMassCurve center_of_mass(const SpectralField& u)
{
    const auto& cyl = u.cylinder();
    CenterOfMassCurve out;
    out.cyl = cyl;
    out.q.resize(cyl.s_samples * cyl.dim);
    out.q_prime.resize(cyl.s_samples * cyl.dim);
    for (std::size_t i = 0; i < cyl.s_samples; ++i)
        for (std::size_t c = 0; c < cyl.dim; ++c)
            out.q[i * cyl.dim + c] = u.at(i, 0, c);
    UniformStencil st(1);
    const double h = cyl.spacing();
    for (std::size_t i = 0; i < cyl.s_samples; ++i)
        for (std::size_t c = 0; c < cyl.dim; ++c)
            out.q_prime[i * cyl.dim + c] = st.apply(out.q.data() + c, cyl.dim, cyl.s_samples, i, h);
    return out;
}

std::vector<double> com_residual(const SpectralField& u, const VectorFieldModel& model, double eps)
{
    const auto& cyl = u.cylinder();
    auto com = center_of_mass(u);
    SpectralField vu = apply_field(model, u);
    std::vector<double> res(cyl.s_samples);
    std::vector<cplx> avg(cyl.dim);
    for (std::size_t i = 0; i < cyl.s_samples; ++i) {
        Point q = com.at(i);
        Point vq = model.value(q);
        for (std::size_t c = 0; c < cyl.dim; ++c)
            avg[c] = vu.at(i, 0, c);
        Point lhs = com.prime_at(i) - eps * vq;
        Point rhs = eps * (to_real(avg) - vq);
        res[i] = (lhs - rhs).norm();
    }
    return res;
}

// Gamma -----------------------------------------------------------------------------

double GammaProfile::max_gamma() const
{
    return gamma.empty() ? 0.0 : *std::max_element(gamma.begin(), gamma.end());
}

GammaProfile gamma_profile(const SpectralField& u)
{
    const auto& cyl = u.cylinder();
    const std::size_t S = cyl.s_samples;
    GammaProfile p;
    p.cyl = cyl;
    p.gamma.assign(S, 0.0);
    p.ds_sq.assign(S, 0.0);
    p.dt_sq.assign(S, 0.0);
    SpectralField ds = s_derivative(u, 1);
    for (std::size_t i = 0; i < S; ++i)
        for (int k = cyl.k_min(); k <= cyl.k_max(); ++k) {
            if (k == 0)
                continue;
            for (std::size_t c = 0; c < cyl.dim; ++c) {
                double a = std::norm(u.at(i, k, c));
                p.gamma[i] += 0.5 * a;
                p.dt_sq[i] += two_pi * two_pi * k * k * a;
                p.ds_sq[i] += std::norm(ds.at(i, k, c));
            }
        }
    UniformStencil fine(2, 9), coarse(2, 7);
    const double h = cyl.spacing();
    p.gamma_dd.resize(S);
    p.stencil_budget.resize(S);
    p.rhs.resize(S);
    for (std::size_t i = 0; i < S; ++i) {
        p.gamma_dd[i] = fine.apply(p.gamma.data(), 1, S, i, h);
        p.stencil_budget[i] = std::abs(p.gamma_dd[i] - coarse.apply(p.gamma.data(), 1, S, i, h));
        p.rhs[i] = 0.75 * p.ds_sq[i] + 0.25 * p.dt_sq[i];
    }
    return p;
}

std::vector<double> gamma_by_quadrature(const SpectralField& u)
{
    const auto& cyl = u.cylinder();
    const auto& grid = fourier_grid(cyl.t_modes, cyl.dim, sup_points(cyl));
    const std::size_t M = grid.points();
    std::vector<cplx> vals(M * cyl.dim);
    std::vector<double> g(cyl.s_samples, 0.0);
    for (std::size_t i = 0; i < cyl.s_samples; ++i) {
        grid.to_physical(u.row(i), vals);
        double acc = 0.0;
        for (std::size_t m = 0; m < M; ++m)
            for (std::size_t c = 0; c < cyl.dim; ++c)
                acc += std::norm(vals[m * cyl.dim + c] - u.at(i, 0, c));
        g[i] = 0.5 * acc / double(M);
    }
    return g;
}

Applicability diff_inequality_applicable(const VectorFieldModel& model, double eps, double grad_sup)
{
    const auto& b = model.bounds();
    double b0 = 2.0 * b.sup_dv;
    double b1 = 2.0 * std::sqrt(2.0) * b.sup_d2v * grad_sup;
    Applicability a;
    a.c2_estimate = 2.0 * std::max(b0, b1);
    a.limit = std::min(0.25 / poincare_constant, 0.25);
    a.applicable = std::abs(eps) * a.c2_estimate <= a.limit;
    return a;
}

nlohmann::json to_json(const Applicability& a)
{
    return {{"c2_estimate", a.c2_estimate}, {"limit", a.limit}, {"applicable", a.applicable}};
}

DiffInequalityResult check_diff_inequality(const GammaProfile& p, double slack)
{
    const auto& cyl = p.cyl;
    const double d2 = decay_delta * decay_delta;
    const double floor_tol = slack * p.max_gamma();
    DiffInequalityResult res;
    res.margin = std::numeric_limits<double>::infinity();
    res.adjusted = std::numeric_limits<double>::infinity();
    for (std::size_t i = cyl.interior_first(); i <= cyl.interior_last(); ++i) {
        double m = p.gamma_dd[i] - d2 * p.gamma[i] - p.rhs[i];
        double tol = floor_tol + p.stencil_budget[i];
        if (m < res.margin) {
            res.margin = m;
            res.worst_s = cyl.s(i);
        }
        if (m + tol < res.adjusted) {
            res.adjusted = m + tol;
            res.tolerance_at_worst = tol;
        }
    }
    res.pass = res.adjusted >= 0.0;
    return res;
}

nlohmann::json to_json(const DiffInequalityResult& d)
{
    return {{"margin", d.margin}, {"worst_s", d.worst_s}, {"adjusted_margin", d.adjusted},
            {"tolerance_at_worst", d.tolerance_at_worst}, {"pass", d.pass}};
}

// Decay fits ------------------------------------------------------------------------

nlohmann::json to_json(const DecayFit& f)
{
    return {{"fitted", f.fitted}, {"boundary_scale", f.boundary_scale}, {"ratio", f.ratio},
            {"kappa", f.kappa}, {"pass", f.pass}};
}

DecayFit fit_decay(const Cylinder& cyl, const std::vector<double>& f, double rate, double lo, double hi,
                   double kappa)
{
    const double r = cyl.half_length;
    std::size_t first = cyl.first_at_or_after(lo);
    std::size_t last = cyl.last_at_or_before(hi);
    if (first > last || last >= f.size())
        throw OutOfWindow("decay fit range holds no samples");
    DecayFit fit;
    fit.kappa = kappa;
    auto ratio_at = [&](std::size_t i) { return f[i] / decay_weight(r, cyl.s(i), rate); };
    for (std::size_t i = first; i <= last; ++i)
        fit.fitted = std::max(fit.fitted, ratio_at(i));
    fit.boundary_scale = std::max(ratio_at(first), ratio_at(last));
    if (fit.fitted == 0.0) {
        fit.ratio = 0.0;
        fit.pass = true;
    } else {
        fit.ratio = fit.boundary_scale > 0.0 ? fit.fitted / fit.boundary_scale
                                             : std::numeric_limits<double>::infinity();
        fit.pass = fit.fitted <= kappa * fit.boundary_scale;
    }
    return fit;
}

DecayFit exp_bound_check(const GammaProfile& p, double kappa)
{
    const double r = p.cyl.half_length;
    return fit_decay(p.cyl, p.gamma, decay_delta, -r, r, kappa);
}

std::vector<double> window_energy(const GammaProfile& p, bool derivs_only)
{
    const auto& cyl = p.cyl;
    const std::size_t S = cyl.s_samples;
    const double h = cyl.spacing();
    std::vector<double> dens(S);
    for (std::size_t i = 0; i < S; ++i)
        dens[i] = (derivs_only ? 0.0 : 2.0 * p.gamma[i]) + p.ds_sq[i] + p.dt_sq[i];
    std::vector<double> prefix(S, 0.0);
    for (std::size_t i = 1; i < S; ++i)
        prefix[i] = prefix[i - 1] + 0.5 * h * (dens[i - 1] + dens[i]);
    auto integral_to = [&](double x) {
        double pos = std::clamp((x - cyl.lower()) / h, 0.0, double(S - 1));
        auto j = std::min(std::size_t(pos), S - 2);
        double f = pos - double(j);
        double gx = (1.0 - f) * dens[j] + f * dens[j + 1];
        return prefix[j] + 0.5 * f * h * (dens[j] + gx);
    };
    std::vector<double> w(S, 0.0);
    for (std::size_t i = 0; i < S; ++i) {
        double s = cyl.s(i);
        if (s - 0.5 < cyl.lower() - 1e-12 || s + 0.5 > cyl.upper() + 1e-12)
            continue;
        w[i] = integral_to(s + 0.5) - integral_to(s - 0.5);
    }
    return w;
}

DecayFit window_decay_check(const GammaProfile& p, double kappa)
{
    const double r = p.cyl.half_length;
    return fit_decay(p.cyl, window_energy(p), decay_delta, -r + 1.0, r - 1.0, kappa);
}

std::vector<double> pointwise_profile(const SpectralField& u, int k)
{
    if (k < 0 || k > max_derivative_order)
        throw PreconditionError("pointwise derivative order must be in [0, 4]");
    const auto& cyl = u.cylinder();
    SpectralField w = u;
    for (std::size_t i = 0; i < cyl.s_samples; ++i)
        for (std::size_t c = 0; c < cyl.dim; ++c)
            w.at(i, 0, c) = 0.0;
    std::vector<SpectralField> sd;
    for (int j = 0; j <= k; ++j)
        sd.push_back(s_derivative(w, j));
    const auto& grid = fourier_grid(cyl.t_modes, cyl.dim, sup_points(cyl));
    const std::size_t M = grid.points();
    std::vector<cplx> row(w.row_size()), vals(M * cyl.dim);
    std::vector<double> out(cyl.s_samples), sq(M);
    for (std::size_t i = 0; i < cyl.s_samples; ++i) {
        std::fill(sq.begin(), sq.end(), 0.0);
        for (int j = 0; j <= k; ++j) {
            auto src = sd[j].row(i);
            for (int kk = cyl.k_min(); kk <= cyl.k_max(); ++kk) {
                cplx f = t_symbol(kk, k - j);
                for (std::size_t c = 0; c < cyl.dim; ++c) {
                    std::size_t idx = cyl.mode_index(kk) * cyl.dim + c;
                    row[idx] = f * src[idx];
                }
            }
            grid.to_physical(row, vals);
            double b = binomial(k, j);
            for (std::size_t m = 0; m < M; ++m)
                for (std::size_t c = 0; c < cyl.dim; ++c)
                    sq[m] += b * std::norm(vals[m * cyl.dim + c]);
        }
        out[i] = std::sqrt(*std::max_element(sq.begin(), sq.end()));
    }
    return out;
}

DecayFit pointwise_decay_check(const SpectralField& u, int k, double kappa)
{
    const auto& cyl = u.cylinder();
    const double r = cyl.half_length;
    return fit_decay(cyl, pointwise_profile(u, k), decay_c, -r + 1.0, r - 1.0, kappa);
}

// Bump function -------------------------------------------------------------------------

namespace {

struct RampShape {
    double a;  // plateau ends
    double b;  // support ends
    double L() const { return b - a; }

    double value(double x) const
    {
        x = std::abs(x);
        if (x <= a)
            return 1.0;
        if (x >= b)
            return 0.0;
        return 0.5 + 0.5 * std::cos(pi * (x - a) / L());
    }
    double second(double x) const
    {
        x = std::abs(x);
        if (x <= a || x >= b)
            return 0.0;
        double w = pi / L();
        return -0.5 * w * w * std::cos(pi * (x - a) / L());
    }
};

double mollifier_raw(double y)
{
    if (std::abs(y) >= 1.0)
        return 0.0;
    return std::exp(-1.0 / (1.0 - y * y));
}

double mollifier_mass()
{
    using boost::math::quadrature::gauss_kronrod;
    static const double z = gauss_kronrod<double, 31>::integrate(mollifier_raw, -1.0, 1.0, 15, 1e-14);
    return z;
}

// int phi_eta(y) g(x - y) dy, with the mollifier support split at the kinks
// of g. Windows that see only a flat part of g return it directly.
template <class G>
double mollify(double x, double eta, const RampShape& shape, G g)
{
    using boost::math::quadrature::gauss;
    const double ax = std::abs(x);
    if (ax + eta <= shape.a || ax - eta >= shape.b)
        return g(x);
    std::vector<double> cuts{-eta, eta};
    for (double k : {shape.a, -shape.a, shape.b, -shape.b}) {
        double y = x - k;
        if (y > -eta && y < eta)
            cuts.push_back(y);
    }
    std::sort(cuts.begin(), cuts.end());
    const double z = mollifier_mass() * eta;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (cuts[i + 1] - cuts[i] <= 0.0)
            continue;
        auto f = [&](double y) { return mollifier_raw(y / eta) * g(x - y); };
        total += gauss<double, 30>::integrate(f, cuts[i], cuts[i + 1]);
    }
    return total / z;
}

RampShape shape_for(double eta) { return {0.5 + eta, 1.0 - eta}; }

}  // namespace

double BumpFunction::eval(double y) const
{
    auto shape = shape_for(eta);
    return mollify(y, eta, shape, [&](double x) { return shape.value(x); });
}

double BumpFunction::eval_dd(double y) const
{
    auto shape = shape_for(eta);
    return mollify(y, eta, shape, [&](double x) { return shape.second(x); });
}

BumpFunction build_bump(double eta, std::size_t samples)
{
    if (!(eta > 0.0) || eta >= 0.125)
        throw PreconditionError("bump mollifier half-width must be in (0, 0.125)");
    if (samples < 3)
        throw PreconditionError("bump needs at least 3 samples");
    BumpFunction b;
    b.eta = eta;
    b.x.resize(samples);
    b.rho.resize(samples);
    b.rho_dd.resize(samples);
    const double dx = 2.0 / double(samples - 1);
    for (std::size_t i = 0; i < samples; ++i) {
        b.x[i] = -1.0 + double(i) * dx;
        b.rho[i] = b.eval(b.x[i]);
        b.rho_dd[i] = b.eval_dd(b.x[i]);
    }
    for (std::size_t i = 0; i + 1 < samples; ++i) {
        b.l1 += 0.5 * dx * (std::abs(b.rho[i]) + std::abs(b.rho[i + 1]));
        b.dd_l1 += 0.5 * dx * (std::abs(b.rho_dd[i]) + std::abs(b.rho_dd[i + 1]));
    }
    return b;
}

// Convolution ---------------------------------------------------------------------------

nlohmann::json to_json(const ConvolutionResult& c)
{
    return {{"margin", c.margin},
            {"window_constant", c.window_constant},
            {"window_slack", c.window_slack},
            {"inequality_pass", c.inequality_pass},
            {"window_pass", c.window_pass},
            {"pass", c.pass}};
}

ConvolutionResult convolution_window_check(const GammaProfile& p, const BumpFunction& bump, double c_fit,
                                           double slack)
{
    constexpr std::size_t sub = 16;
    constexpr std::size_t max_centers = 400;
    const auto& cyl = p.cyl;
    const double r = cyl.half_length;
    const double h = cyl.spacing();
    const double dy = h / double(sub);
    const auto Q = long(std::floor(1.0 / dy));

    // Quadrature nodes y_q = q dy on [-1, 1] with Lagrange weights for the
    // fractional offset q mod sub.
    std::vector<double> rho(2 * Q + 1), rho_dd(2 * Q + 1);
    for (long q = -Q; q <= Q; ++q) {
        rho[q + Q] = bump.eval(double(q) * dy);
        rho_dd[q + Q] = bump.eval_dd(double(q) * dy);
    }
    std::vector<std::vector<double>> frac_weights(sub);
    std::vector<double> nodes(8);
    for (std::size_t m = 0; m < 8; ++m)
        nodes[m] = double(m) - 3.0;
    for (std::size_t f = 0; f < sub; ++f)
        frac_weights[f] = lagrange_weights(double(f) / double(sub), nodes);

    std::vector<double> tol_density(cyl.s_samples);
    const double floor_tol = slack * p.max_gamma();
    for (std::size_t i = 0; i < cyl.s_samples; ++i)
        tol_density[i] = floor_tol + p.stencil_budget[i];

    std::size_t first = cyl.first_at_or_after(-r + 1.0);
    std::size_t last = cyl.last_at_or_before(r - 1.0);
    ConvolutionResult res;
    res.margin = std::numeric_limits<double>::infinity();
    res.window_constant = 6.0 * (40.0 + 2.0 * decay_delta * decay_delta) * c_fit;
    res.window_slack = std::numeric_limits<double>::infinity();
    if (first > last) {
        res.pass = res.inequality_pass = res.window_pass = true;
        res.margin = res.window_slack = 0.0;
        return res;
    }
    std::size_t stride = std::max<std::size_t>(1, (last - first + 1) / max_centers);
    for (std::size_t i = first; i <= last; i += stride) {
        double conv_dd = 0.0, conv_g = 0.0, conv_rhs = 0.0, conv_tol = 0.0;
        for (long q = -Q; q <= Q; ++q) {
            double w0 = rho[q + Q], w2 = rho_dd[q + Q];
            if (w0 == 0.0 && w2 == 0.0)
                continue;
            // sample position i - q / sub = cell + frac
            long num = long(i) * long(sub) - q;
            long cell = num >= 0 ? num / long(sub) : -((-num + long(sub) - 1) / long(sub));
            auto frac = std::size_t(num - cell * long(sub));
            const auto& lw = frac_weights[frac];
            double g = 0.0, rh = 0.0, tl = 0.0;
            for (std::size_t m = 0; m < 8; ++m) {
                auto idx = std::size_t(cell - 3 + long(m));
                g += lw[m] * p.gamma[idx];
                rh += lw[m] * p.rhs[idx];
                tl += lw[m] * tol_density[idx];
            }
            conv_dd += w2 * g;
            conv_g += w0 * g;
            conv_rhs += w0 * rh;
            conv_tol += w0 * tl;
        }
        conv_dd *= dy;
        conv_g *= dy;
        conv_rhs *= dy;
        conv_tol *= dy;
        double lhs = conv_dd - decay_delta * decay_delta * conv_g;
        res.margin = std::min(res.margin, lhs - conv_rhs + conv_tol);
    }
    res.inequality_pass = res.margin >= 0.0;

    auto w0 = window_energy(p);
    auto wd = window_energy(p, true);
    for (std::size_t i = first; i <= last; ++i) {
        double e = decay_weight(r, cyl.s(i), decay_delta);
        double bound0 = res.window_constant / 3.0 * e;
        double boundd = 2.0 * res.window_constant / 3.0 * e;
        double m0 = w0[i] - wd[i];
        for (auto [bound, meas] : {std::pair{bound0, m0}, std::pair{boundd, wd[i]}}) {
            double rel = bound > 0.0 ? (bound - meas) / bound : (meas > 0.0 ? -1.0 : 0.0);
            res.window_slack = std::min(res.window_slack, rel);
        }
    }
    res.window_pass = res.window_slack >= 0.0;
    res.pass = res.inequality_pass && res.window_pass;
    return res;
}

// Elliptic probe ---------------------------------------------------------------------------

double elliptic_constant_probe(const std::vector<SpectralField>& corpus, int k, double delta)
{
    if (corpus.empty())
        throw PreconditionError("elliptic probe needs a nonempty corpus");
    if (k < 0 || k + 1 > max_derivative_order)
        throw PreconditionError("elliptic probe order out of range");
    if (!(delta > 0.0))
        throw PreconditionError("elliptic probe window must be positive");
    double best = 0.0;
    for (const auto& u : corpus) {
        const auto& cyl = u.cylinder();
        SpectralField du = apply_delbar(u);
        std::vector<std::vector<double>> dens_u, dens_d;
        for (int j = 0; j <= k + 1; ++j)
            dens_u.push_back(derivative_density(u, j));
        for (int j = 0; j <= k; ++j)
            dens_d.push_back(derivative_density(du, j));
        auto norm = [&](const std::vector<std::vector<double>>& dens, int order, double lo, double hi) {
            double sq = 0.0;
            for (int j = 0; j <= order; ++j)
                sq += integrate_samples(dens[j], cyl, lo, hi);
            return std::sqrt(std::max(sq, 0.0));
        };
        const double lo = cyl.lower() + 2.0 * delta;
        const double hi = cyl.upper() - 2.0 * delta;
        if (lo > hi)
            throw OutOfWindow("elliptic probe windows do not fit the cylinder");
        auto count = std::size_t(std::floor((hi - lo) / delta + 1e-9)) + 1;
        for (std::size_t m = 0; m < count; ++m) {
            double s = lo + double(m) * delta;
            double lhs = norm(dens_u, k + 1, s - delta, s + delta);
            double rhs = norm(dens_d, k, s - 2 * delta, s + 2 * delta) +
                         norm(dens_u, k, s - 2 * delta, s + 2 * delta);
            if (rhs > 0.0)
                best = std::max(best, lhs / rhs);
        }
    }
    return best;
}

std::vector<SpectralField> random_corpus(const Cylinder& cyl, std::size_t count, std::uint64_t seed)
{
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> phase(0.0, two_pi);
    constexpr int max_k = 4;
    constexpr int profiles = 4;
    std::vector<SpectralField> out;
    for (std::size_t n = 0; n < count; ++n) {
        SpectralField u(cyl);
        for (int k = std::max(cyl.k_min(), -max_k); k <= std::min(cyl.k_max(), max_k); ++k)
            for (std::size_t c = 0; c < cyl.dim; ++c)
                for (int m = 0; m < profiles; ++m) {
                    double scale = 1.0 / ((1.0 + k * k) * (1.0 + m));
                    cplx z(normal(gen) * scale, normal(gen) * scale);
                    double ph = phase(gen);
                    for (std::size_t i = 0; i < cyl.s_samples; ++i)
                        u.at(i, k, c) += z * std::cos(double(m) * cyl.s(i) + ph);
                }
        out.push_back(std::move(u));
    }
    return out;
}

}  // namespace cyllab
