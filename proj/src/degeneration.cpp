#include "cyllab/degeneration.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "cyllab/calculus.hpp"

namespace cyllab {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

std::vector<cplx> without_mean(std::vector<cplx> row, std::size_t dim, int k_min)
{
    std::size_t j0 = std::size_t(-k_min) * dim;
    for (std::size_t c = 0; c < dim; ++c)
        row[j0 + c] = 0.0;
    return row;
}

Point mean_of(const std::vector<cplx>& row, const Cylinder& cyl)
{
    std::size_t j0 = cyl.mode_index(0) * cyl.dim;
    return to_real(std::span<const cplx>(row.data() + j0, cyl.dim));
}

nlohmann::json point_json(const Point& p) { return std::vector<double>(p.begin(), p.end()); }

template <class T, class F>
bool monotone(const std::vector<T>& v, F ok)
{
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!ok(v[i - 1], v[i]))
            return false;
    return true;
}

}  // namespace

// Schedule ------------------------------------------------------------------------

FamilySchedule FamilySchedule::default_rule(double ell, const std::vector<double>& r_list)
{
    FamilySchedule s;
    s.ell = ell;
    for (double r : r_list)
        s.entries.push_back({r, ell > 0.0 ? ell / r : std::pow(r, -1.5)});
    return s;
}

std::vector<double> FamilySchedule::doubling(std::size_t count, double r0)
{
    std::vector<double> r;
    for (std::size_t i = 0; i < count; ++i)
        r.push_back(r0 * std::pow(2.0, double(i)));
    return r;
}

void FamilySchedule::validate() const
{
    if (entries.empty())
        throw ConfigError("family schedule has no entries");
    if (!(ell >= 0.0) || !std::isfinite(ell))
        throw ConfigError("family ell must be a nonnegative number");
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        if (!(e.r > 0.0))
            throw ConfigError("family entry " + std::to_string(i + 1) + ": r must be positive");
        if (!(e.eps >= 0.0) || (entries.size() > 1 && e.eps == 0.0))
            throw ConfigError("family entry " + std::to_string(i + 1) + ": eps must be positive");
        if (i > 0) {
            const auto& p = entries[i - 1];
            if (!(e.eps < p.eps))
                throw ConfigError("family eps_n must be strictly decreasing");
            if (std::abs(e.eps * e.r - ell) > std::abs(p.eps * p.r - ell) + 1e-12)
                throw ConfigError("family eps_n r_n must approach ell monotonically");
        }
    }
}

nlohmann::json to_json(const FamilySchedule& s)
{
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : s.entries)
        entries.push_back({{"r", e.r}, {"eps", e.eps}});
    return {{"ell", s.ell}, {"entries", entries}};
}

FamilySchedule schedule_from_json(const nlohmann::json& j)
{
    try {
        FamilySchedule s;
        s.ell = j.value("ell", 0.0);
        if (j.contains("entries")) {
            for (const auto& e : j.at("entries"))
                s.entries.push_back({e.at("r").get<double>(), e.at("eps").get<double>()});
        } else {
            auto r = j.contains("r_list") ? j.at("r_list").get<std::vector<double>>()
                                          : FamilySchedule::doubling(j.value("count", std::size_t(4)));
            s = FamilySchedule::default_rule(s.ell, r);
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("family schedule: ") + e.what());
    }
}

// Neck selection ----------------------------------------------------------------------

int select_rho(double eps, double r, const std::function<double(int)>& d)
{
    if (!(eps >= 0.0) || !(r > 0.0))
        throw PreconditionError("select_rho needs eps >= 0 and r > 0");
    int best = 0;
    const int top = int(std::ceil(r)) - 1;
    for (int k = 1; k <= top; ++k) {
        bool small = eps * k <= std::sqrt(eps) * (1.0 + 1e-12);
        bool close = d(k) <= 1.0 / double(k);
        if (small && close && double(k) < r)
            best = k;
    }
    if (best < 1)
        throw Inapplicable("no integer k satisfies eps k <= sqrt(eps), d(k) <= 1/k, k < r");
    return best;
}

std::vector<cplx> end_piece_row(const SpectralField& u, EndSide side, double s)
{
    const double r = u.cylinder().half_length;
    return interpolate_row(u, side == EndSide::minus ? s - r : s + r);
}

EndPieces end_pieces(const SpectralField& u, double rho)
{
    const auto& cyl = u.cylinder();
    const double r = cyl.half_length;
    if (!(rho < r))
        throw PreconditionError("end pieces need rho < r");
    EndPieces e;
    for (std::size_t i = cyl.first_at_or_after(-r); i <= cyl.last_at_or_before(-r + rho); ++i) {
        e.s_minus.push_back(cyl.s(i) + r);
        auto row = u.row(i);
        e.minus.emplace_back(row.begin(), row.end());
    }
    for (std::size_t i = cyl.first_at_or_after(r - rho); i <= cyl.last_at_or_before(r); ++i) {
        e.s_plus.push_back(cyl.s(i) - r);
        auto row = u.row(i);
        e.plus.emplace_back(row.begin(), row.end());
    }
    return e;
}

std::vector<double> cauchy_profile(const SpectralField& a, const SpectralField& b, int kmax)
{
    const auto& ca = a.cylinder();
    const auto& cb = b.cylinder();
    if (ca.t_modes != cb.t_modes || ca.dim != cb.dim)
        throw InvalidGrid("Cauchy distances need matching bands");
    if (kmax < 0 || double(kmax) > std::min(ca.half_length, cb.half_length) + 1e-9)
        throw OutOfWindow("Cauchy window exceeds the shorter cylinder");
    std::vector<double> d(std::size_t(kmax) + 1, 0.0);
    const double ra = ca.half_length;
    auto visit = [&](std::size_t i, double s_local, EndSide side) {
        auto other = end_piece_row(b, side, s_local);
        auto row = a.row(i);
        for (std::size_t j = 0; j < other.size(); ++j)
            other[j] = row[j] - other[j];
        double dist = circle_sup(other, ca.t_modes, ca.dim);
        auto k = std::size_t(std::ceil(std::abs(s_local) - 1e-9));
        if (k < d.size())
            d[k] = std::max(d[k], dist);
    };
    for (std::size_t i = ca.first_at_or_after(-ra); i <= ca.last_at_or_before(-ra + kmax); ++i)
        visit(i, ca.s(i) + ra, EndSide::minus);
    for (std::size_t i = ca.first_at_or_after(ra - kmax); i <= ca.last_at_or_before(ra); ++i)
        visit(i, ca.s(i) - ra, EndSide::plus);
    for (std::size_t k = 1; k < d.size(); ++k)
        d[k] = std::max(d[k], d[k - 1]);
    return d;
}

// End limits and neck -------------------------------------------------------------------

nlohmann::json to_json(const EndLimits& e)
{
    return {{"x_minus", point_json(e.x_minus)},
            {"x_plus", point_json(e.x_plus)},
            {"osc_minus", e.osc_minus},
            {"osc_plus", e.osc_plus}};
}

EndLimits estimate_endpoints(const SpectralField& u, int rho)
{
    const auto& cyl = u.cylinder();
    const double a = cyl.half_length - double(rho);
    if (!(a >= 0.0))
        throw PreconditionError("rho exceeds r");
    EndLimits e;
    auto lo = interpolate_row(u, -a);
    auto hi = interpolate_row(u, a);
    e.x_minus = mean_of(lo, cyl);
    e.x_plus = mean_of(hi, cyl);
    e.osc_minus = circle_sup(without_mean(lo, cyl.dim, cyl.k_min()), cyl.t_modes, cyl.dim);
    e.osc_plus = circle_sup(without_mean(hi, cyl.dim, cyl.k_min()), cyl.t_modes, cyl.dim);
    return e;
}

double neck_oscillation(const SpectralField& u, int rho)
{
    const auto& cyl = u.cylinder();
    const double a = cyl.half_length - double(rho);
    if (!(a >= 0.0))
        throw PreconditionError("rho exceeds r");
    double best = 0.0;
    auto consider = [&](std::vector<cplx> row) {
        best = std::max(best, circle_sup(without_mean(std::move(row), cyl.dim, cyl.k_min()),
                                         cyl.t_modes, cyl.dim));
    };
    consider(interpolate_row(u, -a));
    consider(interpolate_row(u, a));
    for (std::size_t i = cyl.first_at_or_after(-a); i <= cyl.last_at_or_before(a) && i < cyl.s_samples; ++i) {
        auto row = u.row(i);
        consider({row.begin(), row.end()});
    }
    return best;
}

// Rescaled trace --------------------------------------------------------------------------

Point RescaledTrace::at_zero() const
{
    auto it = std::lower_bound(sigma.begin(), sigma.end(), 0.0);
    if (it == sigma.end() || *it != 0.0)
        throw PreconditionError("trace has no sample at sigma = 0");
    return p[std::size_t(it - sigma.begin())];
}

RescaledTrace rescale_trace(const SpectralField& u, double eps, int rho, const VectorFieldModel& model_n)
{
    if (!(eps > 0.0))
        throw PreconditionError("rescaling needs eps > 0");
    const auto& cyl = u.cylinder();
    const double a = cyl.half_length - double(rho);
    if (!(a > 0.0))
        throw PreconditionError("neck is empty");
    SpectralField du = s_derivative(u, 1);
    RescaledTrace tr;
    tr.eps = eps;
    tr.half_length = eps * a;
    auto push = [&](double s, const std::vector<cplx>& row, const std::vector<cplx>& drow) {
        tr.sigma.push_back(eps * s);
        tr.p.push_back(mean_of(row, cyl));
        tr.p_prime.push_back(mean_of(drow, cyl) / eps);
    };
    // Grid samples inside the neck plus the exact points -a, 0, a.
    const double tol = 1e-9 * cyl.spacing();
    std::vector<double> nodes{-a, 0.0, a};
    std::size_t first = cyl.first_at_or_after(-a), last = cyl.last_at_or_before(a);
    for (std::size_t i = first; i <= last && i < cyl.s_samples; ++i) {
        double s = cyl.s(i);
        if (std::abs(s + a) > tol && std::abs(s) > tol && std::abs(s - a) > tol)
            nodes.push_back(s);
    }
    std::sort(nodes.begin(), nodes.end());
    for (double s : nodes)
        push(s, interpolate_row(u, s), interpolate_row(du, s));
    for (std::size_t i = 0; i < tr.sigma.size(); ++i) {
        double res = (tr.p_prime[i] - model_n.value(tr.p[i])).norm();
        tr.residual.push_back(res);
        tr.sup_residual = std::max(tr.sup_residual, res);
    }
    return tr;
}

// Flow comparison ------------------------------------------------------------------------------

nlohmann::json to_json(const FlowComparison& f)
{
    return {{"performed", f.performed},
            {"sup_error", f.sup_error},
            {"endpoint_mismatch", f.endpoint_mismatch},
            {"oracle_endpoint_mismatch", f.oracle_endpoint_mismatch},
            {"endpoint_gap", f.endpoint_gap},
            {"defect", f.defect},
            {"gronwall_budget", f.gronwall_budget},
            {"within_budget", f.within_budget},
            {"escaped", f.escaped}};
}

FlowComparison compare_flowline(const RescaledTrace& trace, const EndLimits& limits,
                                const VectorFieldModel& limit, double ell, double max_step)
{
    FlowComparison f;
    f.endpoint_gap = (limits.x_plus - limits.x_minus).norm();
    if (ell <= 0.0 || trace.sigma.empty())
        return f;
    f.performed = true;
    const std::size_t n = trace.sigma.size();
    f.endpoint_mismatch = std::max((trace.p.front() - limits.x_minus).norm(),
                                   (trace.p.back() - limits.x_plus).norm());
    auto zero = std::size_t(std::lower_bound(trace.sigma.begin(), trace.sigma.end(), 0.0) - trace.sigma.begin());
    Point start = trace.at_zero();
    f.oracle.assign(n, start);
    std::vector<double> fwd(trace.sigma.begin() + long(zero), trace.sigma.end());
    std::vector<double> bwd(trace.sigma.begin(), trace.sigma.begin() + long(zero) + 1);
    std::reverse(bwd.begin(), bwd.end());
    auto a = flow_through(limit, start, fwd, max_step);
    auto b = flow_through(limit, start, bwd, max_step);
    for (std::size_t i = 0; i < a.samples.size(); ++i)
        f.oracle[zero + i] = a.samples[i];
    for (std::size_t i = 0; i < b.samples.size(); ++i)
        f.oracle[zero - i] = b.samples[i];
    f.escaped = a.escaped || b.escaped;
    for (std::size_t i = 0; i < n; ++i) {
        f.sup_error = std::max(f.sup_error, (trace.p[i] - f.oracle[i]).norm());
        f.defect = std::max(f.defect, (trace.p_prime[i] - limit.value(trace.p[i])).norm());
    }
    f.oracle_endpoint_mismatch = std::max((f.oracle.front() - limits.x_minus).norm(),
                                          (f.oracle.back() - limits.x_plus).norm());
    const double len = 2.0 * trace.half_length;
    f.gronwall_budget = f.defect * len * std::exp(limit.reported_c1_bound() * len);
    f.within_budget = f.sup_error <= f.gronwall_budget * (1.0 + 1e-9) + 1e-9;
    return f;
}

// Estimates per entry -----------------------------------------------------------------------------

nlohmann::json to_json(const EntryEstimates& e)
{
    nlohmann::json j{{"applicability", to_json(e.applicability)},
                     {"exp_bound", to_json(e.exp_bound)},
                     {"window", to_json(e.window)},
                     {"pointwise0", to_json(e.pointwise0)},
                     {"pointwise1", to_json(e.pointwise1)},
                     {"com_residual", e.com_residual},
                     {"pass", e.pass}};
    j["diff_inequality"] = e.diff_inequality ? to_json(*e.diff_inequality) : nlohmann::json(nullptr);
    j["convolution"] = e.convolution ? to_json(*e.convolution) : nlohmann::json(nullptr);
    return j;
}

EntryEstimates evaluate_estimates(const SpectralField& u, const VectorFieldModel& model, double eps,
                                  const BumpFunction* bump, double kappa)
{
    const auto& cyl = u.cylinder();
    const double r = cyl.half_length;
    if (!(r > 1.0))
        throw PreconditionError("estimate checks need r > 1");
    EntryEstimates e;
    double grad = sup_derivative_norm(u, 1, Window{0.0, r});
    e.applicability = diff_inequality_applicable(model, eps, grad);
    auto gp = gamma_profile(u);
    if (e.applicability.applicable)
        e.diff_inequality = check_diff_inequality(gp);
    e.exp_bound = exp_bound_check(gp, kappa);
    e.window = window_decay_check(gp, kappa);
    e.pointwise0 = pointwise_decay_check(u, 0, kappa);
    e.pointwise1 = pointwise_decay_check(u, 1, kappa);
    if (bump && e.diff_inequality && e.diff_inequality->pass)
        e.convolution = convolution_window_check(gp, *bump, e.exp_bound.fitted);
    auto com = com_residual(u, model, eps);
    for (std::size_t i = cyl.interior_first(); i <= cyl.interior_last(); ++i)
        e.com_residual = std::max(e.com_residual, com[i]);
    e.pass = e.exp_bound.pass && e.window.pass && e.pointwise0.pass && e.pointwise1.pass &&
             (!e.diff_inequality || e.diff_inequality->pass) && (!e.convolution || e.convolution->pass);
    return e;
}

// Family runs --------------------------------------------------------------------------------------

nlohmann::json to_json(const DegenerationReport& r)
{
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : r.entries) {
        nlohmann::json j{{"n", e.index},
                         {"r", e.entry.r},
                         {"eps", e.entry.eps},
                         {"s_samples", e.s_samples},
                         {"ok", e.ok}};
        if (!e.reason.empty())
            j["reason"] = e.reason;
        j["solve"] = to_json(e.solve);
        if (e.ok) {
            j["rho"] = e.neck.rho;
            j["eps_rho"] = e.entry.eps * e.neck.rho;
            j["sqrt_eps"] = std::sqrt(e.entry.eps);
            j["cauchy_at_rho"] = e.cauchy_at_rho;
            j["cauchy_next"] = e.cauchy_next ? nlohmann::json(*e.cauchy_next) : nlohmann::json(nullptr);
            j["ends"] = to_json(e.ends);
            j["neck_sup"] = e.neck_sup;
            j["rescaled_half_length"] = e.trace.half_length;
            j["domain_length_error"] = e.domain_length_error;
            j["trace_sup_residual"] = e.trace.sup_residual;
            j["flow"] = to_json(e.flow);
            j["estimates"] = e.estimates ? to_json(*e.estimates) : nlohmann::json(nullptr);
        }
        entries.push_back(std::move(j));
    }
    const auto& s = r.summary;
    nlohmann::json summary{{"ok_entries", s.ok_entries},
                           {"neck_sup_strictly_decreasing", s.neck_sup_strictly_decreasing},
                           {"flow_error_strictly_decreasing", s.flow_error_strictly_decreasing},
                           {"endpoint_gap_decreasing", s.endpoint_gap_decreasing},
                           {"oscillation_strictly_decreasing", s.oscillation_strictly_decreasing},
                           {"cauchy_next_decreasing", s.cauchy_next_decreasing},
                           {"rho_nondecreasing", s.rho_nondecreasing},
                           {"eps_rho_condition", s.eps_rho_condition},
                           {"estimates_pass", s.estimates_pass},
                           {"final_flow_error", s.final_flow_error},
                           {"final_endpoint_mismatch", s.final_endpoint_mismatch},
                           {"final_endpoint_gap", s.final_endpoint_gap},
                           {"non_monotone", s.non_monotone}};
    return {{"schedule", to_json(r.schedule)},
            {"boundary_scale", r.boundary_scale},
            {"entries", entries},
            {"summary", summary}};
}

namespace {

std::size_t field_dim(const FamilyConfig& c)
{
    std::size_t d = c.bdata.dim();
    if (d == 0)
        d = c.sequence.limit().real_dim() / 2;
    if (d == 0)
        throw ConfigError("cannot infer the target dimension");
    return d;
}

FamilySummary summarize(const DegenerationReport& rep, double ell)
{
    FamilySummary s;
    std::vector<const EntryReport*> ok;
    for (const auto& e : rep.entries)
        if (e.ok)
            ok.push_back(&e);
    s.ok_entries = ok.size();
    std::vector<double> neck, flow, gap, osc, rho;
    std::vector<double> cnext;
    s.eps_rho_condition = true;
    s.estimates_pass = true;
    for (const auto* e : ok) {
        neck.push_back(e->neck_sup);
        flow.push_back(e->flow.sup_error);
        gap.push_back(e->flow.endpoint_gap);
        osc.push_back(std::max(e->ends.osc_minus, e->ends.osc_plus));
        rho.push_back(e->neck.rho);
        if (e->cauchy_next)
            cnext.push_back(*e->cauchy_next);
        s.eps_rho_condition = s.eps_rho_condition &&
                              e->entry.eps * e->neck.rho <= std::sqrt(e->entry.eps) * (1.0 + 1e-12);
        if (e->estimates)
            s.estimates_pass = s.estimates_pass && e->estimates->pass;
    }
    auto strict = [](double a, double b) { return b < a; };
    auto weak = [](double a, double b) { return b <= a; };
    s.neck_sup_strictly_decreasing = monotone(neck, strict);
    s.flow_error_strictly_decreasing = ell > 0.0 && monotone(flow, strict);
    s.endpoint_gap_decreasing = monotone(gap, weak);
    s.oscillation_strictly_decreasing = monotone(osc, strict);
    s.cauchy_next_decreasing = monotone(cnext, weak);
    s.rho_nondecreasing = monotone(rho, [](double a, double b) { return b >= a; });
    if (!s.neck_sup_strictly_decreasing)
        s.non_monotone.push_back("neck_sup");
    if (ell > 0.0 && !s.flow_error_strictly_decreasing)
        s.non_monotone.push_back("flow_error");
    // With ell > 0 the gap tends to the flow-line displacement, not to 0.
    if (ell == 0.0 && !s.endpoint_gap_decreasing)
        s.non_monotone.push_back("endpoint_gap");
    if (!s.oscillation_strictly_decreasing)
        s.non_monotone.push_back("oscillation");
    if (!s.cauchy_next_decreasing)
        s.non_monotone.push_back("cauchy_next");
    if (!s.rho_nondecreasing)
        s.non_monotone.push_back("rho");
    if (!ok.empty()) {
        s.final_flow_error = ok.back()->flow.sup_error;
        s.final_endpoint_mismatch = ok.back()->flow.endpoint_mismatch;
        s.final_endpoint_gap = ok.back()->flow.endpoint_gap;
    }
    return s;
}

}  // namespace

DegenerationReport run_family(const FamilyConfig& config)
{
    config.schedule.validate();
    const std::size_t dim = field_dim(config);
    if (config.sequence.limit().real_dim() != 2 * dim)
        throw ConfigError("vector field dimension does not match the boundary data");
    const auto& entries = config.schedule.entries;
    const std::size_t N = entries.size();

    DegenerationReport rep;
    rep.schedule = config.schedule;
    std::vector<Cylinder> cyls;
    for (const auto& e : entries)
        cyls.push_back(config.grid.cylinder_for(e.r, dim));

    // Scale the boundary data once on the longest member, then freeze it.
    SpectralBoundaryData bdata = config.bdata;
    if (config.auto_scale) {
        std::size_t big = 0;
        for (std::size_t i = 1; i < N; ++i)
            if (entries[i].r > entries[big].r)
                big = i;
        for (int attempt = 0; attempt < 8; ++attempt) {
            auto res = solve_nonlinear(cyls[big], bdata, config.sequence.member(big + 1), entries[big].eps,
                                       config.solve);
            double sup = sup_norm(res.field);
            if (sup <= 1.0)
                break;
            double f = 0.99 / sup;
            bdata = bdata.scaled(f);
            rep.boundary_scale *= f;
        }
    }

    // Solve the members in parallel.
    std::vector<std::optional<SolveResult>> solved(N);
    std::vector<std::string> reasons(N);
    std::vector<SolveReport> reports(N);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= N)
                return;
            try {
                solved[i] = make_instance(cyls[i], entries[i].eps, bdata, config.sequence, i + 1, config.solve);
                reports[i] = solved[i]->report;
            } catch (const NonConvergence& e) {
                reasons[i] = std::string("non-convergence: ") + e.what();
            } catch (const Error& e) {
                reasons[i] = e.what();
            }
        }
    };
    std::size_t workers = std::clamp<std::size_t>(config.threads, 1, N);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w + 1 < workers; ++w)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();

    std::optional<std::size_t> finest;
    for (std::size_t i = 0; i < N; ++i)
        if (solved[i] && (!finest || entries[i].r > entries[*finest].r))
            finest = i;

    std::optional<BumpFunction> bump;
    if (config.estimates)
        bump = build_bump();

    for (std::size_t i = 0; i < N; ++i) {
        EntryReport er;
        er.index = i + 1;
        er.entry = entries[i];
        er.s_samples = cyls[i].s_samples;
        er.solve = reports[i];
        er.reason = reasons[i];
        if (!solved[i]) {
            rep.entries.push_back(std::move(er));
            continue;
        }
        const SpectralField& u = solved[i]->field;
        const auto model_n = config.sequence.member(i + 1);
        try {
            const SpectralField& ref = solved[*finest]->field;
            int kmax = int(std::floor(std::min(entries[i].r, entries[*finest].r) + 1e-9));
            auto prof = cauchy_profile(u, ref, kmax);
            auto d = [&](int k) { return k < int(prof.size()) ? prof[std::size_t(k)] : inf; };
            er.neck = {entries[i].r, select_rho(entries[i].eps, entries[i].r, d)};
            er.cauchy_at_rho = d(er.neck.rho);
            for (std::size_t j = i + 1; j < N; ++j) {
                if (!solved[j])
                    continue;
                if (std::min(entries[i].r, entries[j].r) >= 3.0)
                    er.cauchy_next = cauchy_profile(u, solved[j]->field, 3)[3];
                break;
            }
            er.ends = estimate_endpoints(u, er.neck.rho);
            er.neck_sup = neck_oscillation(u, er.neck.rho);
            if (entries[i].eps > 0.0) {
                er.trace = rescale_trace(u, entries[i].eps, er.neck.rho, model_n);
                er.domain_length_error = std::abs(2.0 * er.trace.half_length - 2.0 * config.schedule.ell);
            }
            er.flow = compare_flowline(er.trace, er.ends, config.sequence.limit(), config.schedule.ell,
                                       config.flow_max_step);
            if (config.estimates)
                er.estimates = evaluate_estimates(u, model_n, entries[i].eps, bump ? &*bump : nullptr,
                                                  config.kappa);
            er.ok = true;
        } catch (const Error& e) {
            er.reason = e.what();
        }
        rep.entries.push_back(std::move(er));
    }
    rep.summary = summarize(rep, config.schedule.ell);
    return rep;
}

void write_entry_csv(const EntryReport& e, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    const auto& tr = e.trace;
    std::size_t d = tr.p.empty() ? 0 : std::size_t(tr.p.front().size());
    out << "sigma";
    for (std::size_t c = 0; c < d; ++c)
        out << ",p_" << c;
    for (std::size_t c = 0; c < d; ++c)
        out << ",oracle_" << c;
    out << ",diff\n";
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    for (std::size_t i = 0; i < tr.sigma.size(); ++i) {
        put(tr.sigma[i]);
        for (std::size_t c = 0; c < d; ++c) {
            out << ',';
            put(tr.p[i][long(c)]);
        }
        bool have = i < e.flow.oracle.size();
        for (std::size_t c = 0; c < d; ++c) {
            out << ',';
            put(have ? e.flow.oracle[i][long(c)] : tr.p[i][long(c)]);
        }
        out << ',';
        put(have ? (tr.p[i] - e.flow.oracle[i]).norm() : 0.0);
        out << '\n';
    }
    if (!out)
        throw IoError("failed writing " + path.string());
}

}  // namespace cyllab
