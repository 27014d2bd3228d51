// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance <path to cyllab cli>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cyllab/calculus.hpp"
#include "cyllab/degeneration.hpp"
#include "cyllab/delbar_solve.hpp"
#include "cyllab/estimates.hpp"
#include "cyllab/experiment.hpp"

using namespace cyllab;
namespace fs = std::filesystem;
constexpr double pi = std::numbers::pi;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& detail)
{
    std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    if (!pass)
        ++failures;
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Point pt2(double a, double b)
{
    Point p(2);
    p << a, b;
    return p;
}

SpectralBoundaryData family_bdata(double mean)
{
    SpectralBoundaryData b;
    b.left.push_back({0, {cplx(mean, 0.0)}});
    b.left.push_back({-1, {cplx(0.1, 0.0)}});
    b.right.push_back({1, {cplx(0.1, 0.0)}});
    return b;
}

FamilyConfig family_config(double ell, const std::vector<double>& r_list, double mean)
{
    FamilyConfig cfg;
    cfg.schedule = FamilySchedule::default_rule(ell, r_list);
    cfg.grid.t_modes = 16;
    cfg.grid.max_spacing = 0.01;
    cfg.bdata = family_bdata(mean);
    // V_n = 0.5 x + (0.005 / n) rotation, limit 0.5 x
    cfg.sequence = VectorFieldSequence(VectorFieldModel::scalar_linear(2, 0.5), VectorFieldModel::rotation(2, 1.0),
                                       0.005, 1.0);
    cfg.threads = thread_budget(0);
    return cfg;
}

std::string bytes(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Criterion 1: homogeneous solutions against e^{2 pi k (s - s_0)}.
void linear_exactness()
{
    auto t0 = std::chrono::steady_clock::now();
    Cylinder c(10.0, 2048, 64, 1);
    SpectralBoundaryData b;
    const std::vector<std::pair<int, cplx>> left{{0, {0.3, -0.1}}, {-1, {0.1, 0.05}}, {-3, {-0.07, 0.0}}, {-7, {0.0, 0.02}}};
    const std::vector<std::pair<int, cplx>> right{{1, {0.1, 0.0}}, {2, {0.0, -0.08}}, {5, {0.03, 0.03}}, {9, {-0.01, 0.0}}};
    for (auto [k, a] : left)
        b.left.push_back({k, {a}});
    for (auto [k, a] : right)
        b.right.push_back({k, {a}});
    auto u = solve_linear(c, b, SpectralField(c));
    double secs = seconds_since(t0);
    double worst = 0.0;
    for (std::size_t i = 0; i < c.s_samples; ++i) {
        double s = c.s(i);
        for (auto [k, a] : left) {
            cplx exact = a * std::exp(2 * pi * k * (s - c.lower()));
            worst = std::max(worst, std::abs(u.at(i, k, 0) - exact) / std::abs(a));
        }
        for (auto [k, a] : right) {
            cplx exact = a * std::exp(2 * pi * k * (s - c.upper()));
            worst = std::max(worst, std::abs(u.at(i, k, 0) - exact) / std::abs(a));
        }
    }
    report(1, worst <= 1e-9 && secs <= 1.0,
           fmt("8 modes, r=10 S=2048 T=64: relative sup error %.3g (<= 1e-9), %.3f s (<= 1 s)", worst, secs));
}

// Criterion 2 and the instances it generates.
std::vector<std::pair<SpectralField, std::pair<VectorFieldModel, double>>> nonlinear_instances()
{
    std::vector<std::pair<SpectralField, std::pair<VectorFieldModel, double>>> out;
    GridSpec g;
    auto c = g.cylinder_for(10.0, 1);
    SpectralBoundaryData b;
    b.left.push_back({0, {cplx(0.4, 0.1)}});
    b.left.push_back({-1, {cplx(0.1, 0.0)}});
    b.right.push_back({1, {cplx(0.1, 0.0)}});
    const std::vector<std::pair<std::string, VectorFieldModel>> models{
        {"0.5x", VectorFieldModel::scalar_linear(2, 0.5)},
        {"grad(sum 0.5 x_i^2 / 2)", VectorFieldModel::gradient(pt2(0.5, 0.5), pt2(0.0, 0.0), pt2(0.0, 0.0))},
        {"constant w", VectorFieldModel::constant(pt2(0.1, 0.05))},
    };
    bool pass = true;
    double worst_res = 0.0;
    std::size_t worst_it = 0;
    std::string failed;
    for (const auto& [name, m] : models) {
        for (double eps : {0.01, 0.05}) {
            try {
                auto r = solve_nonlinear(c, b, m, eps);
                worst_res = std::max(worst_res, r.report.final_residual);
                worst_it = std::max(worst_it, r.report.iterations);
                if (r.report.final_residual > 1e-8 || r.report.iterations > 30) {
                    pass = false;
                    failed += " " + name;
                }
                out.push_back({std::move(r.field), {m, eps}});
            } catch (const std::exception& e) {
                pass = false;
                failed += " " + name + " (" + e.what() + ")";
            }
        }
    }
    report(2, pass,
           fmt("3 fields x eps {0.01, 0.05}: max residual %.3g (<= 1e-8), max iterations %zu (<= 30)%s", worst_res,
               worst_it, failed.c_str()));
    return out;
}

// Criterion 3: ratios by direct quadrature of the loop and its derivative.
void poincare_ratios()
{
    const std::size_t T = 16, M = 256;
    double worst = 0.0, worst_impl = 0.0;
    for (int k : {1, 2}) {
        cplx a(0.6, -0.8);
        double f2 = 0.0, d2 = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
            double t = double(m) / double(M);
            cplx e = a * std::exp(cplx(0, 2 * pi * k * t));
            f2 += std::norm(e) / double(M);
            d2 += std::norm(cplx(0, 2 * pi * k) * e) / double(M);
        }
        double expect = 1.0 / (4 * pi * pi * k * k);
        worst = std::max(worst, std::abs(f2 / d2 - expect));
        std::vector<cplx> loop(T);
        loop[std::size_t(k - (1 - int(T / 2)))] = a;
        auto p = poincare_check(loop, T, 1);
        worst_impl = std::max(worst_impl, std::abs(p.lhs / (p.rhs / poincare_constant) - expect));
    }
    report(3, worst <= 1e-12 && worst_impl <= 1e-12,
           fmt("k=1 vs 1/(4 pi^2), k=2 vs 1/(16 pi^2): quadrature error %.3g, poincare_check error %.3g (<= 1e-12)",
               worst, worst_impl));
}

void bump_norms(const BumpFunction& b)
{
    bool lower = b.dd_l1 >= 4 * pi * pi;
    report(4, b.l1 <= 2.0 && b.dd_l1 <= 40.0 && lower,
           fmt("||rho||_1 = %.6f (<= 2), ||rho''||_1 = %.6f (<= 40, required >= 4 pi^2 = %.6f)", b.l1, b.dd_l1,
               4 * pi * pi));
}

void diff_inequality(const std::vector<std::pair<SpectralField, std::pair<VectorFieldModel, double>>>& inst,
                     const std::vector<const DegenerationReport*>& families)
{
    std::size_t checked = 0, skipped = 0;
    bool pass = true;
    double worst_adjusted = std::numeric_limits<double>::infinity();
    auto consider = [&](const DiffInequalityResult& d) {
        ++checked;
        pass = pass && d.pass;
        worst_adjusted = std::min(worst_adjusted, d.adjusted);
    };
    for (const auto& [u, me] : inst) {
        double grad = sup_derivative_norm(u, 1, Window{0.0, u.cylinder().half_length});
        if (!diff_inequality_applicable(me.first, me.second, grad).applicable) {
            ++skipped;
            continue;
        }
        consider(check_diff_inequality(gamma_profile(u)));
    }
    for (const auto* rep : families)
        for (const auto& e : rep->entries) {
            if (!e.ok || !e.estimates)
                continue;
            if (e.estimates->diff_inequality)
                consider(*e.estimates->diff_inequality);
            else
                ++skipped;
        }

    // single holomorphic mode: margin = 7 pi^2 gamma
    Cylinder c(2.0, 801, 16, 1);
    SpectralField u(c);
    for (std::size_t i = 0; i < c.s_samples; ++i)
        u.at(i, 1, 0) = cplx(0.001, 0.0) * std::exp(2 * pi * c.s(i));
    auto p = gamma_profile(u);
    double rel = 0.0;
    for (std::size_t i = c.interior_first(); i <= c.interior_last(); ++i) {
        double margin = p.gamma_dd[i] - pi * pi * p.gamma[i] - p.rhs[i];
        rel = std::max(rel, std::abs(margin / (7 * pi * pi * p.gamma[i]) - 1.0));
    }
    report(5, pass && checked > 0 && rel <= 1e-8,
           fmt("%zu instances checked (%zu outside the eps precondition), min adjusted margin %.3g (>= 0); "
               "single mode relative error %.3g (<= 1e-8)",
               checked, skipped, worst_adjusted, rel));
}

void decay(const DegenerationReport& fam)
{
    bool pass = true;
    double worst_ratio = 0.0;
    for (const auto& e : fam.entries) {
        if (!e.ok || !e.estimates) {
            pass = false;
            continue;
        }
        const auto& s = *e.estimates;
        for (const auto* f : {&s.exp_bound, &s.window, &s.pointwise0, &s.pointwise1}) {
            worst_ratio = std::max(worst_ratio, f->ratio);
            pass = pass && f->pass;
        }
    }
    // stability under doubling S and T
    auto fits = [](double spacing, std::size_t T) {
        GridSpec g;
        g.max_spacing = spacing;
        g.t_modes = T;
        auto c = g.cylinder_for(10.0, 1);
        auto u = solve_nonlinear(c, family_bdata(0.5), VectorFieldModel::scalar_linear(2, 0.5), 0.05).field;
        auto p = gamma_profile(u);
        return std::vector<double>{exp_bound_check(p).fitted, window_decay_check(p).fitted,
                                   pointwise_decay_check(u, 0).fitted, pointwise_decay_check(u, 1).fitted};
    };
    auto a = fits(0.01, 16), b = fits(0.005, 32);
    double drift = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        drift = std::max(drift, std::abs(b[i] / a[i] - 1.0));
    report(6, pass && drift <= 0.2,
           fmt("C, window, M0, M1 over %zu family entries: max fitted/boundary ratio %.3f (<= 4); "
               "drift under S, T doubling %.3g (<= 0.2)",
               fam.entries.size(), worst_ratio, drift));
}

void center_of_mass_residual()
{
    GridSpec g;
    auto c = g.cylinder_for(10.0, 1);
    auto b = family_bdata(0.4);
    auto worst = [&](const VectorFieldModel& m) {
        auto u = solve_nonlinear(c, b, m, 0.01).field;
        auto res = com_residual(u, m, 0.01);
        double w = 0.0;
        for (std::size_t i = c.interior_first(); i <= c.interior_last(); ++i)
            w = std::max(w, res[i]);
        return w;
    };
    double lin = worst(VectorFieldModel::scalar_linear(2, 0.5));
    double quad = worst(VectorFieldModel::gradient(pt2(0.5, 0.5), pt2(0.3, 0.2), pt2(0.0, 0.0)));
    report(7, lin <= 1e-7 && quad <= 1e-5,
           fmt("eps=0.01: linear %.3g (<= 1e-7), quadratic gradient %.3g (<= 1e-5)", lin, quad));
}

void degeneration(const DegenerationReport& rep, double secs)
{
    const auto& s = rep.summary;
    bool all_ok = s.ok_entries == rep.entries.size() && rep.entries.size() == 4;
    const auto& last = rep.entries.back();
    std::string neck, flow, rho;
    for (const auto& e : rep.entries) {
        neck += fmt(" %.2g", e.neck_sup);
        flow += fmt(" %.2g", e.flow.sup_error);
        rho += fmt(" %d", e.neck.rho);
    }
    bool a = s.neck_sup_strictly_decreasing;
    bool b = s.flow_error_strictly_decreasing && last.flow.sup_error <= 1e-3;
    bool c = last.flow.endpoint_mismatch <= 1e-3 && last.flow.oracle_endpoint_mismatch <= 1e-3;
    bool d = s.eps_rho_condition;
    report(8, all_ok && a && b && c && d && secs <= 120.0,
           fmt("(a) neck sup%s %s; (b) flow error%s %s; (c) endpoint mismatch %.2g, oracle %.2g; "
               "(d) eps rho <= sqrt(eps) %s, rho%s; %.1f s",
               neck.c_str(), a ? "decreasing" : "NOT decreasing", flow.c_str(), b ? "ok" : "NOT ok",
               last.flow.endpoint_mismatch, last.flow.oracle_endpoint_mismatch, d ? "holds" : "fails", rho.c_str(),
               secs));
}

void zero_length(const DegenerationReport& rep)
{
    bool decreasing = rep.summary.ok_entries == rep.entries.size();
    std::string gaps;
    for (std::size_t i = 0; i < rep.entries.size(); ++i) {
        gaps += fmt(" %.3g", rep.entries[i].flow.endpoint_gap);
        if (i > 0)
            decreasing = decreasing && rep.entries[i].flow.endpoint_gap < rep.entries[i - 1].flow.endpoint_gap;
    }
    double last = rep.entries.back().flow.endpoint_gap;
    report(9, decreasing && last <= 1e-3,
           fmt("r = 16, 64, 256, eps = r^-1.5: |x+ - x-|%s, decreasing %s, final <= 1e-3", gaps.c_str(),
               decreasing ? "yes" : "no"));
}

// Criterion 10: errors against the exact solution x0 e^{0.5 t}.
void rk4_order()
{
    auto m = VectorFieldModel::scalar_linear(2, 0.5);
    const double exact = 0.5 * std::exp(0.5 * 2.0);
    auto err = [&](double h) { return std::abs(flow_ode(m, pt2(0.5, 0.0), 2.0, h).samples.back()[0] - exact); };
    double e1 = err(0.2), e2 = err(0.1), e3 = err(0.05);
    double o1 = std::log2(e1 / e2), o2 = std::log2(e2 / e3);
    bool pass = o1 >= 3.8 && o1 <= 4.2 && o2 >= 3.8 && o2 <= 4.2;
    report(10, pass, fmt("V = 0.5x, steps 0.2/0.1/0.05: observed orders %.4f, %.4f (in [3.8, 4.2])", o1, o2));
}

void determinism(const std::string& cli)
{
    auto root = fs::temp_directory_path() / "cyllab_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    bool ran = true;
    for (const char* name : {"a", "b"}) {
        std::string cmd = cli + " family --quick --seed 7 --out " + (root / name).string() + " > /dev/null 2>&1";
        ran = ran && std::system(cmd.c_str()) == 0;
    }
    std::string a = bytes(root / "a" / "family_report.json"), b = bytes(root / "b" / "family_report.json");
    bool same = !a.empty() && a == b;
    for (const auto& f : fs::directory_iterator(root / "a"))
        if (f.path().extension() == ".csv")
            same = same && bytes(f.path()) == bytes(root / "b" / f.path().filename());
    report(11, ran && same,
           fmt("family --quick twice: exit codes %s, reports %s (%zu bytes)", ran ? "0" : "nonzero",
               same ? "byte-identical" : "DIFFER", a.size()));
}

}  // namespace

int main(int argc, char** argv)
{
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <cyllab cli>\n", argv[0]);
        return 2;
    }
    try {
        linear_exactness();
        auto inst = nonlinear_instances();
        poincare_ratios();
        auto bump = build_bump();
        bump_norms(bump);

        auto t0 = std::chrono::steady_clock::now();
        auto fam = run_family(family_config(0.5, {10, 20, 40, 80}, 0.5));
        double fam_secs = seconds_since(t0);
        auto zero = run_family(family_config(0.0, {16, 64, 256}, 0.01));

        diff_inequality(inst, {&fam, &zero});
        decay(fam);
        center_of_mass_residual();
        degeneration(fam, fam_secs);
        zero_length(zero);
        rk4_order();
        determinism(argv[1]);
    } catch (const std::exception& e) {
        std::printf("FAIL aborted: %s\n", e.what());
        return 1;
    }
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
