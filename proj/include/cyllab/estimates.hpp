#pragma once

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include <json.hpp>

#include "cyllab/calculus.hpp"
#include "cyllab/cylinder.hpp"
#include "cyllab/vfield.hpp"

namespace cyllab {

/// delta^2 = 1 / (4 c_pc), c = delta / 2.
inline constexpr double decay_delta = std::numbers::pi;
inline constexpr double decay_c = std::numbers::pi / 2.0;

struct BumpFunction;

struct EstimateConstants {
    double c_pc = poincare_constant;
    double delta = decay_delta;
    double c = decay_c;
    double bump_l1 = 0.0;
    double bump_dd_l1 = 0.0;
};

EstimateConstants estimate_constants(const BumpFunction& bump);
nlohmann::json to_json(const EstimateConstants& k);

/// q(s) is the zero mode; q' comes from the nine-point stencil.
struct CenterOfMassCurve {
    Cylinder cyl;
    std::vector<cplx> q;        // [s][component]
    std::vector<cplx> q_prime;

    Point at(std::size_t i) const;
    Point prime_at(std::size_t i) const;
};

CenterOfMassCurve center_of_mass(const SpectralField& u);

/// |q' - eps V(q) - eps int (V(u) - V(q)) dt| per s-sample.
std::vector<double> com_residual(const SpectralField& u, const VectorFieldModel& model, double eps);

/// gamma = 1/2 sum_{k != 0} |c_k|^2 and the pieces of the differential
/// inequality, per s-sample. gamma_dd uses the nine-point stencil;
/// stencil_budget is its distance to the seven-point value.
struct GammaProfile {
    Cylinder cyl;
    std::vector<double> gamma;
    std::vector<double> gamma_dd;
    std::vector<double> ds_sq;   // ||d_s (u - q)||^2
    std::vector<double> dt_sq;   // ||d_t (u - q)||^2
    std::vector<double> rhs;     // 3/4 ds_sq + 1/4 dt_sq
    std::vector<double> stencil_budget;

    double max_gamma() const;
};

GammaProfile gamma_profile(const SpectralField& u);

/// gamma by quadrature of |u - q|^2 on 4T points per circle.
std::vector<double> gamma_by_quadrature(const SpectralField& u);

struct Applicability {
    double c2_estimate = 0.0;
    double limit = 0.0;  // min(0.25 / c_pc, 0.25)
    bool applicable = false;
};

/// eps C_2 <= min(0.25 / c_pc, 0.25), with C_2 = 2 max(2 |DV|, 2 sqrt(2) |D^2V| G)
/// and G = sup |grad u| over [-r, r].
Applicability diff_inequality_applicable(const VectorFieldModel& model, double eps, double grad_sup);
nlohmann::json to_json(const Applicability& a);

struct DiffInequalityResult {
    double margin = 0.0;       // min over [-r, r] of gamma'' - delta^2 gamma - rhs
    double worst_s = 0.0;
    double adjusted = 0.0;     // min of margin + tolerance
    double tolerance_at_worst = 0.0;
    bool pass = false;
};

/// Pass iff gamma'' - delta^2 gamma - rhs >= -(slack * max gamma + stencil budget)
/// at every sample of [-r, r].
DiffInequalityResult check_diff_inequality(const GammaProfile& p, double slack = 1e-6);
nlohmann::json to_json(const DiffInequalityResult& d);

/// Smallest constant C with f(s) <= C (e^{-rate (r+s)} + e^{-rate (r-s)}) on
/// the samples of [lo, hi], compared with the ratio at the two ends.
struct DecayFit {
    double fitted = 0.0;
    double boundary_scale = 0.0;
    double ratio = 0.0;
    double kappa = 4.0;
    bool pass = false;
};
nlohmann::json to_json(const DecayFit& f);

DecayFit fit_decay(const Cylinder& cyl, const std::vector<double>& f, double rate, double lo, double hi,
                   double kappa);

/// Bound on gamma over [-r, r]; the boundary scale is max(gamma(-r), gamma(r)).
DecayFit exp_bound_check(const GammaProfile& p, double kappa = 4.0);

/// Integrals over [s - 0.5, s + 0.5] of the W^{1,2} density of u - q.
std::vector<double> window_energy(const GammaProfile& p, bool derivs_only = false);

/// Window bound with rate delta on s in [-r+1, r-1].
DecayFit window_decay_check(const GammaProfile& p, double kappa = 4.0);

/// sup_t |grad^k (u - q)|(s) for every sample.
std::vector<double> pointwise_profile(const SpectralField& u, int k);

/// Pointwise bound with rate c = pi/2 on s in [-r+1, r-1].
DecayFit pointwise_decay_check(const SpectralField& u, int k, double kappa = 4.0);

/// Mollified 0.5 - 0.5 cos ramps: equal to 1 on [-0.5, 0.5], supported in [-1, 1].
struct BumpFunction {
    double eta = 0.01;  // mollifier half-width
    std::vector<double> x;
    std::vector<double> rho;
    std::vector<double> rho_dd;
    double l1 = 0.0;
    double dd_l1 = 0.0;

    double eval(double y) const;
    double eval_dd(double y) const;
};

BumpFunction build_bump(double eta = 0.01, std::size_t samples = 20001);

struct ConvolutionResult {
    double margin = 0.0;            // min of (rho'' * gamma - delta^2 rho * gamma) - (rho * rhs) + tolerance
    double window_constant = 0.0;   // 6 (40 + 2 delta^2) c
    double window_slack = 0.0;      // min over s of bound - measured window, relative to the bound
    bool inequality_pass = false;
    bool window_pass = false;
    bool pass = false;
};
nlohmann::json to_json(const ConvolutionResult& c);

/// Convolves the verified inequality with the bump (trapezoid on the grid
/// spacing) on s in [-r+1, r-1] and checks the window bound derived from
/// c_fit.
ConvolutionResult convolution_window_check(const GammaProfile& p, const BumpFunction& bump,
                                           double c_fit, double slack = 1e-6);

/// max over fields and window centers of
/// ||u||_{W^{k+1}(s + [-d, d])} / (||delbar u||_{W^k(s + [-2d, 2d])} + ||u||_{W^k(s + [-2d, 2d])}).
double elliptic_constant_probe(const std::vector<SpectralField>& corpus, int k, double delta);

/// Random fields with smooth s-profiles and coefficients decaying in |k|.
std::vector<SpectralField> random_corpus(const Cylinder& cyl, std::size_t count, std::uint64_t seed);

}  // namespace cyllab
