#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cyllab/delbar_solve.hpp"
#include "cyllab/estimates.hpp"
#include "cyllab/vfield.hpp"

namespace cyllab {

struct FamilyEntry {
    double r = 0.0;
    double eps = 0.0;
};

/// Sequence of (r_n, eps_n) with eps_n r_n -> ell.
struct FamilySchedule {
    double ell = 0.0;
    std::vector<FamilyEntry> entries;

    /// eps_n = ell / r_n, or eps_n = r_n^{-3/2} when ell = 0.
    static FamilySchedule default_rule(double ell, const std::vector<double>& r_list);
    /// r_n = 10 * 2^{n-1} for n = 1..count.
    static std::vector<double> doubling(std::size_t count, double r0 = 10.0);

    /// Throws ConfigError unless r_n > 0, eps_n > 0 strictly decreasing, and
    /// |eps_n r_n - ell| nonincreasing. A single entry may have eps = 0.
    void validate() const;
};

nlohmann::json to_json(const FamilySchedule& s);
FamilySchedule schedule_from_json(const nlohmann::json& j);

/// Largest integer k with eps k <= sqrt(eps), d(k) <= 1/k and k < r.
/// Throws Inapplicable when no k >= 1 qualifies.
int select_rho(double eps, double r, const std::function<double(int)>& d);

struct NeckDecomposition {
    double r = 0.0;
    int rho = 0;
    double neck_half() const { return r - double(rho); }
};

enum class EndSide { minus, plus };

/// u^-(s, t) = u(s - r, t) and u^+(s, t) = u(s + r, t), interpolated in s.
std::vector<cplx> end_piece_row(const SpectralField& u, EndSide side, double s);

/// Samples of u^- on [0, rho] and u^+ on [-rho, 0] at the grid points of u.
struct EndPieces {
    std::vector<double> s_minus, s_plus;
    std::vector<std::vector<cplx>> minus, plus;
};
EndPieces end_pieces(const SpectralField& u, double rho);

/// dist(w) = sup over |s| <= w (on the translated pieces, both ends) of
/// sup_t |a^{+-} - b^{+-}|, evaluated at the samples of a. Returns
/// dist(k) for k = 0..kmax.
std::vector<double> cauchy_profile(const SpectralField& a, const SpectralField& b, int kmax);

struct EndLimits {
    Point x_minus, x_plus;
    double osc_minus = 0.0;
    double osc_plus = 0.0;
};
nlohmann::json to_json(const EndLimits& e);

/// Circle averages and oscillations at s = -(r - rho) and s = r - rho.
EndLimits estimate_endpoints(const SpectralField& u, int rho);

/// sup over the neck [-(r - rho), r - rho] of |u - q|.
double neck_oscillation(const SpectralField& u, int rho);

/// p(sigma) = q(sigma / eps) on the rescaled neck, at the grid samples
/// inside the neck plus the two end points.
struct RescaledTrace {
    double eps = 0.0;
    double half_length = 0.0;  // eps (r - rho)
    std::vector<double> sigma;
    std::vector<Point> p;
    std::vector<Point> p_prime;
    std::vector<double> residual;  // |p' - V_n(p)|
    double sup_residual = 0.0;

    Point at_zero() const;
};

RescaledTrace rescale_trace(const SpectralField& u, double eps, int rho, const VectorFieldModel& model_n);

struct FlowComparison {
    bool performed = false;
    double sup_error = 0.0;              // sup |p(sigma) - oracle(sigma)|
    double endpoint_mismatch = 0.0;      // max |p(+-end) - x_+-|
    double oracle_endpoint_mismatch = 0.0;  // max |oracle(+-end) - x_+-|
    double endpoint_gap = 0.0;           // |x_+ - x_-|
    double defect = 0.0;                 // sup |p' - V(p)| with the limit field
    double gronwall_budget = 0.0;        // defect * 2l * e^{L 2l}
    bool within_budget = true;
    bool escaped = false;
    std::vector<Point> oracle;           // on trace.sigma
};
nlohmann::json to_json(const FlowComparison& f);

/// RK4 flow of the limit field from p(0) in both directions, sampled at
/// trace.sigma. With ell = 0 only the endpoint gap is computed.
FlowComparison compare_flowline(const RescaledTrace& trace, const EndLimits& limits,
                                const VectorFieldModel& limit, double ell, double max_step);

struct EntryEstimates {
    Applicability applicability;
    std::optional<DiffInequalityResult> diff_inequality;
    DecayFit exp_bound, window, pointwise0, pointwise1;
    std::optional<ConvolutionResult> convolution;
    double com_residual = 0.0;  // max over [-r, r]
    bool pass = true;
};
nlohmann::json to_json(const EntryEstimates& e);

/// All estimate checks for one solved instance.
EntryEstimates evaluate_estimates(const SpectralField& u, const VectorFieldModel& model, double eps,
                                  const BumpFunction* bump, double kappa = 4.0);

struct EntryReport {
    std::size_t index = 0;  // n, 1-based
    FamilyEntry entry;
    std::size_t s_samples = 0;
    bool ok = false;
    std::string reason;
    SolveReport solve;
    NeckDecomposition neck;
    double cauchy_at_rho = 0.0;
    std::optional<double> cauchy_next;  // vs member n+1 on [0, 3]
    EndLimits ends;
    double neck_sup = 0.0;
    double domain_length_error = 0.0;  // |2 eps (r - rho) - 2 ell|
    RescaledTrace trace;
    FlowComparison flow;
    std::optional<EntryEstimates> estimates;
};

struct FamilySummary {
    std::size_t ok_entries = 0;
    bool neck_sup_strictly_decreasing = false;
    bool flow_error_strictly_decreasing = false;
    bool endpoint_gap_decreasing = false;
    bool oscillation_strictly_decreasing = false;
    bool cauchy_next_decreasing = false;
    bool rho_nondecreasing = false;
    bool eps_rho_condition = false;  // eps rho <= sqrt(eps) for all entries
    bool estimates_pass = false;
    double final_flow_error = 0.0;
    double final_endpoint_mismatch = 0.0;
    double final_endpoint_gap = 0.0;
    std::vector<std::string> non_monotone;
};

struct DegenerationReport {
    FamilySchedule schedule;
    double boundary_scale = 1.0;
    std::vector<EntryReport> entries;
    FamilySummary summary;
};

nlohmann::json to_json(const DegenerationReport& r);

struct FamilyConfig {
    FamilySchedule schedule;
    GridSpec grid;
    SpectralBoundaryData bdata;
    VectorFieldSequence sequence;
    SolveOptions solve;
    bool auto_scale = true;
    bool estimates = true;
    double kappa = 4.0;
    double flow_max_step = 1e-3;
    std::size_t threads = 1;
};

DegenerationReport run_family(const FamilyConfig& config);

/// Columns: sigma, p_0..p_{d-1}, oracle_0..oracle_{d-1}, diff.
void write_entry_csv(const EntryReport& e, const std::filesystem::path& path);

}  // namespace cyllab
