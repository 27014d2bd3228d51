#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cyllab/degeneration.hpp"
#include "cyllab/delbar_solve.hpp"
#include "cyllab/vfield.hpp"

namespace cyllab {

inline constexpr const char* version = "0.1.0";

struct SolveParams {
    double r = 10.0;
    double eps = 0.01;
    std::size_t n = 1;
    SpectralBoundaryData bdata;
};

struct CheckParams {
    std::string field;
    double eps = 0.0;
    std::size_t n = 1;
    double kappa = 4.0;
    double slack = 1e-6;
    std::size_t probe_count = 0;  // 0 skips the elliptic probe
    int probe_k = 1;
    double probe_delta = 0.5;
};

struct FamilyParams {
    FamilySchedule schedule;
    SpectralBoundaryData bdata;
    bool auto_scale = true;
    bool estimates = true;
    double flow_max_step = 1e-3;
    bool quick = false;
    std::size_t threads = 0;  // 0: hardware concurrency
};

struct FlowlineParams {
    std::vector<double> start;
    double duration = 1.0;
    double step = 0.01;
    std::size_t n = 0;  // 0: the limit field
    bool richardson = true;
};

/// Everything a run needs. Normalized by config_from_json; to_json writes
/// every key so the result parses back to the same value.
struct ExperimentConfig {
    std::string command;
    std::filesystem::path out_dir = "cyllab_out";
    std::uint64_t seed = 7;
    std::size_t dim = 1;
    GridSpec grid;
    SolveOptions solver;
    VectorFieldSequence vfield;
    SolveParams solve;
    CheckParams check;
    FamilyParams family;
    FlowlineParams flowline;
};

/// Default boundary template: zero mode 0.5 on the left, k = -1 and k = 1
/// amplitudes 0.1, in every component.
SpectralBoundaryData default_bdata(std::size_t dim, double mean = 0.5, double amplitude = 0.1);

nlohmann::json to_json(const ExperimentConfig& c);
/// Throws ConfigError naming every offending key; IoError for missing
/// referenced files. String values of "bdata" and "vfield" are file paths.
ExperimentConfig config_from_json(const nlohmann::json& j);

/// Applies the quick profile (S = 512, T = 32, two family entries).
void apply_quick_profile(ExperimentConfig& c);

struct StepRecord {
    std::size_t index = 0;
    std::string name;
    std::string status;  // ok, failed, error
    std::string message;
    double seconds = 0.0;
};

struct RunManifest {
    std::string config_hash;
    std::string artifact_version = version;
    std::string command;
    std::vector<StepRecord> steps;
    std::vector<std::string> files;
    nlohmann::json extras = nlohmann::json::object();
    int exit_code = 0;
};

nlohmann::json to_json(const RunManifest& m);

/// FNV-1a over the normalized config, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

/// Runs the configured subcommand, writes its outputs and manifest.json
/// into out_dir. exit_code is 0 iff every check passed and nothing failed.
RunManifest run(const ExperimentConfig& config);

/// Threads for parallel steps: the request (or hardware concurrency),
/// capped by CYLLAB_THREADS when set.
std::size_t thread_budget(std::size_t requested);

}  // namespace cyllab
