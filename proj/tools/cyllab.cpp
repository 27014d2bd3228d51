// Command-line runner: solve | check | family | flowline.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cyllab/errors.hpp"
#include "cyllab/experiment.hpp"

using nlohmann::json;

namespace {

// Inline JSON when the value starts with '{' or '[', else a file path.
json path_or_inline(const std::string& v)
{
    if (!v.empty() && (v.front() == '{' || v.front() == '['))
        return json::parse(v);
    return v;
}

struct Overrides {
    std::string config;
    std::optional<std::string> out, vfield;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> dim, t_modes, s_samples, threads;
    std::optional<double> max_spacing, tol;
    bool quick = false;

    std::optional<double> r, eps, kappa, ell, duration, step;
    std::optional<std::size_t> n, probe_count;
    std::optional<std::string> bdata, field;
    std::vector<double> r_list, start;
    bool no_richardson = false;
};

json build_config(const std::string& command, const Overrides& o)
{
    json j = json::object();
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in)
            throw cyllab::IoError("cannot open config " + o.config);
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw cyllab::ConfigError(o.config + ": " + e.what());
        }
    }
    j["command"] = command;
    if (o.out) j["out"] = *o.out;
    if (o.seed) j["seed"] = *o.seed;
    if (o.dim) j["dim"] = *o.dim;
    if (o.vfield) j["vfield"] = path_or_inline(*o.vfield);
    if (o.t_modes) j["grid"]["t_modes"] = *o.t_modes;
    if (o.s_samples) j["grid"]["s_samples"] = *o.s_samples;
    if (o.max_spacing) j["grid"]["max_spacing"] = *o.max_spacing;
    if (o.tol) j["solver"]["tol"] = *o.tol;

    if (command == "solve") {
        if (o.r) j["solve"]["r"] = *o.r;
        if (o.eps) j["solve"]["eps"] = *o.eps;
        if (o.n) j["solve"]["n"] = *o.n;
        if (o.bdata) j["solve"]["bdata"] = path_or_inline(*o.bdata);
    } else if (command == "check") {
        if (o.field) j["check"]["field"] = *o.field;
        if (o.eps) j["check"]["eps"] = *o.eps;
        if (o.n) j["check"]["n"] = *o.n;
        if (o.kappa) j["check"]["kappa"] = *o.kappa;
        if (o.probe_count) j["check"]["probe"]["count"] = *o.probe_count;
    } else if (command == "family") {
        if (o.ell) j["family"]["ell"] = *o.ell;
        if (!o.r_list.empty()) {
            j["family"]["r_list"] = o.r_list;
            if (j["family"].contains("entries"))
                j["family"].erase("entries");
        }
        if (o.bdata) j["family"]["bdata"] = path_or_inline(*o.bdata);
        if (o.threads) j["family"]["threads"] = *o.threads;
        if (o.quick) j["family"]["quick"] = true;
    } else if (command == "flowline") {
        if (!o.start.empty()) j["flowline"]["start"] = o.start;
        if (o.duration) j["flowline"]["duration"] = *o.duration;
        if (o.step) j["flowline"]["step"] = *o.step;
        if (o.n) j["flowline"]["n"] = *o.n;
        if (o.no_richardson) j["flowline"]["richardson"] = false;
    }
    return j;
}

void add_common(CLI::App* app, Overrides& o)
{
    app->add_option("-c,--config", o.config, "JSON config file");
    app->add_option("-o,--out", o.out, "output directory");
    app->add_option("--seed", o.seed, "RNG seed");
    app->add_option("--dim", o.dim, "complex dimension n");
    app->add_option("--vfield", o.vfield, "vector field: JSON file or inline JSON");
    app->add_option("--t-modes", o.t_modes, "Fourier modes T");
    app->add_option("--s-samples", o.s_samples, "s samples S (0: from --max-spacing)");
    app->add_option("--max-spacing", o.max_spacing, "largest s spacing");
    app->add_option("--tol", o.tol, "solver tolerance");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Perturbed holomorphic cylinders: solver, estimate checks, degeneration runs"};
    app.set_version_flag("--version", std::string(cyllab::version));
    app.require_subcommand(1);
    Overrides o;

    auto* solve = app.add_subcommand("solve", "solve one boundary value problem");
    add_common(solve, o);
    solve->add_option("--r", o.r, "half length r");
    solve->add_option("--eps", o.eps, "epsilon");
    solve->add_option("--modes", o.t_modes, "Fourier modes T (alias of --t-modes)");
    solve->add_option("--n", o.n, "sequence member n");
    solve->add_option("--bdata", o.bdata, "boundary data: JSON file or inline JSON");

    auto* check = app.add_subcommand("check", "run the estimate checks on a stored field");
    add_common(check, o);
    check->add_option("--field", o.field, "field header (.json)");
    check->add_option("--eps", o.eps, "epsilon");
    check->add_option("--n", o.n, "sequence member n");
    check->add_option("--kappa", o.kappa, "decay fit ratio bound");
    check->add_option("--probe-count", o.probe_count, "fields in the elliptic probe corpus (0: skip)");

    auto* family = app.add_subcommand("family", "run a degenerating family");
    add_common(family, o);
    family->add_option("--ell", o.ell, "limit of eps_n r_n");
    family->add_option("--r-list", o.r_list, "half lengths r_n")->delimiter(',');
    family->add_option("--bdata", o.bdata, "boundary data: JSON file or inline JSON");
    family->add_option("--threads", o.threads, "worker threads (0: hardware)");
    family->add_flag("--quick", o.quick, "S = 512, T = 32, two entries");

    auto* flow = app.add_subcommand("flowline", "integrate a flow line of the field");
    add_common(flow, o);
    flow->add_option("--start", o.start, "start point in R^{2n}")->delimiter(',');
    flow->add_option("--duration", o.duration, "integration time (negative: backwards)");
    flow->add_option("--step", o.step, "RK4 step");
    flow->add_option("--n", o.n, "sequence member n (0: limit)");
    flow->add_flag("--no-richardson", o.no_richardson, "skip the order test");

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    cyllab::ExperimentConfig cfg;
    try {
        cfg = cyllab::config_from_json(build_config(command, o));
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const cyllab::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        auto m = cyllab::run(cfg);
        for (const auto& s : m.steps) {
            std::fprintf(stderr, "[%zu] %s: %s (%.3f s)%s%s\n", s.index, s.name.c_str(), s.status.c_str(),
                         s.seconds, s.message.empty() ? "" : " ", s.message.c_str());
        }
        std::fprintf(stderr, "wrote %zu files to %s\n", m.files.size(), cfg.out_dir.c_str());
        return m.exit_code;
    } catch (const cyllab::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
