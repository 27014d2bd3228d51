#include "cyllab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <thread>

#include "cyllab/calculus.hpp"
#include "cyllab/estimates.hpp"
#include "cyllab/field_io.hpp"

namespace cyllab {

using nlohmann::json;

namespace {

json load_json_file(const std::filesystem::path& p)
{
    std::ifstream in(p);
    if (!in)
        throw IoError("cannot open " + p.string());
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw ConfigError(p.string() + ": " + e.what());
    }
}

// Reads one config section, recording problems instead of throwing so that
// every offending key is reported together.
class Section {
public:
    Section(const json* j, std::string prefix, std::vector<std::string>& problems,
            std::initializer_list<const char*> known)
        : j_(j), prefix_(std::move(prefix)), problems_(problems)
    {
        if (!j_)
            return;
        if (!j_->is_object()) {
            problem("", "must be an object");
            j_ = nullptr;
            return;
        }
        std::set<std::string> names(known.begin(), known.end());
        for (const auto& [key, value] : j_->items())
            if (!names.count(key))
                problem(key, "unknown key");
    }

    template <class T>
    T get(const char* key, T fallback)
    {
        if (!j_ || !j_->contains(key))
            return fallback;
        try {
            return j_->at(key).get<T>();
        } catch (const json::exception&) {
            problem(key, "wrong type");
            return fallback;
        }
    }

    bool has(const char* key) const { return j_ && j_->contains(key); }
    const json* sub(const char* key) const { return has(key) ? &j_->at(key) : nullptr; }
    void problem(const std::string& key, const std::string& why)
    {
        problems_.push_back(prefix_ + key + ": " + why);
    }
    std::string path(const char* key) const { return prefix_ + key; }

private:
    const json* j_;
    std::string prefix_;
    std::vector<std::string>& problems_;
};

SpectralBoundaryData read_bdata(const json* j, Section& sec, const char* key, std::size_t dim)
{
    if (!j)
        return default_bdata(dim);
    try {
        json doc = j->is_string() ? load_json_file(j->get<std::string>()) : *j;
        auto b = boundary_from_json(doc);
        if (b.dim() != 0 && b.dim() != dim)
            sec.problem(key, "boundary data has " + std::to_string(b.dim()) + " components, expected " +
                                 std::to_string(dim));
        return b;
    } catch (const ConfigError& e) {
        sec.problem(key, e.what());
    }
    return default_bdata(dim);
}

std::string fnv1a(const std::string& text)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

class Runner {
public:
    Runner(const ExperimentConfig& c) : cfg_(c)
    {
        manifest_.command = c.command;
        manifest_.config_hash = config_hash(c);
    }

    RunManifest finish()
    {
        manifest_.files.push_back("manifest.json");
        bool bad = std::any_of(manifest_.steps.begin(), manifest_.steps.end(),
                               [](const StepRecord& s) { return s.status != "ok"; });
        manifest_.exit_code = bad ? 1 : 0;
        write_json("manifest.json", to_json(manifest_), false);
        return manifest_;
    }

    // Runs one step; a returned false marks a failed check, an exception an error.
    void step(const std::string& name, const std::function<bool()>& body)
    {
        StepRecord rec;
        rec.index = manifest_.steps.size() + 1;
        rec.name = name;
        auto t0 = std::chrono::steady_clock::now();
        try {
            rec.status = body() ? "ok" : "failed";
        } catch (const std::exception& e) {
            rec.status = "error";
            rec.message = e.what();
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        manifest_.steps.push_back(std::move(rec));
    }

    void write_json(const std::string& name, const json& j, bool record = true)
    {
        auto p = cfg_.out_dir / name;
        std::ofstream out(p);
        if (!out)
            throw IoError("cannot write " + p.string());
        out << j.dump(2) << '\n';
        if (!out)
            throw IoError("failed writing " + p.string());
        if (record)
            manifest_.files.push_back(name);
    }

    void record(const std::string& name) { manifest_.files.push_back(name); }
    json& extras() { return manifest_.extras; }
    const ExperimentConfig& cfg() const { return cfg_; }

private:
    const ExperimentConfig& cfg_;
    RunManifest manifest_;
};

bool run_solve(Runner& run)
{
    const auto& c = run.cfg();
    auto cyl = c.grid.cylinder_for(c.solve.r, c.dim);
    json report{{"command", "solve"},
                {"r", c.solve.r},
                {"eps", c.solve.eps},
                {"n", c.solve.n},
                {"grid", {{"s_samples", cyl.s_samples}, {"t_modes", cyl.t_modes}, {"dim", cyl.dim}}}};
    try {
        auto res = make_instance(cyl, c.solve.eps, c.solve.bdata, c.vfield, c.solve.n, c.solver);
        write_field(res.field, c.out_dir / "field.json");
        run.record("field.json");
        run.record("field.csv");
        report["report"] = to_json(res.report);
        report["sup"] = sup_norm(res.field);
        report["pass"] = true;
        run.write_json("solve_report.json", report);
        return true;
    } catch (const NonConvergence& e) {
        report["error"] = e.what();
        report["last_residual"] = e.last_residual();
    } catch (const Error& e) {
        report["error"] = e.what();
    }
    report["pass"] = false;
    run.write_json("solve_report.json", report);
    throw Error(report["error"].get<std::string>());
}

bool run_check(Runner& run)
{
    const auto& c = run.cfg();
    if (c.check.field.empty())
        throw ConfigError("check: no field given");
    SpectralField u = read_field(c.check.field);
    const auto& cyl = u.cylinder();
    if (2 * cyl.dim != c.vfield.limit().real_dim())
        throw ConfigError("check: vector field dimension does not match the field");
    const auto model = c.vfield.member(c.check.n);
    auto bump = build_bump();
    auto est = evaluate_estimates(u, model, c.check.eps, &bump, c.check.kappa);

    json report{{"command", "check"}, {"field", c.check.field}, {"eps", c.check.eps}, {"n", c.check.n}};
    report["equation_residual"] = equation_residual(u, model, c.check.eps);
    report["estimates"] = to_json(est);
    report["constants"] = to_json(estimate_constants(bump));
    bool bump_ok = bump.l1 <= 2.0 && bump.dd_l1 <= 40.0;
    report["bump"] = {{"l1", bump.l1}, {"dd_l1", bump.dd_l1}, {"pass", bump_ok}};

    // Poincare on the circle nearest s = 0, mean removed.
    std::size_t mid = cyl.first_at_or_after(0.0);
    auto row = u.row(std::min(mid, cyl.s_samples - 1));
    std::vector<cplx> loop(row.begin(), row.end());
    for (std::size_t k = 0; k < cyl.dim; ++k)
        loop[cyl.mode_index(0) * cyl.dim + k] = 0.0;
    auto pc = poincare_check(loop, cyl.t_modes, cyl.dim);
    bool pc_ok = pc.lhs <= pc.rhs * (1.0 + 1e-12) + 1e-300;
    report["poincare"] = {{"s", cyl.s(std::min(mid, cyl.s_samples - 1))}, {"lhs", pc.lhs}, {"rhs", pc.rhs},
                          {"pass", pc_ok}};

    bool probe_ok = true;
    if (c.check.probe_count > 0) {
        Cylinder pcyl(2.0, 401, cyl.t_modes, cyl.dim);
        auto corpus = random_corpus(pcyl, 2 * c.check.probe_count, c.seed);
        std::vector<SpectralField> half(corpus.begin(), corpus.begin() + long(c.check.probe_count));
        double c1 = elliptic_constant_probe(half, c.check.probe_k, c.check.probe_delta);
        double c2 = elliptic_constant_probe(corpus, c.check.probe_k, c.check.probe_delta);
        double drift = c1 > 0.0 ? std::abs(c2 / c1 - 1.0) : 0.0;
        probe_ok = std::isfinite(c1) && std::isfinite(c2) && drift <= 0.2;
        report["elliptic_probe"] = {{"count", c.check.probe_count}, {"k", c.check.probe_k},
                                    {"delta", c.check.probe_delta}, {"c_ell", c1},
                                    {"c_ell_doubled", c2}, {"drift", drift}, {"pass", probe_ok}};
    }

    // Series for plotting.
    auto gp = gamma_profile(u);
    {
        auto p = c.out_dir / "check_series.csv";
        std::FILE* f = std::fopen(p.c_str(), "w");
        if (!f)
            throw IoError("cannot write " + p.string());
        std::fputs("s,gamma,gamma_dd,rhs,bound\n", f);
        const double r = cyl.half_length;
        for (std::size_t i = 0; i < cyl.s_samples; ++i) {
            double s = cyl.s(i);
            double bound = est.exp_bound.fitted *
                           (std::exp(-decay_delta * (r + s)) + std::exp(-decay_delta * (r - s)));
            std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g\n", s, gp.gamma[i], gp.gamma_dd[i], gp.rhs[i], bound);
        }
        if (std::fclose(f) != 0)
            throw IoError("failed writing " + p.string());
        run.record("check_series.csv");
    }
    bool pass = est.pass && bump_ok && pc_ok && probe_ok;
    report["pass"] = pass;
    run.write_json("check_report.json", report);
    return pass;
}

bool run_family_cmd(Runner& run)
{
    const auto& c = run.cfg();
    FamilyConfig fc;
    fc.schedule = c.family.schedule;
    fc.grid = c.grid;
    fc.bdata = c.family.bdata;
    fc.sequence = c.vfield;
    fc.solve = c.solver;
    fc.auto_scale = c.family.auto_scale;
    fc.estimates = c.family.estimates;
    fc.flow_max_step = c.family.flow_max_step;
    fc.threads = thread_budget(c.family.threads);
    auto rep = run_family(fc);
    json j = to_json(rep);
    bool pass = rep.summary.ok_entries == rep.entries.size() && rep.summary.eps_rho_condition &&
                (!c.family.estimates || rep.summary.estimates_pass);
    for (const auto& e : rep.entries) {
        if (!e.ok)
            continue;
        pass = pass && e.flow.within_budget;
        char name[32];
        std::snprintf(name, sizeof name, "entry_%02zu.csv", e.index);
        write_entry_csv(e, c.out_dir / name);
        run.record(name);
    }
    j["pass"] = pass;
    run.write_json("family_report.json", j);
    return pass;
}

bool run_flowline(Runner& run)
{
    const auto& c = run.cfg();
    const auto model = c.flowline.n == 0 ? c.vfield.limit() : c.vfield.member(c.flowline.n);
    Point start = Eigen::Map<const Point>(c.flowline.start.data(), Eigen::Index(c.flowline.start.size()));
    auto seg = flow_ode(model, start, c.flowline.duration, c.flowline.step);
    {
        auto p = c.out_dir / "flowline.csv";
        std::FILE* f = std::fopen(p.c_str(), "w");
        if (!f)
            throw IoError("cannot write " + p.string());
        std::fputs("tau", f);
        for (Eigen::Index k = 0; k < start.size(); ++k)
            std::fprintf(f, ",x_%ld", long(k));
        std::fputs("\n", f);
        for (std::size_t i = 0; i < seg.times.size(); ++i) {
            std::fprintf(f, "%.17g", seg.times[i]);
            for (Eigen::Index k = 0; k < start.size(); ++k)
                std::fprintf(f, ",%.17g", seg.samples[i][k]);
            std::fputs("\n", f);
        }
        if (std::fclose(f) != 0)
            throw IoError("failed writing " + p.string());
        run.record("flowline.csv");
    }
    json report{{"command", "flowline"},
                {"duration", c.flowline.duration},
                {"step", c.flowline.step},
                {"escaped", seg.escaped},
                {"end", std::vector<double>(seg.samples.back().begin(), seg.samples.back().end())}};
    if (c.flowline.richardson) {
        auto end = [&](double h) { return flow_ode(model, start, c.flowline.duration, h).samples.back(); };
        Point a = end(c.flowline.step), b = end(c.flowline.step / 2), d = end(c.flowline.step / 4);
        double e1 = (a - b).norm(), e2 = (b - d).norm();
        json ratio = nullptr, order = nullptr;
        if (e1 > 0.0 && e2 > 0.0) {
            ratio = e1 / e2;
            order = std::log2(e1 / e2);
        }
        report["richardson"] = {{"diff_h", e1}, {"diff_h2", e2}, {"ratio", ratio}, {"order", order}};
        run.extras()["richardson_ratio"] = ratio;
        run.extras()["richardson_order"] = order;
    }
    run.write_json("flowline_report.json", report);
    return true;
}

}  // namespace

SpectralBoundaryData default_bdata(std::size_t dim, double mean, double amplitude)
{
    SpectralBoundaryData b;
    b.left.push_back({0, std::vector<cplx>(dim, cplx(mean, 0.0))});
    b.left.push_back({-1, std::vector<cplx>(dim, cplx(amplitude, 0.0))});
    b.right.push_back({1, std::vector<cplx>(dim, cplx(amplitude, 0.0))});
    return b;
}

json to_json(const ExperimentConfig& c)
{
    json entries = json::array();
    for (const auto& e : c.family.schedule.entries)
        entries.push_back({{"r", e.r}, {"eps", e.eps}});
    return {
        {"command", c.command},
        {"out", c.out_dir.string()},
        {"seed", c.seed},
        {"dim", c.dim},
        {"grid", {{"t_modes", c.grid.t_modes}, {"max_spacing", c.grid.max_spacing}, {"s_samples", c.grid.s_samples}}},
        {"solver",
         {{"tol", c.solver.tol},
          {"max_iterations", c.solver.max_iterations},
          {"newton", c.solver.newton},
          {"contraction_limit", c.solver.contraction_limit}}},
        {"vfield", to_json(c.vfield)},
        {"solve", {{"r", c.solve.r}, {"eps", c.solve.eps}, {"n", c.solve.n}, {"bdata", to_json(c.solve.bdata)}}},
        {"check",
         {{"field", c.check.field},
          {"eps", c.check.eps},
          {"n", c.check.n},
          {"kappa", c.check.kappa},
          {"slack", c.check.slack},
          {"probe", {{"count", c.check.probe_count}, {"k", c.check.probe_k}, {"delta", c.check.probe_delta}}}}},
        {"family",
         {{"ell", c.family.schedule.ell},
          {"entries", entries},
          {"bdata", to_json(c.family.bdata)},
          {"auto_scale", c.family.auto_scale},
          {"estimates", c.family.estimates},
          {"flow_max_step", c.family.flow_max_step},
          {"quick", c.family.quick},
          {"threads", c.family.threads}}},
        {"flowline",
         {{"start", c.flowline.start},
          {"duration", c.flowline.duration},
          {"step", c.flowline.step},
          {"n", c.flowline.n},
          {"richardson", c.flowline.richardson}}},
    };
}

ExperimentConfig config_from_json(const json& j)
{
    std::vector<std::string> problems;
    ExperimentConfig c;
    Section top(&j, "", problems,
                {"command", "out", "seed", "dim", "grid", "solver", "vfield", "solve", "check", "family", "flowline"});
    c.command = top.get<std::string>("command", "");
    if (c.command != "solve" && c.command != "check" && c.command != "family" && c.command != "flowline")
        top.problem("command", "must be one of solve, check, family, flowline");
    c.out_dir = top.get<std::string>("out", "cyllab_out");
    c.seed = top.get<std::uint64_t>("seed", 7);
    c.dim = top.get<std::size_t>("dim", 1);
    if (c.dim < 1 || c.dim > 8)
        top.problem("dim", "must be in [1, 8]");

    Section grid(top.sub("grid"), "grid.", problems, {"t_modes", "max_spacing", "s_samples"});
    c.grid.t_modes = grid.get<std::size_t>("t_modes", 16);
    c.grid.max_spacing = grid.get<double>("max_spacing", 0.01);
    c.grid.s_samples = grid.get<std::size_t>("s_samples", 0);
    if (c.grid.t_modes < 2 || c.grid.t_modes % 2 != 0 || c.grid.t_modes > 1024)
        grid.problem("t_modes", "must be even and in [2, 1024]");
    if (!(c.grid.max_spacing > 0.0) || c.grid.max_spacing > 1.0)
        grid.problem("max_spacing", "must be in (0, 1]");
    if (c.grid.s_samples != 0 && (c.grid.s_samples < 9 || c.grid.s_samples > 4000000))
        grid.problem("s_samples", "must be 0 or in [9, 4000000]");

    Section solver(top.sub("solver"), "solver.", problems, {"tol", "max_iterations", "newton", "contraction_limit"});
    c.solver.tol = solver.get<double>("tol", 1e-10);
    c.solver.max_iterations = solver.get<std::size_t>("max_iterations", 200);
    c.solver.newton = solver.get<bool>("newton", true);
    c.solver.contraction_limit = solver.get<double>("contraction_limit", 0.9);
    if (!(c.solver.tol > 0.0))
        solver.problem("tol", "must be positive");
    if (c.solver.max_iterations < 1)
        solver.problem("max_iterations", "must be at least 1");
    if (!(c.solver.contraction_limit > 0.0) || c.solver.contraction_limit >= 1.0)
        solver.problem("contraction_limit", "must be in (0, 1)");

    const std::size_t d = 2 * c.dim;
    c.vfield = VectorFieldSequence(VectorFieldModel::scalar_linear(d, 0.5));
    if (const json* v = top.sub("vfield")) {
        try {
            json doc = v->is_string() ? load_json_file(v->get<std::string>()) : *v;
            c.vfield = sequence_from_json(doc, d);
        } catch (const ConfigError& e) {
            top.problem("vfield", e.what());
        }
    }

    Section solve(top.sub("solve"), "solve.", problems, {"r", "eps", "n", "bdata"});
    c.solve.r = solve.get<double>("r", 10.0);
    c.solve.eps = solve.get<double>("eps", 0.01);
    c.solve.n = solve.get<std::size_t>("n", 1);
    c.solve.bdata = read_bdata(solve.sub("bdata"), solve, "bdata", c.dim);
    if (!(c.solve.r > 0.0))
        solve.problem("r", "must be positive");
    if (!(c.solve.eps >= 0.0))
        solve.problem("eps", "must be nonnegative");
    if (c.solve.n < 1)
        solve.problem("n", "must be at least 1");

    Section check(top.sub("check"), "check.", problems, {"field", "eps", "n", "kappa", "slack", "probe"});
    c.check.field = check.get<std::string>("field", "");
    c.check.eps = check.get<double>("eps", 0.0);
    c.check.n = check.get<std::size_t>("n", 1);
    c.check.kappa = check.get<double>("kappa", 4.0);
    c.check.slack = check.get<double>("slack", 1e-6);
    Section probe(check.sub("probe"), "check.probe.", problems, {"count", "k", "delta"});
    c.check.probe_count = probe.get<std::size_t>("count", 0);
    c.check.probe_k = probe.get<int>("k", 1);
    c.check.probe_delta = probe.get<double>("delta", 0.5);
    if (!(c.check.eps >= 0.0))
        check.problem("eps", "must be nonnegative");
    if (c.check.n < 1)
        check.problem("n", "must be at least 1");
    if (!(c.check.kappa > 0.0))
        check.problem("kappa", "must be positive");
    if (!(c.check.slack > 0.0))
        check.problem("slack", "must be positive");
    if (c.check.probe_k < 0 || c.check.probe_k > 3)
        probe.problem("k", "must be in [0, 3]");
    if (!(c.check.probe_delta > 0.0) || c.check.probe_delta > 0.75)
        probe.problem("delta", "must be in (0, 0.75]");
    if (c.command == "check" && c.check.field.empty())
        check.problem("field", "required for the check command");

    Section fam(top.sub("family"), "family.", problems,
                {"ell", "r_list", "entries", "bdata", "auto_scale", "estimates", "flow_max_step", "quick", "threads"});
    double ell = fam.get<double>("ell", 0.5);
    if (fam.has("entries")) {
        c.family.schedule.ell = ell;
        try {
            for (const auto& e : fam.sub("entries")->get<std::vector<json>>())
                c.family.schedule.entries.push_back({e.at("r").get<double>(), e.at("eps").get<double>()});
        } catch (const json::exception&) {
            fam.problem("entries", "expected a list of {r, eps}");
        }
    } else {
        auto r_list = fam.get<std::vector<double>>("r_list", FamilySchedule::doubling(4));
        c.family.schedule = FamilySchedule::default_rule(ell, r_list);
    }
    c.family.bdata = read_bdata(fam.sub("bdata"), fam, "bdata", c.dim);
    c.family.auto_scale = fam.get<bool>("auto_scale", true);
    c.family.estimates = fam.get<bool>("estimates", true);
    c.family.flow_max_step = fam.get<double>("flow_max_step", 1e-3);
    c.family.quick = fam.get<bool>("quick", false);
    c.family.threads = fam.get<std::size_t>("threads", 0);
    if (!(c.family.flow_max_step > 0.0))
        fam.problem("flow_max_step", "must be positive");
    try {
        c.family.schedule.validate();
    } catch (const ConfigError& e) {
        fam.problem("entries", e.what());
    }

    Section flow(top.sub("flowline"), "flowline.", problems, {"start", "duration", "step", "n", "richardson"});
    std::vector<double> start(d, 0.0);
    start[0] = 0.5;
    c.flowline.start = flow.get<std::vector<double>>("start", start);
    c.flowline.duration = flow.get<double>("duration", 1.0);
    c.flowline.step = flow.get<double>("step", 0.01);
    c.flowline.n = flow.get<std::size_t>("n", 0);
    c.flowline.richardson = flow.get<bool>("richardson", true);
    if (c.flowline.start.size() != d)
        flow.problem("start", "must have " + std::to_string(d) + " entries");
    if (!(c.flowline.step > 0.0) || c.flowline.step > std::abs(c.flowline.duration))
        flow.problem("step", "must be positive and at most |duration|");

    if (!problems.empty()) {
        std::string msg = "invalid config:";
        for (const auto& p : problems)
            msg += "\n  " + p;
        throw ConfigError(msg);
    }
    if (c.family.quick)
        apply_quick_profile(c);
    return c;
}

void apply_quick_profile(ExperimentConfig& c)
{
    c.family.quick = true;
    c.grid.s_samples = 512;
    c.grid.t_modes = 32;
    if (c.family.schedule.entries.size() > 2)
        c.family.schedule.entries.resize(2);
}

json to_json(const RunManifest& m)
{
    json steps = json::array();
    for (const auto& s : m.steps)
        steps.push_back({{"index", s.index},
                         {"name", s.name},
                         {"status", s.status},
                         {"message", s.message},
                         {"seconds", s.seconds}});
    json j{{"config_hash", m.config_hash},
           {"artifact_version", m.artifact_version},
           {"command", m.command},
           {"steps", steps},
           {"files", m.files},
           {"exit_code", m.exit_code}};
    for (const auto& [k, v] : m.extras.items())
        j[k] = v;
    return j;
}

std::string config_hash(const ExperimentConfig& c) { return fnv1a(to_json(c).dump()); }

std::size_t thread_budget(std::size_t requested)
{
    std::size_t n = requested;
    if (n == 0)
        n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("CYLLAB_THREADS")) {
        char* end = nullptr;
        long cap = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && cap > 0)
            n = std::min(n, std::size_t(cap));
    }
    return std::max<std::size_t>(1, n);
}

RunManifest run(const ExperimentConfig& config)
{
    std::error_code ec;
    std::filesystem::create_directories(config.out_dir, ec);
    if (ec)
        throw IoError("cannot create output directory " + config.out_dir.string() + ": " + ec.message());
    Runner runner(config);
    runner.write_json("config.json", to_json(config));
    if (config.command == "solve")
        runner.step("solve", [&] { return run_solve(runner); });
    else if (config.command == "check")
        runner.step("check", [&] { return run_check(runner); });
    else if (config.command == "family")
        runner.step("family", [&] { return run_family_cmd(runner); });
    else if (config.command == "flowline")
        runner.step("flowline", [&] { return run_flowline(runner); });
    else
        throw ConfigError("unknown command '" + config.command + "'");
    return runner.finish();
}

}  // namespace cyllab
