#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cyllab/experiment.hpp"
#include "cyllab/field_io.hpp"

using namespace cyllab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    auto p = fs::temp_directory_path() / "cyllab_experiment" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

json read(const fs::path& p)
{
    std::ifstream in(p);
    return json::parse(in);
}

std::string bytes(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("config round trip")
{
    json j{{"command", "family"},
           {"dim", 1},
           {"family", {{"ell", 0.5}, {"r_list", {10, 20, 40}}}},
           {"vfield", {{"limit", {{"kind", "linear"}, {"lambda", 0.5}}},
                       {"perturbation", {{"kind", "rotation"}, {"rate", 1.0}}},
                       {"schedule", {{"scale", 0.005}, {"power", 1.0}}}}}};
    auto c = config_from_json(j);
    CHECK(c.family.schedule.entries.size() == 3);
    auto once = to_json(c);
    auto twice = to_json(config_from_json(once));
    CHECK(once == twice);
    CHECK(config_hash(c) == config_hash(config_from_json(once)));
    c.seed = 8;
    CHECK(config_hash(c) != config_hash(config_from_json(once)));
}

TEST_CASE("quick profile")
{
    auto c = config_from_json({{"command", "family"}, {"family", {{"quick", true}}}});
    CHECK(c.grid.s_samples == 512);
    CHECK(c.grid.t_modes == 32);
    CHECK(c.family.schedule.entries.size() == 2);
    CHECK(to_json(config_from_json(to_json(c))) == to_json(c));
}

TEST_CASE("validation lists every offending key")
{
    json j{{"command", "solve"},
           {"colour", "red"},
           {"grid", {{"t_modes", 7}}},
           {"solver", {{"tol", -1.0}}},
           {"solve", {{"r", "ten"}}}};
    try {
        config_from_json(j);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        std::string m = e.what();
        CHECK(m.find("colour: unknown key") != std::string::npos);
        CHECK(m.find("grid.t_modes") != std::string::npos);
        CHECK(m.find("solver.tol") != std::string::npos);
        CHECK(m.find("solve.r: wrong type") != std::string::npos);
    }
    CHECK_THROWS_AS(config_from_json({{"command", "explode"}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"command", "solve"}, {"vfield", "/nonexistent/v.json"}}), IoError);
    CHECK_THROWS_AS(config_from_json({{"command", "check"}}), ConfigError);
}

TEST_CASE("thread budget honours CYLLAB_THREADS")
{
    setenv("CYLLAB_THREADS", "3", 1);
    CHECK(thread_budget(8) == 3);
    CHECK(thread_budget(2) == 2);
    setenv("CYLLAB_THREADS", "junk", 1);
    CHECK(thread_budget(5) == 5);
    unsetenv("CYLLAB_THREADS");
    CHECK(thread_budget(0) >= 1);
}

TEST_CASE("solve then check")
{
    auto dir = scratch("solve");
    auto c = config_from_json({{"command", "solve"}, {"out", dir.string()}, {"solve", {{"r", 4.0}, {"eps", 0.02}}}});
    auto m = run(c);
    CHECK(m.exit_code == 0);
    for (const auto& f : m.files)
        CHECK(fs::exists(dir / f));
    auto rep = read(dir / "solve_report.json");
    CHECK(rep["pass"] == true);
    CHECK(rep["report"]["final_residual"].get<double>() < 1e-8);

    auto cdir = scratch("check");
    auto cc = config_from_json({{"command", "check"},
                                {"out", cdir.string()},
                                {"check", {{"field", (dir / "field.json").string()}, {"eps", 0.02}}}});
    auto cm = run(cc);
    CHECK(cm.exit_code == 0);
    CHECK(fs::exists(cdir / "check_series.csv"));
    CHECK(read(cdir / "check_report.json")["estimates"]["pass"] == true);
}

TEST_CASE("check on a constant field passes")
{
    auto dir = scratch("constant");
    Cylinder cyl(3.0, 401, 8, 1);
    SpectralField u(cyl);
    for (std::size_t i = 0; i < cyl.s_samples; ++i)
        u.at(i, 0, 0) = 0.3;
    write_field(u, dir / "u.json");
    auto c = config_from_json({{"command", "check"},
                               {"out", (dir / "out").string()},
                               {"check", {{"field", (dir / "u.json").string()}}}});
    CHECK(run(c).exit_code == 0);
}

TEST_CASE("amplitude-2 data is a ball violation")
{
    auto dir = scratch("ball");
    auto c = config_from_json({{"command", "solve"},
                               {"out", dir.string()},
                               {"solve", {{"r", 3.0}, {"bdata", json::parse(R"([{"side":"left","k":0,"re":[2.0]}])")}}}});
    auto m = run(c);
    CHECK(m.exit_code != 0);
    CHECK(m.steps.front().status == "error");
    CHECK(read(dir / "manifest.json")["exit_code"] != 0);
}

TEST_CASE("flowline files and order")
{
    auto dir = scratch("flow");
    auto c = config_from_json({{"command", "flowline"}, {"out", dir.string()}});
    auto m = run(c);
    CHECK(m.exit_code == 0);
    double order = m.extras["richardson_order"].get<double>();
    CHECK(order > 3.8);
    CHECK(order < 4.2);
    std::ifstream in(dir / "flowline.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "tau,x_0,x_1");
    auto zero = config_from_json(
        {{"command", "flowline"}, {"out", dir.string()}, {"vfield", {{"kind", "zero"}}}, {"flowline", {{"richardson", false}}}});
    run(zero);
    CHECK(read(dir / "flowline_report.json")["end"][0] == 0.5);
}

TEST_CASE("family reports are reproducible")
{
    auto a = scratch("fam_a"), b = scratch("fam_b");
    json base{{"command", "family"}, {"family", {{"quick", true}, {"threads", 2}}}};
    base["out"] = a.string();
    CHECK(run(config_from_json(base)).exit_code == 0);
    base["out"] = b.string();
    base["family"]["threads"] = 1;
    run(config_from_json(base));
    CHECK(bytes(a / "family_report.json") == bytes(b / "family_report.json"));
    CHECK(bytes(a / "entry_01.csv") == bytes(b / "entry_01.csv"));
}

TEST_CASE("command line front end")
{
    const char* cli = std::getenv("CYLLAB_CLI");
    if (!cli)
        return;
    auto dir = scratch("cli");
    std::string base = std::string(cli) + " ";
    CHECK(std::system((base + "flowline --out " + (dir / "f").string() + " > /dev/null 2>&1").c_str()) == 0);
    CHECK(fs::exists(dir / "f" / "manifest.json"));
    CHECK(std::system((base + "solve --r -1 --out " + (dir / "bad").string() + " > /dev/null 2>&1").c_str()) != 0);
    CHECK(std::system((base + "solve --r 3 --bdata '[{\"side\":\"left\",\"k\":0,\"re\":[2.0]}]' --out " +
                       (dir / "ball").string() + " > /dev/null 2>&1")
                          .c_str()) != 0);
}
