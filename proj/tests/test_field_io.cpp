#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cyllab/field_io.hpp"

using namespace cyllab;
namespace fs = std::filesystem;

TEST_CASE("field round trip is exact")
{
    auto dir = fs::temp_directory_path() / "cyllab_field_io";
    fs::create_directories(dir);
    Cylinder c(1.5, 53, 6, 2);
    SpectralField u(c);
    u.at(0, -2, 1) = cplx(0.1, 1.0 / 3.0);
    u.at(52, 3, 0) = cplx(-1e-300, 2.0);
    u.at(20, 0, 0) = cplx(std::acos(-1.0), 0.0);
    u.set_ball_constrained(true);
    write_field(u, dir / "u.json");
    CHECK(fs::exists(dir / "u.csv"));
    auto v = read_field(dir / "u.json");
    CHECK(v.cylinder() == c);
    CHECK(max_coeff_diff(u, v) == 0.0);
    CHECK(v.ball_constrained());
    auto h = field_header(u, "u.csv");
    CHECK(h["format"] == "cyllab-field");
}

TEST_CASE("missing or broken files")
{
    auto dir = fs::temp_directory_path() / "cyllab_field_io";
    fs::create_directories(dir);
    CHECK_THROWS_AS(read_field(dir / "nope.json"), IoError);
    std::ofstream(dir / "bad.json") << "{ not json";
    CHECK_THROWS(read_field(dir / "bad.json"));
}
