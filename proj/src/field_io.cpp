#include "cyllab/field_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace cyllab {

using nlohmann::json;

nlohmann::json field_header(const SpectralField& u, const std::string& table_name)
{
    const auto& cyl = u.cylinder();
    return {{"format", "cyllab-field"},
            {"version", 1},
            {"half_length", cyl.half_length},
            {"padding", Cylinder::padding},
            {"s_samples", cyl.s_samples},
            {"t_modes", cyl.t_modes},
            {"dim", cyl.dim},
            {"ball_constrained", u.ball_constrained()},
            {"columns", {"s_index", "mode_k", "component", "re", "im"}},
            {"coefficients", table_name}};
}

void write_field(const SpectralField& u, const std::filesystem::path& header_path)
{
    auto table = header_path;
    table.replace_extension(".csv");
    {
        std::ofstream h(header_path);
        if (!h)
            throw IoError("cannot write " + header_path.string());
        h << field_header(u, table.filename().string()).dump(2) << '\n';
    }
    std::FILE* f = std::fopen(table.c_str(), "w");
    if (!f)
        throw IoError("cannot write " + table.string());
    std::fputs("s_index,mode_k,component,re,im\n", f);
    const auto& cyl = u.cylinder();
    for (std::size_t i = 0; i < cyl.s_samples; ++i)
        for (int k = cyl.k_min(); k <= cyl.k_max(); ++k)
            for (std::size_t c = 0; c < cyl.dim; ++c) {
                cplx z = u.at(i, k, c);
                if (z == cplx{})
                    continue;
                std::fprintf(f, "%zu,%d,%zu,%.17g,%.17g\n", i, k, c, z.real(), z.imag());
            }
    if (std::fclose(f) != 0)
        throw IoError("failed writing " + table.string());
}

SpectralField read_field(const std::filesystem::path& header_path)
{
    std::ifstream h(header_path);
    if (!h)
        throw IoError("cannot open field header " + header_path.string());
    json head;
    try {
        h >> head;
    } catch (const json::exception& e) {
        throw IoError("malformed field header " + header_path.string() + ": " + e.what());
    }
    if (head.value("format", "") != "cyllab-field")
        throw IoError("not a cyllab field header: " + header_path.string());
    Cylinder cyl(head.at("half_length").get<double>(), head.at("s_samples").get<std::size_t>(),
                 head.at("t_modes").get<std::size_t>(), head.at("dim").get<std::size_t>());
    SpectralField u(cyl);
    u.set_ball_constrained(head.value("ball_constrained", false));
    auto table = header_path.parent_path() / head.at("coefficients").get<std::string>();
    std::ifstream t(table);
    if (!t)
        throw IoError("cannot open coefficient table " + table.string());
    std::string line;
    std::getline(t, line);
    std::size_t lineno = 1;
    while (std::getline(t, line)) {
        ++lineno;
        if (line.empty())
            continue;
        long long i = 0, c = 0;
        int k = 0;
        double re = 0, im = 0;
        if (std::sscanf(line.c_str(), "%lld,%d,%lld,%lf,%lf", &i, &k, &c, &re, &im) != 5)
            throw IoError(table.string() + ":" + std::to_string(lineno) + ": malformed row");
        if (i < 0 || std::size_t(i) >= cyl.s_samples || c < 0 || std::size_t(c) >= cyl.dim)
            throw IoError(table.string() + ":" + std::to_string(lineno) + ": index out of range");
        if (!cyl.in_band(k))
            throw BandError(table.string() + ":" + std::to_string(lineno) + ": mode outside the band");
        u.at(std::size_t(i), k, std::size_t(c)) = {re, im};
    }
    return u;
}

}  // namespace cyllab
