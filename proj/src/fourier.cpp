#include "cyllab/fourier.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

namespace cyllab {

namespace {

// The planner is not thread-safe; execution with new arrays is.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

fftw_plan make_plan(std::size_t points, std::size_t dim, int sign)
{
    std::vector<cplx> buf(points * dim);
    auto* p = reinterpret_cast<fftw_complex*>(buf.data());
    int n = int(points);
    return fftw_plan_many_dft(1, &n, int(dim), p, nullptr, int(dim), 1, p, nullptr, int(dim), 1,
                              sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
}

}  // namespace

FourierGrid::FourierGrid(std::size_t t_modes, std::size_t dim, std::size_t points)
    : t_modes_(t_modes), dim_(dim), points_(points)
{
    if (points_ < t_modes_)
        throw InvalidGrid("physical grid coarser than the mode band");
    std::lock_guard lock(planner_mutex());
    backward_ = make_plan(points_, dim_, FFTW_BACKWARD);
    forward_ = make_plan(points_, dim_, FFTW_FORWARD);
}

FourierGrid::~FourierGrid()
{
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(backward_));
    fftw_destroy_plan(static_cast<fftw_plan>(forward_));
}

void FourierGrid::to_physical(std::span<const cplx> row, std::span<cplx> values) const
{
    const int kmin = 1 - int(t_modes_ / 2);
    std::fill(values.begin(), values.end(), cplx{});
    for (std::size_t j = 0; j < t_modes_; ++j) {
        int k = int(j) + kmin;
        std::size_t slot = std::size_t((k + int(points_)) % int(points_));
        for (std::size_t c = 0; c < dim_; ++c)
            values[slot * dim_ + c] = row[j * dim_ + c];
    }
    auto* p = reinterpret_cast<fftw_complex*>(values.data());
    fftw_execute_dft(static_cast<fftw_plan>(backward_), p, p);
}

void FourierGrid::from_physical(std::span<const cplx> values, std::span<cplx> row) const
{
    std::vector<cplx> buf(values.begin(), values.end());
    auto* p = reinterpret_cast<fftw_complex*>(buf.data());
    fftw_execute_dft(static_cast<fftw_plan>(forward_), p, p);
    const int kmin = 1 - int(t_modes_ / 2);
    const double norm = 1.0 / double(points_);
    for (std::size_t j = 0; j < t_modes_; ++j) {
        int k = int(j) + kmin;
        std::size_t slot = std::size_t((k + int(points_)) % int(points_));
        for (std::size_t c = 0; c < dim_; ++c)
            row[j * dim_ + c] = buf[slot * dim_ + c] * norm;
    }
}

const FourierGrid& fourier_grid(std::size_t t_modes, std::size_t dim, std::size_t points)
{
    static std::mutex cache_mutex;
    // Never destroyed: plans outlive every caller, including static ones.
    static auto* cache =
        new std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::unique_ptr<FourierGrid>>;
    std::lock_guard lock(cache_mutex);
    auto& slot = (*cache)[{t_modes, dim, points}];
    if (!slot)
        slot = std::make_unique<FourierGrid>(t_modes, dim, points);
    return *slot;
}

}  // namespace cyllab
