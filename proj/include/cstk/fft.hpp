#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <tuple>

#include <fftw3.h>

#include "error.hpp"

namespace cstk {

enum class FftDirection { forward = FFTW_FORWARD, backward = FFTW_BACKWARD };

namespace detail {

class FftPlans {
public:
    static FftPlans& instance()
    {
        static FftPlans plans;
        return plans;
    }

    fftw_plan get(std::size_t n0, std::size_t n1, FftDirection dir)
    {
        std::lock_guard lock(mutex_);
        auto key = std::make_tuple(n0, n1, int(dir));
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        auto* buf = fftw_alloc_complex(n0 * n1);
        unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fftw_plan p = n0 == 1 ? fftw_plan_dft_1d(int(n1), buf, buf, int(dir), flags)
                              : fftw_plan_dft_2d(int(n0), int(n1), buf, buf, int(dir), flags);
        fftw_free(buf);
        if (!p) throw NumericalGuardError("FFT plan creation failed");
        plans_.emplace(key, p);
        return p;
    }

    ~FftPlans()
    {
        for (auto& [k, p] : plans_) fftw_destroy_plan(p);
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> plans_;
};

} // namespace detail

// Unnormalized in-place DFT of an n0 x n1 row-major array (n0 = 1 for 1-D).
inline void fft_inplace(std::complex<double>* data, std::size_t n0, std::size_t n1, FftDirection dir)
{
    fftw_plan p = detail::FftPlans::instance().get(n0, n1, dir);
    auto* d = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(p, d, d);
}

} // namespace cstk
