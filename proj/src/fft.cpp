// SPDX-License-Identifier: Apache-2.0
//
// fft.cpp

#include "batsonar/fft.hpp"

#include "batsonar/errors.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>

namespace batsonar
{
    namespace
    {
        // FFTW planning is not thread-safe; execution on distinct buffers is.
        std::mutex &planner_mutex()
        {
            static std::mutex m;
            return m;
        }
    }

    RealFft::RealFft(std::size_t n) : n_(n)
    {
        if (n < 2)
            throw PreconditionError("RealFft: size must be >= 2");
        std::lock_guard lock(planner_mutex());
        real_ = fftw_alloc_real(n_);
        auto *spec = fftw_alloc_complex(bins());
        spectrum_ = spec;
        const int ni = static_cast<int>(n_);
        forward_plan_ = fftw_plan_dft_r2c_1d(ni, real_, spec, FFTW_ESTIMATE);
        inverse_plan_ = fftw_plan_dft_c2r_1d(ni, spec, real_, FFTW_ESTIMATE);
    }

    RealFft::~RealFft()
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
        fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
        fftw_free(real_);
        fftw_free(spectrum_);
    }

    void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out)
    {
        if (in.size() > n_ || out.size() < bins())
            throw PreconditionError("RealFft::forward: buffer size mismatch");
        std::size_t i = 0;
        for (; i < in.size(); ++i)
            real_[i] = in[i];
        for (; i < n_; ++i)
            real_[i] = 0.0;
        fftw_execute(static_cast<fftw_plan>(forward_plan_));
        const auto *spec = static_cast<const fftw_complex *>(spectrum_);
        for (std::size_t k = 0; k < bins(); ++k)
            out[k] = {spec[k][0], spec[k][1]};
    }

    void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out)
    {
        if (in.size() < bins() || out.size() < n_)
            throw PreconditionError("RealFft::inverse: buffer size mismatch");
        auto *spec = static_cast<fftw_complex *>(spectrum_);
        for (std::size_t k = 0; k < bins(); ++k)
        {
            spec[k][0] = in[k].real();
            spec[k][1] = in[k].imag();
        }
        // c2r destroys its input, which is our private buffer.
        fftw_execute(static_cast<fftw_plan>(inverse_plan_));
        const double scale = 1.0 / static_cast<double>(n_);
        for (std::size_t i = 0; i < n_; ++i)
            out[i] = real_[i] * scale;
    }

    RealFft &thread_local_fft(std::size_t n)
    {
        thread_local std::map<std::size_t, std::unique_ptr<RealFft>> cache;
        auto &slot = cache[n];
        if (!slot)
            slot = std::make_unique<RealFft>(n);
        return *slot;
    }
}
