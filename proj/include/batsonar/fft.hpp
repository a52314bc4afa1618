// SPDX-License-Identifier: Apache-2.0
//
// fft.hpp
//
// Thin RAII wrapper over FFTW's real-to-complex transforms.

#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace batsonar
{
    class RealFft
    {
    public:
        explicit RealFft(std::size_t n);
        ~RealFft();

        RealFft(const RealFft &) = delete;
        RealFft &operator=(const RealFft &) = delete;

        std::size_t size() const { return n_; }
        std::size_t bins() const { return n_ / 2 + 1; }

        // `in` shorter than size() is zero padded. `out` must hold bins() values.
        void forward(std::span<const double> in, std::span<std::complex<double>> out);

        // Inverse of forward(), including the 1/n scale. `out` must hold size() values.
        void inverse(std::span<const std::complex<double>> in, std::span<double> out);

    private:
        std::size_t n_;
        double *real_ = nullptr;
        void *spectrum_ = nullptr;
        void *forward_plan_ = nullptr;
        void *inverse_plan_ = nullptr;
    };

    // One transform per (thread, size). Planning is serialized internally.
    RealFft &thread_local_fft(std::size_t n);
}
