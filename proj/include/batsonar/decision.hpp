// SPDX-License-Identifier: Apache-2.0
//
// decision.hpp
//
// Multi-level moving-window token counting over a pulse train's per-pulse
// angle estimates.

#pragma once

#include "batsonar/estimator.hpp"
#include "batsonar/features.hpp"

#include <span>
#include <vector>

namespace batsonar::decision
{
    struct MovingWindowConfig
    {
        double window_length = 8.0; // L, degrees
        double step = 1.0;          // l, degrees
        int levels = 3;             // p

        void validate() const;
        // Window length used at level k (1-based): L / 2^(k-1).
        double window_at(int level) const;
        double step_at(int level) const;
    };

    struct LevelResult
    {
        double window_length = 0.0;
        double step = 0.0;
        double domain_lo = 0.0; // samples considered lie in [domain_lo, domain_hi]
        double domain_hi = 0.0;
        std::size_t samples = 0;
        double winner = 0.0;
    };

    struct PulseTrainEstimate
    {
        std::vector<double> values;
        MovingWindowConfig config;
        double result = 0.0;
        std::vector<LevelResult> levels;
    };

    // One level on an ascending sequence: windows [x_j, x_j + L] with
    // x_j = lo + j*l, stopping at the first window that reaches the maximum.
    // Every sample inside a window gains that window's sample count. Ties
    // resolve to the midpoint of the leftmost and rightmost maximal samples.
    double single_level_winner(std::span<const double> sorted, double window_length, double step);

    PulseTrainEstimate moving_window_detailed(std::span<const double> values, const MovingWindowConfig &cfg);
    double moving_window_estimate(std::span<const double> values, const MovingWindowConfig &cfg);

    PulseTrainEstimate fuse_pulse_train(const std::vector<features::FeatureVector> &pulses,
                                        const estimator::NetworkParams &network, const MovingWindowConfig &cfg);
}
