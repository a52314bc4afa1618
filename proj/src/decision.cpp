// SPDX-License-Identifier: Apache-2.0
//
// decision.cpp

#include "batsonar/decision.hpp"

#include "batsonar/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace batsonar::decision
{
    void MovingWindowConfig::validate() const
    {
        if (!(window_length > 0.0 && std::isfinite(window_length)))
            throw PreconditionError("moving window: L must be > 0");
        if (!(step > 0.0 && step <= window_length))
            throw PreconditionError("moving window: need 0 < l <= L");
        if (levels < 1)
            throw PreconditionError("moving window: levels must be >= 1");
    }

    double MovingWindowConfig::window_at(int level) const { return std::ldexp(window_length, -(level - 1)); }
    double MovingWindowConfig::step_at(int level) const { return std::ldexp(step, -(level - 1)); }

    double single_level_winner(std::span<const double> sorted, double window_length, double step)
    {
        if (sorted.empty())
            throw PreconditionError("moving window: no samples");
        const std::size_t n = sorted.size();
        const double lo = sorted.front();
        const double hi = sorted.back();

        // Difference array over sample positions; each window adds its count to a contiguous run.
        std::vector<std::int64_t> diff(n + 1, 0);
        for (std::int64_t j = 0;; ++j)
        {
            const double x = lo + static_cast<double>(j) * step;
            const double right = x + window_length;
            const auto a = std::lower_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
            const auto b = std::upper_bound(sorted.begin(), sorted.end(), right) - sorted.begin();
            if (b > a)
            {
                diff[static_cast<std::size_t>(a)] += b - a;
                diff[static_cast<std::size_t>(b)] -= b - a;
            }
            if (right >= hi)
                break;
        }

        std::int64_t tokens = 0;
        std::int64_t best = -1;
        std::size_t first = 0;
        std::size_t last = 0;
        for (std::size_t i = 0; i < n; ++i)
        {
            tokens += diff[i];
            if (tokens > best)
            {
                best = tokens;
                first = last = i;
            }
            else if (tokens == best)
                last = i;
        }
        return 0.5 * (sorted[first] + sorted[last]);
    }

    PulseTrainEstimate moving_window_detailed(std::span<const double> values, const MovingWindowConfig &cfg)
    {
        cfg.validate();
        if (values.empty())
            throw PreconditionError("moving window: empty input");
        for (const double v : values)
            if (!std::isfinite(v))
                throw PreconditionError("moving window: non-finite value");

        PulseTrainEstimate est;
        est.values.assign(values.begin(), values.end());
        est.config = cfg;

        std::vector<double> sorted(values.begin(), values.end());
        std::sort(sorted.begin(), sorted.end());

        double lo = sorted.front();
        double hi = sorted.back();
        double winner = 0.0;
        for (int level = 1; level <= cfg.levels; ++level)
        {
            const auto a = std::lower_bound(sorted.begin(), sorted.end(), lo);
            const auto b = std::upper_bound(sorted.begin(), sorted.end(), hi);
            if (a == b)
                break;
            const std::span<const double> domain(&*a, static_cast<std::size_t>(b - a));
            const double L = cfg.window_at(level);
            winner = single_level_winner(domain, L, cfg.step_at(level));
            est.levels.push_back({L, cfg.step_at(level), lo, hi, domain.size(), winner});
            lo = winner - 0.5 * L;
            hi = winner + 0.5 * L;
        }
        est.result = winner;
        return est;
    }

    double moving_window_estimate(std::span<const double> values, const MovingWindowConfig &cfg)
    {
        return moving_window_detailed(values, cfg).result;
    }

    PulseTrainEstimate fuse_pulse_train(const std::vector<features::FeatureVector> &pulses,
                                        const estimator::NetworkParams &network, const MovingWindowConfig &cfg)
    {
        if (pulses.empty())
            throw PreconditionError("pulse train is empty");
        std::vector<double> values;
        values.reserve(pulses.size());
        for (const auto &p : pulses)
            values.push_back(estimator::predict(network, p));
        return moving_window_detailed(values, cfg);
    }
}
