// SPDX-License-Identifier: Apache-2.0
//
// mw_oracle.hpp
//
// Brute-force moving-window reference: enumerates window positions one by
// one over the unsorted samples and accumulates tokens per sample index.

#pragma once

#include "batsonar/decision.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace batsonar::oracle
{
    inline double level_winner(const std::vector<double> &v, double L, double l)
    {
        const double lo = *std::min_element(v.begin(), v.end());
        const double hi = *std::max_element(v.begin(), v.end());
        std::vector<double> tokens(v.size(), 0.0);
        for (long j = 0;; ++j)
        {
            const double x = lo + static_cast<double>(j) * l;
            std::size_t count = 0;
            for (double s : v)
                count += (s >= x && s <= x + L) ? 1 : 0;
            for (std::size_t i = 0; i < v.size(); ++i)
                if (v[i] >= x && v[i] <= x + L)
                    tokens[i] += static_cast<double>(count);
            if (x + L >= hi)
                break;
        }
        const double best = *std::max_element(tokens.begin(), tokens.end());
        double left = 0.0, right = 0.0;
        bool seen = false;
        for (std::size_t i = 0; i < v.size(); ++i)
        {
            if (tokens[i] != best)
                continue;
            left = seen ? std::min(left, v[i]) : v[i];
            right = seen ? std::max(right, v[i]) : v[i];
            seen = true;
        }
        return 0.5 * (left + right);
    }

    inline double moving_window(const std::vector<double> &values, const decision::MovingWindowConfig &cfg)
    {
        std::vector<double> domain = values;
        double L = cfg.window_length;
        double w = level_winner(domain, L, cfg.step);
        for (int k = 2; k <= cfg.levels; ++k)
        {
            std::vector<double> next;
            for (double s : values)
                if (s >= w - 0.5 * L && s <= w + 0.5 * L)
                    next.push_back(s);
            L = std::ldexp(cfg.window_length, -(k - 1));
            if (next.empty())
                continue;
            domain = next;
            w = level_winner(domain, L, cfg.step_at(k));
        }
        return w;
    }
}
