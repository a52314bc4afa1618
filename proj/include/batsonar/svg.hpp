// SPDX-License-Identifier: Apache-2.0
//
// svg.hpp
//
// Minimal bar and line charts written straight to SVG text.

#pragma once

#include <string>
#include <vector>

namespace batsonar::svg
{
    struct Series
    {
        std::string label;
        std::vector<double> x;
        std::vector<double> y;
    };

    std::string bar_chart(const std::string &title, const std::vector<std::string> &labels,
                          const std::vector<double> &values, const std::string &y_label, double y_max);

    std::string line_chart(const std::string &title, const std::string &x_label, const std::string &y_label,
                           const std::vector<Series> &series, double y_min, double y_max);
}
