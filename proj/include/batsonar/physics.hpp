// SPDX-License-Identifier: Apache-2.0
//
// physics.hpp

#pragma once

#include <cmath>
#include <numbers>

namespace batsonar
{
    // Air at 20 degC.
    inline constexpr double kSpeedOfSound = 343.0;

    inline constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
    inline constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }
}
