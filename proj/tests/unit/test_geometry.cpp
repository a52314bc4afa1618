// SPDX-License-Identifier: Apache-2.0
//
// test_geometry.cpp

#include "batsonar/errors.hpp"
#include "batsonar/geometry.hpp"
#include "batsonar/physics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace batsonar;
using namespace batsonar::geometry;

namespace
{
    // Independent rotation oracle: R_x(roll) * R_y(tilt) applied by hand.
    Direction oracle_local(double tilt, double roll, const Direction &w)
    {
        const double a = deg2rad(w.azimuth), e = deg2rad(w.elevation);
        double x = std::cos(e) * std::cos(a), y = std::cos(e) * std::sin(a), z = std::sin(e);
        const double t = deg2rad(tilt);
        const double x1 = std::cos(t) * x + std::sin(t) * z;
        const double z1 = -std::sin(t) * x + std::cos(t) * z;
        x = x1;
        z = z1;
        const double r = deg2rad(roll);
        const double y2 = std::cos(r) * y - std::sin(r) * z;
        const double z2 = std::sin(r) * y + std::cos(r) * z;
        return {rad2deg(std::atan2(y2, x)), rad2deg(std::asin(std::clamp(z2, -1.0, 1.0)))};
    }
}

TEST(Geometry, AxisUnitVectors)
{
    const auto b = to_unit_vector({0, 0});
    EXPECT_NEAR(b[0], 1.0, 1e-15);
    const auto y = to_unit_vector({90, 0});
    EXPECT_NEAR(y[1], 1.0, 1e-15);
    EXPECT_NEAR(y[0], 0.0, 1e-15);
    const auto z = to_unit_vector({0, 90});
    EXPECT_NEAR(z[2], 1.0, 1e-15);
}

TEST(Geometry, MakeDirectionRejectsOutOfRange)
{
    EXPECT_THROW(make_direction(0, 91), PreconditionError);
    EXPECT_THROW(make_direction(180, 0), PreconditionError);
    EXPECT_NO_THROW(make_direction(-180, -90));
}

TEST(Geometry, RoundTripProperty)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> az(-179.9, 179.9), el(-89.9, 89.9);
    for (int i = 0; i < 10000; ++i)
    {
        const Direction d{az(rng), el(rng)};
        const auto back = from_unit_vector(to_unit_vector(d));
        ASSERT_NEAR(back.azimuth, d.azimuth, 1e-9);
        ASSERT_NEAR(back.elevation, d.elevation, 1e-9);
    }
}

TEST(Geometry, LocalDirectionExamples)
{
    const PinnaPose identity{0, 0, Side::left};
    const auto a = local_direction(identity, {12, 34});
    EXPECT_NEAR(a.azimuth, 12, 1e-12);
    EXPECT_NEAR(a.elevation, 34, 1e-12);

    const PinnaPose tilted{40, 0, Side::left};
    const auto b = local_direction(tilted, {0, 40});
    EXPECT_NEAR(b.azimuth, 0, 1e-12);
    EXPECT_NEAR(b.elevation, 0, 1e-12);

    const PinnaPose rolled{0, 90, Side::right};
    const auto c = local_direction(rolled, {10, 0});
    EXPECT_NEAR(std::abs(c.elevation), 10, 1e-12);
    EXPECT_NEAR(c.azimuth, 0, 1e-12);
}

TEST(Geometry, LocalDirectionMatchesMatrixOracle)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> az(-80, 80), el(-60, 60), tilt(-45, 45);
    for (int i = 0; i < 2000; ++i)
    {
        const Direction w{az(rng), el(rng)};
        for (double roll : {0.0, 90.0})
        {
            const double t = tilt(rng);
            const auto got = local_direction(PinnaPose{t, roll, Side::left}, w);
            const auto want = oracle_local(t, roll, w);
            ASSERT_NEAR(angular_distance(got, want), 0.0, 1e-9) << w.azimuth << "," << w.elevation;
        }
    }
}

TEST(Geometry, TiltComposition)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> az(-60, 60), el(-40, 40), t(-30, 30);
    for (int i = 0; i < 1000; ++i)
    {
        const Direction w{az(rng), el(rng)};
        const double a = t(rng), b = t(rng);
        const auto twice = local_direction(PinnaPose{b, 0, Side::left}, local_direction(PinnaPose{a, 0, Side::left}, w));
        const auto once = local_direction(PinnaPose{a + b, 0, Side::left}, w);
        ASSERT_NEAR(angular_distance(twice, once), 0.0, 1e-9);
    }
}

// Rolled pinna: local elevation = asin(cos el * sin az), so the world azimuth
// is reproduced exactly at el = 0 and drifts as |el| grows.
TEST(Geometry, RolledPinnaElevationTracksAzimuth)
{
    const PinnaPose rolled{0, 90, Side::right};
    for (double az = -30; az <= 30; az += 1)
    {
        EXPECT_NEAR(std::abs(local_direction(rolled, {az, 0}).elevation), std::abs(az), 1e-9);
        for (double el = -30; el <= 30; el += 1)
        {
            const double exact = rad2deg(std::asin(std::cos(deg2rad(el)) * std::sin(deg2rad(az))));
            ASSERT_NEAR(std::abs(local_direction(rolled, {az, el}).elevation), std::abs(exact), 1e-9);
            if (std::abs(el) <= 15)
            {
                ASSERT_LE(std::abs(std::abs(local_direction(rolled, {az, el}).elevation) - std::abs(az)), 1.5)
                    << az << "," << el;
            }
        }
    }
}

TEST(Geometry, AxisValuesAndLattice)
{
    EXPECT_EQ(axis_values({20, 55, 5}).size(), 8u);
    EXPECT_EQ(axis_values({20, 55, 5}).back(), 55);
    EXPECT_EQ(grid_directions({-28, 28, 7}, {12, 68, 7}).size(), 81u);
    const auto one = grid_directions({0, 0, 1}, {0, 0, 1});
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0], (Direction{0, 0}));
    const auto lat = make_lattice({-10, 10, 10}, {0, 20, 10});
    EXPECT_EQ(lat.at(2, 0), (Direction{-10, 20}));
    EXPECT_EQ(lat.directions()[lat.index(1, 2)], (Direction{10, 10}));
}

TEST(Geometry, PoseValidation)
{
    EXPECT_THROW((PinnaPose{0, 45, Side::left}.validate()), PreconditionError);
    const auto mic = PinnaPose{0, 0, Side::right, 0.03}.microphone_position();
    EXPECT_DOUBLE_EQ(mic[1], -0.03);
    EXPECT_EQ(DeviceConfig::orthogonal(40).right.roll, 90.0);
}
