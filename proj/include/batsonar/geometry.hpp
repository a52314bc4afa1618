// SPDX-License-Identifier: Apache-2.0
//
// geometry.hpp
//
// Direction conventions for the sonar head. World and pinna frames are
// right handed with x forward (boresight), y to the left and z up.
// Azimuth is measured from +x towards +y, elevation from the xy-plane
// towards +z, both in degrees.

#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace batsonar::geometry
{
    struct Direction
    {
        double azimuth = 0.0;   // degrees, [-180, 180)
        double elevation = 0.0; // degrees, [-90, 90]

        friend bool operator==(const Direction &, const Direction &) = default;
    };

    // Checked constructor; throws PreconditionError when out of range.
    Direction make_direction(double azimuth, double elevation);
    bool is_valid(const Direction &d);

    using Vec3 = std::array<double, 3>;

    Vec3 to_unit_vector(const Direction &d);

    // Inverse of to_unit_vector. Input need not be normalized.
    Direction from_unit_vector(const Vec3 &v);

    // Great-circle angle between two directions, degrees.
    double angular_distance(const Direction &a, const Direction &b);

    enum class Side
    {
        left,
        right
    };

    struct PinnaPose
    {
        double forward_tilt = 0.0;     // degrees, boresight pitched upward
        double roll = 0.0;             // degrees about the boresight; 0 or 90
        Side side = Side::left;
        double baseline_offset = 0.025; // metres, half the microphone spacing

        void validate() const;

        // Microphone sits at +offset (left) or -offset (right) along y.
        Vec3 microphone_position() const;
    };

    enum class DeviceMode
    {
        parallel,
        orthogonal
    };

    struct DeviceConfig
    {
        PinnaPose left{0.0, 0.0, Side::left, 0.025};
        PinnaPose right{0.0, 0.0, Side::right, 0.025};
        DeviceMode mode = DeviceMode::parallel;

        void validate() const;

        static DeviceConfig parallel(double forward_tilt, double baseline_offset = 0.025);
        // Left pinna upright (elevation ear), right pinna rolled 90 degrees.
        static DeviceConfig orthogonal(double forward_tilt, double baseline_offset = 0.025);
    };

    // World direction seen from a pinna: pitch by -forward_tilt, then roll by
    // -roll about the boresight, applied to the unit vector.
    Direction local_direction(const PinnaPose &pose, const Direction &world);

    struct AngleRange
    {
        double min = 0.0;
        double max = 0.0;
        double step = 1.0;
    };

    // min, min+step, ... up to max inclusive; values past max are dropped.
    std::vector<double> axis_values(const AngleRange &range);

    // Elevation-major lattice (elevation outer, azimuth inner).
    struct DirectionLattice
    {
        std::vector<double> azimuths;
        std::vector<double> elevations;

        std::size_t size() const { return azimuths.size() * elevations.size(); }
        std::size_t index(std::size_t i_el, std::size_t i_az) const { return i_el * azimuths.size() + i_az; }
        Direction at(std::size_t i_el, std::size_t i_az) const { return {azimuths[i_az], elevations[i_el]}; }
        std::vector<Direction> directions() const;
    };

    DirectionLattice make_lattice(const AngleRange &azimuth, const AngleRange &elevation);

    std::vector<Direction> grid_directions(const AngleRange &azimuth, const AngleRange &elevation);
}
