// SPDX-License-Identifier: Apache-2.0
//
// geometry.cpp

#include "batsonar/geometry.hpp"

#include "batsonar/errors.hpp"
#include "batsonar/physics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace batsonar::geometry
{
    namespace
    {
        using Mat3 = std::array<std::array<double, 3>, 3>;

        Vec3 rotate(const Mat3 &m, const Vec3 &v)
        {
            Vec3 out{};
            for (int r = 0; r < 3; ++r)
                out[r] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2];
            return out;
        }

        // Pitch that brings a direction at elevation `tilt` onto the x axis.
        Mat3 pitch_down(double tilt_deg)
        {
            const double c = std::cos(deg2rad(tilt_deg));
            const double s = std::sin(deg2rad(tilt_deg));
            return {{{c, 0.0, s}, {0.0, 1.0, 0.0}, {-s, 0.0, c}}};
        }

        Mat3 roll_about_x(double roll_deg)
        {
            const double c = std::cos(deg2rad(roll_deg));
            const double s = std::sin(deg2rad(roll_deg));
            return {{{1.0, 0.0, 0.0}, {0.0, c, -s}, {0.0, s, c}}};
        }

        double wrap_azimuth(double az)
        {
            double w = std::fmod(az + 180.0, 360.0);
            if (w < 0.0)
                w += 360.0;
            return w - 180.0;
        }
    }

    bool is_valid(const Direction &d)
    {
        return std::isfinite(d.azimuth) && std::isfinite(d.elevation) && d.azimuth >= -180.0 && d.azimuth < 180.0 &&
               d.elevation >= -90.0 && d.elevation <= 90.0;
    }

    Direction make_direction(double azimuth, double elevation)
    {
        const Direction d{azimuth, elevation};
        if (!is_valid(d))
            throw PreconditionError("direction out of range: az=" + std::to_string(azimuth) +
                                    " el=" + std::to_string(elevation));
        return d;
    }

    Vec3 to_unit_vector(const Direction &d)
    {
        const double az = deg2rad(d.azimuth);
        const double el = deg2rad(d.elevation);
        return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
    }

    Direction from_unit_vector(const Vec3 &v)
    {
        const double horiz = std::hypot(v[0], v[1]);
        const double el = rad2deg(std::atan2(v[2], horiz));
        const double az = horiz > 0.0 ? rad2deg(std::atan2(v[1], v[0])) : 0.0;
        return {wrap_azimuth(az), el};
    }

    double angular_distance(const Direction &a, const Direction &b)
    {
        const auto u = to_unit_vector(a);
        const auto v = to_unit_vector(b);
        const double dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
        // atan2 form stays accurate near 0 and 180 degrees.
        const Vec3 cross{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
        return rad2deg(std::atan2(std::hypot(cross[0], cross[1], cross[2]), dot));
    }

    void PinnaPose::validate() const
    {
        if (!(forward_tilt >= 0.0 && forward_tilt <= 90.0))
            throw PreconditionError("pinna forward_tilt must lie in [0, 90]");
        if (roll != 0.0 && roll != 90.0)
            throw PreconditionError("pinna roll must be 0 or 90");
        if (!(baseline_offset >= 0.0))
            throw PreconditionError("pinna baseline_offset must be >= 0");
    }

    Vec3 PinnaPose::microphone_position() const
    {
        return {0.0, side == Side::left ? baseline_offset : -baseline_offset, 0.0};
    }

    void DeviceConfig::validate() const
    {
        left.validate();
        right.validate();
        if (left.side != Side::left || right.side != Side::right)
            throw PreconditionError("device pinnae must be tagged left/right");
        if (mode == DeviceMode::parallel && (left.roll != 0.0 || right.roll != 0.0))
            throw PreconditionError("parallel device requires both rolls = 0");
        if (mode == DeviceMode::orthogonal && std::abs(left.roll - right.roll) != 90.0)
            throw PreconditionError("orthogonal device requires |left.roll - right.roll| = 90");
    }

    DeviceConfig DeviceConfig::parallel(double forward_tilt, double baseline_offset)
    {
        DeviceConfig d;
        d.left = {forward_tilt, 0.0, Side::left, baseline_offset};
        d.right = {forward_tilt, 0.0, Side::right, baseline_offset};
        d.mode = DeviceMode::parallel;
        d.validate();
        return d;
    }

    DeviceConfig DeviceConfig::orthogonal(double forward_tilt, double baseline_offset)
    {
        DeviceConfig d;
        d.left = {forward_tilt, 0.0, Side::left, baseline_offset};
        d.right = {forward_tilt, 90.0, Side::right, baseline_offset};
        d.mode = DeviceMode::orthogonal;
        d.validate();
        return d;
    }

    Direction local_direction(const PinnaPose &pose, const Direction &world)
    {
        const auto v = rotate(pitch_down(pose.forward_tilt), to_unit_vector(world));
        return from_unit_vector(rotate(roll_about_x(pose.roll), v));
    }

    std::vector<double> axis_values(const AngleRange &range)
    {
        if (!(range.step > 0.0))
            throw PreconditionError("angle range step must be > 0");
        if (range.min > range.max)
            throw PreconditionError("empty angle range: min > max");
        std::vector<double> out;
        const double slack = 1e-9 * range.step;
        for (std::size_t i = 0;; ++i)
        {
            const double v = range.min + static_cast<double>(i) * range.step;
            if (v > range.max + slack)
                break;
            out.push_back(v);
        }
        return out;
    }

    std::vector<Direction> DirectionLattice::directions() const
    {
        std::vector<Direction> out;
        out.reserve(size());
        for (double el : elevations)
            for (double az : azimuths)
                out.push_back({az, el});
        return out;
    }

    DirectionLattice make_lattice(const AngleRange &azimuth, const AngleRange &elevation)
    {
        return {axis_values(azimuth), axis_values(elevation)};
    }

    std::vector<Direction> grid_directions(const AngleRange &azimuth, const AngleRange &elevation)
    {
        return make_lattice(azimuth, elevation).directions();
    }
}
