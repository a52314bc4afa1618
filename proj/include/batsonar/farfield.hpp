// SPDX-License-Identifier: Apache-2.0
//
// farfield.hpp
//
// Far-field projection of a planar complex aperture (the x = 0 plane, normal
// +x) and lobe analytics on the resulting pattern.

#pragma once

#include "batsonar/geometry.hpp"

#include <complex>
#include <cstddef>
#include <filesystem>
#include <vector>

namespace batsonar::farfield
{
    using geometry::Direction;
    using geometry::DirectionLattice;
    using cplx = std::complex<double>;

    // Cells are row-major: row index runs along +z, column index along +y,
    // both centred on the origin.
    struct ApertureField
    {
        std::size_t rows = 0;
        std::size_t cols = 0;
        std::vector<cplx> cells;
        double spacing = 0.0;   // metres per cell, both axes
        double frequency = 0.0; // Hz

        ApertureField() = default;
        ApertureField(std::size_t rows, std::size_t cols, double spacing, double frequency);

        cplx &at(std::size_t r, std::size_t c) { return cells[r * cols + c]; }
        const cplx &at(std::size_t r, std::size_t c) const { return cells[r * cols + c]; }
        double y(std::size_t c) const { return (static_cast<double>(c) - 0.5 * static_cast<double>(cols - 1)) * spacing; }
        double z(std::size_t r) const { return (static_cast<double>(r) - 0.5 * static_cast<double>(rows - 1)) * spacing; }

        double wavenumber() const;
        double wavelength() const;

        // Throws SamplingGuardError unless there are >= 5 cells per wavelength.
        void check_sampling() const;
    };

    // Uniform in-phase disc of the given radius. Edge cells are weighted by the
    // fraction of their area inside the disc (supersampled).
    ApertureField circular_piston(double radius, double frequency, double spacing);

    enum class Obliquity
    {
        kirchhoff, // (1 + cos psi) / 2
        none       // baffled piston (Rayleigh); pure array factor
    };

    struct FarFieldPattern
    {
        DirectionLattice lattice;
        std::vector<cplx> gains; // lattice.index(i_el, i_az)
        double frequency = 0.0;

        double magnitude(std::size_t i_el, std::size_t i_az) const { return std::abs(gains[lattice.index(i_el, i_az)]); }
        std::vector<double> magnitudes() const;
    };

    // Unnormalized sum: cell * exp(i k r.pos) * obliquity * cell_area.
    FarFieldPattern kirchhoff_far_field_raw(const ApertureField &aperture, const DirectionLattice &lattice,
                                            Obliquity obliquity = Obliquity::kirchhoff);

    // OpenMP over directions; each direction is summed in a fixed cell order so
    // the result is bit-identical to the serial reference.
    FarFieldPattern kirchhoff_far_field(const ApertureField &aperture, const DirectionLattice &lattice,
                                        Obliquity obliquity = Obliquity::kirchhoff);

    FarFieldPattern kirchhoff_far_field_serial(const ApertureField &aperture, const DirectionLattice &lattice,
                                               Obliquity obliquity = Obliquity::kirchhoff);

    // Scales gains so the peak magnitude is 1.
    void normalize_peak(FarFieldPattern &pattern);

    struct MainLobe
    {
        Direction direction;
        std::size_t i_el = 0;
        std::size_t i_az = 0;
        double peak = 0.0;
        double hpbw = 0.0; // degrees, elevation cut through the peak
    };

    struct LobeReport
    {
        Direction main_direction;
        double main_hpbw = 0.0;
        Direction side_direction;
        double side_level_db = 0.0;
        double energy_ratio = 0.0;
    };

    // Width over which |g| >= peak/sqrt(2) along one cut, linearly interpolated.
    double half_power_width(const std::vector<double> &angles, const std::vector<double> &magnitudes,
                            std::size_t peak_index);

    MainLobe find_main_lobe(const FarFieldPattern &pattern);

    // Throws NoSideLobeError if nothing but the main lobe peaks.
    LobeReport analyze_lobes(const FarFieldPattern &pattern);

    // First minimum above the main peak on its elevation cut, refined with a
    // parabola through the three lattice samples around it.
    double first_null_elevation(const FarFieldPattern &pattern);

    struct TrackPoint
    {
        double frequency = 0.0;
        LobeReport report;
    };

    std::vector<TrackPoint> sweep_lobe_track(const std::vector<ApertureField> &apertures,
                                             const DirectionLattice &lattice,
                                             Obliquity obliquity = Obliquity::kirchhoff);

    // CSV: metadata header line, then one line per aperture row of re,im pairs.
    void write_aperture_csv(const std::filesystem::path &path, const ApertureField &aperture);
    ApertureField read_aperture_csv(const std::filesystem::path &path);

    // CSV: metadata header line, column header, then az,el,re,im per lattice point.
    void write_pattern_csv(const std::filesystem::path &path, const FarFieldPattern &pattern,
                           const std::string &provenance = {});
}
