// SPDX-License-Identifier: Apache-2.0
//
// beam_model.hpp
//
// Parametric pinna gain: a Gaussian main lobe plus a sidelobe whose elevation
// scans linearly with frequency inside a band. Evaluated in the pinna frame.

#pragma once

#include "batsonar/farfield.hpp"
#include "batsonar/geometry.hpp"
#include "batsonar/kv_config.hpp"

#include <cstddef>
#include <filesystem>
#include <vector>

namespace batsonar::beam
{
    using geometry::Direction;

    // Sidelobe elevation centre: intercept + slope * f[kHz], degrees.
    struct ScanMap
    {
        double intercept_deg = 100.0;
        double slope_deg_per_khz = -4.0;

        double elevation_at(double frequency_hz) const { return intercept_deg + slope_deg_per_khz * frequency_hz * 1e-3; }
    };

    struct BeamModel
    {
        Direction main_center{0.0, 0.0};
        double main_width = 10.0; // Gaussian std, degrees
        double main_gain = 1.0;
        double side_width_el = 6.0;
        double side_width_az = 12.0;
        double side_gain = 0.7;
        double scan_lo_hz = 10e3;
        double scan_hi_hz = 20e3;
        ScanMap scan;
        double side_azimuth_center = 0.0;

        // Scaled-device defaults: sidelobe at 60 deg for 10 kHz sweeping down to 20 deg at 20 kHz.
        static BeamModel defaults() { return {}; }

        void validate() const;

        bool in_scan_band(double f) const { return f >= scan_lo_hz && f <= scan_hi_hz; }

        KeyValues to_key_values() const;
        // Keys absent from `kv` keep the value from `base`.
        static BeamModel from_key_values(const KeyValues &kv, const BeamModel &base = defaults());
    };

    double main_term(const BeamModel &m, const Direction &local);
    double side_term(const BeamModel &m, double frequency_hz, const Direction &local);

    // Linear gain; strictly positive.
    double gain(const BeamModel &m, double frequency_hz, const Direction &local);

    struct FrequencyResponse
    {
        std::vector<double> frequencies;
        std::vector<double> gains;
        std::size_t peak_index = 0;

        double peak_frequency() const { return frequencies[peak_index]; }
    };

    FrequencyResponse frequency_response(const BeamModel &m, const Direction &local, double f_lo, double f_hi,
                                         double df);

    struct Calibration
    {
        BeamModel model;
        double residual_rms = 0.0; // degrees
    };

    // Least-squares affine fit of sidelobe elevation against frequency. The
    // scan band becomes the track's frequency span and the sidelobe azimuth
    // the track mean; everything else comes from `base`.
    Calibration calibrate_from_track(const std::vector<farfield::TrackPoint> &track,
                                     const BeamModel &base = BeamModel::defaults());

    void save_beam_model(const std::filesystem::path &path, const BeamModel &m);
    BeamModel load_beam_model(const std::filesystem::path &path);
}
