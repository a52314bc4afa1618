// SPDX-License-Identifier: Apache-2.0
//
// beam_model.cpp

#include "batsonar/beam_model.hpp"

#include "batsonar/errors.hpp"

#include <algorithm>
#include <cmath>

namespace batsonar::beam
{
    void BeamModel::validate() const
    {
        if (!geometry::is_valid(main_center))
            throw PreconditionError("beam model: main_center out of range");
        if (!(main_width > 0.0 && side_width_el > 0.0 && side_width_az > 0.0))
            throw PreconditionError("beam model: lobe widths must be > 0");
        if (!(main_gain > 0.0 && side_gain > 0.0))
            throw PreconditionError("beam model: gains must be > 0");
        if (!(scan_lo_hz > 0.0 && scan_lo_hz < scan_hi_hz))
            throw PreconditionError("beam model: scan band needs 0 < f_lo < f_hi");
        if (scan.slope_deg_per_khz == 0.0 || !std::isfinite(scan.slope_deg_per_khz))
            throw PreconditionError("beam model: scan slope must be non-zero");
        for (const double f : {scan_lo_hz, scan_hi_hz})
        {
            const double mu = scan.elevation_at(f);
            if (mu < -90.0 || mu > 90.0)
                throw PreconditionError("beam model: sidelobe elevation leaves [-90, 90] inside the scan band");
        }
    }

    KeyValues BeamModel::to_key_values() const
    {
        KeyValues kv;
        kv.set("main_center_az", main_center.azimuth);
        kv.set("main_center_el", main_center.elevation);
        kv.set("main_width", main_width);
        kv.set("main_gain", main_gain);
        kv.set("side_width_el", side_width_el);
        kv.set("side_width_az", side_width_az);
        kv.set("side_gain", side_gain);
        kv.set("scan_lo_hz", scan_lo_hz);
        kv.set("scan_hi_hz", scan_hi_hz);
        kv.set("scan_intercept_deg", scan.intercept_deg);
        kv.set("scan_slope_deg_per_khz", scan.slope_deg_per_khz);
        kv.set("side_azimuth_center", side_azimuth_center);
        return kv;
    }

    BeamModel BeamModel::from_key_values(const KeyValues &kv, const BeamModel &base)
    {
        BeamModel m = base;
        m.main_center.azimuth = kv.get_double("main_center_az", m.main_center.azimuth);
        m.main_center.elevation = kv.get_double("main_center_el", m.main_center.elevation);
        m.main_width = kv.get_double("main_width", m.main_width);
        m.main_gain = kv.get_double("main_gain", m.main_gain);
        m.side_width_el = kv.get_double("side_width_el", m.side_width_el);
        m.side_width_az = kv.get_double("side_width_az", m.side_width_az);
        m.side_gain = kv.get_double("side_gain", m.side_gain);
        m.scan_lo_hz = kv.get_double("scan_lo_hz", m.scan_lo_hz);
        m.scan_hi_hz = kv.get_double("scan_hi_hz", m.scan_hi_hz);
        m.scan.intercept_deg = kv.get_double("scan_intercept_deg", m.scan.intercept_deg);
        m.scan.slope_deg_per_khz = kv.get_double("scan_slope_deg_per_khz", m.scan.slope_deg_per_khz);
        m.side_azimuth_center = kv.get_double("side_azimuth_center", m.side_azimuth_center);
        m.validate();
        return m;
    }

    double main_term(const BeamModel &m, const Direction &local)
    {
        const double d = geometry::angular_distance(local, m.main_center);
        return m.main_gain * std::exp(-d * d / (2.0 * m.main_width * m.main_width));
    }

    double side_term(const BeamModel &m, double frequency_hz, const Direction &local)
    {
        if (!m.in_scan_band(frequency_hz))
            return 0.0;
        const double del = local.elevation - m.scan.elevation_at(frequency_hz);
        const double daz = local.azimuth - m.side_azimuth_center;
        return m.side_gain * std::exp(-(del * del / (2.0 * m.side_width_el * m.side_width_el) +
                                        daz * daz / (2.0 * m.side_width_az * m.side_width_az)));
    }

    double gain(const BeamModel &m, double frequency_hz, const Direction &local)
    {
        if (!(frequency_hz > 0.0))
            throw PreconditionError("beam gain: frequency must be > 0");
        // The main lobe underflows to zero 40+ widths away; keep the floor positive.
        return std::max(main_term(m, local) + side_term(m, frequency_hz, local), 1e-300);
    }

    FrequencyResponse frequency_response(const BeamModel &m, const Direction &local, double f_lo, double f_hi,
                                         double df)
    {
        if (!(df > 0.0))
            throw PreconditionError("frequency response: df must be > 0");
        if (!(f_lo > 0.0) || f_hi < f_lo)
            throw PreconditionError("frequency response: empty band");
        FrequencyResponse r;
        for (std::size_t i = 0;; ++i)
        {
            const double f = f_lo + static_cast<double>(i) * df;
            if (f > f_hi + 1e-9 * df)
                break;
            r.frequencies.push_back(f);
            r.gains.push_back(gain(m, f, local));
        }
        r.peak_index = static_cast<std::size_t>(std::max_element(r.gains.begin(), r.gains.end()) - r.gains.begin());
        return r;
    }

    Calibration calibrate_from_track(const std::vector<farfield::TrackPoint> &track, const BeamModel &base)
    {
        if (track.size() < 2)
            throw PreconditionError("calibration needs at least two track points");
        const double n = static_cast<double>(track.size());
        double mean_f = 0.0;
        double mean_el = 0.0;
        double mean_az = 0.0;
        for (const auto &p : track)
        {
            mean_f += p.frequency * 1e-3;
            mean_el += p.report.side_direction.elevation;
            mean_az += p.report.side_direction.azimuth;
        }
        mean_f /= n;
        mean_el /= n;
        mean_az /= n;
        double sxx = 0.0;
        double sxy = 0.0;
        for (const auto &p : track)
        {
            const double dx = p.frequency * 1e-3 - mean_f;
            sxx += dx * dx;
            sxy += dx * (p.report.side_direction.elevation - mean_el);
        }
        if (!(sxx > 1e-18))
            throw NumericError("calibration is singular: all track frequencies are equal");

        Calibration c;
        c.model = base;
        c.model.scan.slope_deg_per_khz = sxy / sxx;
        c.model.scan.intercept_deg = mean_el - c.model.scan.slope_deg_per_khz * mean_f;
        double ss = 0.0;
        for (const auto &p : track)
        {
            const double r = p.report.side_direction.elevation - c.model.scan.elevation_at(p.frequency);
            ss += r * r;
        }
        c.residual_rms = std::sqrt(ss / n);
        const auto [lo, hi] = std::minmax_element(track.begin(), track.end(),
                                                  [](const auto &a, const auto &b) { return a.frequency < b.frequency; });
        c.model.scan_lo_hz = lo->frequency;
        c.model.scan_hi_hz = hi->frequency;
        c.model.side_azimuth_center = mean_az;
        c.model.validate();
        return c;
    }

    void save_beam_model(const std::filesystem::path &path, const BeamModel &m) { m.to_key_values().save(path); }

    BeamModel load_beam_model(const std::filesystem::path &path)
    {
        return BeamModel::from_key_values(KeyValues::load(path));
    }
}
