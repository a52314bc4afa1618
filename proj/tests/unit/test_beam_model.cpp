// SPDX-License-Identifier: Apache-2.0
//
// test_beam_model.cpp

#include "batsonar/beam_model.hpp"
#include "batsonar/errors.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

using namespace batsonar;
using namespace batsonar::beam;

namespace
{
    double argmax_elevation(const BeamModel &m, double f, bool side_only)
    {
        double best = -1.0, at = 0.0;
        for (double el = -90.0; el <= 90.0; el += 0.01)
        {
            const Direction d{m.side_azimuth_center, el};
            const double g = side_only ? side_term(m, f, d) : gain(m, f, d);
            if (g > best)
            {
                best = g;
                at = el;
            }
        }
        return at;
    }

    farfield::TrackPoint point(double f_hz, double el, double az = 0.0)
    {
        farfield::TrackPoint p;
        p.frequency = f_hz;
        p.report.side_direction = {az, el};
        return p;
    }
}

TEST(BeamModel, DefaultScanMap)
{
    const auto m = BeamModel::defaults();
    EXPECT_DOUBLE_EQ(m.scan.elevation_at(10e3), 60.0);
    EXPECT_DOUBLE_EQ(m.scan.elevation_at(20e3), 20.0);
    EXPECT_NO_THROW(m.validate());
}

TEST(BeamModel, GainAtSidelobeCentre)
{
    const auto m = BeamModel::defaults();
    const double f = 11e3;
    const Direction at{0.0, m.scan.elevation_at(f)};
    EXPECT_NEAR(gain(m, f, at), m.side_gain + main_term(m, at), 1e-15);
    EXPECT_LT(main_term(m, at), 1e-6);
}

TEST(BeamModel, AzimuthMirrorSymmetry)
{
    const auto m = BeamModel::defaults();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> az(-80, 80), el(-80, 80), f(5e3, 25e3);
    for (int i = 0; i < 1000; ++i)
    {
        const double a = az(rng), e = el(rng), fr = f(rng);
        ASSERT_DOUBLE_EQ(gain(m, fr, {a, e}), gain(m, fr, {-a, e}));
    }
}

TEST(BeamModel, PositiveAndBounded)
{
    const auto m = BeamModel::defaults();
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> az(-179, 179), el(-90, 90), f(1e3, 40e3);
    for (int i = 0; i < 20000; ++i)
    {
        const double g = gain(m, f(rng), {az(rng), el(rng)});
        ASSERT_GT(g, 0.0);
        ASSERT_LE(g, m.main_gain + m.side_gain);
    }
}

TEST(BeamModel, ScanMonotoneAndAzimuthStable)
{
    auto rising = BeamModel::defaults();
    rising.scan = {-20.0, 4.0};
    for (const auto &m : {BeamModel::defaults(), rising})
    {
        double prev = 0.0;
        for (double f = m.scan_lo_hz; f <= m.scan_hi_hz; f += 500.0)
        {
            const double el = argmax_elevation(m, f, true);
            EXPECT_NEAR(el, m.scan.elevation_at(f), 0.01);
            if (f > m.scan_lo_hz)
            {
                EXPECT_EQ(el > prev, m.scan.slope_deg_per_khz > 0);
            }
            prev = el;
            double best = -1.0, best_az = 1e9;
            for (double az = -60; az <= 60; az += 0.5)
            {
                const double g = side_term(m, f, {az, m.scan.elevation_at(f)});
                if (g > best)
                {
                    best = g;
                    best_az = az;
                }
            }
            EXPECT_EQ(best_az, m.side_azimuth_center);
        }
    }
}

TEST(BeamModel, FrequencyResponsePeaks)
{
    const auto m = BeamModel::defaults();
    const auto low = frequency_response(m, {0, 20}, 5e3, 25e3, 100);
    const auto high = frequency_response(m, {0, 60}, 5e3, 25e3, 100);
    EXPECT_NE(low.peak_frequency(), high.peak_frequency());
    EXPECT_NEAR(low.peak_frequency(), 20e3, 100);
    EXPECT_NEAR(high.peak_frequency(), 10e3, 100);

    double best = -1, best_f = 0;
    for (std::size_t i = 0; i < low.frequencies.size(); ++i)
        if (gain(m, low.frequencies[i], {0, 20}) > best)
        {
            best = gain(m, low.frequencies[i], {0, 20});
            best_f = low.frequencies[i];
        }
    EXPECT_EQ(low.peak_frequency(), best_f);
}

TEST(BeamModel, FlatWithoutSidelobe)
{
    auto m = BeamModel::defaults();
    m.side_gain = 1e-300;
    m.main_width = 1e4;
    const auto r = frequency_response(m, {10, 30}, 5e3, 25e3, 250);
    const auto [lo, hi] = std::minmax_element(r.gains.begin(), r.gains.end());
    EXPECT_LT(*hi / *lo, 1.01);
}

TEST(Calibration, ExactAffineFit)
{
    std::vector<farfield::TrackPoint> track;
    for (double f = 10e3; f <= 20e3; f += 1e3)
        track.push_back(point(f, 5.0 + 2.0 * f * 1e-3, 3.0));
    const auto c = calibrate_from_track(track);
    EXPECT_NEAR(c.model.scan.intercept_deg, 5.0, 1e-9);
    EXPECT_NEAR(c.model.scan.slope_deg_per_khz, 2.0, 1e-9);
    EXPECT_NEAR(c.residual_rms, 0.0, 1e-9);
    EXPECT_DOUBLE_EQ(c.model.scan_lo_hz, 10e3);
    EXPECT_DOUBLE_EQ(c.model.scan_hi_hz, 20e3);
    EXPECT_NEAR(c.model.side_azimuth_center, 3.0, 1e-12);
}

TEST(Calibration, NoisyFitMatchesClosedForm)
{
    std::mt19937_64 rng(21);
    std::normal_distribution<double> noise(0.0, 0.5);
    std::vector<farfield::TrackPoint> track;
    std::vector<double> x, y;
    for (double f = 10e3; f <= 20e3; f += 250)
    {
        x.push_back(f * 1e-3);
        y.push_back(100.0 - 4.0 * f * 1e-3 + noise(rng));
        track.push_back(point(f, y.back()));
    }
    // Normal equations solved directly.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double a = (sy - b * sx) / n;
    const auto c = calibrate_from_track(track);
    EXPECT_NEAR(c.model.scan.slope_deg_per_khz, b, 1e-9);
    EXPECT_NEAR(c.model.scan.intercept_deg, a, 1e-7);
    EXPECT_NEAR(c.model.scan.slope_deg_per_khz, -4.0, 3.0 * 0.5 / std::sqrt(sxx - sx * sx / n));
}

TEST(Calibration, SinglePointRejected)
{
    EXPECT_THROW(calibrate_from_track({point(10e3, 30)}), PreconditionError);
}

TEST(BeamModel, ValidationAndFileRoundTrip)
{
    auto bad = BeamModel::defaults();
    bad.scan.slope_deg_per_khz = 0.0;
    EXPECT_THROW(bad.validate(), PreconditionError);
    bad = BeamModel::defaults();
    bad.scan = {200.0, -4.0};
    EXPECT_THROW(bad.validate(), PreconditionError);

    auto m = BeamModel::defaults();
    m.scan = {90.0, -6.0};
    m.side_width_az = 1.0 / 3.0;
    const auto path = std::filesystem::temp_directory_path() / "batsonar_beam.cfg";
    save_beam_model(path, m);
    const auto back = load_beam_model(path);
    EXPECT_EQ(back.scan.intercept_deg, 90.0);
    EXPECT_EQ(back.side_width_az, 1.0 / 3.0);
    EXPECT_EQ(back.to_key_values().entries(), m.to_key_values().entries());
    std::filesystem::remove(path);
}
