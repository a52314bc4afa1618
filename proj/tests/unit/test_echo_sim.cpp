// SPDX-License-Identifier: Apache-2.0
//
// test_echo_sim.cpp

#include "batsonar/echo_sim.hpp"
#include "batsonar/errors.hpp"
#include "batsonar/physics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

using namespace batsonar;
using namespace batsonar::echo;

namespace
{
    // Main lobe so broad and sidelobe so weak that the pinna filter is the identity to float precision.
    beam::BeamModel flat_beam()
    {
        auto m = beam::BeamModel::defaults();
        m.main_width = 1e7;
        m.side_gain = 1e-300;
        return m;
    }

    NoiseConfig quiet()
    {
        NoiseConfig n;
        n.enabled = false;
        return n;
    }

    double energy(const std::vector<float> &v)
    {
        double e = 0.0;
        for (float x : v)
            e += static_cast<double>(x) * x;
        return e;
    }

    AcquisitionPlan small_plan()
    {
        AcquisitionPlan p;
        p.grid = geometry::grid_directions({-14, 14, 14}, {20, 40, 10});
        p.sites = default_sites(3);
        p.pulses_per_cell = 4;
        return p;
    }
}

TEST(Chirp, LengthAndEndpoints)
{
    const ChirpParams c;
    EXPECT_EQ(c.length(), 500u);
    EXPECT_DOUBLE_EQ(c.instantaneous_frequency(0.0), c.f_start);
    EXPECT_DOUBLE_EQ(c.instantaneous_frequency(c.duration), c.f_end);
    const auto s = make_chirp(c);
    ASSERT_EQ(s.size(), 500u);
    EXPECT_EQ(s[0], 0.0);
    EXPECT_LE(*std::max_element(s.begin(), s.end()), c.amplitude);
}

TEST(Chirp, InvalidParametersRejected)
{
    ChirpParams c;
    c.f_end = 60e3;
    EXPECT_THROW(c.validate(), PreconditionError);
    c = {};
    c.duration = 0.0;
    EXPECT_THROW(c.validate(), PreconditionError);
}

TEST(EchoSim, BoresightOnsetAt875)
{
    const ChirpParams c;
    const EchoSynthesizer syn(c);
    const Scene scene{{0, 0}, 1.5, 1.0};
    const auto device = geometry::DeviceConfig::parallel(0);
    EXPECT_EQ(syn.delay_samples(scene, device.left), std::lround(c.fs * 2 * 1.5 / 343.0));
    EXPECT_EQ(syn.delay_samples(scene, device.left), 875);

    const auto rec = syn.synthesize(scene, flat_beam(), device, quiet());
    const auto chirp = make_chirp(c);
    const double scale = 1.0 / (1.5 * 1.5);
    for (std::size_t i = 0; i < rec.left.size(); ++i)
    {
        const double want = (i >= 875 && i < 875 + chirp.size()) ? scale * chirp[i - 875] : 0.0;
        ASSERT_NEAR(rec.left[i], want, 1e-6) << i;
    }
}

TEST(EchoSim, TargetStrengthIsLinear)
{
    const EchoSynthesizer syn(ChirpParams{});
    const auto device = geometry::DeviceConfig::parallel(0);
    const auto beam = beam::BeamModel::defaults();
    const auto a = syn.synthesize({{21, 35}, 1.5, 1.0}, beam, device, quiet());
    const auto b = syn.synthesize({{21, 35}, 1.5, 2.0}, beam, device, quiet());
    for (std::size_t i = 0; i < a.left.size(); ++i)
    {
        ASSERT_EQ(b.left[i], 2.0f * a.left[i]);
        ASSERT_EQ(b.right[i], 2.0f * a.right[i]);
    }
}

TEST(EchoSim, BoresightChannelsIdentical)
{
    const EchoSynthesizer syn(ChirpParams{});
    const auto rec = syn.synthesize({{0, 30}, 1.5, 1.0}, beam::BeamModel::defaults(),
                                    geometry::DeviceConfig::parallel(0), quiet());
    EXPECT_EQ(rec.left, rec.right);
}

TEST(EchoSim, OffAxisChannelsDifferByBaselineDelay)
{
    const EchoSynthesizer syn(ChirpParams{});
    const auto device = geometry::DeviceConfig::parallel(0);
    const Scene scene{{60, 10}, 1.5, 1.0};
    const long dl = syn.delay_samples(scene, device.left);
    const long dr = syn.delay_samples(scene, device.right);
    const double projection = 0.025 * std::cos(deg2rad(10)) * std::sin(deg2rad(60));
    EXPECT_EQ(dl, std::lround(100e3 * (3.0 - projection) / kSpeedOfSound));
    EXPECT_EQ(dr, std::lround(100e3 * (3.0 + projection) / kSpeedOfSound));
    const auto rec = syn.synthesize(scene, beam::BeamModel::defaults(), device, quiet());
    const long shift = dr - dl;
    for (long i = 0; i + shift < static_cast<long>(rec.left.size()); ++i)
        ASSERT_EQ(rec.left[static_cast<std::size_t>(i)], rec.right[static_cast<std::size_t>(i + shift)]);
}

TEST(EchoSim, EnergyFallsWithRange)
{
    const EchoSynthesizer syn(ChirpParams{}, 0.05);
    const auto device = geometry::DeviceConfig::parallel(0);
    double prev = 1e300;
    for (double r = 0.5; r <= 3.0; r += 0.25)
    {
        const double e = energy(syn.synthesize({{7, 30}, r, 1.0}, beam::BeamModel::defaults(), device, quiet()).left);
        EXPECT_LE(e, prev) << r;
        EXPECT_NEAR(e * std::pow(r, 4), energy(syn.synthesize({{7, 30}, 1.0, 1.0}, beam::BeamModel::defaults(),
                                                                 device, quiet()).left),
                    1e-4 * e * std::pow(r, 4));
        prev = e;
    }
}

TEST(EchoSim, RecordWindowOverflowRejected)
{
    const EchoSynthesizer syn(ChirpParams{}, 0.01);
    EXPECT_THROW(syn.synthesize({{0, 0}, 1.5, 1.0}, beam::BeamModel::defaults(),
                                geometry::DeviceConfig::parallel(0), quiet()),
                 PreconditionError);
}

// Measured SNR against the clean echo falls by 20 n log10(cos a) off the transmitter axis.
TEST(EchoSim, SnrLaw)
{
    const EchoSynthesizer syn(ChirpParams{});
    const auto device = geometry::DeviceConfig::parallel(0);
    NoiseConfig noise;
    for (double az : {0.0, 21.0, 42.0, 63.0})
    {
        const Scene scene{{az, 30}, 1.5, 1.0};
        const auto clean = syn.clean(scene, beam::BeamModel::defaults(), device, noise);
        double signal = 0.0;
        for (double v : clean.left)
            signal += v * v;
        for (double v : clean.right)
            signal += v * v;
        signal /= 2.0 * static_cast<double>(syn.chirp().length());
        double noise_power = 0.0;
        std::size_t count = 0;
        for (std::uint64_t p = 0; p < 100; ++p)
        {
            const auto rec = syn.finish(clean, noise, {0, 0, p});
            for (std::size_t i = 0; i < rec.left.size(); ++i)
            {
                const double dl = rec.left[i] - clean.left[i];
                const double dr = rec.right[i] - clean.right[i];
                noise_power += dl * dl + dr * dr;
                count += 2;
            }
        }
        noise_power /= static_cast<double>(count);
        const double measured = 10.0 * std::log10(signal / noise_power);
        const double want = noise.snr_db_at_boresight +
                            20.0 * noise.tx_directivity_exponent * std::log10(std::cos(deg2rad(az)));
        EXPECT_NEAR(measured, want, 1.0) << "az " << az;
    }
}

TEST(EchoSim, NoiseStreamKeyedByRecord)
{
    const EchoSynthesizer syn(ChirpParams{});
    const auto clean = syn.clean({{7, 30}, 1.5, 1.0}, beam::BeamModel::defaults(),
                                 geometry::DeviceConfig::parallel(0), NoiseConfig{});
    const auto a = syn.finish(clean, NoiseConfig{}, {1, 2, 3});
    const auto b = syn.finish(clean, NoiseConfig{}, {1, 2, 3});
    const auto c = syn.finish(clean, NoiseConfig{}, {1, 2, 4});
    EXPECT_EQ(a.left, b.left);
    EXPECT_NE(a.left, c.left);
    NoiseConfig other;
    other.seed = 2;
    EXPECT_NE(syn.finish(clean, other, {1, 2, 3}).left, a.left);
}

TEST(Acquisition, RecordCounts)
{
    AcquisitionPlan p;
    p.grid = geometry::grid_directions({-90, 85, 7}, {20, 55, 5});
    p.sites = default_sites(8);
    p.pulses_per_cell = 200;
    EXPECT_EQ(p.grid.size(), 26u * 8u);
    EXPECT_EQ(p.record_count(), 332800u);
    p.grid = geometry::grid_directions({-28, 28, 7}, {12, 68, 7});
    EXPECT_EQ(p.record_count(), 129600u);
    p.grid = {{0, 0}};
    p.sites = default_sites(1);
    p.pulses_per_cell = 1;
    EXPECT_EQ(p.record_count(), 1u);
}

TEST(Acquisition, EveryIndexDeliveredOnceSiteMajor)
{
    const auto plan = small_plan();
    std::vector<int> seen(plan.record_count(), 0);
    std::vector<EchoTruth> truth(plan.record_count());
    for_each_record(plan, [&](std::size_t i, const EchoRecording &r) {
#pragma omp critical
        {
            ++seen[i];
            truth[i] = r.truth;
        }
    });
    for (std::size_t s = 0; s < plan.sites.size(); ++s)
        for (std::size_t d = 0; d < plan.grid.size(); ++d)
            for (int p = 0; p < plan.pulses_per_cell; ++p)
            {
                const auto i = plan.record_index(s, d, static_cast<std::size_t>(p));
                ASSERT_EQ(seen[i], 1);
                EXPECT_EQ(truth[i].site, static_cast<int>(s));
                EXPECT_EQ(truth[i].direction_index, d);
                EXPECT_EQ(truth[i].pulse, p);
                EXPECT_EQ(truth[i].direction, plan.grid[d]);
            }
}

TEST(Acquisition, ParallelMatchesSerialAndIsDeterministic)
{
    const auto plan = small_plan();
    const auto a = generate_dataset(plan);
    const auto b = generate_dataset_serial(plan);
    const auto c = generate_dataset(plan);
    ASSERT_EQ(a.records.size(), plan.record_count());
    for (std::size_t i = 0; i < a.records.size(); ++i)
    {
        ASSERT_EQ(a.records[i].left, b.records[i].left);
        ASSERT_EQ(a.records[i].right, b.records[i].right);
        ASSERT_EQ(a.records[i].left, c.records[i].left);
    }
    EXPECT_EQ(a.manifest.entries(), b.manifest.entries());
    EXPECT_EQ(a.manifest.get_u64("acq.records", 0), plan.record_count());
}

TEST(Acquisition, ValidationErrors)
{
    auto p = small_plan();
    p.pulses_per_cell = 0;
    EXPECT_THROW(p.validate(), PreconditionError);
    p = small_plan();
    p.grid.clear();
    EXPECT_THROW(p.validate(), PreconditionError);
    EXPECT_THROW(default_sites(0), PreconditionError);
}
