// SPDX-License-Identifier: Apache-2.0
//
// echo_sim.cpp

#include "batsonar/echo_sim.hpp"

#include "batsonar/errors.hpp"
#include "batsonar/fft.hpp"
#include "batsonar/physics.hpp"
#include "batsonar/rng.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <random>
#include <string>

namespace batsonar::echo
{
    namespace
    {
        // Large enough for the chirp plus the ringing of a smooth gain curve.
        constexpr std::size_t kFilterFftSize = 4096;

        std::size_t record_samples(const ChirpParams &c, double record_seconds)
        {
            if (!(record_seconds > 0.0))
                throw PreconditionError("record window must be > 0 s");
            return static_cast<std::size_t>(std::llround(record_seconds * c.fs));
        }

        double dot(const geometry::Vec3 &a, const geometry::Vec3 &b)
        {
            return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        }

        Direction offset_direction(const Direction &d, const Direction &offset)
        {
            return geometry::make_direction(d.azimuth + offset.azimuth, d.elevation + offset.elevation);
        }
    }

    void ChirpParams::validate() const
    {
        const double nyquist = fs / 2.0;
        if (!(fs > 0.0))
            throw PreconditionError("chirp: fs must be > 0");
        if (!(f_start > 0.0 && f_start < nyquist && f_end > 0.0 && f_end < nyquist))
            throw PreconditionError("chirp: frequencies must lie in (0, fs/2)");
        if (!(duration > 0.0))
            throw PreconditionError("chirp: duration must be > 0");
        if (length() == 0)
            throw PreconditionError("chirp: duration shorter than one sample");
    }

    std::size_t ChirpParams::length() const
    {
        return static_cast<std::size_t>(std::llround(duration * fs));
    }

    std::vector<double> make_chirp(const ChirpParams &p)
    {
        p.validate();
        const double k = p.sweep_rate();
        std::vector<double> s(p.length());
        for (std::size_t n = 0; n < s.size(); ++n)
        {
            const double t = static_cast<double>(n) / p.fs;
            s[n] = p.amplitude * std::sin(2.0 * std::numbers::pi * (p.f_start * t + 0.5 * k * t * t));
        }
        return s;
    }

    void NoiseConfig::validate() const
    {
        if (!(tx_directivity_exponent >= 0.0))
            throw PreconditionError("noise: transmitter exponent must be >= 0");
        if (!std::isfinite(snr_db_at_boresight))
            throw PreconditionError("noise: snr must be finite");
    }

    EchoSynthesizer::EchoSynthesizer(const ChirpParams &chirp, double record_seconds)
        : chirp_(chirp), record_length_(record_samples(chirp, record_seconds)), fft_size_(kFilterFftSize)
    {
        chirp_.validate();
        const auto s = make_chirp(chirp_);
        if (s.size() * 2 > fft_size_)
            throw PreconditionError("chirp too long for the synthesis filter");
        auto &fft = thread_local_fft(fft_size_);
        chirp_spectrum_.resize(fft.bins());
        fft.forward(s, chirp_spectrum_);
    }

    long EchoSynthesizer::delay_samples(const Scene &scene, const geometry::PinnaPose &pose) const
    {
        const auto u = geometry::to_unit_vector(scene.target_direction);
        const double path = 2.0 * scene.range - dot(u, pose.microphone_position());
        return std::lround(chirp_.fs * path / kSpeedOfSound);
    }

    double EchoSynthesizer::noise_sigma(const CleanEcho &clean, const NoiseConfig &noise)
    {
        return std::sqrt(clean.reference_power) * std::pow(10.0, -noise.snr_db_at_boresight / 20.0);
    }

    std::vector<double> EchoSynthesizer::ear_channel(const Scene &scene, const beam::BeamModel &beam,
                                                     const geometry::PinnaPose &pose) const
    {
        const Direction local = geometry::local_direction(pose, scene.target_direction);
        auto &fft = thread_local_fft(fft_size_);

        std::vector<std::complex<double>> spectrum(chirp_spectrum_);
        const double df = chirp_.fs / static_cast<double>(fft_size_);
        spectrum[0] *= beam::main_term(beam, local);
        for (std::size_t k = 1; k < spectrum.size(); ++k)
            spectrum[k] *= beam::gain(beam, static_cast<double>(k) * df, local);

        std::vector<double> filtered(fft_size_);
        fft.inverse(spectrum, filtered);

        const long delay = delay_samples(scene, pose);
        const long chirp_len = static_cast<long>(chirp_.length());
        if (delay < 0 || delay + chirp_len > static_cast<long>(record_length_))
            throw PreconditionError("echo delay of " + std::to_string(delay) + " samples exceeds the record window");

        const double scale = scene.target_strength / (scene.range * scene.range);
        // Tail of the circular response is negative time (zero-phase filter).
        const long wrap = static_cast<long>(fft_size_ - fft_size_ / 4);
        const long n = static_cast<long>(fft_size_);
        std::vector<double> out(record_length_, 0.0);
        for (long m = 0; m < n; ++m)
        {
            const long tau = m < wrap ? m : m - n;
            const long idx = delay + tau;
            if (idx >= 0 && idx < static_cast<long>(record_length_))
                out[static_cast<std::size_t>(idx)] += scale * filtered[static_cast<std::size_t>(m)];
        }
        return out;
    }

    CleanEcho EchoSynthesizer::clean(const Scene &scene, const beam::BeamModel &beam,
                                     const geometry::DeviceConfig &device, const NoiseConfig &noise) const
    {
        if (!(scene.range > 0.0))
            throw PreconditionError("scene range must be > 0");
        if (!geometry::is_valid(scene.target_direction))
            throw PreconditionError("scene direction out of range");
        beam.validate();
        device.validate();
        noise.validate();

        CleanEcho out{ear_channel(scene, beam, device.left), ear_channel(scene, beam, device.right), 0.0};
        double energy = 0.0;
        for (const double v : out.left)
            energy += v * v;
        for (const double v : out.right)
            energy += v * v;
        out.reference_power = energy / (2.0 * static_cast<double>(chirp_.length()));

        const double c = std::cos(deg2rad(scene.target_direction.azimuth));
        const double tx = std::pow(std::max(0.0, c), noise.tx_directivity_exponent);
        for (auto &v : out.left)
            v *= tx;
        for (auto &v : out.right)
            v *= tx;
        return out;
    }

    EchoRecording EchoSynthesizer::finish(const CleanEcho &clean, const NoiseConfig &noise,
                                          const RecordKey &key) const
    {
        const double sigma = noise_sigma(clean, noise);
        EchoRecording rec;
        rec.fs = chirp_.fs;
        rec.left.resize(clean.left.size());
        rec.right.resize(clean.right.size());
        if (noise.enabled && sigma > 0.0)
        {
            std::mt19937_64 gen(derive_seed(noise.seed, {key.site, key.direction_index, key.pulse}));
            std::normal_distribution<double> normal(0.0, sigma);
            for (std::size_t i = 0; i < clean.left.size(); ++i)
                rec.left[i] = static_cast<float>(clean.left[i] + normal(gen));
            for (std::size_t i = 0; i < clean.right.size(); ++i)
                rec.right[i] = static_cast<float>(clean.right[i] + normal(gen));
        }
        else
        {
            std::transform(clean.left.begin(), clean.left.end(), rec.left.begin(),
                           [](double v) { return static_cast<float>(v); });
            std::transform(clean.right.begin(), clean.right.end(), rec.right.begin(),
                           [](double v) { return static_cast<float>(v); });
        }
        rec.truth.site = static_cast<int>(key.site);
        rec.truth.pulse = static_cast<int>(key.pulse);
        rec.truth.direction_index = static_cast<std::size_t>(key.direction_index);
        return rec;
    }

    EchoRecording EchoSynthesizer::synthesize(const Scene &scene, const beam::BeamModel &beam,
                                              const geometry::DeviceConfig &device, const NoiseConfig &noise,
                                              const RecordKey &key) const
    {
        const auto c = clean(scene, beam, device, noise);
        auto rec = finish(c, noise, key);
        rec.truth.direction = scene.target_direction;
        rec.truth.range = scene.range;
        return rec;
    }

    EchoRecording synthesize_echo(const ChirpParams &chirp, const Scene &scene, const beam::BeamModel &beam,
                                  const geometry::DeviceConfig &device, const NoiseConfig &noise,
                                  const RecordKey &key)
    {
        return EchoSynthesizer(chirp).synthesize(scene, beam, device, noise, key);
    }

    std::vector<Site> default_sites(int count, double range)
    {
        if (count < 1)
            throw PreconditionError("need at least one site");
        return std::vector<Site>(static_cast<std::size_t>(count), Site{range, {0.0, 0.0}});
    }

    void AcquisitionPlan::validate() const
    {
        if (grid.empty())
            throw PreconditionError("acquisition grid is empty");
        if (sites.empty())
            throw PreconditionError("acquisition needs at least one site");
        if (pulses_per_cell < 1)
            throw PreconditionError("pulses_per_cell must be >= 1");
        for (const auto &s : sites)
            if (!(s.range > 0.0))
                throw PreconditionError("site range must be > 0");
        chirp.validate();
        beam.validate();
        device.validate();
        noise.validate();
    }

    KeyValues chirp_to_key_values(const ChirpParams &c)
    {
        KeyValues kv;
        kv.set("chirp.f_start", c.f_start);
        kv.set("chirp.f_end", c.f_end);
        kv.set("chirp.duration", c.duration);
        kv.set("chirp.fs", c.fs);
        kv.set("chirp.amplitude", c.amplitude);
        return kv;
    }

    KeyValues device_to_key_values(const geometry::DeviceConfig &d)
    {
        KeyValues kv;
        kv.set("device.mode", d.mode == geometry::DeviceMode::parallel ? "parallel" : "orthogonal");
        kv.set("device.left.tilt", d.left.forward_tilt);
        kv.set("device.left.roll", d.left.roll);
        kv.set("device.left.baseline", d.left.baseline_offset);
        kv.set("device.right.tilt", d.right.forward_tilt);
        kv.set("device.right.roll", d.right.roll);
        kv.set("device.right.baseline", d.right.baseline_offset);
        return kv;
    }

    KeyValues noise_to_key_values(const NoiseConfig &n)
    {
        KeyValues kv;
        kv.set("noise.enabled", n.enabled ? "true" : "false");
        kv.set("noise.snr_db", n.snr_db_at_boresight);
        kv.set("noise.tx_exponent", n.tx_directivity_exponent);
        kv.set("noise.seed", n.seed);
        return kv;
    }

    KeyValues AcquisitionPlan::manifest() const
    {
        KeyValues kv;
        kv.merge(chirp_to_key_values(chirp));
        kv.merge(device_to_key_values(device));
        kv.merge(noise_to_key_values(noise));
        const KeyValues beam_kv = beam.to_key_values();
        for (const auto &[k, v] : beam_kv.entries())
            kv.set("beam." + k, v);
        kv.set("acq.pulses_per_cell", pulses_per_cell);
        kv.set("acq.target_strength", target_strength);
        kv.set("acq.record_seconds", record_seconds);
        kv.set("acq.directions", static_cast<std::uint64_t>(grid.size()));
        kv.set("acq.sites", static_cast<std::uint64_t>(sites.size()));
        kv.set("acq.records", static_cast<std::uint64_t>(record_count()));
        return kv;
    }

    namespace
    {
        void run_cell(const AcquisitionPlan &plan, const EchoSynthesizer &synth, std::size_t cell,
                      const RecordSink &sink)
        {
            const std::size_t site = cell / plan.grid.size();
            const std::size_t dir = cell % plan.grid.size();
            const Direction nominal = plan.grid[dir];
            Scene scene{offset_direction(nominal, plan.sites[site].offset), plan.sites[site].range,
                        plan.target_strength};
            const auto c = synth.clean(scene, plan.beam, plan.device, plan.noise);
            for (int p = 0; p < plan.pulses_per_cell; ++p)
            {
                auto rec = synth.finish(c, plan.noise, {site, dir, static_cast<std::uint64_t>(p)});
                rec.truth.direction = nominal;
                rec.truth.range = scene.range;
                sink(plan.record_index(site, dir, static_cast<std::size_t>(p)), rec);
            }
        }
    }

    void for_each_record(const AcquisitionPlan &plan, const RecordSink &sink)
    {
        plan.validate();
        const EchoSynthesizer synth(plan.chirp, plan.record_seconds);
        const long cells = static_cast<long>(plan.sites.size() * plan.grid.size());

        std::exception_ptr failure;
        std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic)
        for (long cell = 0; cell < cells; ++cell)
        {
            try
            {
                run_cell(plan, synth, static_cast<std::size_t>(cell), sink);
            }
            catch (...)
            {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
            }
        }
        if (failure)
            std::rethrow_exception(failure);
    }

    void for_each_record_serial(const AcquisitionPlan &plan, const RecordSink &sink)
    {
        plan.validate();
        const EchoSynthesizer synth(plan.chirp, plan.record_seconds);
        const std::size_t cells = plan.sites.size() * plan.grid.size();
        for (std::size_t cell = 0; cell < cells; ++cell)
            run_cell(plan, synth, cell, sink);
    }

    Dataset generate_dataset(const AcquisitionPlan &plan)
    {
        Dataset ds;
        ds.manifest = plan.manifest();
        ds.records.resize(plan.record_count());
        for_each_record(plan, [&](std::size_t i, const EchoRecording &r) { ds.records[i] = r; });
        return ds;
    }

    Dataset generate_dataset_serial(const AcquisitionPlan &plan)
    {
        Dataset ds;
        ds.manifest = plan.manifest();
        ds.records.resize(plan.record_count());
        for_each_record_serial(plan, [&](std::size_t i, const EchoRecording &r) { ds.records[i] = r; });
        return ds;
    }
}
