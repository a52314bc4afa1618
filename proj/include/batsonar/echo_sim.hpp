// SPDX-License-Identifier: Apache-2.0
//
// echo_sim.hpp
//
// LFM chirp generation and binaural echo synthesis through the beam model.
// Stands in for the physical acquisition rig: a point target, spherical
// spreading, a cos^n transmitter, per-ear frequency shaping and white noise.

#pragma once

#include "batsonar/beam_model.hpp"
#include "batsonar/geometry.hpp"
#include "batsonar/kv_config.hpp"

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace batsonar::echo
{
    using geometry::Direction;

    struct ChirpParams
    {
        double f_start = 5e3;
        double f_end = 20e3;
        double duration = 5e-3;
        double fs = 100e3;
        double amplitude = 1.0;

        void validate() const;
        std::size_t length() const;
        double sweep_rate() const { return (f_end - f_start) / duration; }
        double instantaneous_frequency(double t) const { return f_start + sweep_rate() * t; }
    };

    std::vector<double> make_chirp(const ChirpParams &p);

    struct Scene
    {
        Direction target_direction; // world frame
        double range = 1.5;         // metres
        double target_strength = 1.0;
    };

    struct NoiseConfig
    {
        bool enabled = true;
        double snr_db_at_boresight = 20.0;
        double tx_directivity_exponent = 2.0;
        std::uint64_t seed = 1;

        void validate() const;
    };

    // Identifies one pulse; the noise stream is a pure function of it.
    struct RecordKey
    {
        std::uint64_t site = 0;
        std::uint64_t direction_index = 0;
        std::uint64_t pulse = 0;
    };

    struct EchoTruth
    {
        Direction direction;
        double range = 0.0;
        int site = 0;
        int pulse = 0;
        std::size_t direction_index = 0;
    };

    struct EchoRecording
    {
        std::vector<float> left;
        std::vector<float> right;
        double fs = 0.0;
        EchoTruth truth;
    };

    struct CleanEcho
    {
        std::vector<double> left;
        std::vector<double> right;
        // Mean per-sample power over the chirp span, both ears, before the
        // transmitter attenuation. The noise floor is referenced to it.
        double reference_power = 0.0;
    };

    class EchoSynthesizer
    {
    public:
        explicit EchoSynthesizer(const ChirpParams &chirp, double record_seconds = 0.05);

        const ChirpParams &chirp() const { return chirp_; }
        std::size_t record_length() const { return record_length_; }

        // Integer sample delay for one ear, including the baseline path term.
        long delay_samples(const Scene &scene, const geometry::PinnaPose &pose) const;

        // Noise std giving `snr_db_at_boresight` against the echo as it would
        // arrive with the transmitter aimed at the target.
        static double noise_sigma(const CleanEcho &clean, const NoiseConfig &noise);

        // Noise-free channels. Throws PreconditionError if the echo does not fit the record.
        CleanEcho clean(const Scene &scene, const beam::BeamModel &beam, const geometry::DeviceConfig &device,
                        const NoiseConfig &noise) const;

        // Adds the pulse's noise realisation and converts to the stored sample format.
        EchoRecording finish(const CleanEcho &clean, const NoiseConfig &noise, const RecordKey &key) const;

        EchoRecording synthesize(const Scene &scene, const beam::BeamModel &beam,
                                 const geometry::DeviceConfig &device, const NoiseConfig &noise,
                                 const RecordKey &key = {}) const;

    private:
        std::vector<double> ear_channel(const Scene &scene, const beam::BeamModel &beam,
                                        const geometry::PinnaPose &pose) const;

        ChirpParams chirp_;
        std::size_t record_length_;
        std::size_t fft_size_;
        std::vector<std::complex<double>> chirp_spectrum_;
    };

    EchoRecording synthesize_echo(const ChirpParams &chirp, const Scene &scene, const beam::BeamModel &beam,
                                  const geometry::DeviceConfig &device, const NoiseConfig &noise,
                                  const RecordKey &key = {});

    // One placement of the device around the target. `offset` is added to every
    // grid direction (pointing error of that placement).
    struct Site
    {
        double range = 1.5;
        Direction offset{0.0, 0.0};
    };

    std::vector<Site> default_sites(int count = 8, double range = 1.5);

    struct AcquisitionPlan
    {
        std::vector<Direction> grid;
        std::vector<Site> sites;
        int pulses_per_cell = 1;
        ChirpParams chirp;
        beam::BeamModel beam;
        geometry::DeviceConfig device;
        NoiseConfig noise;
        double target_strength = 1.0;
        double record_seconds = 0.05;

        void validate() const;
        std::size_t record_count() const { return sites.size() * grid.size() * static_cast<std::size_t>(pulses_per_cell); }
        // Records are ordered site-major, then direction, then pulse.
        std::size_t record_index(std::size_t site, std::size_t direction, std::size_t pulse) const
        {
            return (site * grid.size() + direction) * static_cast<std::size_t>(pulses_per_cell) + pulse;
        }
        KeyValues manifest() const;
    };

    struct Dataset
    {
        std::vector<EchoRecording> records;
        KeyValues manifest;
    };

    // Called once per record with its plan index. May run concurrently from
    // several threads; each index is delivered exactly once.
    using RecordSink = std::function<void(std::size_t, const EchoRecording &)>;

    // Streams every record without holding the dataset in memory. OpenMP over
    // (site, direction) cells; each cell's clean echo is computed once.
    void for_each_record(const AcquisitionPlan &plan, const RecordSink &sink);
    void for_each_record_serial(const AcquisitionPlan &plan, const RecordSink &sink);

    // Bit-identical to each other.
    Dataset generate_dataset(const AcquisitionPlan &plan);
    Dataset generate_dataset_serial(const AcquisitionPlan &plan);

    KeyValues chirp_to_key_values(const ChirpParams &c);
    KeyValues device_to_key_values(const geometry::DeviceConfig &d);
    KeyValues noise_to_key_values(const NoiseConfig &n);
}
