// SPDX-License-Identifier: Apache-2.0
//
// features.hpp
//
// Echo to feature vector: endpoint detection, onset refinement, Hamming STFT,
// masking around the chirp ridge, and 30 band energies per ear.

#pragma once

#include "batsonar/echo_sim.hpp"
#include "batsonar/kv_config.hpp"

#include <array>
#include <complex>
#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace batsonar::features
{
    inline constexpr std::size_t kBands = 30;
    inline constexpr std::size_t kFeatures = 2 * kBands;

    struct EndpointConfig
    {
        double frame_seconds = 1e-3;
        double noise_seconds = 3e-3;   // leading span used for the noise RMS
        double threshold_factor = 4.0; // times the noise RMS
        double relative_floor = 0.05;  // times the loudest frame RMS
        int consecutive = 3;
    };

    struct Segment
    {
        std::size_t start = 0;
        std::size_t end = 0; // exclusive
    };

    // First run of >= `consecutive` frames whose RMS exceeds the threshold.
    // The run ends at the last loud frame before `consecutive` quiet ones.
    Segment detect_endpoints(std::span<const double> signal, double fs, const EndpointConfig &cfg);
    Segment detect_endpoints(std::span<const double> signal, double fs);

    struct StftConfig
    {
        std::size_t window = 100;
        std::size_t hop = 50;
        std::size_t nfft = 200;
    };

    struct Spectrogram
    {
        std::vector<double> values; // frame-major, |X|^2
        std::size_t frames = 0;
        std::size_t bins = 0;
        double df = 0.0;
        std::size_t frame_hop = 0;
        std::size_t window = 0;
        double fs = 0.0;

        double &at(std::size_t t, std::size_t f) { return values[t * bins + f]; }
        double at(std::size_t t, std::size_t f) const { return values[t * bins + f]; }
        double total() const;
    };

    std::vector<double> hamming(std::size_t n);

    // One-sided power spectra of Hamming-windowed frames, zero padded to nfft.
    Spectrogram spectrogram(std::span<const double> segment, double fs, const StftConfig &cfg);
    Spectrogram spectrogram(std::span<const double> segment, double fs);

    // Keeps, per frame, the bins within `halfwidth_bins` of the chirp's
    // instantaneous frequency at the frame centre. Frames centred outside the
    // chirp are cleared. Time zero is the first sample of the segment.
    Spectrogram mask_off_ridge(const Spectrogram &s, const echo::ChirpParams &chirp, int halfwidth_bins = 2);

    // Band k covers [5 + 0.5k, 5.5 + 0.5k) kHz: the trapezoid of the
    // time-summed power at its two edge bins.
    std::array<double, kBands> band_energies(const Spectrogram &s);

    enum class Normalization
    {
        none,
        unit_sum,
        log_zscore
    };

    std::string to_string(Normalization n);
    Normalization parse_normalization(const std::string &s);

    // Per-dimension z-score of log10(eps + e), fitted on training rows.
    class Normalizer
    {
    public:
        static constexpr double kEpsilon = 1e-12;

        static Normalizer fit(const std::vector<std::array<double, kFeatures>> &raw);

        std::array<double, kFeatures> apply(const std::array<double, kFeatures> &raw) const;

        const std::array<double, kFeatures> &mean() const { return mean_; }
        const std::array<double, kFeatures> &stddev() const { return std_; }

        KeyValues to_key_values() const;
        static Normalizer from_key_values(const KeyValues &kv);

    private:
        std::array<double, kFeatures> mean_{};
        std::array<double, kFeatures> std_{};
    };

    struct FeatureVector
    {
        std::array<double, kFeatures> values{};
        Normalization norm = Normalization::none;
    };

    // left || right. log_zscore needs a fitted normalizer.
    FeatureVector make_feature_vector(std::span<const double> left, std::span<const double> right,
                                      Normalization norm = Normalization::none,
                                      const Normalizer *normalizer = nullptr);

    struct FeatureConfig
    {
        EndpointConfig endpoint;
        StftConfig stft;
        int mask_halfwidth = 2;
        bool refine_onset = true;
        // Matched-filter search starts this many frames before the detected start.
        int refine_lead_frames = 3;

        KeyValues to_key_values() const;
        static FeatureConfig from_key_values(const KeyValues &kv, const FeatureConfig &base);
        static FeatureConfig from_key_values(const KeyValues &kv);
    };

    // Holds the chirp template; extract() is const and thread safe.
    class FeatureExtractor
    {
    public:
        FeatureExtractor(const echo::ChirpParams &chirp, const FeatureConfig &cfg);
        explicit FeatureExtractor(const echo::ChirpParams &chirp);

        // Onset of the chirp replica with the largest correlation inside `search`.
        std::size_t refine_onset(std::span<const double> signal, const Segment &search) const;

        // Chirp-length segment of one ear; whole-record search when nothing is detected.
        Segment echo_segment(std::span<const double> signal) const;

        std::array<double, kBands> ear_bands(std::span<const double> signal) const;

        // Unnormalized 60-vector.
        std::array<double, kFeatures> extract(const echo::EchoRecording &rec) const;

        const echo::ChirpParams &chirp() const { return chirp_; }
        const FeatureConfig &config() const { return cfg_; }

    private:
        const std::vector<std::complex<double>> &template_spectrum(std::size_t n) const;

        echo::ChirpParams chirp_;
        FeatureConfig cfg_;
        std::vector<double> chirp_samples_;
        mutable std::mutex spectra_mutex_;
        mutable std::map<std::size_t, std::vector<std::complex<double>>> spectra_;
    };

    struct FeatureRow
    {
        echo::EchoTruth truth;
        std::array<double, kFeatures> values{};
    };

    struct FeatureTable
    {
        KeyValues config;
        std::vector<FeatureRow> rows;
    };

    // OpenMP over records; identical output to the serial version.
    std::vector<FeatureRow> extract_batch(const FeatureExtractor &fx, const std::vector<echo::EchoRecording> &recs);
    std::vector<FeatureRow> extract_batch_serial(const FeatureExtractor &fx,
                                                 const std::vector<echo::EchoRecording> &recs);

    // Synthesizes and extracts in one pass without keeping the waveforms.
    std::vector<FeatureRow> simulate_features(const echo::AcquisitionPlan &plan, const FeatureExtractor &fx);

    // Columns: site, az, el, range, pulse, direction_index, f0..f59.
    void write_feature_table(const std::filesystem::path &path, const FeatureTable &t);
    FeatureTable read_feature_table(const std::filesystem::path &path);
}
