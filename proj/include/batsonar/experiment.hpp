// SPDX-License-Identifier: Apache-2.0
//
// experiment.hpp
//
// End-to-end scenario runners: acquisition plan, feature extraction,
// cross-validated training, pulse-train fusion and the report bundle.
// Every knob lives in ExperimentConfig, which round-trips through KeyValues.

#pragma once

#include "batsonar/beam_model.hpp"
#include "batsonar/decision.hpp"
#include "batsonar/echo_sim.hpp"
#include "batsonar/evaluation.hpp"
#include "batsonar/features.hpp"
#include "batsonar/geometry.hpp"
#include "batsonar/kv_config.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace batsonar::experiment
{
    enum class Mode
    {
        parallel,
        orthogonal,
        robustness
    };

    std::string to_string(Mode m);
    Mode parse_mode(const std::string &s);

    struct ExperimentConfig
    {
        Mode mode = Mode::parallel;
        std::uint64_t seed = 1;

        geometry::AngleRange azimuth{-84.0, 84.0, 7.0};
        geometry::AngleRange elevation{20.0, 55.0, 5.0};
        int sites = 8;
        double site_range = 1.5;
        int pulses_per_cell = 200;
        double target_strength = 1.0;
        double record_seconds = 0.05;

        echo::ChirpParams chirp;
        beam::BeamModel beam;
        geometry::DeviceConfig device;
        echo::NoiseConfig noise;
        features::FeatureConfig features;
        evaluation::CvConfig cv;
        decision::MovingWindowConfig moving_window;

        std::vector<double> azimuth_limits{0, 10, 20, 30, 40, 50, 60, 70, 80, 90};
        std::vector<int> train_sizes{3, 5, 10, 15, 20};
        std::vector<double> thresholds{1, 3, 5};
        std::vector<double> window_lengths{10, 5, 2};
        std::vector<double> cdf_thresholds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
        int fused_train_size = 10;

        int robustness_scenes = 50;
        int robustness_pulses = 10;
        geometry::AngleRange robustness_azimuth{-28.0, 28.0, 0.0};
        geometry::AngleRange robustness_elevation{12.0, 68.0, 0.0};
        double robustness_range_min = 1.0;
        double robustness_range_max = 2.0;

        // Names: parallel, orthogonal, robustness (also parallel-2.1, orthogonal-2.2).
        static ExperimentConfig preset(const std::string &name);

        void validate() const;
        KeyValues to_key_values() const;
        // Keys absent from `kv` keep the value from `base`.
        static ExperimentConfig from_key_values(const KeyValues &kv, const ExperimentConfig &base);

        echo::AcquisitionPlan acquisition_plan() const;
        std::vector<geometry::Direction> grid() const;
    };

    // CSV bodies and SVGs keyed by file name; every CSV is written behind the
    // provenance header of `config`.
    struct ReportBundle
    {
        KeyValues config;
        std::map<std::string, std::string> csv;
        std::map<std::string, std::string> svg;
        KeyValues summary;

        void write(const std::filesystem::path &dir) const;
    };

    std::vector<features::FeatureRow> simulate_features(const ExperimentConfig &cfg);

    ReportBundle evaluate_parallel(const std::vector<features::FeatureRow> &rows, const ExperimentConfig &cfg);
    ReportBundle evaluate_orthogonal(const std::vector<features::FeatureRow> &rows, const ExperimentConfig &cfg);
    // Trains on every row, then tests on freshly simulated random scenes.
    ReportBundle evaluate_robustness(const std::vector<features::FeatureRow> &rows, const ExperimentConfig &cfg);
    ReportBundle evaluate(const std::vector<features::FeatureRow> &rows, const ExperimentConfig &cfg);

    ReportBundle run_parallel_experiment(const ExperimentConfig &cfg);
    ReportBundle run_orthogonal_experiment(const ExperimentConfig &cfg);
    ReportBundle run_experiment(const ExperimentConfig &cfg);

    // Markdown digest of a bundle's summary values.
    std::string render_report(const KeyValues &config, const KeyValues &summary);

    geometry::DeviceConfig device_from_key_values(const KeyValues &kv, const geometry::DeviceConfig &base);
}
