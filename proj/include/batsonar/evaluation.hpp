// SPDX-License-Identifier: Apache-2.0
//
// evaluation.hpp
//
// Tenfold cross-validation over pulse trains, accuracy ratios, pulse-train
// fusion sweeps and joint error CDFs.

#pragma once

#include "batsonar/decision.hpp"
#include "batsonar/estimator.hpp"
#include "batsonar/features.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace batsonar::evaluation
{
    // Consecutive pulses of every (site, direction) cell form `trains`
    // groups; rotation r tests on group r and trains on the rest.
    struct FoldPlan
    {
        int pulses_per_cell = 0;
        int trains = 0;
        int pulses_per_train = 0;

        int train_of(int pulse) const { return pulse / pulses_per_train; }
        bool is_test(int rotation, int pulse) const { return train_of(pulse) == rotation; }
    };

    FoldPlan make_folds(int pulses_per_cell, int trains = 10);

    double accuracy_within(std::span<const double> predictions, std::span<const double> truths, double eps_deg);

    // Fraction of rows with |az| <= t and |el| <= t, per threshold.
    std::vector<double> joint_error_cdf(std::span<const double> az_errors, std::span<const double> el_errors,
                                        std::span<const double> thresholds);

    enum class Target
    {
        elevation,
        azimuth
    };

    std::string to_string(Target t);
    double target_angle(const echo::EchoTruth &truth, Target t);

    struct CvConfig
    {
        estimator::TrainConfig train;
        features::Normalization normalization = features::Normalization::log_zscore;
        int trains = 10;
        std::uint64_t seed = 1;
        // Network output range = target span widened by this much on each side.
        double range_margin = 5.0;
    };

    struct CvResult
    {
        Target target = Target::elevation;
        std::vector<double> predictions; // one per input row, from the rotation that tested it
        std::vector<int> rotation;       // rotation that tested each row
        std::vector<double> fold_ratio5; // per-rotation share within +-5 deg
        std::vector<int> best_epochs;
        double angle_min = 0.0;
        double angle_max = 0.0;

        double mean_ratio5() const;
    };

    // Normalizer and network are fitted per rotation on its training rows only.
    CvResult cross_validate(const std::vector<features::FeatureRow> &rows, Target target, const CvConfig &cfg);
    CvResult cross_validate_serial(const std::vector<features::FeatureRow> &rows, Target target, const CvConfig &cfg);

    // Trains one network on every row (no held-out rotation).
    struct FittedModel
    {
        features::Normalizer normalizer;
        estimator::NetworkParams network;
        int best_epoch = 0;
    };

    FittedModel fit_model(const std::vector<features::FeatureRow> &rows, Target target, const CvConfig &cfg,
                          std::uint64_t seed);

    std::vector<std::array<double, features::kFeatures>> normalize_rows(const std::vector<features::FeatureRow> &rows,
                                                                        std::span<const std::size_t> idx,
                                                                        features::Normalization norm,
                                                                        const features::Normalizer *normalizer);

    // Test pulses of one rotation and direction, pooled over sites in
    // site-major order and cut into consecutive trains of `size` pulses.
    struct PulseTrainGroup
    {
        int rotation = 0;
        std::size_t direction_index = 0;
        std::vector<std::size_t> rows;
    };

    std::vector<PulseTrainGroup> pulse_train_groups(const std::vector<features::FeatureRow> &rows,
                                                    std::span<const int> rotation, int size);

    struct AngleStat
    {
        double angle = 0.0;
        double mean_error = 0.0; // signed, prediction - truth
        double std_error = 0.0;
        std::size_t count = 0;
    };

    // Grouped by the true angle of `target`, ascending.
    std::vector<AngleStat> per_angle_stats(std::span<const double> truths, std::span<const double> predictions);

    struct AccuracyReport
    {
        double azimuth_limit = 0.0;
        int train_size = 1;
        double threshold = 5.0;
        double ratio = 0.0;
        std::size_t count = 0;
        std::vector<AngleStat> per_angle;
    };

    struct FusedTrains
    {
        std::vector<double> truths;
        std::vector<double> results;
    };

    FusedTrains fuse_groups(const std::vector<features::FeatureRow> &rows, const CvResult &cv,
                            const std::vector<PulseTrainGroup> &groups, const decision::MovingWindowConfig &mw);

    // One report per (size, threshold), size-major.
    std::vector<AccuracyReport> pulse_train_sweep(const std::vector<features::FeatureRow> &rows, const CvResult &cv,
                                                  std::span<const int> sizes, std::span<const double> thresholds,
                                                  const decision::MovingWindowConfig &mw);

    std::vector<features::FeatureRow> filter_azimuth(const std::vector<features::FeatureRow> &rows, double limit);

    // Per limit: keep |az| <= limit, cross-validate an elevation network, report
    // the +-5 deg ratio and per-elevation error statistics.
    std::vector<AccuracyReport> azimuth_limit_sweep(const std::vector<features::FeatureRow> &rows,
                                                    std::span<const double> limits, const CvConfig &cfg);
}
