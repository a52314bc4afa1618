// SPDX-License-Identifier: Apache-2.0
//
// estimator.hpp
//
// 60-9-1 perceptron regressing one angle. Hidden layer tanh, output sigmoid
// mapped onto [angle_min, angle_max]. Trained by mini-batch SGD on the
// squared error of the normalized target.

#pragma once

#include "batsonar/features.hpp"
#include "batsonar/kv_config.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace batsonar::estimator
{
    inline constexpr std::size_t kInputs = features::kFeatures;
    inline constexpr std::size_t kHidden = 9;
    inline constexpr std::size_t kParamCount = kHidden * kInputs + kHidden + kHidden + 1;

    // Flat layout: W1 (kHidden x kInputs, row major), b1, w2, b2.
    struct NetworkParams
    {
        std::vector<double> theta = std::vector<double>(kParamCount, 0.0);
        double angle_min = 0.0;
        double angle_max = 90.0;

        static constexpr std::size_t kB1 = kHidden * kInputs;
        static constexpr std::size_t kW2 = kB1 + kHidden;
        static constexpr std::size_t kB2 = kW2 + kHidden;

        double &w1(std::size_t h, std::size_t i) { return theta[h * kInputs + i]; }
        double w1(std::size_t h, std::size_t i) const { return theta[h * kInputs + i]; }

        void validate() const;
    };

    // Xavier-uniform weights, zero biases.
    NetworkParams init_network(std::uint64_t seed, double angle_min, double angle_max);

    double predict(const NetworkParams &p, std::span<const double> x);
    double predict(const NetworkParams &p, const features::FeatureVector &x);

    // Maps an angle onto the sigmoid's (0, 1) target scale.
    double normalize_target(const NetworkParams &p, double angle);

    // Mean over `rows` of (y - t)^2 with t the normalized target. `grad` is
    // resized to kParamCount and receives d loss / d theta.
    double loss_and_gradient(const NetworkParams &p, const std::vector<std::array<double, kInputs>> &x,
                             const std::vector<double> &targets, std::span<const std::size_t> rows,
                             std::vector<double> &grad);

    double mean_loss(const NetworkParams &p, const std::vector<std::array<double, kInputs>> &x,
                     const std::vector<double> &targets);

    struct TrainConfig
    {
        double learning_rate = 0.01;
        int epochs = 500;
        std::size_t batch_size = 32;
        std::uint64_t seed = 1;
        int patience = 50;                 // epochs without validation improvement
        double validation_fraction = 0.1;  // 0 disables early stopping
        double momentum = 0.0;

        void validate() const;
        KeyValues to_key_values() const;
        static TrainConfig from_key_values(const KeyValues &kv, const TrainConfig &base);
    };

    struct TrainResult
    {
        NetworkParams params;
        std::vector<double> train_loss; // per-epoch mean of batch losses
        std::vector<double> validation_loss;
        int best_epoch = 0;
    };

    // Throws DivergenceError with the epoch on a non-finite loss.
    TrainResult train(const NetworkParams &init, const std::vector<std::array<double, kInputs>> &x,
                      const std::vector<double> &targets, const TrainConfig &cfg);

    // Little-endian: "PNN1", u32 layer count, (u32 fan_in, u32 fan_out) per
    // layer, f64 angle_min, f64 angle_max, then theta as f64.
    void save_network(const std::filesystem::path &path, const NetworkParams &p);
    NetworkParams load_network(const std::filesystem::path &path);
}
