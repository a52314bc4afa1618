// SPDX-License-Identifier: Apache-2.0
//
// estimator.cpp

#include "batsonar/estimator.hpp"

#include "batsonar/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

namespace batsonar::estimator
{
    static_assert(std::endian::native == std::endian::little, "PNN1 is written in host byte order");

    namespace
    {
        struct Forward
        {
            std::array<double, kHidden> h{};
            double y = 0.0;
        };

        Forward forward(const NetworkParams &p, const double *x)
        {
            Forward f;
            double z = p.theta[NetworkParams::kB2];
            for (std::size_t j = 0; j < kHidden; ++j)
            {
                const double *w = &p.theta[j * kInputs];
                double a = p.theta[NetworkParams::kB1 + j];
                for (std::size_t i = 0; i < kInputs; ++i)
                    a += w[i] * x[i];
                f.h[j] = std::tanh(a);
                z += p.theta[NetworkParams::kW2 + j] * f.h[j];
            }
            f.y = 1.0 / (1.0 + std::exp(-z));
            return f;
        }

        // Adds d/dtheta of (y - t)^2 scaled by `scale` into grad; returns (y - t)^2.
        double accumulate(const NetworkParams &p, const double *x, double t, double scale, double *grad)
        {
            const Forward f = forward(p, x);
            const double err = f.y - t;
            const double dz = scale * 2.0 * err * f.y * (1.0 - f.y);
            grad[NetworkParams::kB2] += dz;
            for (std::size_t j = 0; j < kHidden; ++j)
            {
                grad[NetworkParams::kW2 + j] += dz * f.h[j];
                const double da = dz * p.theta[NetworkParams::kW2 + j] * (1.0 - f.h[j] * f.h[j]);
                grad[NetworkParams::kB1 + j] += da;
                double *g = &grad[j * kInputs];
                for (std::size_t i = 0; i < kInputs; ++i)
                    g[i] += da * x[i];
            }
            return err * err;
        }

        void put_u32(std::ostream &out, std::uint32_t v) { out.write(reinterpret_cast<const char *>(&v), 4); }
        void put_f64(std::ostream &out, double v) { out.write(reinterpret_cast<const char *>(&v), 8); }

        std::uint32_t get_u32(std::istream &in)
        {
            std::uint32_t v = 0;
            in.read(reinterpret_cast<char *>(&v), 4);
            return v;
        }

        double get_f64(std::istream &in)
        {
            double v = 0.0;
            in.read(reinterpret_cast<char *>(&v), 8);
            return v;
        }
    }

    void NetworkParams::validate() const
    {
        if (theta.size() != kParamCount)
            throw PreconditionError("network has " + std::to_string(theta.size()) + " parameters, expected " +
                                    std::to_string(kParamCount));
        if (!(angle_min < angle_max))
            throw PreconditionError("network output range needs angle_min < angle_max");
        for (const double v : theta)
            if (!std::isfinite(v))
                throw NumericError("network parameters are not finite");
    }

    NetworkParams init_network(std::uint64_t seed, double angle_min, double angle_max)
    {
        NetworkParams p;
        p.angle_min = angle_min;
        p.angle_max = angle_max;
        if (!(angle_min < angle_max))
            throw PreconditionError("network output range needs angle_min < angle_max");
        std::mt19937_64 gen(seed);
        const double a1 = std::sqrt(6.0 / static_cast<double>(kInputs + kHidden));
        const double a2 = std::sqrt(6.0 / static_cast<double>(kHidden + 1));
        std::uniform_real_distribution<double> u1(-a1, a1);
        std::uniform_real_distribution<double> u2(-a2, a2);
        for (std::size_t k = 0; k < NetworkParams::kB1; ++k)
            p.theta[k] = u1(gen);
        for (std::size_t j = 0; j < kHidden; ++j)
            p.theta[NetworkParams::kW2 + j] = u2(gen);
        return p;
    }

    double predict(const NetworkParams &p, std::span<const double> x)
    {
        if (x.size() != kInputs)
            throw PreconditionError("predict expects " + std::to_string(kInputs) + " inputs, got " +
                                    std::to_string(x.size()));
        if (p.theta.size() != kParamCount)
            throw PreconditionError("network parameter count mismatch");
        return p.angle_min + forward(p, x.data()).y * (p.angle_max - p.angle_min);
    }

    double predict(const NetworkParams &p, const features::FeatureVector &x) { return predict(p, x.values); }

    double normalize_target(const NetworkParams &p, double angle)
    {
        return (angle - p.angle_min) / (p.angle_max - p.angle_min);
    }

    double loss_and_gradient(const NetworkParams &p, const std::vector<std::array<double, kInputs>> &x,
                             const std::vector<double> &targets, std::span<const std::size_t> rows,
                             std::vector<double> &grad)
    {
        if (rows.empty())
            throw PreconditionError("empty batch");
        grad.assign(kParamCount, 0.0);
        const double scale = 1.0 / static_cast<double>(rows.size());
        double loss = 0.0;
        for (const std::size_t r : rows)
            loss += accumulate(p, x[r].data(), normalize_target(p, targets[r]), scale, grad.data());
        return loss * scale;
    }

    double mean_loss(const NetworkParams &p, const std::vector<std::array<double, kInputs>> &x,
                     const std::vector<double> &targets)
    {
        if (x.empty())
            return 0.0;
        double loss = 0.0;
        for (std::size_t r = 0; r < x.size(); ++r)
        {
            const double e = forward(p, x[r].data()).y - normalize_target(p, targets[r]);
            loss += e * e;
        }
        return loss / static_cast<double>(x.size());
    }

    void TrainConfig::validate() const
    {
        if (!(learning_rate > 0.0))
            throw PreconditionError("learning rate must be > 0");
        if (epochs < 1)
            throw PreconditionError("epochs must be >= 1");
        if (batch_size < 1)
            throw PreconditionError("batch size must be >= 1");
        if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
            throw PreconditionError("validation fraction must lie in [0, 1)");
        if (!(momentum >= 0.0 && momentum < 1.0))
            throw PreconditionError("momentum must lie in [0, 1)");
        if (patience < 1)
            throw PreconditionError("patience must be >= 1");
    }

    KeyValues TrainConfig::to_key_values() const
    {
        KeyValues kv;
        kv.set("train.learning_rate", learning_rate);
        kv.set("train.epochs", epochs);
        kv.set("train.batch_size", static_cast<std::uint64_t>(batch_size));
        kv.set("train.seed", seed);
        kv.set("train.patience", patience);
        kv.set("train.validation_fraction", validation_fraction);
        kv.set("train.momentum", momentum);
        kv.set("train.loss", "squared_error");
        return kv;
    }

    TrainConfig TrainConfig::from_key_values(const KeyValues &kv, const TrainConfig &base)
    {
        TrainConfig c = base;
        c.learning_rate = kv.get_double("train.learning_rate", c.learning_rate);
        c.epochs = static_cast<int>(kv.get_int("train.epochs", c.epochs));
        c.batch_size = kv.get_u64("train.batch_size", c.batch_size);
        c.seed = kv.get_u64("train.seed", c.seed);
        c.patience = static_cast<int>(kv.get_int("train.patience", c.patience));
        c.validation_fraction = kv.get_double("train.validation_fraction", c.validation_fraction);
        c.momentum = kv.get_double("train.momentum", c.momentum);
        c.validate();
        return c;
    }

    TrainResult train(const NetworkParams &init, const std::vector<std::array<double, kInputs>> &x,
                      const std::vector<double> &targets, const TrainConfig &cfg)
    {
        cfg.validate();
        init.validate();
        if (x.empty())
            throw PreconditionError("training set is empty");
        if (x.size() != targets.size())
            throw PreconditionError("feature and target counts differ");
        for (const double t : targets)
            if (!(t >= init.angle_min && t <= init.angle_max))
                throw PreconditionError("training target outside the network output range");

        std::mt19937_64 gen(cfg.seed);
        std::vector<std::size_t> order(x.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), gen);

        auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(x.size())));
        if (n_val >= x.size())
            n_val = 0;
        std::vector<std::array<double, kInputs>> val_x;
        std::vector<double> val_t;
        for (std::size_t k = x.size() - n_val; k < x.size(); ++k)
        {
            val_x.push_back(x[order[k]]);
            val_t.push_back(targets[order[k]]);
        }
        order.resize(x.size() - n_val);

        TrainResult result;
        result.params = init;
        NetworkParams p = init;
        NetworkParams best = init;
        double best_val = std::numeric_limits<double>::infinity();
        int since_best = 0;
        std::vector<double> grad;
        std::vector<double> velocity(kParamCount, 0.0);

        for (int epoch = 0; epoch < cfg.epochs; ++epoch)
        {
            std::shuffle(order.begin(), order.end(), gen);
            double epoch_loss = 0.0;
            std::size_t batches = 0;
            for (std::size_t b = 0; b < order.size(); b += cfg.batch_size)
            {
                const std::size_t n = std::min(cfg.batch_size, order.size() - b);
                epoch_loss += loss_and_gradient(p, x, targets, std::span(order).subspan(b, n), grad);
                ++batches;
                for (std::size_t k = 0; k < kParamCount; ++k)
                {
                    velocity[k] = cfg.momentum * velocity[k] - cfg.learning_rate * grad[k];
                    p.theta[k] += velocity[k];
                }
            }
            epoch_loss /= static_cast<double>(batches);
            if (!std::isfinite(epoch_loss))
                throw DivergenceError(epoch, "training loss became non-finite at epoch " + std::to_string(epoch));
            result.train_loss.push_back(epoch_loss);

            if (n_val == 0)
            {
                best = p;
                result.best_epoch = epoch;
                continue;
            }
            const double v = mean_loss(p, val_x, val_t);
            if (!std::isfinite(v))
                throw DivergenceError(epoch, "validation loss became non-finite at epoch " + std::to_string(epoch));
            result.validation_loss.push_back(v);
            if (v < best_val)
            {
                best_val = v;
                best = p;
                result.best_epoch = epoch;
                since_best = 0;
            }
            else if (++since_best >= cfg.patience)
                break;
        }
        result.params = best;
        return result;
    }

    void save_network(const std::filesystem::path &path, const NetworkParams &p)
    {
        p.validate();
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw PreconditionError("cannot write " + path.string());
        out.write("PNN1", 4);
        put_u32(out, 2);
        put_u32(out, static_cast<std::uint32_t>(kInputs));
        put_u32(out, static_cast<std::uint32_t>(kHidden));
        put_u32(out, static_cast<std::uint32_t>(kHidden));
        put_u32(out, 1);
        put_f64(out, p.angle_min);
        put_f64(out, p.angle_max);
        for (const double v : p.theta)
            put_f64(out, v);
        if (!out)
            throw NumericError("short write to " + path.string());
    }

    NetworkParams load_network(const std::filesystem::path &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw PreconditionError("cannot read " + path.string());
        char magic[4] = {};
        in.read(magic, 4);
        if (std::memcmp(magic, "PNN1", 4) != 0)
            throw PreconditionError(path.string() + ": bad magic");
        const std::uint32_t layers = get_u32(in);
        if (layers != 2)
            throw PreconditionError(path.string() + ": expected 2 layers");
        const std::uint32_t in0 = get_u32(in), out0 = get_u32(in), in1 = get_u32(in), out1 = get_u32(in);
        if (in0 != kInputs || out0 != kHidden || in1 != kHidden || out1 != 1)
            throw PreconditionError(path.string() + ": unsupported layer shapes");
        NetworkParams p;
        p.angle_min = get_f64(in);
        p.angle_max = get_f64(in);
        for (auto &v : p.theta)
            v = get_f64(in);
        if (!in)
            throw PreconditionError(path.string() + ": truncated");
        p.validate();
        return p;
    }
}
