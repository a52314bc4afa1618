// SPDX-License-Identifier: Apache-2.0
//
// evaluation.cpp

#include "batsonar/evaluation.hpp"

#include "batsonar/errors.hpp"
#include "batsonar/rng.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <tuple>

namespace batsonar::evaluation
{
    FoldPlan make_folds(int pulses_per_cell, int trains)
    {
        if (trains < 2)
            throw PreconditionError("cross-validation needs at least 2 trains");
        if (pulses_per_cell < trains || pulses_per_cell % trains != 0)
            throw PreconditionError(std::to_string(pulses_per_cell) + " pulses per cell do not split into " +
                                    std::to_string(trains) + " equal trains");
        return {pulses_per_cell, trains, pulses_per_cell / trains};
    }

    double accuracy_within(std::span<const double> predictions, std::span<const double> truths, double eps_deg)
    {
        if (predictions.size() != truths.size())
            throw PreconditionError("accuracy: prediction and truth counts differ");
        if (predictions.empty())
            throw PreconditionError("accuracy: no predictions");
        std::size_t hits = 0;
        for (std::size_t i = 0; i < predictions.size(); ++i)
            hits += std::abs(predictions[i] - truths[i]) <= eps_deg ? 1 : 0;
        return static_cast<double>(hits) / static_cast<double>(predictions.size());
    }

    std::vector<double> joint_error_cdf(std::span<const double> az_errors, std::span<const double> el_errors,
                                        std::span<const double> thresholds)
    {
        if (az_errors.size() != el_errors.size())
            throw PreconditionError("joint cdf: azimuth and elevation error counts differ");
        if (az_errors.empty())
            throw PreconditionError("joint cdf: no errors");
        std::vector<double> worst(az_errors.size());
        for (std::size_t i = 0; i < worst.size(); ++i)
            worst[i] = std::max(std::abs(az_errors[i]), std::abs(el_errors[i]));
        std::vector<double> out;
        out.reserve(thresholds.size());
        for (const double t : thresholds)
        {
            const auto hits = std::count_if(worst.begin(), worst.end(), [t](double w) { return w <= t; });
            out.push_back(static_cast<double>(hits) / static_cast<double>(worst.size()));
        }
        return out;
    }

    std::string to_string(Target t) { return t == Target::elevation ? "elevation" : "azimuth"; }

    double target_angle(const echo::EchoTruth &truth, Target t)
    {
        return t == Target::elevation ? truth.direction.elevation : truth.direction.azimuth;
    }

    double CvResult::mean_ratio5() const
    {
        if (fold_ratio5.empty())
            return 0.0;
        return std::accumulate(fold_ratio5.begin(), fold_ratio5.end(), 0.0) /
               static_cast<double>(fold_ratio5.size());
    }

    std::vector<std::array<double, features::kFeatures>> normalize_rows(const std::vector<features::FeatureRow> &rows,
                                                                        std::span<const std::size_t> idx,
                                                                        features::Normalization norm,
                                                                        const features::Normalizer *normalizer)
    {
        std::vector<std::array<double, features::kFeatures>> out;
        out.reserve(idx.size());
        for (const std::size_t i : idx)
        {
            const auto &v = rows[i].values;
            const std::span<const double> all(v);
            out.push_back(features::make_feature_vector(all.first(features::kBands), all.last(features::kBands), norm,
                                                        normalizer)
                              .values);
        }
        return out;
    }

    namespace
    {
        struct FoldOutput
        {
            std::vector<std::size_t> test_rows;
            std::vector<double> predictions;
            double ratio5 = 0.0;
            int best_epoch = 0;
        };

        std::pair<double, double> output_range(const std::vector<features::FeatureRow> &rows, Target target,
                                               double margin)
        {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (const auto &r : rows)
            {
                const double a = target_angle(r.truth, target);
                lo = std::min(lo, a);
                hi = std::max(hi, a);
            }
            return {lo - margin, hi + margin};
        }

        FittedModel fit_on(const std::vector<features::FeatureRow> &rows, std::span<const std::size_t> idx,
                           Target target, const CvConfig &cfg, std::pair<double, double> range, std::uint64_t seed)
        {
            FittedModel m;
            const features::Normalizer *norm = nullptr;
            if (cfg.normalization == features::Normalization::log_zscore)
            {
                std::vector<std::array<double, features::kFeatures>> raw;
                raw.reserve(idx.size());
                for (const std::size_t i : idx)
                    raw.push_back(rows[i].values);
                m.normalizer = features::Normalizer::fit(raw);
                norm = &m.normalizer;
            }
            const auto x = normalize_rows(rows, idx, cfg.normalization, norm);
            std::vector<double> t;
            t.reserve(idx.size());
            for (const std::size_t i : idx)
                t.push_back(target_angle(rows[i].truth, target));

            auto train_cfg = cfg.train;
            train_cfg.seed = derive_seed(seed, {1});
            const auto init = estimator::init_network(derive_seed(seed, {0}), range.first, range.second);
            auto result = estimator::train(init, x, t, train_cfg);
            m.network = std::move(result.params);
            m.best_epoch = result.best_epoch;
            return m;
        }

        FoldOutput run_fold(const std::vector<features::FeatureRow> &rows, Target target, const CvConfig &cfg,
                            const FoldPlan &plan, int rotation, std::pair<double, double> range)
        {
            std::vector<std::size_t> train_idx;
            FoldOutput out;
            for (std::size_t i = 0; i < rows.size(); ++i)
                (plan.is_test(rotation, rows[i].truth.pulse) ? out.test_rows : train_idx).push_back(i);
            if (train_idx.empty() || out.test_rows.empty())
                throw PreconditionError("fold " + std::to_string(rotation) + " has an empty side");

            const std::uint64_t seed =
                derive_seed(cfg.seed, {static_cast<std::uint64_t>(rotation), static_cast<std::uint64_t>(target)});
            const auto model = fit_on(rows, train_idx, target, cfg, range, seed);
            const auto *norm =
                cfg.normalization == features::Normalization::log_zscore ? &model.normalizer : nullptr;
            const auto x = normalize_rows(rows, out.test_rows, cfg.normalization, norm);

            std::vector<double> truths;
            for (std::size_t k = 0; k < x.size(); ++k)
            {
                out.predictions.push_back(estimator::predict(model.network, x[k]));
                truths.push_back(target_angle(rows[out.test_rows[k]].truth, target));
            }
            out.ratio5 = accuracy_within(out.predictions, truths, 5.0);
            out.best_epoch = model.best_epoch;
            return out;
        }

        FoldPlan plan_for(const std::vector<features::FeatureRow> &rows, int trains)
        {
            if (rows.empty())
                throw PreconditionError("cross-validation needs rows");
            int max_pulse = 0;
            for (const auto &r : rows)
            {
                if (r.truth.pulse < 0)
                    throw PreconditionError("negative pulse index");
                max_pulse = std::max(max_pulse, r.truth.pulse);
            }
            return make_folds(max_pulse + 1, trains);
        }

        CvResult assemble(const std::vector<features::FeatureRow> &rows, Target target,
                          std::pair<double, double> range, const std::vector<FoldOutput> &folds)
        {
            CvResult res;
            res.target = target;
            res.angle_min = range.first;
            res.angle_max = range.second;
            res.predictions.assign(rows.size(), 0.0);
            res.rotation.assign(rows.size(), -1);
            for (std::size_t r = 0; r < folds.size(); ++r)
            {
                const auto &f = folds[r];
                for (std::size_t k = 0; k < f.test_rows.size(); ++k)
                {
                    res.predictions[f.test_rows[k]] = f.predictions[k];
                    res.rotation[f.test_rows[k]] = static_cast<int>(r);
                }
                res.fold_ratio5.push_back(f.ratio5);
                res.best_epochs.push_back(f.best_epoch);
            }
            return res;
        }
    }

    CvResult cross_validate(const std::vector<features::FeatureRow> &rows, Target target, const CvConfig &cfg)
    {
        const FoldPlan plan = plan_for(rows, cfg.trains);
        const auto range = output_range(rows, target, cfg.range_margin);
        std::vector<FoldOutput> folds(static_cast<std::size_t>(plan.trains));
        std::exception_ptr failure;
        std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic)
        for (int r = 0; r < plan.trains; ++r)
        {
            try
            {
                folds[static_cast<std::size_t>(r)] = run_fold(rows, target, cfg, plan, r, range);
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
        return assemble(rows, target, range, folds);
    }

    CvResult cross_validate_serial(const std::vector<features::FeatureRow> &rows, Target target, const CvConfig &cfg)
    {
        const FoldPlan plan = plan_for(rows, cfg.trains);
        const auto range = output_range(rows, target, cfg.range_margin);
        std::vector<FoldOutput> folds;
        for (int r = 0; r < plan.trains; ++r)
            folds.push_back(run_fold(rows, target, cfg, plan, r, range));
        return assemble(rows, target, range, folds);
    }

    FittedModel fit_model(const std::vector<features::FeatureRow> &rows, Target target, const CvConfig &cfg,
                          std::uint64_t seed)
    {
        if (rows.empty())
            throw PreconditionError("fit_model needs rows");
        std::vector<std::size_t> idx(rows.size());
        std::iota(idx.begin(), idx.end(), 0);
        return fit_on(rows, idx, target, cfg, output_range(rows, target, cfg.range_margin), seed);
    }

    std::vector<PulseTrainGroup> pulse_train_groups(const std::vector<features::FeatureRow> &rows,
                                                    std::span<const int> rotation, int size)
    {
        if (size < 1)
            throw PreconditionError("pulse train size must be >= 1");
        if (rotation.size() != rows.size())
            throw PreconditionError("rotation tags do not match rows");

        std::map<std::pair<int, std::size_t>, std::vector<std::size_t>> pools;
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (rotation[i] >= 0)
                pools[{rotation[i], rows[i].truth.direction_index}].push_back(i);

        std::vector<PulseTrainGroup> groups;
        for (auto &[key, pool] : pools)
        {
            std::stable_sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
                return std::tie(rows[a].truth.site, rows[a].truth.pulse) <
                       std::tie(rows[b].truth.site, rows[b].truth.pulse);
            });
            if (pool.size() < static_cast<std::size_t>(size))
                throw PreconditionError("pulse train size " + std::to_string(size) + " exceeds the " +
                                        std::to_string(pool.size()) + " test pulses available per direction");
            for (std::size_t s = 0; s + static_cast<std::size_t>(size) <= pool.size();
                 s += static_cast<std::size_t>(size))
                groups.push_back({key.first, key.second,
                                  std::vector<std::size_t>(pool.begin() + static_cast<long>(s),
                                                           pool.begin() + static_cast<long>(s) + size)});
        }
        return groups;
    }

    std::vector<AngleStat> per_angle_stats(std::span<const double> truths, std::span<const double> predictions)
    {
        if (truths.size() != predictions.size())
            throw PreconditionError("per-angle stats: length mismatch");
        std::map<double, std::vector<double>> by_angle;
        for (std::size_t i = 0; i < truths.size(); ++i)
            by_angle[truths[i]].push_back(predictions[i] - truths[i]);
        std::vector<AngleStat> out;
        for (const auto &[angle, errs] : by_angle)
        {
            const double n = static_cast<double>(errs.size());
            const double mean = std::accumulate(errs.begin(), errs.end(), 0.0) / n;
            double var = 0.0;
            for (const double e : errs)
                var += (e - mean) * (e - mean);
            out.push_back({angle, mean, std::sqrt(var / n), errs.size()});
        }
        return out;
    }

    FusedTrains fuse_groups(const std::vector<features::FeatureRow> &rows, const CvResult &cv,
                            const std::vector<PulseTrainGroup> &groups, const decision::MovingWindowConfig &mw)
    {
        FusedTrains out;
        std::vector<double> values;
        for (const auto &g : groups)
        {
            values.clear();
            for (const std::size_t i : g.rows)
                values.push_back(cv.predictions[i]);
            out.results.push_back(decision::moving_window_estimate(values, mw));
            out.truths.push_back(target_angle(rows[g.rows.front()].truth, cv.target));
        }
        return out;
    }

    std::vector<AccuracyReport> pulse_train_sweep(const std::vector<features::FeatureRow> &rows, const CvResult &cv,
                                                  std::span<const int> sizes, std::span<const double> thresholds,
                                                  const decision::MovingWindowConfig &mw)
    {
        std::vector<AccuracyReport> out;
        for (const int size : sizes)
        {
            const auto fused = fuse_groups(rows, cv, pulse_train_groups(rows, cv.rotation, size), mw);
            const auto stats = per_angle_stats(fused.truths, fused.results);
            for (const double t : thresholds)
            {
                AccuracyReport r;
                r.train_size = size;
                r.threshold = t;
                r.ratio = accuracy_within(fused.results, fused.truths, t);
                r.count = fused.results.size();
                r.per_angle = stats;
                out.push_back(std::move(r));
            }
        }
        return out;
    }

    std::vector<features::FeatureRow> filter_azimuth(const std::vector<features::FeatureRow> &rows, double limit)
    {
        std::vector<features::FeatureRow> out;
        for (const auto &r : rows)
            if (std::abs(r.truth.direction.azimuth) <= limit + 1e-9)
                out.push_back(r);
        return out;
    }

    std::vector<AccuracyReport> azimuth_limit_sweep(const std::vector<features::FeatureRow> &rows,
                                                    std::span<const double> limits, const CvConfig &cfg)
    {
        std::vector<AccuracyReport> out;
        for (const double limit : limits)
        {
            const auto subset = filter_azimuth(rows, limit);
            if (subset.empty())
                throw PreconditionError("no cells within azimuth limit " + format_double(limit));
            const auto cv = cross_validate(subset, Target::elevation, cfg);
            std::vector<double> truths;
            for (const auto &r : subset)
                truths.push_back(r.truth.direction.elevation);
            AccuracyReport rep;
            rep.azimuth_limit = limit;
            rep.threshold = 5.0;
            rep.ratio = cv.mean_ratio5();
            rep.count = subset.size();
            rep.per_angle = per_angle_stats(truths, cv.predictions);
            out.push_back(std::move(rep));
        }
        return out;
    }
}
