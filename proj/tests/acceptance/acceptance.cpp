// SPDX-License-Identifier: Apache-2.0
//
// acceptance.cpp
//
// One PASS/FAIL line per acceptance criterion. Arguments select a subset by
// number; no arguments runs all nine. Exit status is 1 if any criterion fails.

#include "batsonar/decision.hpp"
#include "batsonar/errors.hpp"
#include "batsonar/estimator.hpp"
#include "batsonar/experiment.hpp"
#include "batsonar/farfield.hpp"
#include "batsonar/features.hpp"
#include "batsonar/physics.hpp"

#include "mw_oracle.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace batsonar;

namespace
{
    struct Outcome
    {
        bool pass = false;
        std::string detail;
    };

    struct Criterion
    {
        int id;
        const char *name;
        double limit_seconds;
        std::function<Outcome()> run;
    };

    std::string fmt(const char *f, double v)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, f, v);
        return buf;
    }

    // 1 -----------------------------------------------------------------

    Outcome kirchhoff_oracle()
    {
        const double ka = 10.0;
        const double f = 40e3;
        const double lambda = kSpeedOfSound / f;
        const auto ap = farfield::circular_piston(ka * lambda / (2.0 * std::numbers::pi), f, lambda / 16.0);
        auto p = farfield::kirchhoff_far_field(ap, geometry::make_lattice({0, 0, 1}, {-90, 90, 0.1}),
                                               farfield::Obliquity::none);
        farfield::normalize_peak(p);

        const double second_null = rad2deg(std::asin(7.015586669815619 / ka));
        double se = 0.0;
        int n = 0;
        for (std::size_t i = 0; i < p.lattice.elevations.size(); ++i)
        {
            const double el = p.lattice.elevations[i];
            if (std::abs(el) > second_null)
                continue;
            const double u = std::abs(ka * std::sin(deg2rad(el)));
            const double airy = u < 1e-12 ? 1.0 : std::abs(2.0 * std::cyl_bessel_j(1.0, u) / u);
            se += std::pow(p.magnitude(i, 0) - airy, 2);
            ++n;
        }
        const double rms = std::sqrt(se / n);
        const double side_db = farfield::analyze_lobes(p).side_level_db;
        const double null_el = farfield::first_null_elevation(p);
        const bool pass = rms < 0.01 && std::abs(side_db + 17.6) <= 0.3 && std::abs(null_el - 22.5) <= 0.2;
        return {pass, "rms " + fmt("%.5f", rms) + " (< 0.01), sidelobe " + fmt("%.3f", side_db) +
                          " dB (-17.6 +- 0.3), first null " + fmt("%.3f", null_el) + " deg (22.5 +- 0.2)"};
    }

    // 2 -----------------------------------------------------------------

    Outcome stft_correctness()
    {
        constexpr double fs = 100e3;
        std::mt19937_64 rng(2);
        std::normal_distribution<double> d;
        std::vector<double> x(2000);
        for (auto &v : x)
            v = d(rng);
        const features::StftConfig cfg;
        const auto s = features::spectrogram(x, fs, cfg);
        const auto w = features::hamming(cfg.window);
        double worst = 0.0;
        for (std::size_t t = 0; t < s.frames; ++t)
        {
            double time_energy = 0.0;
            for (std::size_t n = 0; n < cfg.window; ++n)
                time_energy += std::pow(x[t * cfg.hop + n] * w[n], 2);
            double spec = s.at(t, 0) + s.at(t, s.bins - 1);
            for (std::size_t k = 1; k + 1 < s.bins; ++k)
                spec += 2.0 * s.at(t, k);
            worst = std::max(worst, std::abs(spec / static_cast<double>(cfg.nfft) - time_energy) / time_energy);
        }

        std::vector<double> tone(1000);
        for (std::size_t i = 0; i < tone.size(); ++i)
            tone[i] = std::sin(2.0 * std::numbers::pi * 10e3 * static_cast<double>(i) / fs);
        const auto ts = features::spectrogram(tone, fs, cfg);
        double in_band = 0.0;
        for (std::size_t t = 0; t < ts.frames; ++t)
            for (std::size_t k = 19; k <= 21; ++k)
                in_band += ts.at(t, k);
        const double share = in_band / ts.total();
        return {worst < 1e-9 && share >= 0.95, "Parseval worst rel " + fmt("%.2e", worst) +
                                                  " (< 1e-9), 10 kHz tone in bins 19-21 " + fmt("%.4f", share) +
                                                  " (>= 0.95)"};
    }

    // 3 -----------------------------------------------------------------

    Outcome gradient_check()
    {
        std::mt19937_64 rng(3);
        std::normal_distribution<double> d;
        auto p = estimator::init_network(3, 10.0, 70.0);
        for (std::size_t i = estimator::NetworkParams::kB1; i < estimator::kParamCount; ++i)
            p.theta[i] += 0.3 * d(rng);
        std::vector<std::array<double, estimator::kInputs>> x(32);
        for (auto &r : x)
            for (auto &v : r)
                v = d(rng);
        std::vector<double> t(x.size());
        std::uniform_real_distribution<double> ang(15, 65);
        for (auto &v : t)
            v = ang(rng);
        std::vector<std::size_t> rows(x.size());
        std::iota(rows.begin(), rows.end(), 0);
        std::vector<double> grad, scratch;
        estimator::loss_and_gradient(p, x, t, rows, grad);

        std::uniform_int_distribution<std::size_t> pick(0, estimator::kParamCount - 1);
        const double h = 1e-5;
        double worst = 0.0;
        const int coords = 50;
        for (int n = 0; n < coords; ++n)
        {
            const std::size_t i = pick(rng);
            auto a = p, b = p;
            a.theta[i] += h;
            b.theta[i] -= h;
            const double fd = (estimator::loss_and_gradient(a, x, t, rows, scratch) -
                               estimator::loss_and_gradient(b, x, t, rows, scratch)) /
                              (2.0 * h);
            worst = std::max(worst, std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-8}));
        }
        return {worst < 1e-4, std::to_string(coords) + " coordinates, worst relative error " + fmt("%.2e", worst) +
                                  " (< 1e-4)"};
    }

    // 4 -----------------------------------------------------------------

    Outcome moving_window_oracle()
    {
        // Values and L on a 1/1024 degree grid so that translated inputs round identically.
        std::mt19937_64 rng(4);
        std::uniform_int_distribution<int> count(1, 30), level(1, 3), step(0, 2);
        std::uniform_real_distribution<double> value(0, 90), length(1, 20), shift(-100, 100);
        const double steps[] = {0.5, 1.0, 2.0};
        auto snap = [](double v) { return std::round(v * 1024.0) / 1024.0; };
        int instances = 0, mismatches = 0, translation = 0, half_window = 0, tie_midpoints = 0;
        while (instances < 1000)
        {
            decision::MovingWindowConfig cfg{snap(length(rng)), steps[step(rng)], level(rng)};
            if (cfg.step > cfg.window_length)
                continue;
            std::vector<double> v(static_cast<std::size_t>(count(rng)));
            for (auto &s : v)
                s = snap(value(rng));
            // Every fourth instance is two copies of one cluster 45 deg apart, so the tie rule decides it.
            if (instances % 4 == 0)
            {
                v.resize((v.size() + 1) / 2);
                for (auto &s : v)
                    s = snap(0.5 * s);
                const std::size_t half = v.size();
                for (std::size_t i = 0; i < half; ++i)
                    v.push_back(v[i] + 45.0);
            }
            ++instances;

            const auto est = decision::moving_window_detailed(v, cfg);
            if (est.result != oracle::moving_window(v, cfg))
                ++mismatches;
            const double c = std::round(shift(rng));
            auto moved = v;
            for (auto &s : moved)
                s += c;
            if (decision::moving_window_estimate(moved, cfg) != est.result + c)
                ++translation;
            double nearest = 1e300;
            for (double s : v)
                nearest = std::min(nearest, std::abs(s - est.result));
            if (nearest > 0.5 * cfg.window_at(cfg.levels))
            {
                ++half_window;
                if (std::find(v.begin(), v.end(), est.result) == v.end())
                    ++tie_midpoints;
            }
        }
        const bool pass = mismatches == 0 && translation == 0 && half_window == 0;
        return {pass, std::to_string(instances) + " instances: oracle mismatches " + std::to_string(mismatches) +
                          ", translation violations " + std::to_string(translation) + ", half-window violations " +
                          std::to_string(half_window) + " (" + std::to_string(tie_midpoints) +
                          " of them midpoints of tied maxima)"};
    }

    // 5, 6, 9 ------------------------------------------------------------

    experiment::ExperimentConfig trend_config()
    {
        auto c = experiment::ExperimentConfig::preset("parallel");
        c.seed = 20240501;
        c.azimuth = {-28, 28, 7};
        c.elevation = {20, 55, 5};
        c.sites = 8;
        c.pulses_per_cell = 40;
        c.azimuth_limits = {30};
        c.train_sizes = {3, 5, 10, 15, 20};
        c.thresholds = {1, 3, 5};
        return c;
    }

    const experiment::ReportBundle &trend_bundle()
    {
        static const auto b = experiment::run_parallel_experiment(trend_config());
        return b;
    }

    Outcome parallel_trend()
    {
        const auto &b = trend_bundle();
        const double r5 = b.summary.get_double("parallel.single_pulse.ratio5", -1);
        return {r5 >= 0.75, "single-pulse elevation within +-5 deg " + fmt("%.4f", r5) + " (>= 0.75), " +
                                std::to_string(b.summary.get_int("parallel.rows", 0)) + " pulses"};
    }

    Outcome pulse_train_gain()
    {
        const auto &b = trend_bundle();
        const auto &c = trend_config();
        auto ratio = [&](int n, double t) {
            return b.summary.get_double("parallel.train." + std::to_string(n) + ".ratio" + format_double(t), -1);
        };
        const double r20 = ratio(20, 3);
        bool monotone = true;
        std::ostringstream table;
        for (double t : c.thresholds)
        {
            table << " t" << t << ":";
            for (std::size_t i = 0; i < c.train_sizes.size(); ++i)
            {
                const double r = ratio(c.train_sizes[i], t);
                table << " " << fmt("%.3f", r);
                if (i > 0 && r < ratio(c.train_sizes[i - 1], t) - 0.03)
                    monotone = false;
            }
        }
        return {r20 >= 0.90 && monotone, "20-pulse +-3 deg " + fmt("%.4f", r20) + " (>= 0.90), non-decreasing 3..20 " +
                                             (monotone ? "yes" : "no") + ";" + table.str()};
    }

    Outcome determinism()
    {
        const auto &first = trend_bundle();
        const auto second = experiment::run_parallel_experiment(trend_config());
        auto body = [](const std::string &csv) {
            std::istringstream in(csv);
            read_provenance(in);
            return std::string(std::istreambuf_iterator<char>(in), {});
        };
        int differing = 0;
        for (const auto &[name, text] : first.csv)
            if (!second.csv.count(name) || body(second.csv.at(name)) != body(text))
                ++differing;
        const bool same_set = first.csv.size() == second.csv.size();
        return {differing == 0 && same_set && first.summary.entries() == second.summary.entries(),
                std::to_string(first.csv.size()) + " CSV bodies compared, " + std::to_string(differing) + " differ"};
    }

    // 7 -----------------------------------------------------------------

    Outcome azimuth_limit()
    {
        auto c = experiment::ExperimentConfig::preset("parallel");
        c.seed = 20240502;
        c.azimuth = {-84, 84, 7};
        c.elevation = {20, 55, 5};
        c.sites = 8;
        c.pulses_per_cell = 20;
        c.azimuth_limits = {30, 90};
        c.train_sizes = {3, 5, 10, 15};
        const auto b = experiment::run_parallel_experiment(c);
        const double r30 = b.summary.get_double("parallel.limit.30.ratio5", -1);
        const double r90 = b.summary.get_double("parallel.limit.90.ratio5", -1);
        return {r90 < r30 && r90 >= 0.5,
                "+-5 deg ratio at limit 30: " + fmt("%.4f", r30) + ", at limit 90: " + fmt("%.4f", r90) +
                    " (lower, >= 0.5)"};
    }

    // 8 -----------------------------------------------------------------

    Outcome orthogonal_joint()
    {
        auto c = experiment::ExperimentConfig::preset("orthogonal");
        c.seed = 20240503;
        c.azimuth = {-28, 28, 14};
        c.elevation = {12, 68, 14};
        c.sites = 4;
        c.pulses_per_cell = 40;
        c.train_sizes = {3, 5, 10, 15};
        c.fused_train_size = 10;
        const auto b = experiment::run_orthogonal_experiment(c);
        const double t6 = b.summary.get_double("orthogonal.joint_cdf.size10.t6", -1);
        const double t3 = b.summary.get_double("orthogonal.joint_cdf.size10.t3", -1);
        return {t6 >= 0.85 && t3 >= 0.45, "10-pulse joint CDF at 6 deg " + fmt("%.4f", t6) + " (>= 0.85), at 3 deg " +
                                              fmt("%.4f", t3) + " (>= 0.45)"};
    }
}

int main(int argc, char **argv)
{
    const std::vector<Criterion> all{
        {1, "Kirchhoff piston oracle", 10, kirchhoff_oracle},
        {2, "STFT correctness", 5, stft_correctness},
        {3, "MLP gradient check", 5, gradient_check},
        {4, "moving-window oracle", 10, moving_window_oracle},
        {5, "parallel-mode single-pulse trend", 600, parallel_trend},
        {6, "pulse-train gain", 600, pulse_train_gain},
        {7, "azimuth-limit degradation", 1200, azimuth_limit},
        {8, "orthogonal joint localization", 1200, orthogonal_joint},
        {9, "determinism", 1200, determinism},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i)
        wanted.insert(std::atoi(argv[i]));

    int failures = 0;
    for (const auto &c : all)
    {
        if (!wanted.empty() && !wanted.count(c.id))
            continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try
        {
            out = c.run();
        }
        catch (const std::exception &e)
        {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs < c.limit_seconds;
        const bool pass = out.pass && in_time;
        failures += pass ? 0 : 1;
        std::printf("%s criterion %d (%s): %s; %.1f s (limit %.0f s)\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    out.detail.c_str(), secs, c.limit_seconds);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
