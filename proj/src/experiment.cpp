// SPDX-License-Identifier: Apache-2.0
//
// experiment.cpp

#include "batsonar/experiment.hpp"

#include "batsonar/errors.hpp"
#include "batsonar/rng.hpp"
#include "batsonar/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace batsonar::experiment
{
    namespace
    {
        template <typename T>
        std::string join(const std::vector<T> &v)
        {
            std::string out;
            for (std::size_t i = 0; i < v.size(); ++i)
            {
                if (i)
                    out += ",";
                if constexpr (std::is_integral_v<T>)
                    out += std::to_string(v[i]);
                else
                    out += format_double(v[i]);
            }
            return out;
        }

        std::vector<int> to_ints(const std::vector<double> &v)
        {
            std::vector<int> out;
            for (const double d : v)
            {
                if (d != std::floor(d))
                    throw PreconditionError("expected an integer list entry, got " + format_double(d));
                out.push_back(static_cast<int>(d));
            }
            return out;
        }

        void set_range(KeyValues &kv, const std::string &prefix, const geometry::AngleRange &r)
        {
            kv.set(prefix + "_min", r.min);
            kv.set(prefix + "_max", r.max);
            kv.set(prefix + "_step", r.step);
        }

        geometry::AngleRange get_range(const KeyValues &kv, const std::string &prefix, geometry::AngleRange r)
        {
            r.min = kv.get_double(prefix + "_min", r.min);
            r.max = kv.get_double(prefix + "_max", r.max);
            r.step = kv.get_double(prefix + "_step", r.step);
            return r;
        }

        std::string f(double v) { return format_double(v); }

        double max_abs_azimuth(const std::vector<features::FeatureRow> &rows)
        {
            double m = 0.0;
            for (const auto &r : rows)
                m = std::max(m, std::abs(r.truth.direction.azimuth));
            return m;
        }

        std::string folds_csv(const evaluation::CvResult &cv, bool with_target)
        {
            std::ostringstream o;
            for (std::size_t r = 0; r < cv.fold_ratio5.size(); ++r)
            {
                if (with_target)
                    o << evaluation::to_string(cv.target) << ',';
                o << r << ',' << f(cv.fold_ratio5[r]) << ',' << cv.best_epochs[r] << '\n';
            }
            return o.str();
        }

        std::string key_suffix(double t) { return format_double(t); }
    }

    std::string to_string(Mode m)
    {
        switch (m)
        {
        case Mode::parallel:
            return "parallel";
        case Mode::orthogonal:
            return "orthogonal";
        case Mode::robustness:
            return "robustness";
        }
        return "parallel";
    }

    Mode parse_mode(const std::string &s)
    {
        if (s == "parallel" || s == "parallel-2.1")
            return Mode::parallel;
        if (s == "orthogonal" || s == "orthogonal-2.2")
            return Mode::orthogonal;
        if (s == "robustness")
            return Mode::robustness;
        throw PreconditionError("unknown mode or preset '" + s + "'");
    }

    ExperimentConfig ExperimentConfig::preset(const std::string &name)
    {
        ExperimentConfig c;
        c.mode = parse_mode(name);
        if (c.mode == Mode::parallel)
        {
            c.device = geometry::DeviceConfig::parallel(0.0);
            return c;
        }
        c.azimuth = {-28.0, 28.0, 7.0};
        c.elevation = {12.0, 68.0, 7.0};
        c.device = geometry::DeviceConfig::orthogonal(40.0);
        // Both pinnae see targets within about +-30 deg of their boresight, so
        // the sidelobe scans across zero: 10 kHz -> +30 deg, 20 kHz -> -30 deg.
        c.beam.scan = {90.0, -6.0};
        c.azimuth_limits = {};
        return c;
    }

    void ExperimentConfig::validate() const
    {
        if (sites < 1)
            throw PreconditionError("experiment: sites must be >= 1");
        if (!(site_range > 0.0))
            throw PreconditionError("experiment: site range must be > 0");
        if (pulses_per_cell < 1)
            throw PreconditionError("experiment: pulses_per_cell must be >= 1");
        if (grid().empty())
            throw PreconditionError("experiment: empty direction grid");
        evaluation::make_folds(pulses_per_cell, cv.trains);
        chirp.validate();
        beam.validate();
        device.validate();
        noise.validate();
        cv.train.validate();
        moving_window.validate();
        for (const int s : train_sizes)
            if (s < 1)
                throw PreconditionError("experiment: train sizes must be >= 1");
        if (fused_train_size < 1)
            throw PreconditionError("experiment: fused_train_size must be >= 1");
        if (mode == Mode::robustness)
        {
            if (robustness_scenes < 1 || robustness_pulses < 1)
                throw PreconditionError("experiment: robustness needs scenes and pulses >= 1");
            if (!(robustness_range_min > 0.0 && robustness_range_min <= robustness_range_max))
                throw PreconditionError("experiment: robustness range interval invalid");
        }
    }

    std::vector<geometry::Direction> ExperimentConfig::grid() const
    {
        return geometry::grid_directions(azimuth, elevation);
    }

    geometry::DeviceConfig device_from_key_values(const KeyValues &kv, const geometry::DeviceConfig &base)
    {
        geometry::DeviceConfig d = base;
        const auto mode = kv.get_string("device.mode", d.mode == geometry::DeviceMode::parallel ? "parallel"
                                                                                                 : "orthogonal");
        if (mode == "parallel")
            d.mode = geometry::DeviceMode::parallel;
        else if (mode == "orthogonal")
            d.mode = geometry::DeviceMode::orthogonal;
        else
            throw PreconditionError("device.mode must be parallel or orthogonal");
        d.left.forward_tilt = kv.get_double("device.left.tilt", d.left.forward_tilt);
        d.left.roll = kv.get_double("device.left.roll", d.left.roll);
        d.left.baseline_offset = kv.get_double("device.left.baseline", d.left.baseline_offset);
        d.right.forward_tilt = kv.get_double("device.right.tilt", d.right.forward_tilt);
        d.right.roll = kv.get_double("device.right.roll", d.right.roll);
        d.right.baseline_offset = kv.get_double("device.right.baseline", d.right.baseline_offset);
        d.validate();
        return d;
    }

    KeyValues ExperimentConfig::to_key_values() const
    {
        KeyValues kv;
        kv.set("mode", to_string(mode));
        kv.set("seed", seed);
        set_range(kv, "grid.az", azimuth);
        set_range(kv, "grid.el", elevation);
        kv.set("acq.sites", sites);
        kv.set("acq.site_range", site_range);
        kv.set("acq.pulses_per_cell", pulses_per_cell);
        kv.set("acq.target_strength", target_strength);
        kv.set("acq.record_seconds", record_seconds);
        kv.merge(echo::chirp_to_key_values(chirp));
        const KeyValues beam_kv = beam.to_key_values();
        for (const auto &[k, v] : beam_kv.entries())
            kv.set("beam." + k, v);
        kv.merge(echo::device_to_key_values(device));
        kv.merge(echo::noise_to_key_values(noise));
        kv.merge(features.to_key_values());
        kv.merge(cv.train.to_key_values());
        kv.set("cv.normalization", features::to_string(cv.normalization));
        kv.set("cv.trains", cv.trains);
        kv.set("cv.range_margin", cv.range_margin);
        kv.set("mw.window_length", moving_window.window_length);
        kv.set("mw.step", moving_window.step);
        kv.set("mw.levels", moving_window.levels);
        kv.set("eval.azimuth_limits", join(azimuth_limits));
        kv.set("eval.train_sizes", join(train_sizes));
        kv.set("eval.thresholds", join(thresholds));
        kv.set("eval.window_lengths", join(window_lengths));
        kv.set("eval.cdf_thresholds", join(cdf_thresholds));
        kv.set("eval.fused_train_size", fused_train_size);
        kv.set("robust.scenes", robustness_scenes);
        kv.set("robust.pulses", robustness_pulses);
        kv.set("robust.az_min", robustness_azimuth.min);
        kv.set("robust.az_max", robustness_azimuth.max);
        kv.set("robust.el_min", robustness_elevation.min);
        kv.set("robust.el_max", robustness_elevation.max);
        kv.set("robust.range_min", robustness_range_min);
        kv.set("robust.range_max", robustness_range_max);
        return kv;
    }

    ExperimentConfig ExperimentConfig::from_key_values(const KeyValues &kv, const ExperimentConfig &base)
    {
        ExperimentConfig c = base;
        if (kv.contains("mode"))
            c.mode = parse_mode(kv.get_string("mode", ""));
        c.seed = kv.get_u64("seed", c.seed);
        c.azimuth = get_range(kv, "grid.az", c.azimuth);
        c.elevation = get_range(kv, "grid.el", c.elevation);
        c.sites = static_cast<int>(kv.get_int("acq.sites", c.sites));
        c.site_range = kv.get_double("acq.site_range", c.site_range);
        c.pulses_per_cell = static_cast<int>(kv.get_int("acq.pulses_per_cell", c.pulses_per_cell));
        c.target_strength = kv.get_double("acq.target_strength", c.target_strength);
        c.record_seconds = kv.get_double("acq.record_seconds", c.record_seconds);

        c.chirp.f_start = kv.get_double("chirp.f_start", c.chirp.f_start);
        c.chirp.f_end = kv.get_double("chirp.f_end", c.chirp.f_end);
        c.chirp.duration = kv.get_double("chirp.duration", c.chirp.duration);
        c.chirp.fs = kv.get_double("chirp.fs", c.chirp.fs);
        c.chirp.amplitude = kv.get_double("chirp.amplitude", c.chirp.amplitude);

        KeyValues beam_kv;
        for (const auto &[k, v] : kv.entries())
            if (k.rfind("beam.", 0) == 0)
                beam_kv.set(k.substr(5), v);
        c.beam = beam::BeamModel::from_key_values(beam_kv, c.beam);
        c.device = device_from_key_values(kv, c.device);

        c.noise.enabled = kv.get_string("noise.enabled", c.noise.enabled ? "true" : "false") == "true";
        c.noise.snr_db_at_boresight = kv.get_double("noise.snr_db", c.noise.snr_db_at_boresight);
        c.noise.tx_directivity_exponent = kv.get_double("noise.tx_exponent", c.noise.tx_directivity_exponent);
        c.noise.seed = kv.get_u64("noise.seed", c.noise.seed);

        c.features = features::FeatureConfig::from_key_values(kv, c.features);
        c.cv.train = estimator::TrainConfig::from_key_values(kv, c.cv.train);
        c.cv.normalization =
            features::parse_normalization(kv.get_string("cv.normalization", features::to_string(c.cv.normalization)));
        c.cv.trains = static_cast<int>(kv.get_int("cv.trains", c.cv.trains));
        c.cv.range_margin = kv.get_double("cv.range_margin", c.cv.range_margin);
        c.moving_window.window_length = kv.get_double("mw.window_length", c.moving_window.window_length);
        c.moving_window.step = kv.get_double("mw.step", c.moving_window.step);
        c.moving_window.levels = static_cast<int>(kv.get_int("mw.levels", c.moving_window.levels));

        if (kv.contains("eval.azimuth_limits"))
            c.azimuth_limits = kv.get_string("eval.azimuth_limits", "").empty()
                                   ? std::vector<double>{}
                                   : kv.get_list("eval.azimuth_limits", {});
        c.train_sizes = to_ints(kv.get_list("eval.train_sizes", std::vector<double>(c.train_sizes.begin(),
                                                                                    c.train_sizes.end())));
        c.thresholds = kv.get_list("eval.thresholds", c.thresholds);
        c.window_lengths = kv.get_list("eval.window_lengths", c.window_lengths);
        c.cdf_thresholds = kv.get_list("eval.cdf_thresholds", c.cdf_thresholds);
        c.fused_train_size = static_cast<int>(kv.get_int("eval.fused_train_size", c.fused_train_size));
        c.robustness_scenes = static_cast<int>(kv.get_int("robust.scenes", c.robustness_scenes));
        c.robustness_pulses = static_cast<int>(kv.get_int("robust.pulses", c.robustness_pulses));
        c.robustness_azimuth.min = kv.get_double("robust.az_min", c.robustness_azimuth.min);
        c.robustness_azimuth.max = kv.get_double("robust.az_max", c.robustness_azimuth.max);
        c.robustness_elevation.min = kv.get_double("robust.el_min", c.robustness_elevation.min);
        c.robustness_elevation.max = kv.get_double("robust.el_max", c.robustness_elevation.max);
        c.robustness_range_min = kv.get_double("robust.range_min", c.robustness_range_min);
        c.robustness_range_max = kv.get_double("robust.range_max", c.robustness_range_max);
        c.validate();
        return c;
    }

    echo::AcquisitionPlan ExperimentConfig::acquisition_plan() const
    {
        echo::AcquisitionPlan plan;
        plan.grid = grid();
        plan.sites = echo::default_sites(sites, site_range);
        plan.pulses_per_cell = pulses_per_cell;
        plan.chirp = chirp;
        plan.beam = beam;
        plan.device = device;
        plan.noise = noise;
        plan.target_strength = target_strength;
        plan.record_seconds = record_seconds;
        return plan;
    }

    void ReportBundle::write(const std::filesystem::path &dir) const
    {
        const std::string header = provenance_header(config);
        for (const auto &[name, body] : csv)
        {
            std::ofstream out(dir / name);
            if (!out)
                throw PreconditionError("cannot write " + (dir / name).string());
            out << header << body;
        }
        for (const auto &[name, body] : svg)
        {
            std::ofstream out(dir / name);
            if (!out)
                throw PreconditionError("cannot write " + (dir / name).string());
            out << body;
        }
        std::ofstream out(dir / "summary.cfg");
        out << header << summary.to_text();
    }

    std::vector<features::FeatureRow> simulate_features(const ExperimentConfig &cfg)
    {
        cfg.validate();
        const features::FeatureExtractor fx(cfg.chirp, cfg.features);
        return features::simulate_features(cfg.acquisition_plan(), fx);
    }

    ReportBundle evaluate_parallel(const std::vector<features::FeatureRow> &rows, const ExperimentConfig &cfg)
    {
        cfg.validate();
        auto cv_cfg = cfg.cv;
        cv_cfg.seed = cfg.seed;

        ReportBundle b;
        b.config = cfg.to_key_values();
        const auto cv = evaluation::cross_validate(rows, evaluation::Target::elevation, cv_cfg);
        b.summary.set("parallel.single_pulse.ratio5", cv.mean_ratio5());
        b.summary.set("parallel.rows", static_cast<std::uint64_t>(rows.size()));

        {
            std::ostringstream o;
            o << "site,az,el,pulse,rotation,prediction\n";
            for (std::size_t i = 0; i < rows.size(); ++i)
                o << rows[i].truth.site << ',' << f(rows[i].truth.direction.azimuth) << ','
                  << f(rows[i].truth.direction.elevation) << ',' << rows[i].truth.pulse << ',' << cv.rotation[i]
                  << ',' << f(cv.predictions[i]) << '\n';
            b.csv["single_pulse_predictions.csv"] = o.str();
            b.csv["cv_folds.csv"] = "rotation,ratio_within_5deg,best_epoch\n" + folds_csv(cv, false);
        }

        // Azimuth-limit sweep; limits covering the whole grid reuse the main run.
        if (!cfg.azimuth_limits.empty())
        {
            const double widest = max_abs_azimuth(rows);
            std::ostringstream acc, err;
            acc << "azimuth_limit,ratio_within_5deg,rows\n";
            err << "azimuth_limit,elevation,mean_error,std_error,count\n";
            std::vector<std::string> labels;
            std::vector<double> ratios;
            for (const double limit : cfg.azimuth_limits)
            {
                evaluation::AccuracyReport rep;
                if (limit + 1e-9 >= widest)
                {
                    std::vector<double> truths;
                    for (const auto &r : rows)
                        truths.push_back(r.truth.direction.elevation);
                    rep.azimuth_limit = limit;
                    rep.ratio = cv.mean_ratio5();
                    rep.count = rows.size();
                    rep.per_angle = evaluation::per_angle_stats(truths, cv.predictions);
                }
                else
                {
                    const double one[] = {limit};
                    rep = evaluation::azimuth_limit_sweep(rows, one, cv_cfg).front();
                }
                acc << f(limit) << ',' << f(rep.ratio) << ',' << rep.count << '\n';
                for (const auto &s : rep.per_angle)
                    err << f(limit) << ',' << f(s.angle) << ',' << f(s.mean_error) << ',' << f(s.std_error) << ','
                        << s.count << '\n';
                b.summary.set("parallel.limit." + key_suffix(limit) + ".ratio5", rep.ratio);
                labels.push_back("+-" + format_double(limit));
                ratios.push_back(rep.ratio);
            }
            b.csv["accuracy_by_limit.csv"] = acc.str();
            b.csv["error_by_elevation.csv"] = err.str();
            b.svg["accuracy_by_limit.svg"] =
                svg::bar_chart("Ratio within +-5 deg by training azimuth limit", labels, ratios, "ratio", 1.0);
        }

        if (!cfg.train_sizes.empty())
        {
            std::vector<int> sizes{1};
            for (const int s : cfg.train_sizes)
                if (s != 1)
                    sizes.push_back(s);
            const auto reports = evaluation::pulse_train_sweep(rows, cv, sizes, cfg.thresholds, cfg.moving_window);
            std::ostringstream o;
            o << "train_size,threshold,ratio,trains\n";
            std::map<double, svg::Series> by_threshold;
            for (const auto &r : reports)
            {
                o << r.train_size << ',' << f(r.threshold) << ',' << f(r.ratio) << ',' << r.count << '\n';
                b.summary.set("parallel.train." + std::to_string(r.train_size) + ".ratio" + key_suffix(r.threshold),
                              r.ratio);
                auto &s = by_threshold[r.threshold];
                s.label = "+-" + format_double(r.threshold) + " deg";
                s.x.push_back(r.train_size);
                s.y.push_back(r.ratio);
            }
            b.csv["pulse_train_accuracy.csv"] = o.str();
            std::vector<svg::Series> series;
            for (auto &[t, s] : by_threshold)
                series.push_back(s);
            b.svg["pulse_train_accuracy.svg"] =
                svg::line_chart("Pulse-train accuracy", "pulses per train", "ratio", series, 0.0, 1.0);

            std::ostringstream w;
            w << "window_length,train_size,threshold,ratio\n";
            for (const double L : cfg.window_lengths)
            {
                auto mw = cfg.moving_window;
                mw.window_length = L;
                mw.step = std::min(mw.step, L);
                for (const auto &r : evaluation::pulse_train_sweep(rows, cv, cfg.train_sizes, cfg.thresholds, mw))
                    w << f(L) << ',' << r.train_size << ',' << f(r.threshold) << ',' << f(r.ratio) << '\n';
            }
            b.csv["window_length_sweep.csv"] = w.str();
        }
        return b;
    }

    ReportBundle evaluate_orthogonal(const std::vector<features::FeatureRow> &rows, const ExperimentConfig &cfg)
    {
        cfg.validate();
        auto cv_cfg = cfg.cv;
        cv_cfg.seed = cfg.seed;

        ReportBundle b;
        b.config = cfg.to_key_values();
        const auto cv_az = evaluation::cross_validate(rows, evaluation::Target::azimuth, cv_cfg);
        const auto cv_el = evaluation::cross_validate(rows, evaluation::Target::elevation, cv_cfg);
        b.summary.set("orthogonal.single_pulse.azimuth.ratio5", cv_az.mean_ratio5());
        b.summary.set("orthogonal.single_pulse.elevation.ratio5", cv_el.mean_ratio5());
        b.summary.set("orthogonal.rows", static_cast<std::uint64_t>(rows.size()));
        b.csv["cv_folds.csv"] =
            "target,rotation,ratio_within_5deg,best_epoch\n" + folds_csv(cv_az, true) + folds_csv(cv_el, true);

        std::vector<double> az_truth, el_truth;
        for (const auto &r : rows)
        {
            az_truth.push_back(r.truth.direction.azimuth);
            el_truth.push_back(r.truth.direction.elevation);
        }
        {
            std::ostringstream o;
            o << "site,az,el,pulse,rotation,az_prediction,el_prediction\n";
            for (std::size_t i = 0; i < rows.size(); ++i)
                o << rows[i].truth.site << ',' << f(az_truth[i]) << ',' << f(el_truth[i]) << ','
                  << rows[i].truth.pulse << ',' << cv_el.rotation[i] << ',' << f(cv_az.predictions[i]) << ','
                  << f(cv_el.predictions[i]) << '\n';
            b.csv["single_pulse_predictions.csv"] = o.str();
        }
        {
            std::ostringstream o;
            o << "target,angle,mean_error,std_error,count\n";
            for (const auto &s : evaluation::per_angle_stats(az_truth, cv_az.predictions))
                o << "azimuth," << f(s.angle) << ',' << f(s.mean_error) << ',' << f(s.std_error) << ',' << s.count
                  << '\n';
            for (const auto &s : evaluation::per_angle_stats(el_truth, cv_el.predictions))
                o << "elevation," << f(s.angle) << ',' << f(s.mean_error) << ',' << f(s.std_error) << ','
                  << s.count << '\n';
            b.csv["per_angle_error.csv"] = o.str();
        }

        auto joint = [&](int size) {
            const auto groups = evaluation::pulse_train_groups(rows, cv_el.rotation, size);
            const auto fa = evaluation::fuse_groups(rows, cv_az, groups, cfg.moving_window);
            const auto fe = evaluation::fuse_groups(rows, cv_el, groups, cfg.moving_window);
            std::vector<double> da(fa.results.size()), de(fe.results.size());
            for (std::size_t i = 0; i < da.size(); ++i)
            {
                da[i] = fa.results[i] - fa.truths[i];
                de[i] = fe.results[i] - fe.truths[i];
            }
            return std::pair{da, de};
        };

        {
            std::ostringstream o;
            o << "train_size,threshold,fraction\n";
            std::vector<svg::Series> series;
            std::vector<int> sizes{1};
            if (cfg.fused_train_size != 1)
                sizes.push_back(cfg.fused_train_size);
            for (const int size : sizes)
            {
                const auto [da, de] = joint(size);
                const auto cdf = evaluation::joint_error_cdf(da, de, cfg.cdf_thresholds);
                svg::Series s;
                s.label = std::to_string(size) + (size == 1 ? " pulse" : " pulses");
                for (std::size_t k = 0; k < cdf.size(); ++k)
                {
                    o << size << ',' << f(cfg.cdf_thresholds[k]) << ',' << f(cdf[k]) << '\n';
                    b.summary.set("orthogonal.joint_cdf.size" + std::to_string(size) + ".t" +
                                      key_suffix(cfg.cdf_thresholds[k]),
                                  cdf[k]);
                    s.x.push_back(cfg.cdf_thresholds[k]);
                    s.y.push_back(cdf[k]);
                }
                series.push_back(s);
            }
            b.csv["joint_cdf.csv"] = o.str();
            b.svg["joint_cdf.svg"] = svg::line_chart("Joint azimuth/elevation error CDF", "error threshold (deg)",
                                                     "fraction", series, 0.0, 1.0);
        }

        if (!cfg.train_sizes.empty())
        {
            std::ostringstream o;
            o << "train_size,threshold,azimuth_ratio,elevation_ratio,joint_ratio\n";
            for (const int size : cfg.train_sizes)
            {
                const auto [da, de] = joint(size);
                const auto cdf = evaluation::joint_error_cdf(da, de, cfg.thresholds);
                for (std::size_t k = 0; k < cfg.thresholds.size(); ++k)
                {
                    const double t = cfg.thresholds[k];
                    const auto within = [t](const std::vector<double> &e) {
                        return static_cast<double>(
                                   std::count_if(e.begin(), e.end(), [t](double v) { return std::abs(v) <= t; })) /
                               static_cast<double>(e.size());
                    };
                    o << size << ',' << f(t) << ',' << f(within(da)) << ',' << f(within(de)) << ',' << f(cdf[k])
                      << '\n';
                }
            }
            b.csv["orthogonal_pulse_train.csv"] = o.str();
        }
        return b;
    }

    ReportBundle evaluate_robustness(const std::vector<features::FeatureRow> &rows, const ExperimentConfig &cfg)
    {
        cfg.validate();
        auto cv_cfg = cfg.cv;
        cv_cfg.seed = cfg.seed;

        ReportBundle b;
        b.config = cfg.to_key_values();
        const auto az_model = evaluation::fit_model(rows, evaluation::Target::azimuth, cv_cfg, derive_seed(cfg.seed, {1}));
        const auto el_model =
            evaluation::fit_model(rows, evaluation::Target::elevation, cv_cfg, derive_seed(cfg.seed, {2}));

        std::mt19937_64 gen(derive_seed(cfg.seed, {0x5CE4E}));
        std::uniform_real_distribution<double> u_az(cfg.robustness_azimuth.min, cfg.robustness_azimuth.max);
        std::uniform_real_distribution<double> u_el(cfg.robustness_elevation.min, cfg.robustness_elevation.max);
        std::uniform_real_distribution<double> u_r(cfg.robustness_range_min, cfg.robustness_range_max);

        const features::FeatureExtractor fx(cfg.chirp, cfg.features);
        std::ostringstream o;
        o << "scene,az,el,range,az_estimate,el_estimate,az_error,el_error\n";
        std::vector<double> da, de;
        auto mw = cfg.moving_window;
        for (int s = 0; s < cfg.robustness_scenes; ++s)
        {
            const geometry::Direction dir{u_az(gen), u_el(gen)};
            const double range = u_r(gen);
            echo::AcquisitionPlan plan = cfg.acquisition_plan();
            plan.grid = {dir};
            plan.sites = {echo::Site{range, {0.0, 0.0}}};
            plan.pulses_per_cell = cfg.robustness_pulses;
            plan.noise.seed = derive_seed(cfg.noise.seed, {0x7E57, static_cast<std::uint64_t>(s)});
            const auto test = features::simulate_features(plan, fx);

            std::vector<double> az_values, el_values;
            for (const auto &r : test)
            {
                const std::span<const double> v(r.values);
                az_values.push_back(estimator::predict(
                    az_model.network, features::make_feature_vector(v.first(features::kBands), v.last(features::kBands),
                                                                    cv_cfg.normalization, &az_model.normalizer)));
                el_values.push_back(estimator::predict(
                    el_model.network, features::make_feature_vector(v.first(features::kBands), v.last(features::kBands),
                                                                    cv_cfg.normalization, &el_model.normalizer)));
            }
            const double az_hat = decision::moving_window_estimate(az_values, mw);
            const double el_hat = decision::moving_window_estimate(el_values, mw);
            da.push_back(az_hat - dir.azimuth);
            de.push_back(el_hat - dir.elevation);
            o << s << ',' << f(dir.azimuth) << ',' << f(dir.elevation) << ',' << f(range) << ',' << f(az_hat) << ','
              << f(el_hat) << ',' << f(da.back()) << ',' << f(de.back()) << '\n';
        }
        b.csv["robustness_scenes.csv"] = o.str();

        const auto cdf = evaluation::joint_error_cdf(da, de, cfg.cdf_thresholds);
        std::ostringstream c;
        c << "threshold,fraction\n";
        svg::Series series{"random scenes", {}, {}};
        for (std::size_t k = 0; k < cdf.size(); ++k)
        {
            c << f(cfg.cdf_thresholds[k]) << ',' << f(cdf[k]) << '\n';
            b.summary.set("robustness.joint_cdf.t" + key_suffix(cfg.cdf_thresholds[k]), cdf[k]);
            series.x.push_back(cfg.cdf_thresholds[k]);
            series.y.push_back(cdf[k]);
        }
        b.csv["robustness_cdf.csv"] = c.str();
        b.svg["robustness_cdf.svg"] =
            svg::line_chart("Random-scene joint error CDF", "error threshold (deg)", "fraction", {series}, 0.0, 1.0);
        return b;
    }

    ReportBundle evaluate(const std::vector<features::FeatureRow> &rows, const ExperimentConfig &cfg)
    {
        switch (cfg.mode)
        {
        case Mode::parallel:
            return evaluate_parallel(rows, cfg);
        case Mode::orthogonal:
            return evaluate_orthogonal(rows, cfg);
        case Mode::robustness:
            return evaluate_robustness(rows, cfg);
        }
        return evaluate_parallel(rows, cfg);
    }

    ReportBundle run_parallel_experiment(const ExperimentConfig &cfg)
    {
        return evaluate_parallel(simulate_features(cfg), cfg);
    }

    ReportBundle run_orthogonal_experiment(const ExperimentConfig &cfg)
    {
        const auto rows = simulate_features(cfg);
        return cfg.mode == Mode::robustness ? evaluate_robustness(rows, cfg) : evaluate_orthogonal(rows, cfg);
    }

    ReportBundle run_experiment(const ExperimentConfig &cfg) { return evaluate(simulate_features(cfg), cfg); }

    std::string render_report(const KeyValues &config, const KeyValues &summary)
    {
        std::ostringstream o;
        o << "# Run report\n\n";
        o << "- mode: " << config.get_string("mode", "?") << "\n";
        o << "- seed: " << config.get_string("seed", "?") << "\n";
        o << "- config hash: " << hex64(config.hash()) << "\n\n";
        o << "| metric | value |\n|---|---|\n";
        for (const auto &[k, v] : summary.entries())
            o << "| " << k << " | " << v << " |\n";
        return o.str();
    }
}
