// SPDX-License-Identifier: Apache-2.0
//
// batsonar_cli.cpp
//
// Stage-per-subcommand driver. Each stage reads the previous stage's files
// from the --out work directory and writes its own next to them.
//
// Exit codes: 0 ok, 2 config error, 3 numeric failure, 4 missing upstream
// artifact, 5 training divergence.

#include "batsonar/audio_io.hpp"
#include "batsonar/errors.hpp"
#include "batsonar/estimator.hpp"
#include "batsonar/experiment.hpp"
#include "batsonar/farfield.hpp"
#include "batsonar/physics.hpp"
#include "batsonar/rng.hpp"

#include "CLI11.hpp"

#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace batsonar;

namespace
{
    enum ExitCode
    {
        kOk = 0,
        kConfigError = 2,
        kNumericError = 3,
        kMissingArtifact = 4,
        kDivergence = 5
    };

    class MissingArtifact : public Error
    {
    public:
        using Error::Error;
    };

    struct Options
    {
        std::string config_path;
        std::optional<std::uint64_t> seed;
        int jobs = 0;
        std::string preset;
        std::string out;
        std::vector<std::string> overrides;
        std::string format = "packed";
    };

    constexpr const char *kRunConfig = "run.cfg";
    constexpr const char *kManifest = "manifest.csv";
    constexpr const char *kPacked = "echoes.f32";
    constexpr const char *kFeatures = "features.csv";
    constexpr const char *kSummary = "summary.cfg";

    fs::path require_out(const Options &o)
    {
        if (o.out.empty())
            throw PreconditionError("--out is required");
        if (!fs::is_directory(o.out))
            throw PreconditionError("output directory '" + o.out + "' does not exist");
        return o.out;
    }

    void require_file(const fs::path &p, const std::string &stage)
    {
        if (!fs::exists(p))
            throw MissingArtifact("missing " + p.string() + " (run '" + stage + "' first)");
    }

    KeyValues user_overrides(const Options &o)
    {
        KeyValues kv;
        if (!o.config_path.empty())
        {
            if (!fs::exists(o.config_path))
                throw PreconditionError("config file '" + o.config_path + "' not found");
            kv.merge(KeyValues::load(o.config_path));
        }
        for (const auto &s : o.overrides)
            kv.merge(KeyValues::parse(s));
        if (o.seed)
            kv.set("seed", *o.seed);
        return kv;
    }

    // First stage: preset, then config file, then --set and --seed.
    experiment::ExperimentConfig fresh_config(const Options &o, bool seed_required)
    {
        const auto kv = user_overrides(o);
        if (seed_required && !kv.contains("seed"))
            throw PreconditionError("a seed is required (--seed or `seed` in the config)");
        const auto base = experiment::ExperimentConfig::preset(o.preset.empty() ? "parallel" : o.preset);
        return experiment::ExperimentConfig::from_key_values(kv, base);
    }

    // Later stages: the run's recorded config with user overrides on top.
    experiment::ExperimentConfig stage_config(const Options &o, const fs::path &dir)
    {
        require_file(dir / kRunConfig, "simulate");
        KeyValues kv = KeyValues::load(dir / kRunConfig);
        kv.merge(user_overrides(o));
        auto base = experiment::ExperimentConfig::preset(kv.get_string("mode", "parallel"));
        if (!o.preset.empty())
            kv.set("mode", experiment::to_string(experiment::parse_mode(o.preset)));
        return experiment::ExperimentConfig::from_key_values(kv, base);
    }

    void write_text(const fs::path &p, const std::string &text)
    {
        std::ofstream out(p);
        if (!out)
            throw PreconditionError("cannot write " + p.string());
        out << text;
    }

    // Piston aperture swept over frequency; elevation cut at az = 0.
    int cmd_beam(const Options &o)
    {
        const fs::path dir = require_out(o);
        KeyValues kv;
        kv.set("beamcmd.aperture", "piston");
        kv.set("beamcmd.radius", 0.02);
        kv.set("beamcmd.f_min", 20e3);
        kv.set("beamcmd.f_max", 60e3);
        kv.set("beamcmd.f_step", 5e3);
        kv.set("beamcmd.cells_per_wavelength", 8.0);
        kv.set("beamcmd.el_min", -90.0);
        kv.set("beamcmd.el_max", 90.0);
        kv.set("beamcmd.el_step", 0.5);
        kv.set("beamcmd.obliquity", "kirchhoff");
        kv.merge(user_overrides(o));

        const auto aperture_kind = kv.get_string("beamcmd.aperture", "piston");
        const auto obliquity_name = kv.get_string("beamcmd.obliquity", "kirchhoff");
        if (obliquity_name != "kirchhoff" && obliquity_name != "none")
            throw PreconditionError("beamcmd.obliquity must be kirchhoff or none");
        const auto obliquity =
            obliquity_name == "none" ? farfield::Obliquity::none : farfield::Obliquity::kirchhoff;
        const auto lattice = geometry::make_lattice(
            {0.0, 0.0, 1.0},
            {kv.get_double("beamcmd.el_min", -90), kv.get_double("beamcmd.el_max", 90),
             kv.get_double("beamcmd.el_step", 0.5)});

        std::vector<farfield::ApertureField> apertures;
        if (aperture_kind == "piston")
        {
            const double radius = kv.get_double("beamcmd.radius", 0.02);
            const double f_max = kv.get_double("beamcmd.f_max", 60e3);
            const double cells = kv.get_double("beamcmd.cells_per_wavelength", 8.0);
            if (!(radius > 0.0 && f_max > 0.0 && cells > 0.0))
                throw PreconditionError("piston radius, f_max and cells_per_wavelength must be > 0");
            const double spacing = kSpeedOfSound / f_max / cells;
            for (const double f : geometry::axis_values({kv.get_double("beamcmd.f_min", 20e3), f_max,
                                                         kv.get_double("beamcmd.f_step", 5e3)}))
                apertures.push_back(farfield::circular_piston(radius, f, spacing));
        }
        else if (aperture_kind == "file")
        {
            const auto path = kv.get_string("beamcmd.aperture_file", "");
            if (path.empty() || !fs::exists(path))
                throw PreconditionError("beamcmd.aperture_file must name an existing aperture CSV");
            apertures.push_back(farfield::read_aperture_csv(path));
        }
        else
            throw PreconditionError("beamcmd.aperture must be piston or file");

        const std::string header = provenance_header(kv);
        std::string track = "frequency,side_el,side_az,main_hpbw,energy_ratio,side_level_db\n";
        for (const auto &ap : apertures)
        {
            ap.check_sampling();
            auto pattern = farfield::kirchhoff_far_field(ap, lattice, obliquity);
            const auto name = "pattern_" + std::to_string(static_cast<long long>(std::llround(ap.frequency))) + ".csv";
            farfield::write_pattern_csv(dir / name, pattern, header);
            const auto r = farfield::analyze_lobes(pattern);
            track += format_double(ap.frequency) + "," + format_double(r.side_direction.elevation) + "," +
                     format_double(r.side_direction.azimuth) + "," + format_double(r.main_hpbw) + "," +
                     format_double(r.energy_ratio) + "," + format_double(r.side_level_db) + "\n";
        }
        write_text(dir / "lobe_track.csv", header + track);
        std::cout << "beam: " << apertures.size() << " patterns written to " << dir << "\n";
        return kOk;
    }

    int cmd_simulate(const Options &o)
    {
        const fs::path dir = require_out(o);
        if (o.format != "packed" && o.format != "wav")
            throw PreconditionError("--format must be packed or wav");
        const auto cfg = fresh_config(o, true);
        const auto plan = cfg.acquisition_plan();
        auto kv = cfg.to_key_values();
        kv.set("storage.format", o.format);
        const echo::EchoSynthesizer probe(plan.chirp, plan.record_seconds);
        kv.set("storage.record_length", static_cast<std::uint64_t>(probe.record_length()));
        kv.save(dir / kRunConfig);

        audio::Manifest manifest;
        manifest.config = kv;
        manifest.rows.resize(plan.record_count());
        if (o.format == "packed")
        {
            audio::PackedEchoWriter writer(dir / kPacked, probe.record_length(), plan.record_count());
            echo::for_each_record(plan, [&](std::size_t i, const echo::EchoRecording &r) {
                writer.write(i, r);
                manifest.rows[i] = audio::manifest_row(r.truth, std::to_string(i));
            });
        }
        else
        {
            fs::create_directories(dir / "wav");
            echo::for_each_record(plan, [&](std::size_t i, const echo::EchoRecording &r) {
                char name[64];
                std::snprintf(name, sizeof name, "wav/echo_%08zu.wav", i);
                audio::write_wav(dir / name, r);
                manifest.rows[i] = audio::manifest_row(r.truth, name);
            });
        }
        audio::write_manifest(dir / kManifest, manifest);
        std::cout << "simulate: " << plan.record_count() << " records (" << o.format << ") in " << dir << "\n";
        return kOk;
    }

    int cmd_extract(const Options &o)
    {
        const fs::path dir = require_out(o);
        require_file(dir / kManifest, "simulate");
        const auto cfg = stage_config(o, dir);
        const auto manifest = audio::read_manifest(dir / kManifest);
        const auto run = KeyValues::load(dir / kRunConfig);
        const bool packed = run.get_string("storage.format", "packed") == "packed";
        std::optional<audio::PackedEchoReader> reader;
        if (packed)
        {
            require_file(dir / kPacked, "simulate");
            reader.emplace(dir / kPacked, run.get_u64("storage.record_length", 0), cfg.chirp.fs);
        }

        const features::FeatureExtractor fx(cfg.chirp, cfg.features);
        features::FeatureTable table;
        table.config = cfg.to_key_values();
        table.rows.resize(manifest.rows.size());
        std::exception_ptr failure;
        const long n = static_cast<long>(manifest.rows.size());
#pragma omp parallel for schedule(dynamic, 16)
        for (long i = 0; i < n; ++i)
        {
            try
            {
                const auto &row = manifest.rows[static_cast<std::size_t>(i)];
                auto rec = packed ? reader->read(std::stoul(row.location)) : audio::read_wav(dir / row.location);
                rec.truth = audio::truth_of(row);
                table.rows[static_cast<std::size_t>(i)] = {rec.truth, fx.extract(rec)};
            }
            catch (...)
            {
#pragma omp critical
                if (!failure)
                    failure = std::current_exception();
            }
        }
        if (failure)
            std::rethrow_exception(failure);
        features::write_feature_table(dir / kFeatures, table);
        std::cout << "extract: " << table.rows.size() << " feature rows\n";
        return kOk;
    }

    std::vector<evaluation::Target> targets_for(const experiment::ExperimentConfig &cfg)
    {
        if (cfg.mode == experiment::Mode::parallel)
            return {evaluation::Target::elevation};
        return {evaluation::Target::azimuth, evaluation::Target::elevation};
    }

    int cmd_train(const Options &o)
    {
        const fs::path dir = require_out(o);
        require_file(dir / kFeatures, "extract");
        const auto cfg = stage_config(o, dir);
        if (!o.seed && !KeyValues::load(dir / kRunConfig).contains("seed"))
            throw PreconditionError("a seed is required for training");
        const auto table = features::read_feature_table(dir / kFeatures);
        auto cv = cfg.cv;
        cv.seed = cfg.seed;
        for (const auto target : targets_for(cfg))
        {
            const auto name = evaluation::to_string(target);
            const auto model = evaluation::fit_model(table.rows, target, cv,
                                                     derive_seed(cfg.seed, {static_cast<std::uint64_t>(target)}));
            estimator::save_network(dir / (name + ".pnn"), model.network);
            KeyValues side = cfg.cv.train.to_key_values();
            side.set("target", name);
            side.set("normalization", features::to_string(cfg.cv.normalization));
            side.set("angle_min", model.network.angle_min);
            side.set("angle_max", model.network.angle_max);
            side.set("best_epoch", model.best_epoch);
            side.set("config_hash", hex64(cfg.to_key_values().hash()));
            side.save(dir / (name + ".pnn.cfg"));
            model.normalizer.to_key_values().save(dir / (name + ".norm"));
            std::cout << "train: " << name << " network, best epoch " << model.best_epoch << "\n";
        }
        return kOk;
    }

    int cmd_evaluate(const Options &o)
    {
        const fs::path dir = require_out(o);
        require_file(dir / kFeatures, "extract");
        const auto cfg = stage_config(o, dir);
        const auto table = features::read_feature_table(dir / kFeatures);
        const auto bundle = experiment::evaluate(table.rows, cfg);
        bundle.write(dir);
        std::cout << bundle.summary.to_text();
        return kOk;
    }

    int cmd_report(const Options &o)
    {
        const fs::path dir = require_out(o);
        require_file(dir / kSummary, "evaluate");
        std::ifstream in(dir / kSummary);
        const auto config = read_provenance(in);
        const std::string rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        write_text(dir / "report.md", experiment::render_report(config, KeyValues::parse(rest)));
        std::cout << "report: " << (dir / "report.md").string() << "\n";
        return kOk;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"Binaural sonar simulator and direction estimator"};
    app.require_subcommand(1);
    app.fallthrough();

    Options o;
    app.add_option("--config", o.config_path, "flat `key = value` config file");
    app.add_option("--seed", o.seed, "master seed");
    app.add_option("--jobs", o.jobs, "worker threads (0 = OpenMP default)")->check(CLI::NonNegativeNumber);
    app.add_option("--preset", o.preset, "parallel | orthogonal | robustness");
    app.add_option("--out", o.out, "existing work directory");
    app.add_option("--set", o.overrides, "extra `key=value` override (repeatable)");

    auto *beam = app.add_subcommand("beam", "far-field patterns and lobe track of a synthetic aperture");
    auto *simulate = app.add_subcommand("simulate", "synthesize the echo dataset");
    simulate->add_option("--format", o.format, "packed | wav");
    auto *extract = app.add_subcommand("extract", "band-energy features from stored echoes");
    auto *train = app.add_subcommand("train", "fit the final networks on every feature row");
    auto *evaluate = app.add_subcommand("evaluate", "cross-validation, fusion sweeps, CSV and SVG tables");
    auto *report = app.add_subcommand("report", "markdown digest of the evaluation summary");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError &e)
    {
        app.exit(e);
        return kConfigError;
    }

    try
    {
        if (o.jobs > 0)
            omp_set_num_threads(o.jobs);
        if (beam->parsed())
            return cmd_beam(o);
        if (simulate->parsed())
            return cmd_simulate(o);
        if (extract->parsed())
            return cmd_extract(o);
        if (train->parsed())
            return cmd_train(o);
        if (evaluate->parsed())
            return cmd_evaluate(o);
        if (report->parsed())
            return cmd_report(o);
    }
    catch (const MissingArtifact &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return kMissingArtifact;
    }
    catch (const DivergenceError &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return kDivergence;
    }
    catch (const NumericError &e)
    {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kNumericError;
    }
    catch (const PreconditionError &e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kOk;
}
