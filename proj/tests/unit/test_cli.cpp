// SPDX-License-Identifier: Apache-2.0
//
// test_cli.cpp
//
// Drives the built executable through the shell.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace
{
    const std::string kTiny = " --set grid.az_min=-14 --set grid.az_max=14 --set grid.az_step=14"
                              " --set grid.el_min=20 --set grid.el_max=40 --set grid.el_step=10"
                              " --set acq.sites=2 --set acq.pulses_per_cell=20 --set train.epochs=10"
                              " --set eval.train_sizes=2,4 --set eval.azimuth_limits=0,10";

    int run(const std::string &args)
    {
        const std::string cmd = std::string(BATSONAR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string slurp(const fs::path &p)
    {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }

    class Cli : public ::testing::Test
    {
    protected:
        void SetUp() override
        {
            root = fs::temp_directory_path() /
                   ("batsonar_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
            fs::remove_all(root);
            fs::create_directories(root);
        }
        void TearDown() override { fs::remove_all(root); }

        fs::path work(const std::string &name)
        {
            fs::create_directories(root / name);
            return root / name;
        }

        int pipeline(const fs::path &dir, const std::string &extra = "")
        {
            const std::string out = " --out " + dir.string();
            for (const char *stage : {"simulate", "extract", "train", "evaluate", "report"})
            {
                std::string args = std::string(stage) + out;
                if (std::string(stage) == "simulate")
                    args += " --seed 5" + kTiny + extra;
                if (const int rc = run(args); rc != 0)
                    return rc;
            }
            return 0;
        }

        fs::path root;
    };
}

TEST_F(Cli, MissingOutputDirectoryIsConfigError)
{
    EXPECT_EQ(run("simulate --seed 1 --out " + (root / "absent").string()), 2);
    EXPECT_EQ(run("beam --out " + (root / "absent").string()), 2);
}

TEST_F(Cli, UsageErrorsExitTwo)
{
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("simulate --bogus-flag"), 2);
    EXPECT_EQ(run("simulate --out " + work("w").string()), 2);
    EXPECT_EQ(run("simulate --seed 1 --set notakeyvalue --out " + work("w").string()), 2);
    EXPECT_EQ(run("simulate --seed 1 --set acq.pulses_per_cell=7 --out " + work("w").string()), 2);
    EXPECT_EQ(run("simulate --seed 1 --format mp3 --out " + work("w").string()), 2);
    EXPECT_EQ(run("simulate --seed 1 --config " + (root / "none.cfg").string() + " --out " + work("w").string()), 2);
}

TEST_F(Cli, MissingUpstreamArtifactExitsFour)
{
    const auto dir = work("w");
    EXPECT_EQ(run("extract --out " + dir.string()), 4);
    EXPECT_EQ(run("evaluate --out " + dir.string()), 4);
    EXPECT_EQ(run("report --out " + dir.string()), 4);
    ASSERT_EQ(run("simulate --seed 2 --out " + dir.string() + kTiny), 0);
    EXPECT_EQ(run("evaluate --out " + dir.string()), 4);
    EXPECT_EQ(run("train --out " + dir.string()), 4);
}

TEST_F(Cli, FullPipelineIsReproducible)
{
    const auto a = work("a"), b = work("b");
    ASSERT_EQ(pipeline(a), 0);
    ASSERT_EQ(pipeline(b, " --jobs 1"), 0);
    for (const char *name : {"manifest.csv", "features.csv", "single_pulse_predictions.csv",
                             "pulse_train_accuracy.csv", "accuracy_by_limit.csv", "summary.cfg", "report.md",
                             "elevation.pnn", "echoes.f32"})
    {
        ASSERT_TRUE(fs::exists(a / name)) << name;
        EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
    }
    EXPECT_EQ(slurp(a / "single_pulse_predictions.csv").rfind("# config_hash = ", 0), 0u);
}

TEST_F(Cli, WavStorageGivesSameFeatures)
{
    const auto packed = work("p"), wav = work("w");
    ASSERT_EQ(run("simulate --seed 3 --out " + packed.string() + kTiny), 0);
    ASSERT_EQ(run("simulate --seed 3 --format wav --out " + wav.string() + kTiny), 0);
    EXPECT_TRUE(fs::exists(wav / "wav" / "echo_00000000.wav"));
    ASSERT_EQ(run("extract --out " + packed.string()), 0);
    ASSERT_EQ(run("extract --out " + wav.string()), 0);
    const auto body = [](const std::string &text) { return text.substr(text.find("\nsite,")); };
    EXPECT_EQ(body(slurp(packed / "features.csv")), body(slurp(wav / "features.csv")));
}

TEST_F(Cli, PresetSwitchesDeviceMode)
{
    const auto dir = work("o");
    ASSERT_EQ(run("simulate --preset orthogonal --seed 1 --set acq.pulses_per_cell=10 --set acq.sites=1"
                  " --set grid.az_min=0 --set grid.az_max=0 --set grid.el_min=40 --set grid.el_max=40 --out " +
                  dir.string()),
              0);
    const auto cfg = slurp(dir / "run.cfg");
    EXPECT_NE(cfg.find("device.mode = orthogonal"), std::string::npos);
    EXPECT_NE(cfg.find("mode = orthogonal"), std::string::npos);
}

TEST_F(Cli, BeamLobeTrackHasConstantSideAzimuth)
{
    const auto dir = work("beam");
    ASSERT_EQ(run("beam --set beamcmd.f_min=30000 --set beamcmd.f_max=50000 --out " + dir.string()), 0);
    std::ifstream in(dir / "lobe_track.csv");
    std::string line;
    std::set<std::string> azimuths;
    int rows = 0;
    while (std::getline(in, line))
    {
        if (line.empty() || line[0] == '#' || line.rfind("frequency", 0) == 0)
            continue;
        std::istringstream s(line);
        std::string f, el, az;
        std::getline(s, f, ',');
        std::getline(s, el, ',');
        std::getline(s, az, ',');
        azimuths.insert(az);
        ++rows;
    }
    EXPECT_EQ(rows, 5);
    EXPECT_EQ(azimuths.size(), 1u);
    EXPECT_TRUE(fs::exists(dir / "pattern_40000.csv"));
}
