// SPDX-License-Identifier: Apache-2.0
//
// audio_io.hpp
//
// Echo storage: one IEEE-float stereo WAV per pulse, or a single packed
// float32 file addressed by record index. Either way a CSV manifest carries
// the ground truth and the acquisition config.

#pragma once

#include "batsonar/echo_sim.hpp"
#include "batsonar/kv_config.hpp"

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

namespace batsonar::audio
{
    // 32-bit float, 2 channels, left then right interleaved.
    void write_wav(const std::filesystem::path &path, const echo::EchoRecording &rec);
    // Truth fields are left default; they live in the manifest.
    echo::EchoRecording read_wav(const std::filesystem::path &path);

    // Record i occupies [i * 2 * length, (i + 1) * 2 * length) floats:
    // the left channel followed by the right.
    class PackedEchoWriter
    {
    public:
        PackedEchoWriter(const std::filesystem::path &path, std::size_t record_length, std::size_t record_count);

        // Thread safe; records may arrive in any order.
        void write(std::size_t index, const echo::EchoRecording &rec);
        std::size_t record_length() const { return record_length_; }

    private:
        std::ofstream out_;
        std::size_t record_length_;
        std::size_t record_count_;
        std::mutex mutex_;
    };

    class PackedEchoReader
    {
    public:
        PackedEchoReader(const std::filesystem::path &path, std::size_t record_length, double fs);

        std::size_t count() const { return count_; }
        // Thread safe.
        echo::EchoRecording read(std::size_t index) const;

    private:
        std::filesystem::path path_;
        std::size_t record_length_;
        std::size_t count_;
        double fs_;
    };

    struct ManifestRow
    {
        std::string location; // WAV file name or packed record index
        int site = 0;
        double azimuth = 0.0;
        double elevation = 0.0;
        double range = 0.0;
        int pulse = 0;
        std::size_t direction_index = 0;
    };

    ManifestRow manifest_row(const echo::EchoTruth &truth, const std::string &location);
    echo::EchoTruth truth_of(const ManifestRow &row);

    struct Manifest
    {
        KeyValues config;
        std::vector<ManifestRow> rows;
    };

    void write_manifest(const std::filesystem::path &path, const Manifest &m);
    Manifest read_manifest(const std::filesystem::path &path);
}
