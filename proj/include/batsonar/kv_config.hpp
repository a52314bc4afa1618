// SPDX-License-Identifier: Apache-2.0
//
// kv_config.hpp
//
// Flat `name = value` text files. Used for beam-model parameter files, run
// configs, and the sidecars written next to trained networks.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace batsonar
{
    class KeyValues
    {
    public:
        KeyValues() = default;

        // Lines are `name = value`; blank lines and `#` comments are ignored.
        // Throws PreconditionError on a malformed line.
        static KeyValues parse(const std::string &text);
        static KeyValues load(const std::filesystem::path &path);

        void save(const std::filesystem::path &path) const;
        std::string to_text() const;

        void set(const std::string &key, const std::string &value);
        void set(const std::string &key, double value);
        void set(const std::string &key, std::int64_t value);
        void set(const std::string &key, int value) { set(key, static_cast<std::int64_t>(value)); }
        void set(const std::string &key, std::uint64_t value);

        bool contains(const std::string &key) const { return entries_.count(key) != 0; }
        std::optional<std::string> get(const std::string &key) const;

        std::string get_string(const std::string &key, const std::string &fallback) const;
        double get_double(const std::string &key, double fallback) const;
        std::int64_t get_int(const std::string &key, std::int64_t fallback) const;
        std::uint64_t get_u64(const std::string &key, std::uint64_t fallback) const;

        // Comma separated list of numbers.
        std::vector<double> get_list(const std::string &key, const std::vector<double> &fallback) const;

        // Later entries override earlier ones.
        void merge(const KeyValues &other);

        const std::map<std::string, std::string> &entries() const { return entries_; }

        // FNV-1a over to_text(); keys are sorted so the hash is canonical.
        std::uint64_t hash() const;

    private:
        std::map<std::string, std::string> entries_;
    };

    // `# config_hash = ...` followed by every entry as a `# name = value` line.
    // Prefixes CSV artifacts so each file carries the config that produced it.
    std::string provenance_header(const KeyValues &config);

    // Reads back the `# ` lines at the top of a CSV stream and leaves the
    // stream positioned at the first data line. The hash line is dropped.
    KeyValues read_provenance(std::istream &in);

    std::string format_double(double v);
    std::string hex64(std::uint64_t v);
}
