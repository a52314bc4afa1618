// SPDX-License-Identifier: Apache-2.0
//
// kv_config.cpp

#include "batsonar/kv_config.hpp"

#include "batsonar/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace batsonar
{
    namespace
    {
        std::string trim(const std::string &s)
        {
            const auto b = s.find_first_not_of(" \t\r\n");
            if (b == std::string::npos)
                return {};
            const auto e = s.find_last_not_of(" \t\r\n");
            return s.substr(b, e - b + 1);
        }

        double parse_double(const std::string &key, const std::string &text)
        {
            try
            {
                std::size_t used = 0;
                const double v = std::stod(text, &used);
                if (trim(text.substr(used)).empty())
                    return v;
            }
            catch (const std::exception &)
            {
            }
            throw PreconditionError("config key '" + key + "': not a number: '" + text + "'");
        }
    }

    std::string format_double(double v)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    std::string hex64(std::uint64_t v)
    {
        char buf[20];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
        return buf;
    }

    KeyValues KeyValues::parse(const std::string &text)
    {
        KeyValues kv;
        std::istringstream in(text);
        std::string line;
        int line_no = 0;
        while (std::getline(in, line))
        {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos)
                line.erase(hash);
            line = trim(line);
            if (line.empty())
                continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw PreconditionError("config line " + std::to_string(line_no) + ": expected 'name = value'");
            const auto key = trim(line.substr(0, eq));
            if (key.empty())
                throw PreconditionError("config line " + std::to_string(line_no) + ": empty name");
            kv.entries_[key] = trim(line.substr(eq + 1));
        }
        return kv;
    }

    KeyValues KeyValues::load(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw PreconditionError("cannot open config file " + path.string());
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    void KeyValues::save(const std::filesystem::path &path) const
    {
        std::ofstream out(path);
        if (!out)
            throw PreconditionError("cannot write " + path.string());
        out << to_text();
    }

    std::string KeyValues::to_text() const
    {
        std::string out;
        for (const auto &[k, v] : entries_)
            out += k + " = " + v + "\n";
        return out;
    }

    void KeyValues::set(const std::string &key, const std::string &value) { entries_[key] = value; }
    void KeyValues::set(const std::string &key, double value) { entries_[key] = format_double(value); }
    void KeyValues::set(const std::string &key, std::int64_t value) { entries_[key] = std::to_string(value); }
    void KeyValues::set(const std::string &key, std::uint64_t value) { entries_[key] = std::to_string(value); }

    std::optional<std::string> KeyValues::get(const std::string &key) const
    {
        const auto it = entries_.find(key);
        if (it == entries_.end())
            return std::nullopt;
        return it->second;
    }

    std::string KeyValues::get_string(const std::string &key, const std::string &fallback) const
    {
        return get(key).value_or(fallback);
    }

    double KeyValues::get_double(const std::string &key, double fallback) const
    {
        const auto v = get(key);
        return v ? parse_double(key, *v) : fallback;
    }

    std::int64_t KeyValues::get_int(const std::string &key, std::int64_t fallback) const
    {
        const auto v = get(key);
        if (!v)
            return fallback;
        std::int64_t out = 0;
        const auto *first = v->data();
        const auto *last = v->data() + v->size();
        const auto [ptr, ec] = std::from_chars(first, last, out);
        if (ec != std::errc{} || ptr != last)
            throw PreconditionError("config key '" + key + "': not an integer: '" + *v + "'");
        return out;
    }

    std::uint64_t KeyValues::get_u64(const std::string &key, std::uint64_t fallback) const
    {
        const auto v = get(key);
        if (!v)
            return fallback;
        std::uint64_t out = 0;
        const auto *first = v->data();
        const auto *last = v->data() + v->size();
        const auto [ptr, ec] = std::from_chars(first, last, out);
        if (ec != std::errc{} || ptr != last)
            throw PreconditionError("config key '" + key + "': not an unsigned integer: '" + *v + "'");
        return out;
    }

    std::vector<double> KeyValues::get_list(const std::string &key, const std::vector<double> &fallback) const
    {
        const auto v = get(key);
        if (!v)
            return fallback;
        std::vector<double> out;
        std::stringstream ss(*v);
        std::string item;
        while (std::getline(ss, item, ','))
        {
            item = trim(item);
            if (!item.empty())
                out.push_back(parse_double(key, item));
        }
        return out;
    }

    void KeyValues::merge(const KeyValues &other)
    {
        for (const auto &[k, v] : other.entries_)
            entries_[k] = v;
    }

    std::uint64_t KeyValues::hash() const
    {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (const unsigned char c : to_text())
        {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        return h;
    }

    std::string provenance_header(const KeyValues &config)
    {
        std::string out = "# config_hash = " + hex64(config.hash()) + "\n";
        std::istringstream in(config.to_text());
        std::string line;
        while (std::getline(in, line))
            out += "# " + line + "\n";
        return out;
    }

    KeyValues read_provenance(std::istream &in)
    {
        KeyValues kv;
        std::string line;
        while (in.peek() == '#' && std::getline(in, line))
        {
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                continue;
            const auto key = trim(line.substr(1, eq - 1));
            if (key != "config_hash")
                kv.set(key, trim(line.substr(eq + 1)));
        }
        return kv;
    }
}
