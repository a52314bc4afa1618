// SPDX-License-Identifier: Apache-2.0
//
// audio_io.cpp

#include "batsonar/audio_io.hpp"

#include "batsonar/errors.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <sstream>

namespace batsonar::audio
{
    static_assert(std::endian::native == std::endian::little, "storage formats assume a little-endian host");

    namespace
    {
        void put_u32(std::ostream &out, std::uint32_t v) { out.write(reinterpret_cast<const char *>(&v), 4); }
        void put_u16(std::ostream &out, std::uint16_t v) { out.write(reinterpret_cast<const char *>(&v), 2); }

        std::uint32_t get_u32(const char *p)
        {
            std::uint32_t v;
            std::memcpy(&v, p, 4);
            return v;
        }

        std::uint16_t get_u16(const char *p)
        {
            std::uint16_t v;
            std::memcpy(&v, p, 2);
            return v;
        }

        std::vector<std::string> split_csv(const std::string &line)
        {
            std::vector<std::string> out;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ','))
                out.push_back(cell);
            return out;
        }
    }

    void write_wav(const std::filesystem::path &path, const echo::EchoRecording &rec)
    {
        if (rec.left.size() != rec.right.size())
            throw PreconditionError("wav: channel lengths differ");
        const auto frames = static_cast<std::uint32_t>(rec.left.size());
        const std::uint32_t data_bytes = frames * 2u * 4u;
        const auto rate = static_cast<std::uint32_t>(std::lround(rec.fs));

        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw PreconditionError("cannot write " + path.string());
        out.write("RIFF", 4);
        put_u32(out, 4 + (8 + 18) + (8 + 4) + (8 + data_bytes));
        out.write("WAVE", 4);
        out.write("fmt ", 4);
        put_u32(out, 18);
        put_u16(out, 3); // IEEE float
        put_u16(out, 2);
        put_u32(out, rate);
        put_u32(out, rate * 8u);
        put_u16(out, 8);
        put_u16(out, 32);
        put_u16(out, 0);
        out.write("fact", 4);
        put_u32(out, 4);
        put_u32(out, frames);
        out.write("data", 4);
        put_u32(out, data_bytes);
        for (std::size_t i = 0; i < rec.left.size(); ++i)
        {
            out.write(reinterpret_cast<const char *>(&rec.left[i]), 4);
            out.write(reinterpret_cast<const char *>(&rec.right[i]), 4);
        }
        if (!out)
            throw NumericError("short write to " + path.string());
    }

    echo::EchoRecording read_wav(const std::filesystem::path &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw PreconditionError("cannot read " + path.string());
        const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0)
            throw PreconditionError(path.string() + ": not a RIFF/WAVE file");

        echo::EchoRecording rec;
        bool have_fmt = false;
        std::size_t pos = 12;
        while (pos + 8 <= bytes.size())
        {
            const std::string id = bytes.substr(pos, 4);
            const std::uint32_t size = get_u32(bytes.data() + pos + 4);
            const char *body = bytes.data() + pos + 8;
            if (pos + 8 + size > bytes.size())
                throw PreconditionError(path.string() + ": truncated chunk " + id);
            if (id == "fmt ")
            {
                if (size < 16 || get_u16(body) != 3 || get_u16(body + 2) != 2 || get_u16(body + 14) != 32)
                    throw PreconditionError(path.string() + ": expected stereo 32-bit float");
                rec.fs = get_u32(body + 4);
                have_fmt = true;
            }
            else if (id == "data")
            {
                if (!have_fmt)
                    throw PreconditionError(path.string() + ": data before fmt");
                const std::size_t frames = size / 8;
                rec.left.resize(frames);
                rec.right.resize(frames);
                for (std::size_t i = 0; i < frames; ++i)
                {
                    std::memcpy(&rec.left[i], body + 8 * i, 4);
                    std::memcpy(&rec.right[i], body + 8 * i + 4, 4);
                }
                return rec;
            }
            pos += 8 + size + (size & 1u);
        }
        throw PreconditionError(path.string() + ": no data chunk");
    }

    PackedEchoWriter::PackedEchoWriter(const std::filesystem::path &path, std::size_t record_length,
                                       std::size_t record_count)
        : out_(path, std::ios::binary | std::ios::trunc), record_length_(record_length), record_count_(record_count)
    {
        if (!out_)
            throw PreconditionError("cannot write " + path.string());
    }

    void PackedEchoWriter::write(std::size_t index, const echo::EchoRecording &rec)
    {
        if (index >= record_count_)
            throw PreconditionError("packed record index out of range");
        if (rec.left.size() != record_length_ || rec.right.size() != record_length_)
            throw PreconditionError("packed record has the wrong length");
        const auto bytes = static_cast<std::streamoff>(record_length_ * 4);
        std::lock_guard lock(mutex_);
        out_.seekp(static_cast<std::streamoff>(index) * 2 * bytes);
        out_.write(reinterpret_cast<const char *>(rec.left.data()), bytes);
        out_.write(reinterpret_cast<const char *>(rec.right.data()), bytes);
        if (!out_)
            throw NumericError("short write to packed echo file");
    }

    PackedEchoReader::PackedEchoReader(const std::filesystem::path &path, std::size_t record_length, double fs)
        : path_(path), record_length_(record_length), fs_(fs)
    {
        if (!std::filesystem::exists(path))
            throw PreconditionError("missing packed echo file " + path.string());
        if (record_length == 0)
            throw PreconditionError("record length must be > 0");
        count_ = std::filesystem::file_size(path) / (record_length * 8);
    }

    echo::EchoRecording PackedEchoReader::read(std::size_t index) const
    {
        if (index >= count_)
            throw PreconditionError("packed record index out of range");
        std::ifstream in(path_, std::ios::binary);
        const auto bytes = static_cast<std::streamoff>(record_length_ * 4);
        in.seekg(static_cast<std::streamoff>(index) * 2 * bytes);
        echo::EchoRecording rec;
        rec.fs = fs_;
        rec.left.resize(record_length_);
        rec.right.resize(record_length_);
        in.read(reinterpret_cast<char *>(rec.left.data()), bytes);
        in.read(reinterpret_cast<char *>(rec.right.data()), bytes);
        if (!in)
            throw PreconditionError("short read from " + path_.string());
        return rec;
    }

    ManifestRow manifest_row(const echo::EchoTruth &truth, const std::string &location)
    {
        return {location,         truth.site,  truth.direction.azimuth, truth.direction.elevation,
                truth.range,      truth.pulse, truth.direction_index};
    }

    echo::EchoTruth truth_of(const ManifestRow &row)
    {
        echo::EchoTruth t;
        t.direction = {row.azimuth, row.elevation};
        t.range = row.range;
        t.site = row.site;
        t.pulse = row.pulse;
        t.direction_index = row.direction_index;
        return t;
    }

    void write_manifest(const std::filesystem::path &path, const Manifest &m)
    {
        std::ofstream out(path);
        if (!out)
            throw PreconditionError("cannot write " + path.string());
        out << provenance_header(m.config);
        out << "location,site,az,el,range,pulse,direction_index\n";
        for (const auto &r : m.rows)
            out << r.location << ',' << r.site << ',' << format_double(r.azimuth) << ','
                << format_double(r.elevation) << ',' << format_double(r.range) << ',' << r.pulse << ','
                << r.direction_index << '\n';
    }

    Manifest read_manifest(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw PreconditionError("cannot read " + path.string());
        Manifest m;
        m.config = read_provenance(in);
        std::string line;
        std::getline(in, line); // column header
        while (std::getline(in, line))
        {
            if (line.empty())
                continue;
            const auto cells = split_csv(line);
            if (cells.size() != 7)
                throw PreconditionError(path.string() + ": malformed manifest row");
            ManifestRow r;
            r.location = cells[0];
            r.site = std::stoi(cells[1]);
            r.azimuth = std::stod(cells[2]);
            r.elevation = std::stod(cells[3]);
            r.range = std::stod(cells[4]);
            r.pulse = std::stoi(cells[5]);
            r.direction_index = std::stoul(cells[6]);
            m.rows.push_back(std::move(r));
        }
        return m;
    }
}
