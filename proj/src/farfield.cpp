// SPDX-License-Identifier: Apache-2.0
//
// farfield.cpp

#include "batsonar/farfield.hpp"

#include "batsonar/errors.hpp"
#include "batsonar/physics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

namespace batsonar::farfield
{
    ApertureField::ApertureField(std::size_t rows_, std::size_t cols_, double spacing_, double frequency_)
        : rows(rows_), cols(cols_), cells(rows_ * cols_, cplx{0.0, 0.0}), spacing(spacing_), frequency(frequency_)
    {
    }

    double ApertureField::wavenumber() const { return 2.0 * std::numbers::pi * frequency / kSpeedOfSound; }

    double ApertureField::wavelength() const { return kSpeedOfSound / frequency; }

    void ApertureField::check_sampling() const
    {
        if (rows == 0 || cols == 0 || cells.size() != rows * cols)
            throw PreconditionError("aperture grid is empty or inconsistent");
        if (!(spacing > 0.0) || !(frequency > 0.0))
            throw PreconditionError("aperture spacing and frequency must be > 0");
        if (wavelength() / spacing < 5.0)
            throw SamplingGuardError("aperture undersampled: " + std::to_string(wavelength() / spacing) +
                                     " cells per wavelength (< 5)");
    }

    ApertureField circular_piston(double radius, double frequency, double spacing)
    {
        if (!(radius > 0.0) || !(spacing > 0.0))
            throw PreconditionError("piston radius and spacing must be > 0");
        const auto n = static_cast<std::size_t>(std::ceil(2.0 * radius / spacing)) + 2;
        ApertureField a(n, n, spacing, frequency);
        constexpr int sub = 8;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c)
            {
                int inside = 0;
                for (int i = 0; i < sub; ++i)
                    for (int j = 0; j < sub; ++j)
                    {
                        const double zz = a.z(r) + ((i + 0.5) / sub - 0.5) * spacing;
                        const double yy = a.y(c) + ((j + 0.5) / sub - 0.5) * spacing;
                        inside += (yy * yy + zz * zz <= radius * radius) ? 1 : 0;
                    }
                a.at(r, c) = static_cast<double>(inside) / (sub * sub);
            }
        return a;
    }

    std::vector<double> FarFieldPattern::magnitudes() const
    {
        std::vector<double> m(gains.size());
        std::transform(gains.begin(), gains.end(), m.begin(), [](const cplx &g) { return std::abs(g); });
        return m;
    }

    namespace
    {
        // Separable phase: exp(ik(ry*y + rz*z)) = exp(ik ry y) * exp(ik rz z).
        cplx project_direction(const ApertureField &a, const Direction &d, Obliquity obliquity,
                               std::vector<cplx> &col_phase)
        {
            const auto r = geometry::to_unit_vector(d);
            const double k = a.wavenumber();
            for (std::size_t c = 0; c < a.cols; ++c)
                col_phase[c] = std::polar(1.0, k * r[1] * a.y(c));
            cplx total{0.0, 0.0};
            for (std::size_t row = 0; row < a.rows; ++row)
            {
                cplx acc{0.0, 0.0};
                const cplx *cells = &a.cells[row * a.cols];
                for (std::size_t c = 0; c < a.cols; ++c)
                    acc += cells[c] * col_phase[c];
                total += acc * std::polar(1.0, k * r[2] * a.z(row));
            }
            const double factor = obliquity == Obliquity::kirchhoff ? 0.5 * (1.0 + r[0]) : 1.0;
            return total * factor * a.spacing * a.spacing;
        }

        FarFieldPattern prepare(const ApertureField &aperture, const DirectionLattice &lattice)
        {
            aperture.check_sampling();
            if (lattice.size() == 0)
                throw PreconditionError("far-field direction lattice is empty");
            FarFieldPattern p;
            p.lattice = lattice;
            p.gains.assign(lattice.size(), cplx{0.0, 0.0});
            p.frequency = aperture.frequency;
            return p;
        }

        FarFieldPattern raw_parallel(const ApertureField &aperture, const DirectionLattice &lattice,
                                     Obliquity obliquity)
        {
            auto p = prepare(aperture, lattice);
            const auto n_az = lattice.azimuths.size();
            const auto n = static_cast<std::ptrdiff_t>(lattice.size());
#pragma omp parallel
            {
                std::vector<cplx> col_phase(aperture.cols);
#pragma omp for schedule(static)
                for (std::ptrdiff_t i = 0; i < n; ++i)
                {
                    const auto iu = static_cast<std::size_t>(i);
                    const Direction d{lattice.azimuths[iu % n_az], lattice.elevations[iu / n_az]};
                    p.gains[iu] = project_direction(aperture, d, obliquity, col_phase);
                }
            }
            return p;
        }
    }

    FarFieldPattern kirchhoff_far_field_raw(const ApertureField &aperture, const DirectionLattice &lattice,
                                            Obliquity obliquity)
    {
        return raw_parallel(aperture, lattice, obliquity);
    }

    void normalize_peak(FarFieldPattern &pattern)
    {
        double peak = 0.0;
        for (const auto &g : pattern.gains)
            peak = std::max(peak, std::abs(g));
        if (!(peak > 0.0) || !std::isfinite(peak))
            throw NumericError("far-field pattern has no finite non-zero peak");
        for (auto &g : pattern.gains)
            g /= peak;
    }

    FarFieldPattern kirchhoff_far_field(const ApertureField &aperture, const DirectionLattice &lattice,
                                        Obliquity obliquity)
    {
        auto p = raw_parallel(aperture, lattice, obliquity);
        normalize_peak(p);
        return p;
    }

    FarFieldPattern kirchhoff_far_field_serial(const ApertureField &aperture, const DirectionLattice &lattice,
                                               Obliquity obliquity)
    {
        auto p = prepare(aperture, lattice);
        std::vector<cplx> col_phase(aperture.cols);
        for (std::size_t i_el = 0; i_el < lattice.elevations.size(); ++i_el)
            for (std::size_t i_az = 0; i_az < lattice.azimuths.size(); ++i_az)
                p.gains[lattice.index(i_el, i_az)] =
                    project_direction(aperture, lattice.at(i_el, i_az), obliquity, col_phase);
        normalize_peak(p);
        return p;
    }

    double half_power_width(const std::vector<double> &angles, const std::vector<double> &mags,
                            std::size_t peak_index)
    {
        if (angles.size() != mags.size() || peak_index >= mags.size())
            throw PreconditionError("half_power_width: inconsistent cut");
        const double thr = mags[peak_index] / std::numbers::sqrt2;

        auto crossing = [&](std::size_t inside, std::size_t outside) {
            const double t = (thr - mags[outside]) / (mags[inside] - mags[outside]);
            return angles[outside] + t * (angles[inside] - angles[outside]);
        };

        std::size_t lo = peak_index;
        while (lo > 0 && mags[lo - 1] >= thr)
            --lo;
        const double left = lo > 0 ? crossing(lo, lo - 1) : angles.front();

        std::size_t hi = peak_index;
        while (hi + 1 < mags.size() && mags[hi + 1] >= thr)
            ++hi;
        const double right = hi + 1 < mags.size() ? crossing(hi, hi + 1) : angles.back();
        return right - left;
    }

    namespace
    {
        std::vector<double> elevation_cut(const FarFieldPattern &p, std::size_t i_az)
        {
            std::vector<double> cut(p.lattice.elevations.size());
            for (std::size_t i = 0; i < cut.size(); ++i)
                cut[i] = p.magnitude(i, i_az);
            return cut;
        }

        // 4-connected region around `seed` with magnitude >= threshold.
        std::vector<char> flood_region(const FarFieldPattern &p, const std::vector<double> &mags, std::size_t seed,
                                       double threshold)
        {
            const auto n_az = p.lattice.azimuths.size();
            const auto n_el = p.lattice.elevations.size();
            std::vector<char> in(mags.size(), 0);
            std::vector<std::size_t> stack{seed};
            in[seed] = 1;
            while (!stack.empty())
            {
                const auto idx = stack.back();
                stack.pop_back();
                const auto i_el = idx / n_az;
                const auto i_az = idx % n_az;
                auto visit = [&](std::size_t e, std::size_t a) {
                    const auto j = e * n_az + a;
                    if (!in[j] && mags[j] >= threshold)
                    {
                        in[j] = 1;
                        stack.push_back(j);
                    }
                };
                if (i_el > 0)
                    visit(i_el - 1, i_az);
                if (i_el + 1 < n_el)
                    visit(i_el + 1, i_az);
                if (i_az > 0)
                    visit(i_el, i_az - 1);
                if (i_az + 1 < n_az)
                    visit(i_el, i_az + 1);
            }
            return in;
        }

        bool is_local_max(const FarFieldPattern &p, const std::vector<double> &mags, std::size_t idx)
        {
            const auto n_az = static_cast<std::ptrdiff_t>(p.lattice.azimuths.size());
            const auto n_el = static_cast<std::ptrdiff_t>(p.lattice.elevations.size());
            const auto i_el = static_cast<std::ptrdiff_t>(idx) / n_az;
            const auto i_az = static_cast<std::ptrdiff_t>(idx) % n_az;
            const double v = mags[idx];
            if (!(v > 0.0))
                return false;
            bool strictly_above_one = false;
            for (std::ptrdiff_t de = -1; de <= 1; ++de)
                for (std::ptrdiff_t da = -1; da <= 1; ++da)
                {
                    if (de == 0 && da == 0)
                        continue;
                    const auto e = i_el + de;
                    const auto a = i_az + da;
                    if (e < 0 || e >= n_el || a < 0 || a >= n_az)
                        continue;
                    const double w = mags[static_cast<std::size_t>(e * n_az + a)];
                    if (w > v)
                        return false;
                    if (w < v)
                        strictly_above_one = true;
                }
            return strictly_above_one;
        }
    }

    MainLobe find_main_lobe(const FarFieldPattern &pattern)
    {
        const auto mags = pattern.magnitudes();
        if (mags.empty())
            throw PreconditionError("empty far-field pattern");
        const auto best = static_cast<std::size_t>(std::max_element(mags.begin(), mags.end()) - mags.begin());
        MainLobe m;
        const auto n_az = pattern.lattice.azimuths.size();
        m.i_el = best / n_az;
        m.i_az = best % n_az;
        m.direction = pattern.lattice.at(m.i_el, m.i_az);
        m.peak = mags[best];
        m.hpbw = half_power_width(pattern.lattice.elevations, elevation_cut(pattern, m.i_az), m.i_el);
        return m;
    }

    LobeReport analyze_lobes(const FarFieldPattern &pattern)
    {
        const auto main = find_main_lobe(pattern);
        const auto mags = pattern.magnitudes();
        const auto main_idx = pattern.lattice.index(main.i_el, main.i_az);
        const auto main_region = flood_region(pattern, mags, main_idx, main.peak / std::numbers::sqrt2);

        std::size_t side_idx = mags.size();
        for (std::size_t i = 0; i < mags.size(); ++i)
        {
            if (main_region[i] || !is_local_max(pattern, mags, i))
                continue;
            if (side_idx == mags.size() || mags[i] > mags[side_idx])
                side_idx = i;
        }
        if (side_idx == mags.size())
            throw NoSideLobeError("pattern has no local maximum outside the main lobe");

        const auto side_region = flood_region(pattern, mags, side_idx, mags[side_idx] / std::numbers::sqrt2);
        double e_main = 0.0;
        double e_side = 0.0;
        for (std::size_t i = 0; i < mags.size(); ++i)
        {
            if (main_region[i])
                e_main += mags[i] * mags[i];
            if (side_region[i])
                e_side += mags[i] * mags[i];
        }

        const auto n_az = pattern.lattice.azimuths.size();
        LobeReport r;
        r.main_direction = main.direction;
        r.main_hpbw = main.hpbw;
        r.side_direction = pattern.lattice.at(side_idx / n_az, side_idx % n_az);
        r.side_level_db = 20.0 * std::log10(mags[side_idx] / main.peak);
        r.energy_ratio = e_side / e_main;
        return r;
    }

    double first_null_elevation(const FarFieldPattern &pattern)
    {
        const auto main = find_main_lobe(pattern);
        const auto cut = elevation_cut(pattern, main.i_az);
        const auto &el = pattern.lattice.elevations;
        for (std::size_t i = main.i_el + 1; i + 1 < cut.size(); ++i)
        {
            if (cut[i] <= cut[i - 1] && cut[i] <= cut[i + 1])
            {
                // |g|^2 is locally quadratic at a zero crossing; |g| is not.
                const double a = cut[i - 1] * cut[i - 1];
                const double b = cut[i] * cut[i];
                const double c = cut[i + 1] * cut[i + 1];
                const double denom = a - 2.0 * b + c;
                const double offset = denom > 0.0 ? 0.5 * (a - c) / denom : 0.0;
                return el[i] + offset * (el[i + 1] - el[i]);
            }
        }
        throw NumericError("no null above the main lobe on its elevation cut");
    }

    std::vector<TrackPoint> sweep_lobe_track(const std::vector<ApertureField> &apertures,
                                             const DirectionLattice &lattice, Obliquity obliquity)
    {
        if (apertures.size() < 2)
            throw PreconditionError("lobe track needs at least two frequencies");
        for (std::size_t i = 1; i < apertures.size(); ++i)
            if (!(apertures[i].frequency > apertures[i - 1].frequency))
                throw PreconditionError("lobe track frequencies must be strictly ascending");
        std::vector<TrackPoint> track;
        track.reserve(apertures.size());
        for (const auto &a : apertures)
            track.push_back({a.frequency, analyze_lobes(kirchhoff_far_field(a, lattice, obliquity))});
        return track;
    }

    void write_aperture_csv(const std::filesystem::path &path, const ApertureField &a)
    {
        std::ofstream out(path);
        if (!out)
            throw PreconditionError("cannot write " + path.string());
        char buf[128];
        std::snprintf(buf, sizeof buf, "aperture rows=%zu cols=%zu spacing=%.17g frequency=%.17g\n", a.rows, a.cols,
                      a.spacing, a.frequency);
        out << buf;
        for (std::size_t r = 0; r < a.rows; ++r)
        {
            for (std::size_t c = 0; c < a.cols; ++c)
            {
                std::snprintf(buf, sizeof buf, "%s%.17g,%.17g", c ? "," : "", a.at(r, c).real(), a.at(r, c).imag());
                out << buf;
            }
            out << '\n';
        }
    }

    ApertureField read_aperture_csv(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw PreconditionError("cannot open aperture file " + path.string());
        std::string header;
        std::getline(in, header);
        std::size_t rows = 0;
        std::size_t cols = 0;
        double spacing = 0.0;
        double frequency = 0.0;
        if (std::sscanf(header.c_str(), "aperture rows=%zu cols=%zu spacing=%lf frequency=%lf", &rows, &cols,
                        &spacing, &frequency) != 4)
            throw PreconditionError("aperture CSV: malformed header in " + path.string());
        ApertureField a(rows, cols, spacing, frequency);
        std::string line;
        for (std::size_t r = 0; r < rows; ++r)
        {
            if (!std::getline(in, line))
                throw PreconditionError("aperture CSV: missing rows in " + path.string());
            std::stringstream ss(line);
            std::string re;
            std::string im;
            for (std::size_t c = 0; c < cols; ++c)
            {
                if (!std::getline(ss, re, ',') || !std::getline(ss, im, ','))
                    throw PreconditionError("aperture CSV: short row " + std::to_string(r));
                a.at(r, c) = {std::stod(re), std::stod(im)};
            }
        }
        return a;
    }

    void write_pattern_csv(const std::filesystem::path &path, const FarFieldPattern &p, const std::string &provenance)
    {
        std::ofstream out(path);
        if (!out)
            throw PreconditionError("cannot write " + path.string());
        char buf[160];
        std::snprintf(buf, sizeof buf, "pattern n_el=%zu n_az=%zu frequency=%.17g%s%s\n", p.lattice.elevations.size(),
                      p.lattice.azimuths.size(), p.frequency, provenance.empty() ? "" : " ", provenance.c_str());
        out << buf << "az,el,re,im\n";
        for (std::size_t i_el = 0; i_el < p.lattice.elevations.size(); ++i_el)
            for (std::size_t i_az = 0; i_az < p.lattice.azimuths.size(); ++i_az)
            {
                const auto g = p.gains[p.lattice.index(i_el, i_az)];
                std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.12e,%.12e\n", p.lattice.azimuths[i_az],
                              p.lattice.elevations[i_el], g.real(), g.imag());
                out << buf;
            }
    }
}
