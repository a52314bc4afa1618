// SPDX-License-Identifier: Apache-2.0
//
// features.cpp

#include "batsonar/features.hpp"

#include "batsonar/errors.hpp"
#include "batsonar/fft.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>

namespace batsonar::features
{
    namespace
    {
        constexpr std::size_t kFirstBandBin = 10; // 5.0 kHz at 0.5 kHz spacing

        std::vector<double> to_double(const std::vector<float> &v) { return {v.begin(), v.end()}; }

        double rms(std::span<const double> x)
        {
            if (x.empty())
                return 0.0;
            double acc = 0.0;
            for (const double v : x)
                acc += v * v;
            return std::sqrt(acc / static_cast<double>(x.size()));
        }
    }

    Segment detect_endpoints(std::span<const double> signal, double fs, const EndpointConfig &cfg)
    {
        if (!(fs > 0.0 && cfg.frame_seconds > 0.0 && cfg.consecutive >= 1))
            throw PreconditionError("endpoint config invalid");
        const auto frame = static_cast<std::size_t>(std::llround(cfg.frame_seconds * fs));
        if (frame == 0 || signal.size() < frame)
            throw PreconditionError("signal shorter than one endpoint frame");
        const std::size_t n_frames = signal.size() / frame;

        std::vector<double> frame_rms(n_frames);
        for (std::size_t i = 0; i < n_frames; ++i)
            frame_rms[i] = rms(signal.subspan(i * frame, frame));

        const auto noise_frames = std::clamp<std::size_t>(
            static_cast<std::size_t>(std::llround(cfg.noise_seconds / cfg.frame_seconds)), 1, n_frames);
        const double noise_rms = rms(signal.first(noise_frames * frame));
        const double loudest = *std::max_element(frame_rms.begin(), frame_rms.end());
        const double threshold = std::max(cfg.threshold_factor * noise_rms, cfg.relative_floor * loudest);

        const auto k = static_cast<std::size_t>(cfg.consecutive);
        std::vector<bool> loud(n_frames);
        for (std::size_t i = 0; i < n_frames; ++i)
            loud[i] = frame_rms[i] > threshold;

        std::size_t run = 0;
        for (std::size_t i = 0; i < n_frames; ++i)
        {
            run = loud[i] ? run + 1 : 0;
            if (run < std::min(k, n_frames))
                continue;
            const std::size_t first = i + 1 - run;
            std::size_t last_loud = i;
            std::size_t quiet = 0;
            for (std::size_t j = i + 1; j < n_frames && quiet < k; ++j)
            {
                if (loud[j])
                {
                    last_loud = j;
                    quiet = 0;
                }
                else
                    ++quiet;
            }
            return {first * frame, (last_loud + 1) * frame};
        }
        throw NoSignalError("no frame run exceeds the endpoint threshold");
    }

    Segment detect_endpoints(std::span<const double> signal, double fs)
    {
        return detect_endpoints(signal, fs, EndpointConfig{});
    }

    double Spectrogram::total() const
    {
        double acc = 0.0;
        for (const double v : values)
            acc += v;
        return acc;
    }

    std::vector<double> hamming(std::size_t n)
    {
        std::vector<double> w(n, 1.0);
        if (n < 2)
            return w;
        for (std::size_t i = 0; i < n; ++i)
            w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
        return w;
    }

    Spectrogram spectrogram(std::span<const double> segment, double fs, const StftConfig &cfg)
    {
        if (cfg.window == 0 || cfg.hop == 0 || cfg.nfft < cfg.window)
            throw PreconditionError("stft: need window > 0, hop > 0, nfft >= window");
        if (segment.size() < cfg.window)
            throw PreconditionError("stft: segment shorter than one window");

        Spectrogram s;
        s.frames = 1 + (segment.size() - cfg.window) / cfg.hop;
        s.bins = cfg.nfft / 2 + 1;
        s.df = fs / static_cast<double>(cfg.nfft);
        s.frame_hop = cfg.hop;
        s.window = cfg.window;
        s.fs = fs;
        s.values.assign(s.frames * s.bins, 0.0);

        const auto w = hamming(cfg.window);
        auto &fft = thread_local_fft(cfg.nfft);
        std::vector<double> frame(cfg.window);
        std::vector<std::complex<double>> spec(s.bins);
        for (std::size_t t = 0; t < s.frames; ++t)
        {
            for (std::size_t i = 0; i < cfg.window; ++i)
                frame[i] = segment[t * cfg.hop + i] * w[i];
            fft.forward(frame, spec);
            for (std::size_t f = 0; f < s.bins; ++f)
                s.at(t, f) = std::norm(spec[f]);
        }
        return s;
    }

    Spectrogram spectrogram(std::span<const double> segment, double fs)
    {
        return spectrogram(segment, fs, StftConfig{});
    }

    Spectrogram mask_off_ridge(const Spectrogram &s, const echo::ChirpParams &chirp, int halfwidth_bins)
    {
        if (halfwidth_bins < 0)
            throw PreconditionError("mask halfwidth must be >= 0");
        if (std::abs(s.fs - chirp.fs) > 1e-9 * chirp.fs)
            throw PreconditionError("mask: spectrogram and chirp sample rates differ");
        Spectrogram out = s;
        for (std::size_t t = 0; t < s.frames; ++t)
        {
            const double centre = (static_cast<double>(t * s.frame_hop) + 0.5 * static_cast<double>(s.window)) / s.fs;
            const bool inside = centre >= 0.0 && centre <= chirp.duration;
            const long ridge = std::lround(chirp.instantaneous_frequency(centre) / s.df);
            for (std::size_t f = 0; f < s.bins; ++f)
                if (!inside || std::abs(static_cast<long>(f) - ridge) > halfwidth_bins)
                    out.at(t, f) = 0.0;
        }
        return out;
    }

    std::array<double, kBands> band_energies(const Spectrogram &s)
    {
        if (std::abs(s.df - 500.0) > 1e-9)
            throw PreconditionError("band energies need 0.5 kHz bins");
        if (s.bins <= kFirstBandBin + kBands)
            throw PreconditionError("bands extend beyond the spectrogram support");
        std::vector<double> power(kBands + 1, 0.0);
        for (std::size_t t = 0; t < s.frames; ++t)
            for (std::size_t m = 0; m <= kBands; ++m)
                power[m] += s.at(t, kFirstBandBin + m);
        std::array<double, kBands> e{};
        for (std::size_t k = 0; k < kBands; ++k)
            e[k] = 0.5 * (power[k] + power[k + 1]);
        return e;
    }

    std::string to_string(Normalization n)
    {
        switch (n)
        {
        case Normalization::none:
            return "none";
        case Normalization::unit_sum:
            return "unit_sum";
        case Normalization::log_zscore:
            return "log_zscore";
        }
        return "none";
    }

    Normalization parse_normalization(const std::string &s)
    {
        if (s == "none")
            return Normalization::none;
        if (s == "unit_sum")
            return Normalization::unit_sum;
        if (s == "log_zscore")
            return Normalization::log_zscore;
        throw PreconditionError("unknown normalization '" + s + "'");
    }

    Normalizer Normalizer::fit(const std::vector<std::array<double, kFeatures>> &raw)
    {
        if (raw.empty())
            throw PreconditionError("normalizer needs at least one row");
        Normalizer n;
        const double count = static_cast<double>(raw.size());
        for (const auto &row : raw)
            for (std::size_t j = 0; j < kFeatures; ++j)
                n.mean_[j] += std::log10(kEpsilon + row[j]);
        for (auto &m : n.mean_)
            m /= count;
        std::array<double, kFeatures> var{};
        for (const auto &row : raw)
            for (std::size_t j = 0; j < kFeatures; ++j)
            {
                const double d = std::log10(kEpsilon + row[j]) - n.mean_[j];
                var[j] += d * d;
            }
        for (std::size_t j = 0; j < kFeatures; ++j)
        {
            const double sd = std::sqrt(var[j] / count);
            // Constant dimensions pass through centred.
            n.std_[j] = sd > 1e-12 ? sd : 1.0;
        }
        return n;
    }

    std::array<double, kFeatures> Normalizer::apply(const std::array<double, kFeatures> &raw) const
    {
        std::array<double, kFeatures> out{};
        for (std::size_t j = 0; j < kFeatures; ++j)
            out[j] = (std::log10(kEpsilon + raw[j]) - mean_[j]) / std_[j];
        return out;
    }

    KeyValues Normalizer::to_key_values() const
    {
        KeyValues kv;
        kv.set("normalization", "log_zscore");
        for (std::size_t j = 0; j < kFeatures; ++j)
        {
            kv.set("mean." + std::to_string(j), mean_[j]);
            kv.set("std." + std::to_string(j), std_[j]);
        }
        return kv;
    }

    Normalizer Normalizer::from_key_values(const KeyValues &kv)
    {
        Normalizer n;
        for (std::size_t j = 0; j < kFeatures; ++j)
        {
            const auto m = kv.get("mean." + std::to_string(j));
            const auto s = kv.get("std." + std::to_string(j));
            if (!m || !s)
                throw PreconditionError("normalizer file lacks dimension " + std::to_string(j));
            n.mean_[j] = kv.get_double("mean." + std::to_string(j), 0.0);
            n.std_[j] = kv.get_double("std." + std::to_string(j), 1.0);
            if (!(n.std_[j] > 0.0))
                throw PreconditionError("normalizer std must be > 0");
        }
        return n;
    }

    FeatureVector make_feature_vector(std::span<const double> left, std::span<const double> right,
                                      Normalization norm, const Normalizer *normalizer)
    {
        if (left.size() != kBands || right.size() != kBands)
            throw PreconditionError("feature halves must have 30 values each");
        FeatureVector fv;
        fv.norm = norm;
        std::copy(left.begin(), left.end(), fv.values.begin());
        std::copy(right.begin(), right.end(), fv.values.begin() + kBands);
        switch (norm)
        {
        case Normalization::none:
            break;
        case Normalization::unit_sum: {
            double sum = 0.0;
            for (const double v : fv.values)
                sum += v;
            if (sum > 0.0)
                for (auto &v : fv.values)
                    v /= sum;
            break;
        }
        case Normalization::log_zscore:
            if (normalizer == nullptr)
                throw PreconditionError("log_zscore needs a fitted normalizer");
            fv.values = normalizer->apply(fv.values);
            break;
        }
        return fv;
    }

    KeyValues FeatureConfig::to_key_values() const
    {
        KeyValues kv;
        kv.set("features.frame_seconds", endpoint.frame_seconds);
        kv.set("features.noise_seconds", endpoint.noise_seconds);
        kv.set("features.threshold_factor", endpoint.threshold_factor);
        kv.set("features.relative_floor", endpoint.relative_floor);
        kv.set("features.consecutive", endpoint.consecutive);
        kv.set("features.window", static_cast<std::uint64_t>(stft.window));
        kv.set("features.hop", static_cast<std::uint64_t>(stft.hop));
        kv.set("features.nfft", static_cast<std::uint64_t>(stft.nfft));
        kv.set("features.mask_halfwidth", mask_halfwidth);
        kv.set("features.refine_onset", refine_onset ? "true" : "false");
        kv.set("features.refine_lead_frames", refine_lead_frames);
        return kv;
    }

    FeatureConfig FeatureConfig::from_key_values(const KeyValues &kv, const FeatureConfig &base)
    {
        FeatureConfig c = base;
        c.endpoint.frame_seconds = kv.get_double("features.frame_seconds", c.endpoint.frame_seconds);
        c.endpoint.noise_seconds = kv.get_double("features.noise_seconds", c.endpoint.noise_seconds);
        c.endpoint.threshold_factor = kv.get_double("features.threshold_factor", c.endpoint.threshold_factor);
        c.endpoint.relative_floor = kv.get_double("features.relative_floor", c.endpoint.relative_floor);
        c.endpoint.consecutive = static_cast<int>(kv.get_int("features.consecutive", c.endpoint.consecutive));
        c.stft.window = kv.get_u64("features.window", c.stft.window);
        c.stft.hop = kv.get_u64("features.hop", c.stft.hop);
        c.stft.nfft = kv.get_u64("features.nfft", c.stft.nfft);
        c.mask_halfwidth = static_cast<int>(kv.get_int("features.mask_halfwidth", c.mask_halfwidth));
        c.refine_onset = kv.get_string("features.refine_onset", c.refine_onset ? "true" : "false") == "true";
        c.refine_lead_frames = static_cast<int>(kv.get_int("features.refine_lead_frames", c.refine_lead_frames));
        return c;
    }

    FeatureConfig FeatureConfig::from_key_values(const KeyValues &kv)
    {
        return from_key_values(kv, FeatureConfig{});
    }

    FeatureExtractor::FeatureExtractor(const echo::ChirpParams &chirp) : FeatureExtractor(chirp, FeatureConfig{}) {}

    FeatureExtractor::FeatureExtractor(const echo::ChirpParams &chirp, const FeatureConfig &cfg)
        : chirp_(chirp), cfg_(cfg), chirp_samples_(echo::make_chirp(chirp))
    {
        if (cfg.mask_halfwidth < 0 || cfg.refine_lead_frames < 0)
            throw PreconditionError("feature config: negative halfwidth or lead");
    }

    const std::vector<std::complex<double>> &FeatureExtractor::template_spectrum(std::size_t n) const
    {
        std::lock_guard lock(spectra_mutex_);
        auto it = spectra_.find(n);
        if (it == spectra_.end())
        {
            std::vector<std::complex<double>> spec(n / 2 + 1);
            thread_local_fft(n).forward(chirp_samples_, spec);
            it = spectra_.emplace(n, std::move(spec)).first;
        }
        return it->second;
    }

    std::size_t FeatureExtractor::refine_onset(std::span<const double> signal, const Segment &search) const
    {
        const std::size_t m = chirp_samples_.size();
        if (signal.size() < m)
            throw PreconditionError("signal shorter than the chirp");
        const std::size_t last = std::min(search.end, signal.size() - m);
        const std::size_t first = std::min(search.start, last);

        // Linear cross-correlation through a transform long enough to avoid wrap.
        const std::size_t n = std::bit_ceil(signal.size() + m);
        auto &fft = thread_local_fft(n);
        const auto &tmpl = template_spectrum(n);
        std::vector<std::complex<double>> spec(n / 2 + 1);
        fft.forward(signal, spec);
        for (std::size_t k = 0; k < spec.size(); ++k)
            spec[k] *= std::conj(tmpl[k]);
        std::vector<double> corr(n);
        fft.inverse(spec, corr);

        std::size_t best = first;
        for (std::size_t lag = first + 1; lag <= last; ++lag)
            if (corr[lag] > corr[best])
                best = lag;
        return best;
    }

    Segment FeatureExtractor::echo_segment(std::span<const double> signal) const
    {
        const std::size_t m = chirp_samples_.size();
        Segment detected{0, signal.size()};
        bool found = true;
        try
        {
            detected = detect_endpoints(signal, chirp_.fs, cfg_.endpoint);
        }
        catch (const NoSignalError &)
        {
            found = false;
        }
        std::size_t onset = detected.start;
        if (cfg_.refine_onset)
        {
            Segment search{0, signal.size()};
            if (found)
            {
                const auto frame = static_cast<std::size_t>(std::llround(cfg_.endpoint.frame_seconds * chirp_.fs));
                const std::size_t lead = frame * static_cast<std::size_t>(cfg_.refine_lead_frames);
                search = {detected.start > lead ? detected.start - lead : 0, detected.end};
            }
            onset = refine_onset(signal, search);
        }
        else if (!found)
            throw NoSignalError("no echo detected and onset refinement disabled");
        onset = std::min(onset, signal.size() - std::min(m, signal.size()));
        return {onset, std::min(onset + m, signal.size())};
    }

    std::array<double, kBands> FeatureExtractor::ear_bands(std::span<const double> signal) const
    {
        const Segment seg = echo_segment(signal);
        const auto s = spectrogram(signal.subspan(seg.start, seg.end - seg.start), chirp_.fs, cfg_.stft);
        return band_energies(mask_off_ridge(s, chirp_, cfg_.mask_halfwidth));
    }

    std::array<double, kFeatures> FeatureExtractor::extract(const echo::EchoRecording &rec) const
    {
        if (rec.fs != chirp_.fs)
            throw PreconditionError("recording sample rate differs from the chirp");
        const auto left = ear_bands(to_double(rec.left));
        const auto right = ear_bands(to_double(rec.right));
        std::array<double, kFeatures> out{};
        std::copy(left.begin(), left.end(), out.begin());
        std::copy(right.begin(), right.end(), out.begin() + kBands);
        return out;
    }

    std::vector<FeatureRow> extract_batch(const FeatureExtractor &fx, const std::vector<echo::EchoRecording> &recs)
    {
        std::vector<FeatureRow> rows(recs.size());
        std::exception_ptr failure;
        std::mutex failure_mutex;
        const long n = static_cast<long>(recs.size());
#pragma omp parallel for schedule(dynamic, 16)
        for (long i = 0; i < n; ++i)
        {
            try
            {
                const auto &r = recs[static_cast<std::size_t>(i)];
                rows[static_cast<std::size_t>(i)] = {r.truth, fx.extract(r)};
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
        return rows;
    }

    std::vector<FeatureRow> extract_batch_serial(const FeatureExtractor &fx,
                                                 const std::vector<echo::EchoRecording> &recs)
    {
        std::vector<FeatureRow> rows;
        rows.reserve(recs.size());
        for (const auto &r : recs)
            rows.push_back({r.truth, fx.extract(r)});
        return rows;
    }

    std::vector<FeatureRow> simulate_features(const echo::AcquisitionPlan &plan, const FeatureExtractor &fx)
    {
        std::vector<FeatureRow> rows(plan.record_count());
        echo::for_each_record(plan, [&](std::size_t i, const echo::EchoRecording &r) {
            rows[i] = {r.truth, fx.extract(r)};
        });
        return rows;
    }

    void write_feature_table(const std::filesystem::path &path, const FeatureTable &t)
    {
        std::ofstream out(path);
        if (!out)
            throw PreconditionError("cannot write " + path.string());
        out << provenance_header(t.config);
        out << "site,az,el,range,pulse,direction_index";
        for (std::size_t j = 0; j < kFeatures; ++j)
            out << ",f" << j;
        out << '\n';
        for (const auto &r : t.rows)
        {
            out << r.truth.site << ',' << format_double(r.truth.direction.azimuth) << ','
                << format_double(r.truth.direction.elevation) << ',' << format_double(r.truth.range) << ','
                << r.truth.pulse << ',' << r.truth.direction_index;
            for (const double v : r.values)
                out << ',' << format_double(v);
            out << '\n';
        }
    }

    FeatureTable read_feature_table(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw PreconditionError("cannot read " + path.string());
        FeatureTable t;
        t.config = read_provenance(in);
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line))
        {
            if (line.empty())
                continue;
            std::vector<std::string> cells;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ','))
                cells.push_back(cell);
            if (cells.size() != 6 + kFeatures)
                throw PreconditionError(path.string() + ": malformed feature row");
            FeatureRow r;
            r.truth.site = std::stoi(cells[0]);
            r.truth.direction = {std::stod(cells[1]), std::stod(cells[2])};
            r.truth.range = std::stod(cells[3]);
            r.truth.pulse = std::stoi(cells[4]);
            r.truth.direction_index = std::stoul(cells[5]);
            for (std::size_t j = 0; j < kFeatures; ++j)
                r.values[j] = std::stod(cells[6 + j]);
            t.rows.push_back(r);
        }
        return t;
    }
}
