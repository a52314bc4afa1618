// SPDX-License-Identifier: Apache-2.0
//
// svg.cpp

#include "batsonar/svg.hpp"

#include "batsonar/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace batsonar::svg
{
    namespace
    {
        constexpr double kWidth = 640.0;
        constexpr double kHeight = 400.0;
        constexpr double kLeft = 60.0;
        constexpr double kRight = 20.0;
        constexpr double kTop = 40.0;
        constexpr double kBottom = 50.0;

        const char *const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

        std::string num(double v)
        {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.2f", v);
            return buf;
        }

        std::string escape(const std::string &s)
        {
            std::string out;
            for (const char c : s)
            {
                switch (c)
                {
                case '<':
                    out += "&lt;";
                    break;
                case '>':
                    out += "&gt;";
                    break;
                case '&':
                    out += "&amp;";
                    break;
                default:
                    out += c;
                }
            }
            return out;
        }

        void open(std::ostringstream &o, const std::string &title, const std::string &y_label)
        {
            o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
              << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
            o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
            o << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
              << escape(title) << "</text>\n";
            o << "<text transform=\"translate(16," << num(kHeight / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
              << escape(y_label) << "</text>\n";
        }

        void y_axis(std::ostringstream &o, double y_min, double y_max)
        {
            const double plot_h = kHeight - kTop - kBottom;
            for (int i = 0; i <= 4; ++i)
            {
                const double v = y_min + (y_max - y_min) * i / 4.0;
                const double y = kTop + plot_h * (1.0 - i / 4.0);
                o << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(y) << "\" x2=\"" << num(kWidth - kRight)
                  << "\" y2=\"" << num(y) << "\" stroke=\"#ddd\"/>\n";
                o << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">"
                  << num(v) << "</text>\n";
            }
            o << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft) << "\" y2=\""
              << num(kHeight - kBottom) << "\" stroke=\"black\"/>\n";
        }
    }

    std::string bar_chart(const std::string &title, const std::vector<std::string> &labels,
                          const std::vector<double> &values, const std::string &y_label, double y_max)
    {
        if (labels.size() != values.size() || values.empty())
            throw PreconditionError("bar chart needs one label per value");
        if (!(y_max > 0.0))
            throw PreconditionError("bar chart y_max must be > 0");
        std::ostringstream o;
        open(o, title, y_label);
        y_axis(o, 0.0, y_max);
        const double plot_w = kWidth - kLeft - kRight;
        const double plot_h = kHeight - kTop - kBottom;
        const double slot = plot_w / static_cast<double>(values.size());
        for (std::size_t i = 0; i < values.size(); ++i)
        {
            const double h = plot_h * std::clamp(values[i] / y_max, 0.0, 1.0);
            const double x = kLeft + slot * static_cast<double>(i) + 0.15 * slot;
            o << "<rect x=\"" << num(x) << "\" y=\"" << num(kHeight - kBottom - h) << "\" width=\""
              << num(0.7 * slot) << "\" height=\"" << num(h) << "\" fill=\"" << kPalette[0] << "\"/>\n";
            o << "<text x=\"" << num(x + 0.35 * slot) << "\" y=\"" << num(kHeight - kBottom + 16)
              << "\" text-anchor=\"middle\">" << escape(labels[i]) << "</text>\n";
        }
        o << "</svg>\n";
        return o.str();
    }

    std::string line_chart(const std::string &title, const std::string &x_label, const std::string &y_label,
                           const std::vector<Series> &series, double y_min, double y_max)
    {
        if (series.empty() || !(y_max > y_min))
            throw PreconditionError("line chart needs series and y_max > y_min");
        double x_min = 0.0, x_max = 0.0;
        bool first = true;
        for (const auto &s : series)
        {
            if (s.x.size() != s.y.size() || s.x.empty())
                throw PreconditionError("line chart series needs matching non-empty x and y");
            for (const double x : s.x)
            {
                x_min = first ? x : std::min(x_min, x);
                x_max = first ? x : std::max(x_max, x);
                first = false;
            }
        }
        if (x_max == x_min)
            x_max = x_min + 1.0;

        const double plot_w = kWidth - kLeft - kRight;
        const double plot_h = kHeight - kTop - kBottom;
        auto px = [&](double x) { return kLeft + plot_w * (x - x_min) / (x_max - x_min); };
        auto py = [&](double y) { return kTop + plot_h * (1.0 - (std::clamp(y, y_min, y_max) - y_min) / (y_max - y_min)); };

        std::ostringstream o;
        open(o, title, y_label);
        y_axis(o, y_min, y_max);
        o << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << num(kHeight - 12)
          << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
        for (int i = 0; i <= 4; ++i)
        {
            const double v = x_min + (x_max - x_min) * i / 4.0;
            o << "<text x=\"" << num(px(v)) << "\" y=\"" << num(kHeight - kBottom + 16)
              << "\" text-anchor=\"middle\">" << num(v) << "</text>\n";
        }
        for (std::size_t k = 0; k < series.size(); ++k)
        {
            const char *colour = kPalette[k % std::size(kPalette)];
            o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
            for (std::size_t i = 0; i < series[k].x.size(); ++i)
                o << (i ? " " : "") << num(px(series[k].x[i])) << ',' << num(py(series[k].y[i]));
            o << "\"/>\n";
            o << "<text x=\"" << num(kWidth - kRight - 4) << "\" y=\"" << num(kTop + 14 + 14 * k)
              << "\" text-anchor=\"end\" fill=\"" << colour << "\">" << escape(series[k].label) << "</text>\n";
        }
        o << "</svg>\n";
        return o.str();
    }
}
