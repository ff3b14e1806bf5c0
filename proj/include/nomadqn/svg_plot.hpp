#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nomadqn/csv.hpp"

namespace nomadqn::plot {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

namespace detail {

inline const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

// "Nice" tick step covering the range with ~n intervals.
inline double tick_step(double span, int n) {
    const double raw = span / n;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double frac = raw / mag;
    double nice = 10.0;
    if (frac <= 1.0) nice = 1.0;
    else if (frac <= 2.0) nice = 2.0;
    else if (frac <= 5.0) nice = 5.0;
    return nice * mag;
}

inline std::string format_tick(double v) {
    char buf[32];
    if (v != 0.0 && (std::fabs(v) >= 1e5 || std::fabs(v) < 1e-3))
        std::snprintf(buf, sizeof(buf), "%.1e", v);
    else
        std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

}  // namespace detail

// Self-contained static SVG line chart. Output is a pure function of the
// inputs, so identical data yields byte-identical files.
inline std::string render_line_chart(const std::vector<Series>& series,
                                     const std::string& title,
                                     const std::string& x_label,
                                     const std::string& y_label,
                                     bool log_y = false) {
    if (series.empty()) throw std::invalid_argument("render_line_chart: no series");
    for (const auto& s : series) {
        if (s.x.empty() || s.x.size() != s.y.size())
            throw std::invalid_argument("render_line_chart: bad series '" + s.label + "'");
        if (log_y)
            for (double v : s.y)
                if (v <= 0.0)
                    throw std::invalid_argument(
                        "render_line_chart: non-positive value on log axis in '" +
                        s.label + "'");
    }

    const double width = 760, height = 480;
    const double ml = 80, mr = 170, mt = 50, mb = 60;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double xmin = series[0].x[0], xmax = xmin, ymin = series[0].y[0], ymax = ymin;
    for (const auto& s : series) {
        for (double v : s.x) { xmin = std::min(xmin, v); xmax = std::max(xmax, v); }
        for (double v : s.y) { ymin = std::min(ymin, v); ymax = std::max(ymax, v); }
    }
    if (xmax == xmin) { xmax += 1.0; xmin -= 1.0; }
    if (log_y) {
        ymin = std::log10(ymin);
        ymax = std::log10(ymax);
    }
    if (ymax == ymin) { ymax += 1.0; ymin -= 1.0; }
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto sx = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * pw; };
    auto sy = [&](double v) {
        const double t = log_y ? std::log10(v) : v;
        return mt + ph - (t - ymin) / (ymax - ymin) * ph;
    };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
       << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " " << height
       << "\">\n";
    os << "<rect width=\"" << width << "\" height=\"" << height
       << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << (ml + pw / 2) << "\" y=\"28\" text-anchor=\"middle\" "
          "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";

    // Axes.
    os << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw
       << "\" y2=\"" << mt + ph << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
       << mt + ph << "\" stroke=\"black\"/>\n";

    // X ticks.
    const double xstep = detail::tick_step(xmax - xmin, 6);
    for (double t = std::ceil(xmin / xstep) * xstep; t <= xmax + 1e-9; t += xstep) {
        const double px = sx(t);
        os << "<line x1=\"" << detail::num(px) << "\" y1=\"" << mt + ph << "\" x2=\""
           << detail::num(px) << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << detail::num(px) << "\" y=\"" << mt + ph + 20
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
           << detail::format_tick(t) << "</text>\n";
    }
    // Y ticks: decades when logarithmic, nice steps otherwise.
    if (log_y) {
        for (double d = std::ceil(ymin); d <= std::floor(ymax) + 1e-9; d += 1.0) {
            const double py = mt + ph - (d - ymin) / (ymax - ymin) * ph;
            os << "<line x1=\"" << ml - 5 << "\" y1=\"" << detail::num(py) << "\" x2=\""
               << ml << "\" y2=\"" << detail::num(py) << "\" stroke=\"black\"/>\n";
            os << "<text x=\"" << ml - 9 << "\" y=\"" << detail::num(py + 4)
               << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
               << detail::format_tick(std::pow(10.0, d)) << "</text>\n";
        }
    } else {
        const double ystep = detail::tick_step(ymax - ymin, 6);
        for (double t = std::ceil(ymin / ystep) * ystep; t <= ymax + 1e-9; t += ystep) {
            const double py = mt + ph - (t - ymin) / (ymax - ymin) * ph;
            os << "<line x1=\"" << ml - 5 << "\" y1=\"" << detail::num(py) << "\" x2=\""
               << ml << "\" y2=\"" << detail::num(py) << "\" stroke=\"black\"/>\n";
            os << "<text x=\"" << ml - 9 << "\" y=\"" << detail::num(py + 4)
               << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
               << detail::format_tick(t) << "</text>\n";
        }
    }

    os << "<text x=\"" << (ml + pw / 2) << "\" y=\"" << height - 14
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
       << x_label << "</text>\n";
    os << "<text x=\"20\" y=\"" << (mt + ph / 2)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
          "transform=\"rotate(-90 20 " << (mt + ph / 2) << ")\">" << y_label
       << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = detail::kPalette[si % 8];
        // Long series are thinned; endpoints always kept.
        const std::size_t max_pts = 2000;
        const std::size_t stride = std::max<std::size_t>(1, s.x.size() / max_pts);
        os << "<polyline fill=\"none\" stroke=\"" << color
           << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); i += stride)
            os << detail::num(sx(s.x[i])) << "," << detail::num(sy(s.y[i])) << " ";
        os << detail::num(sx(s.x.back())) << "," << detail::num(sy(s.y.back()));
        os << "\"/>\n";
        // Legend.
        const double ly = mt + 10 + 20.0 * static_cast<double>(si);
        os << "<line x1=\"" << ml + pw + 12 << "\" y1=\"" << detail::num(ly)
           << "\" x2=\"" << ml + pw + 36 << "\" y2=\"" << detail::num(ly)
           << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << ml + pw + 42 << "\" y=\"" << detail::num(ly + 4)
           << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

enum class ChartKind { RewardCurve, ThroughputVsLambda, LatencyVsLambda };

inline ChartKind chart_kind_from_string(const std::string& s) {
    if (s == "reward_curve") return ChartKind::RewardCurve;
    if (s == "throughput_vs_lambda") return ChartKind::ThroughputVsLambda;
    if (s == "latency_vs_lambda") return ChartKind::LatencyVsLambda;
    throw std::invalid_argument("unknown chart kind: " + s);
}

namespace detail {

inline std::string stem(const std::string& path) {
    auto slash = path.find_last_of("/\\");
    std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
    auto dot = name.rfind('.');
    return dot == std::string::npos ? name : name.substr(0, dot);
}

// Pulls the numeric suffix out of config tags like "lambda0.5".
inline double lambda_of_config(const std::string& config) {
    const std::string prefix = "lambda";
    if (config.rfind(prefix, 0) != 0)
        throw std::runtime_error("summary row config '" + config +
                                 "' does not carry a lambda value");
    return std::stod(config.substr(prefix.size()));
}

}  // namespace detail

// reward_curve: one run CSV per series, cumulative reward vs step.
inline std::string plot_reward_curve(const std::vector<std::string>& csv_paths) {
    std::vector<Series> series;
    for (const auto& path : csv_paths) {
        const auto table = csv::read(path);
        Series s;
        s.label = detail::stem(path);
        s.x = table.numeric_column("step");
        s.y = table.numeric_column("cumulative_reward");
        series.push_back(std::move(s));
    }
    return render_line_chart(series, "Cumulative reward vs. environment step",
                             "step", "cumulative reward");
}

// throughput/latency vs lambda: one summary CSV, one series per device type.
inline std::string plot_vs_lambda(const std::string& summary_path, bool latency) {
    const auto table = csv::read(summary_path);
    const int ci = table.require_column("config");
    const int ti = table.require_column("device_type");
    const int vi = table.require_column(latency ? "latency_ms_median"
                                                : "throughput_mbps_median");
    std::vector<Series> series;
    for (const auto& row : table.rows) {
        const double lambda = detail::lambda_of_config(row[ci]);
        const std::string& dtype = row[ti];
        auto it = std::find_if(series.begin(), series.end(),
                               [&](const Series& s) { return s.label == dtype; });
        if (it == series.end()) {
            series.push_back({dtype, {}, {}});
            it = series.end() - 1;
        }
        it->x.push_back(lambda);
        it->y.push_back(std::stod(row[vi]));
    }
    if (series.empty()) throw std::runtime_error("summary CSV has no data rows");
    return render_line_chart(
        series,
        latency ? "Median latency vs. lambda" : "Median throughput vs. lambda",
        "lambda", latency ? "latency (ms)" : "throughput (Mbps)", latency);
}

inline std::string plot_chart(ChartKind kind, const std::vector<std::string>& csvs) {
    if (csvs.empty()) throw std::invalid_argument("plot: no input CSVs");
    switch (kind) {
        case ChartKind::RewardCurve: return plot_reward_curve(csvs);
        case ChartKind::ThroughputVsLambda: return plot_vs_lambda(csvs.front(), false);
        case ChartKind::LatencyVsLambda: return plot_vs_lambda(csvs.front(), true);
    }
    throw std::logic_error("plot: unreachable");
}

}  // namespace nomadqn::plot
