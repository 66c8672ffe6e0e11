#include "deorbit/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace deorbit::plot {

namespace {

constexpr double kWidth = 800, kHeight = 480;
constexpr double kLeft = 80, kRight = 20, kTop = 40, kBottom = 60;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string f2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void settle() {
        if (!std::isfinite(lo)) lo = 0, hi = 1;
        if (hi == lo) {
            const double pad = lo == 0 ? 1.0 : 0.5 * std::abs(lo);
            lo -= pad;
            hi += pad;
        }
    }
};

struct Bar {
    double lower, upper;
    std::size_t count;
};

std::vector<Bar> bin(const std::vector<double>& values, double width) {
    std::vector<Bar> bars;
    if (values.empty()) return bars;
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    const double start = std::floor(*mn / width) * width;
    const auto n = static_cast<std::size_t>(std::floor((*mx - start) / width)) + 1;
    for (std::size_t i = 0; i < n; ++i) {
        bars.push_back({start + static_cast<double>(i) * width, start + static_cast<double>(i + 1) * width, 0});
    }
    for (double v : values) ++bars[std::min(n - 1, static_cast<std::size_t>(std::floor((v - start) / width)))].count;
    return bars;
}

// Keep the min and max of each bucket, in order, so spikes survive.
std::vector<std::size_t> decimate(const std::vector<double>& y, std::size_t max_points) {
    std::vector<std::size_t> idx;
    const std::size_t n = y.size();
    if (n <= max_points || max_points < 4) {
        for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
        return idx;
    }
    const std::size_t bucket = (n + max_points / 2 - 1) / (max_points / 2);
    for (std::size_t b = 0; b < n; b += bucket) {
        const std::size_t e = std::min(n, b + bucket);
        std::size_t lo = b, hi = b;
        for (std::size_t i = b; i < e; ++i) {
            if (y[i] < y[lo]) lo = i;
            if (y[i] > y[hi]) hi = i;
        }
        idx.push_back(std::min(lo, hi));
        if (lo != hi) idx.push_back(std::max(lo, hi));
    }
    if (idx.back() != n - 1) idx.push_back(n - 1);
    return idx;
}

}  // namespace

std::string render_svg(const std::vector<Series>& series, const PlotSpec& spec) {
    bool any = false;
    for (const auto& s : series) {
        if (spec.style != Style::histogram && s.x.size() != s.y.size()) {
            throw std::invalid_argument("plot '" + spec.title + "': series '" + s.label + "' has mismatched x/y");
        }
        any = any || !s.y.empty();
    }
    if (!any) throw std::invalid_argument("plot '" + spec.title + "': empty series");
    if (spec.style == Style::histogram && !(spec.bin_width > 0)) {
        throw std::invalid_argument("plot '" + spec.title + "': bin width must be > 0");
    }

    std::vector<std::vector<Bar>> bars;
    Range xr, yr;
    for (const auto& s : series) {
        if (spec.style == Style::histogram) {
            bars.push_back(bin(s.y, spec.bin_width));
            for (const auto& b : bars.back()) {
                xr.add(b.lower);
                xr.add(b.upper);
                yr.add(static_cast<double>(b.count));
            }
            yr.add(0.0);
        } else {
            for (double v : s.x) xr.add(v);
            for (double v : s.y) yr.add(v);
        }
    }
    if (spec.style == Style::cdf) yr.add(0.0), yr.add(1.0);
    xr.settle();
    yr.settle();

    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto py = [&](double y) { return kTop + (1.0 - (y - yr.lo) / (yr.hi - yr.lo)) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << f2(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(spec.title)
      << "</text>\n";

    // Axes and ticks.
    o << "<line class=\"axis\" x1=\"" << f2(kLeft) << "\" y1=\"" << f2(kTop + ph) << "\" x2=\"" << f2(kLeft + pw)
      << "\" y2=\"" << f2(kTop + ph) << "\" stroke=\"black\"/>\n";
    o << "<line class=\"axis\" x1=\"" << f2(kLeft) << "\" y1=\"" << f2(kTop) << "\" x2=\"" << f2(kLeft)
      << "\" y2=\"" << f2(kTop + ph) << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = xr.lo + (xr.hi - xr.lo) * i / 5.0;
        const double yv = yr.lo + (yr.hi - yr.lo) * i / 5.0;
        o << "<line x1=\"" << f2(px(xv)) << "\" y1=\"" << f2(kTop + ph) << "\" x2=\"" << f2(px(xv)) << "\" y2=\""
          << f2(kTop + ph + 5) << "\" stroke=\"black\"/>";
        o << "<text x=\"" << f2(px(xv)) << "\" y=\"" << f2(kTop + ph + 18) << "\" text-anchor=\"middle\">"
          << tick_label(xv) << "</text>\n";
        o << "<line x1=\"" << f2(kLeft - 5) << "\" y1=\"" << f2(py(yv)) << "\" x2=\"" << f2(kLeft) << "\" y2=\""
          << f2(py(yv)) << "\" stroke=\"black\"/>";
        o << "<text x=\"" << f2(kLeft - 8) << "\" y=\"" << f2(py(yv) + 4) << "\" text-anchor=\"end\">"
          << tick_label(yv) << "</text>\n";
    }
    o << "<text class=\"xlabel\" x=\"" << f2(kLeft + pw / 2) << "\" y=\"" << f2(kHeight - 15)
      << "\" text-anchor=\"middle\">" << escape(spec.x_label) << "</text>\n";
    o << "<text class=\"ylabel\" x=\"18\" y=\"" << f2(kTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << f2(kTop + ph / 2) << ")\">" << escape(spec.y_label) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kColors[k % (sizeof kColors / sizeof kColors[0])];
        if (spec.style == Style::histogram) {
            for (const auto& b : bars[k]) {
                const double h = static_cast<double>(b.count);
                o << "<rect class=\"bar\" data-count=\"" << b.count << "\" x=\"" << f2(px(b.lower)) << "\" y=\""
                  << f2(py(h)) << "\" width=\"" << f2(px(b.upper) - px(b.lower)) << "\" height=\""
                  << f2(py(0.0) - py(h)) << "\" fill=\"" << color << "\" fill-opacity=\"0.6\" stroke=\"" << color
                  << "\"/>\n";
            }
        } else if (!s.y.empty()) {
            std::vector<std::size_t> order(s.x.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            if (spec.style == Style::cdf) {
                std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return s.x[a] < s.x[b]; });
            }
            std::vector<double> ys;
            for (auto i : order) ys.push_back(s.y[i]);
            const auto keep = decimate(ys, spec.max_points);

            o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            bool first = true;
            double prev_y = 0.0;
            for (auto j : keep) {
                const double x = s.x[order[j]], y = ys[j];
                if (!first) o << ' ';
                if (!first && spec.style != Style::line) o << f2(px(x)) << ',' << f2(py(prev_y)) << ' ';
                o << f2(px(x)) << ',' << f2(py(y));
                first = false;
                prev_y = y;
            }
            o << "\"/>\n";
        }
        if (!s.label.empty()) {
            const double ly = kTop + 14 + 16 * static_cast<double>(k);
            o << "<line x1=\"" << f2(kLeft + pw - 150) << "\" y1=\"" << f2(ly - 4) << "\" x2=\"" << f2(kLeft + pw - 130)
              << "\" y2=\"" << f2(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"3\"/>";
            o << "<text x=\"" << f2(kLeft + pw - 125) << "\" y=\"" << f2(ly) << "\">" << escape(s.label) << "</text>\n";
        }
    }
    o << "</svg>\n";
    return o.str();
}

void emit_plot(const std::vector<Series>& series, const PlotSpec& spec, const std::filesystem::path& path) {
    const std::string svg = render_svg(series, spec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << svg;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace deorbit::plot
