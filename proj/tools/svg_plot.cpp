#include "svg_plot.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace lowsync::cli {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 160.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

constexpr std::array<const char*, 8> kColors{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                             "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fixed(double v, int precision = 2)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
    return {buf, res.ptr};
}

std::string tick_label(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 3);
    return {buf, res.ptr};
}

std::string escape(const std::string& s)
{
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

struct Axis {
    bool log = false;
    double lo = 0.0;
    double hi = 1.0;

    [[nodiscard]] double map(double v) const { return log ? std::log10(v) : v; }

    [[nodiscard]] double frac(double v) const { return (map(v) - lo) / (hi - lo); }

    void fit(double a, double b)
    {
        lo = map(a);
        hi = map(b);
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
        if (log) {
            lo = std::floor(lo);
            hi = std::ceil(hi);
        }
    }

    [[nodiscard]] std::vector<double> ticks() const
    {
        std::vector<double> out;
        if (log) {
            const int step = std::max(1, static_cast<int>((hi - lo) / 8.0 + 0.999));
            for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); e += step) {
                out.push_back(std::pow(10.0, e));
            }
            return out;
        }
        for (int i = 0; i <= 5; ++i) {
            out.push_back(lo + (hi - lo) * i / 5.0);
        }
        return out;
    }
};

} // namespace

std::string render_svg(const PlotSpec& spec, const std::vector<Series>& series)
{
    auto usable = [&spec](const std::pair<double, double>& pt) {
        return std::isfinite(pt.first) && std::isfinite(pt.second) && (!spec.log_x || pt.first > 0.0) &&
               (!spec.log_y || pt.second > 0.0);
    };

    double x_min = std::numeric_limits<double>::infinity();
    double x_max = -x_min;
    double y_min = x_min;
    double y_max = -x_min;
    for (const auto& s : series) {
        for (const auto& pt : s.points) {
            if (!usable(pt)) {
                continue;
            }
            x_min = std::min(x_min, pt.first);
            x_max = std::max(x_max, pt.first);
            y_min = std::min(y_min, pt.second);
            y_max = std::max(y_max, pt.second);
        }
    }
    if (!std::isfinite(x_min)) {
        x_min = y_min = 1.0;
        x_max = y_max = 10.0;
    }
    Axis xa{spec.log_x};
    Axis ya{spec.log_y};
    xa.fit(x_min, x_max);
    ya.fit(y_min, y_max);

    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + xa.frac(x) * pw; };
    auto py = [&](double y) { return kTop + (1.0 - ya.frac(y)) * ph; };

    std::ostringstream os;
    os << R"(<?xml version="1.0" encoding="UTF-8"?>)" << '\n'
       << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << fixed(kWidth, 0) << R"(" height=")"
       << fixed(kHeight, 0) << R"(" viewBox="0 0 )" << fixed(kWidth, 0) << ' ' << fixed(kHeight, 0)
       << R"(" font-family="sans-serif" font-size="12">)" << '\n';
    os << R"(<rect width="100%" height="100%" fill="white"/>)" << '\n';
    os << R"(<text x=")" << fixed(kLeft + pw / 2) << R"(" y="24" text-anchor="middle" font-size="15">)"
       << escape(spec.title) << "</text>\n";
    os << R"(<rect x=")" << fixed(kLeft) << R"(" y=")" << fixed(kTop) << R"(" width=")" << fixed(pw)
       << R"(" height=")" << fixed(ph) << R"(" fill="none" stroke="black"/>)" << '\n';

    for (double t : xa.ticks()) {
        const double x = xa.log ? px(t) : kLeft + (t - xa.lo) / (xa.hi - xa.lo) * pw;
        os << R"(<line x1=")" << fixed(x) << R"(" y1=")" << fixed(kTop) << R"(" x2=")" << fixed(x) << R"(" y2=")"
           << fixed(kTop + ph) << R"(" stroke="#dddddd"/>)" << '\n';
        os << R"(<text x=")" << fixed(x) << R"(" y=")" << fixed(kTop + ph + 16) << R"(" text-anchor="middle">)"
           << tick_label(t) << "</text>\n";
    }
    for (double t : ya.ticks()) {
        const double y = ya.log ? py(t) : kTop + (1.0 - (t - ya.lo) / (ya.hi - ya.lo)) * ph;
        os << R"(<line x1=")" << fixed(kLeft) << R"(" y1=")" << fixed(y) << R"(" x2=")" << fixed(kLeft + pw)
           << R"(" y2=")" << fixed(y) << R"(" stroke="#dddddd"/>)" << '\n';
        os << R"(<text x=")" << fixed(kLeft - 6) << R"(" y=")" << fixed(y + 4) << R"(" text-anchor="end">)"
           << tick_label(t) << "</text>\n";
    }
    os << R"(<text x=")" << fixed(kLeft + pw / 2) << R"(" y=")" << fixed(kHeight - 16)
       << R"(" text-anchor="middle">)" << escape(spec.x_label) << "</text>\n";
    os << R"(<text x="18" y=")" << fixed(kTop + ph / 2) << R"(" text-anchor="middle" transform="rotate(-90 18 )"
       << fixed(kTop + ph / 2) << R"lit()">)lit" << escape(spec.y_label) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto* color = kColors[k % kColors.size()];
        std::string pts;
        for (const auto& pt : series[k].points) {
            if (usable(pt)) {
                pts += (pts.empty() ? "" : " ") + fixed(px(pt.first)) + "," + fixed(py(pt.second));
            }
        }
        os << R"(<g class="series" data-name=")" << escape(series[k].name) << R"(">)" << '\n';
        os << R"(<polyline fill="none" stroke=")" << color << R"(" stroke-width="1.5" points=")" << pts << R"("/>)"
           << '\n';
        for (const auto& pt : series[k].points) {
            if (usable(pt)) {
                os << R"(<circle cx=")" << fixed(px(pt.first)) << R"(" cy=")" << fixed(py(pt.second))
                   << R"(" r="2.5" fill=")" << color << R"("/>)" << '\n';
            }
        }
        os << "</g>\n";
        const double ly = kTop + 10 + 18.0 * static_cast<double>(k);
        os << R"(<line x1=")" << fixed(kLeft + pw + 12) << R"(" y1=")" << fixed(ly) << R"(" x2=")"
           << fixed(kLeft + pw + 32) << R"(" y2=")" << fixed(ly) << R"(" stroke=")" << color
           << R"(" stroke-width="2"/>)" << '\n';
        os << R"(<text x=")" << fixed(kLeft + pw + 38) << R"(" y=")" << fixed(ly + 4) << R"(">)"
           << escape(series[k].name) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace lowsync::cli
