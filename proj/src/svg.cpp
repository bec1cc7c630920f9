// Copyright 2026 The rcgdm Authors
// SPDX-License-Identifier: Apache-2.0

#include "rcgdm/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rcgdm::svg {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void finish() {
        if (!(hi >= lo)) lo = 0.0, hi = 1.0;
        if (hi == lo) lo -= 0.5, hi += 0.5;
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
};

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(4);
    out << v;
    return out.str();
}

}  // namespace

std::string render(const Plot& plot) {
    const double left = 64, right = 16, top = 32, bottom = 48;
    const double pw = plot.width - left - right;
    const double ph = plot.height - top - bottom;

    Range rx, ry;
    for (const auto& s : plot.series) {
        for (double v : s.x) rx.add(v);
        for (double v : s.y) ry.add(v);
        for (double v : s.lo) ry.add(v);
        for (double v : s.hi) ry.add(v);
    }
    rx.finish();
    ry.finish();
    auto X = [&](double v) { return left + (v - rx.lo) / (rx.hi - rx.lo) * pw; };
    auto Y = [&](double v) { return top + (1.0 - (v - ry.lo) / (ry.hi - ry.lo)) * ph; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << plot.width << "\" height=\"" << plot.height
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << plot.width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
        << escape(plot.title) << "</text>\n";
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";

    constexpr int kTicks = 5;
    for (int i = 0; i <= kTicks; ++i) {
        const double vx = rx.lo + (rx.hi - rx.lo) * i / kTicks;
        const double vy = ry.lo + (ry.hi - ry.lo) * i / kTicks;
        out << "<line x1=\"" << X(vx) << "\" y1=\"" << top + ph << "\" x2=\"" << X(vx) << "\" y2=\"" << top + ph + 4
            << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << X(vx) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">" << fmt(vx)
            << "</text>\n";
        out << "<line x1=\"" << left - 4 << "\" y1=\"" << Y(vy) << "\" x2=\"" << left << "\" y2=\"" << Y(vy)
            << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << left - 6 << "\" y=\"" << Y(vy) + 4 << "\" text-anchor=\"end\">" << fmt(vy)
            << "</text>\n";
    }
    out << "<text x=\"" << left + pw / 2 << "\" y=\"" << plot.height - 8 << "\" text-anchor=\"middle\">"
        << escape(plot.x_label) << "</text>\n";
    out << "<text transform=\"translate(14," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
        << escape(plot.y_label) << "</text>\n";

    for (std::size_t k = 0; k < plot.series.size(); ++k) {
        const auto& s = plot.series[k];
        const char* color = kPalette[k % std::size(kPalette)];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (s.step && i + 1 < s.x.size()) {
                out << X(s.x[i]) << ',' << Y(s.y[i]) << ' ' << X(s.x[i + 1]) << ',' << Y(s.y[i]) << ' ';
            } else {
                out << X(s.x[i]) << ',' << Y(s.y[i]) << ' ';
            }
        }
        out << "\"/>\n";
        for (std::size_t i = 0; i < s.lo.size() && i < s.hi.size() && i < s.x.size(); ++i) {
            out << "<line x1=\"" << X(s.x[i]) << "\" y1=\"" << Y(s.lo[i]) << "\" x2=\"" << X(s.x[i]) << "\" y2=\""
                << Y(s.hi[i]) << "\" stroke=\"" << color << "\"/>\n";
        }
        if (!s.label.empty()) {
            out << "<text x=\"" << left + 8 << "\" y=\"" << top + 14 + 14 * static_cast<double>(k) << "\" fill=\""
                << color << "\">" << escape(s.label) << "</text>\n";
        }
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace rcgdm::svg
