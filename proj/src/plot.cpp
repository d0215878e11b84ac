#include "explab/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string_view>

namespace explab {
namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

constexpr std::array<std::string_view, 8> kPalette{
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
};

std::string escape(std::string_view text) {
    std::string out;
    for (char c : text) {
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

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

} // namespace

std::string render_sweep_svg(const LayerSweepResult& sweep) {
    const std::size_t n_layers = sweep.layers.size();
    const std::size_t n_attr = sweep.attributes.size();

    double lo = 0.0, hi = 0.0;
    for (const auto& c : sweep.cells) {
        lo = std::min(lo, c.mean - c.std);
        hi = std::max(hi, c.mean + c.std);
    }
    if (hi - lo < 1e-9) {
        hi = lo + 1.0;
    }
    hi += 0.05 * (hi - lo);

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto x_of = [&](std::size_t layer) {
        return n_layers < 2 ? kLeft + plot_w / 2.0
                            : kLeft + plot_w * static_cast<double>(layer) / static_cast<double>(n_layers - 1);
    };
    auto y_of = [&](double v) { return kTop + plot_h * (hi - v) / (hi - lo); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
           "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + num(kLeft + plot_w / 2.0) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
           "Expressivity across layers</text>\n";

    // Axes, y ticks and layer labels.
    svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + plot_h) + "\" x2=\"" + num(kLeft + plot_w) + "\" y2=\"" +
           num(kTop + plot_h) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" +
           num(kTop + plot_h) + "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 5; ++t) {
        const double v = lo + (hi - lo) * t / 5.0;
        svg += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(y_of(v) + 4) + "\" text-anchor=\"end\">" + num(v) +
               "</text>\n";
    }
    for (std::size_t l = 0; l < n_layers; ++l) {
        svg += "<text x=\"" + num(x_of(l)) + "\" y=\"" + num(kTop + plot_h + 18) + "\" text-anchor=\"middle\">" +
               escape(sweep.layers[l]) + "</text>\n";
    }
    svg += "<text x=\"18\" y=\"" + num(kTop + plot_h / 2.0) + "\" transform=\"rotate(-90 18 " +
           num(kTop + plot_h / 2.0) + ")\" text-anchor=\"middle\">MI (nats)</text>\n";
    svg += "<text x=\"" + num(kLeft + plot_w / 2.0) + "\" y=\"" + num(kHeight - 14) +
           "\" text-anchor=\"middle\">layer</text>\n";

    for (std::size_t a = 0; a < n_attr; ++a) {
        const std::string color(kPalette[a % kPalette.size()]);
        std::string band, upper, lower, line;
        for (std::size_t l = 0; l < n_layers; ++l) {
            const auto& c = sweep.at(l, a);
            upper += num(x_of(l)) + "," + num(y_of(c.mean + c.std)) + " ";
            line += (l == 0 ? "" : " ") + num(x_of(l)) + "," + num(y_of(c.mean));
        }
        for (std::size_t l = n_layers; l-- > 0;) {
            const auto& c = sweep.at(l, a);
            lower += num(x_of(l)) + "," + num(y_of(c.mean - c.std)) + " ";
        }
        band = upper + lower;
        band.pop_back();
        svg += "<g class=\"attribute\" data-name=\"" + escape(sweep.attributes[a]) + "\">\n";
        svg += "<polygon class=\"band\" points=\"" + band + "\" fill=\"" + color + "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
        svg += "<polyline class=\"mean\" points=\"" + line + "\" fill=\"none\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
        for (std::size_t l = 0; l < n_layers; ++l) {
            svg += "<circle cx=\"" + num(x_of(l)) + "\" cy=\"" + num(y_of(sweep.at(l, a).mean)) + "\" r=\"3\" fill=\"" +
                   color + "\"/>\n";
        }
        svg += "</g>\n";

        const double ly = kTop + 10.0 + 20.0 * static_cast<double>(a);
        const double lx = kWidth - kRight + 20.0;
        svg += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(lx + 24) + "\" y2=\"" + num(ly) +
               "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        svg += "<text class=\"legend\" x=\"" + num(lx + 30) + "\" y=\"" + num(ly + 4) + "\">" +
               escape(sweep.attributes[a]) + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace explab
