#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "cmba/errors.hpp"
#include "cmba/harness.hpp"

namespace cmba {

namespace {

std::string fmt(double v, const char* spec = "%.2f") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

const char* kPalette[] = {"#4c72b0", "#c44e52", "#55a868", "#8172b2",
                          "#ccb974", "#64b5cd", "#8c8c8c", "#e377c2"};

struct Series {
    std::string method;
    std::vector<double> eps, mean, stddev;
};

std::string sanitize(std::string s) {
    for (char& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
    return s;
}

void render_pane(const std::string& path, const std::string& title,
                 const std::vector<Series>& series) {
    const double width = 880, height = 540;
    const double ml = 80, mr = 210, mt = 50, mb = 60;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
    for (const Series& s : series) {
        for (std::size_t i = 0; i < s.eps.size(); ++i) {
            x_lo = std::min(x_lo, s.eps[i]);
            x_hi = std::max(x_hi, s.eps[i]);
            y_lo = std::min(y_lo, s.mean[i] - s.stddev[i]);
            y_hi = std::max(y_hi, s.mean[i] + s.stddev[i]);
        }
    }
    if (x_hi <= x_lo) {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    if (y_hi <= y_lo) {
        y_lo -= 1.0;
        y_hi += 1.0;
    }
    const double xpad = 0.04 * (x_hi - x_lo), ypad = 0.06 * (y_hi - y_lo);
    x_lo -= xpad;
    x_hi += xpad;
    y_lo -= ypad;
    y_hi += ypad;

    const auto X = [&](double v) { return ml + (v - x_lo) / (x_hi - x_lo) * pw; };
    const auto Y = [&](double v) { return mt + ph - (v - y_lo) / (y_hi - y_lo) * ph; };

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << fmt(ml) << "\" y=\"28\" font-family=\"sans-serif\" font-size=\"16\">"
        << title << "</text>\n";

    // grid and ticks
    for (int k = 0; k <= 5; ++k) {
        const double fx = x_lo + (x_hi - x_lo) * k / 5.0;
        const double fy = y_lo + (y_hi - y_lo) * k / 5.0;
        out << "<line x1=\"" << fmt(X(fx)) << "\" y1=\"" << fmt(mt) << "\" x2=\"" << fmt(X(fx))
            << "\" y2=\"" << fmt(mt + ph) << "\" stroke=\"#e6e6e6\" stroke-width=\"1\"/>\n";
        out << "<line x1=\"" << fmt(ml) << "\" y1=\"" << fmt(Y(fy)) << "\" x2=\"" << fmt(ml + pw)
            << "\" y2=\"" << fmt(Y(fy)) << "\" stroke=\"#e6e6e6\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << fmt(X(fx)) << "\" y=\"" << fmt(mt + ph + 22)
            << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">"
            << fmt(fx, "%.4g") << "</text>\n";
        out << "<text x=\"" << fmt(ml - 8) << "\" y=\"" << fmt(Y(fy) + 4)
            << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">"
            << fmt(fy, "%.4g") << "</text>\n";
    }
    out << "<rect x=\"" << fmt(ml) << "\" y=\"" << fmt(mt) << "\" width=\"" << fmt(pw)
        << "\" height=\"" << fmt(ph) << "\" fill=\"none\" stroke=\"#333333\"/>\n";
    out << "<text x=\"" << fmt(ml + pw / 2) << "\" y=\"" << fmt(height - 14)
        << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">"
        << "perturbation budget epsilon</text>\n";
    out << "<text x=\"20\" y=\"" << fmt(mt + ph / 2)
        << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
        << "transform=\"rotate(-90 20 " << fmt(mt + ph / 2) << ")\">mean episode reward</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const Series& s = series[si];
        const char* color = kPalette[si % (sizeof kPalette / sizeof kPalette[0])];
        if (s.eps.size() > 1) {
            std::string band = "<polygon points=\"";
            for (std::size_t i = 0; i < s.eps.size(); ++i)
                band += fmt(X(s.eps[i])) + "," + fmt(Y(s.mean[i] + s.stddev[i])) + " ";
            for (std::size_t i = s.eps.size(); i-- > 0;)
                band += fmt(X(s.eps[i])) + "," + fmt(Y(s.mean[i] - s.stddev[i])) + " ";
            band += "\" fill=\"" + std::string(color) + "\" fill-opacity=\"0.15\" stroke=\"none\"/>";
            out << band << "\n";
            std::string line = "<polyline points=\"";
            for (std::size_t i = 0; i < s.eps.size(); ++i)
                line += fmt(X(s.eps[i])) + "," + fmt(Y(s.mean[i])) + " ";
            line += "\" fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\"";
            if (s.method == "none") line += " stroke-dasharray=\"6,4\"";
            line += "/>";
            out << line << "\n";
        } else if (s.eps.size() == 1) {
            out << "<line x1=\"" << fmt(X(s.eps[0])) << "\" y1=\""
                << fmt(Y(s.mean[0] - s.stddev[0])) << "\" x2=\"" << fmt(X(s.eps[0]))
                << "\" y2=\"" << fmt(Y(s.mean[0] + s.stddev[0])) << "\" stroke=\"" << color
                << "\" stroke-width=\"2\"/>\n";
        }
        for (std::size_t i = 0; i < s.eps.size(); ++i)
            out << "<circle cx=\"" << fmt(X(s.eps[i])) << "\" cy=\"" << fmt(Y(s.mean[i]))
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        // legend entry
        const double ly = mt + 16 + 22 * static_cast<double>(si);
        out << "<line x1=\"" << fmt(ml + pw + 16) << "\" y1=\"" << fmt(ly) << "\" x2=\""
            << fmt(ml + pw + 44) << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color
            << "\" stroke-width=\"3\"/>\n";
        out << "<text x=\"" << fmt(ml + pw + 50) << "\" y=\"" << fmt(ly + 4)
            << "\" font-family=\"sans-serif\" font-size=\"13\">" << s.method << "</text>\n";
    }
    out << "</svg>\n";
    if (!out) throw IoError("write failed for " + path);
}

} // namespace

void emit_report(const std::vector<CellResult>& cells, const std::string& dir) {
    if (cells.empty()) throw ConfigError("emit_report: empty results table");
    std::filesystem::create_directories(dir);
    write_cells_csv(cells, dir + "/cells.csv");

    // panes keyed by (norm, victim), in first-appearance order
    std::vector<std::pair<std::string, std::string>> panes;
    for (const CellResult& c : cells) {
        const auto key = std::make_pair(c.norm, c.victim);
        if (std::find(panes.begin(), panes.end(), key) == panes.end()) panes.push_back(key);
    }
    for (const auto& [norm, victim] : panes) {
        std::vector<Series> series;
        for (const CellResult& c : cells) {
            if (c.norm != norm || c.victim != victim) continue;
            if (c.status != "ok") continue; // failed cells stay visible in the csv
            auto it = std::find_if(series.begin(), series.end(),
                                   [&](const Series& s) { return s.method == c.method; });
            if (it == series.end()) {
                series.push_back(Series{c.method, {}, {}, {}});
                it = series.end() - 1;
            }
            it->eps.push_back(c.epsilon);
            it->mean.push_back(c.mean_reward);
            it->stddev.push_back(c.std_reward);
        }
        for (Series& s : series) {
            std::vector<std::size_t> order(s.eps.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) { return s.eps[a] < s.eps[b]; });
            Series sorted = s;
            for (std::size_t i = 0; i < order.size(); ++i) {
                sorted.eps[i] = s.eps[order[i]];
                sorted.mean[i] = s.mean[order[i]];
                sorted.stddev[i] = s.stddev[order[i]];
            }
            s = std::move(sorted);
        }
        if (series.empty()) continue;
        const std::string norm_tag = norm == "inf" ? "linf" : "l" + norm;
        const std::string path =
            dir + "/reward_vs_eps_" + norm_tag + "_" + sanitize(victim) + ".svg";
        render_pane(path, "reward vs budget (" + norm_tag + ", " + victim + ")", series);
    }
}

} // namespace cmba
