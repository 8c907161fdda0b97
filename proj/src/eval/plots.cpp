#include "vqsvc/eval/plots.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "vqsvc/common.hpp"

namespace vqsvc::eval {

namespace {

constexpr double kW = 900.0, kH = 420.0;
constexpr double kMl = 70.0, kMr = 20.0, kMt = 40.0, kMb = 50.0;

const char* kPalette[] = {"#1f6fb2", "#d1483e", "#3a9e4e", "#8e5fb0", "#c98a1c", "#4c4c4c"};

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    require(bool(out), ErrorCategory::io_error, "cannot write " + path);
    return out;
}

void header(std::ofstream& out, const std::string& title) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
        << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n"
        << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n"
        << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">"
        << title << "</text>\n";
}

void axes(std::ofstream& out, const std::string& xlabel, const std::string& ylabel) {
    out << "<line x1=\"" << kMl << "\" y1=\"" << kH - kMb << "\" x2=\"" << kW - kMr << "\" y2=\""
        << kH - kMb << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << kMl << "\" y1=\"" << kMt << "\" x2=\"" << kMl << "\" y2=\""
        << kH - kMb << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << (kMl + kW - kMr) / 2 << "\" y=\"" << kH - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << xlabel
        << "</text>\n"
        << "<text x=\"18\" y=\"" << (kMt + kH - kMb) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 18 "
        << (kMt + kH - kMb) / 2 << ")\">" << ylabel << "</text>\n";
}

}  // namespace

void write_f0_plot_svg(const std::string& path,
                       const std::vector<std::pair<std::string, signal::PitchTrack>>& tracks,
                       const std::string& title) {
    require(!tracks.empty(), ErrorCategory::invalid_input, "nothing to plot");
    double t_max = 0.0, f_max = 0.0;
    for (const auto& [label, tr] : tracks) {
        t_max = std::max(t_max, double(tr.f0_hz.size()) * tr.hop_s);
        for (double f : tr.f0_hz) f_max = std::max(f_max, f);
    }
    if (t_max <= 0.0) t_max = 1.0;
    if (f_max <= 0.0) f_max = 1.0;
    f_max *= 1.1;

    auto px = [&](double t) { return kMl + (kW - kMl - kMr) * t / t_max; };
    auto py = [&](double f) { return kH - kMb - (kH - kMt - kMb) * f / f_max; };

    auto out = open_out(path);
    header(out, title);
    axes(out, "time (s)", "f0 (Hz)");
    for (int g = 0; g <= 4; ++g) {
        const double f = f_max * g / 4.0;
        out << "<text x=\"" << kMl - 6 << "\" y=\"" << py(f) + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(f)
            << "</text>\n";
    }
    for (std::size_t k = 0; k < tracks.size(); ++k) {
        const auto& tr = tracks[k].second;
        const char* color = kPalette[k % (sizeof kPalette / sizeof *kPalette)];
        std::string points;
        bool open_seg = false;
        auto flush = [&]() {
            if (open_seg)
                out << "<polyline fill=\"none\" stroke=\"" << color
                    << "\" stroke-width=\"1.5\" points=\"" << points << "\"/>\n";
            points.clear();
            open_seg = false;
        };
        for (std::size_t i = 0; i < tr.f0_hz.size(); ++i) {
            if (tr.f0_hz[i] <= 0.0) { flush(); continue; }
            points += fmt(px(double(i) * tr.hop_s)) + "," + fmt(py(tr.f0_hz[i])) + " ";
            open_seg = true;
        }
        flush();
        out << "<rect x=\"" << kW - kMr - 180 << "\" y=\"" << kMt + 18.0 * double(k)
            << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>\n"
            << "<text x=\"" << kW - kMr - 163 << "\" y=\"" << kMt + 18.0 * double(k) + 10
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << tracks[k].first
            << "</text>\n";
    }
    out << "</svg>\n";
    require(bool(out), ErrorCategory::io_error, "failed writing " + path);
}

void write_usage_plot_svg(const std::string& path, const std::vector<double>& frequencies,
                          int used_count, const std::string& title) {
    require(!frequencies.empty(), ErrorCategory::invalid_input, "nothing to plot");
    const double f_max = std::max(1e-12, *std::max_element(frequencies.begin(), frequencies.end()));
    const double span = kW - kMl - kMr;
    const double bw = span / double(frequencies.size());

    auto out = open_out(path);
    header(out, title + " (" + std::to_string(used_count) + " of " +
                     std::to_string(frequencies.size()) + " codes used)");
    axes(out, "code index", "selection frequency");
    for (std::size_t k = 0; k < frequencies.size(); ++k) {
        const double h = (kH - kMt - kMb) * frequencies[k] / (1.1 * f_max);
        if (h <= 0.0) continue;
        out << "<rect x=\"" << fmt(kMl + bw * double(k)) << "\" y=\"" << fmt(kH - kMb - h)
            << "\" width=\"" << fmt(std::max(0.5, bw * 0.9)) << "\" height=\"" << fmt(h)
            << "\" fill=\"#1f6fb2\"/>\n";
    }
    out << "<text x=\"" << kMl - 6 << "\" y=\"" << kMt + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt(1.1 * f_max) << "</text>\n";
    out << "</svg>\n";
    require(bool(out), ErrorCategory::io_error, "failed writing " + path);
}

}  // namespace vqsvc::eval
