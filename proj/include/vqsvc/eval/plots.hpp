#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vqsvc/signal/waveform.hpp"

namespace vqsvc::eval {

// Overlaid pitch contours (one polyline per labelled track; unvoiced frames
// break the line). Self-contained SVG, no external assets.
void write_f0_plot_svg(const std::string& path,
                       const std::vector<std::pair<std::string, signal::PitchTrack>>& tracks,
                       const std::string& title);

// Bar chart of codebook selection frequencies by code index.
void write_usage_plot_svg(const std::string& path, const std::vector<double>& frequencies,
                          int used_count, const std::string& title);

}  // namespace vqsvc::eval
