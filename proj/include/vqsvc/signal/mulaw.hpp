#pragma once

#include <cstddef>

#include "vqsvc/signal/waveform.hpp"

namespace vqsvc::signal {

inline constexpr int kMuLawLevels = 256;
inline constexpr double kMu = 255.0;

// Companded value in [-1, 1] for x in [-1, 1].
double mu_law_compand(double x);

// Single-sample encode; x outside [-1, 1] is clamped first.
int mu_law_encode_amp(double x, bool* clamped = nullptr);

// Bin-center amplitude for a code in [0, 255].
double mu_law_decode_amp(int code);

// Out-of-range inputs are clamped; `clamped_count`, when given, receives how
// many samples needed it.
MuLawSequence mu_law_encode(const Waveform& w, std::size_t* clamped_count = nullptr);

Waveform mu_law_decode(const MuLawSequence& m);

}  // namespace vqsvc::signal
