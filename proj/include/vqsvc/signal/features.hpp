#pragma once

#include "vqsvc/signal/waveform.hpp"

namespace vqsvc::signal {

// Mean absolute amplitude per window. Frame count is
// floor((T - window) / hop) + 1; signals shorter than one window are rejected.
Envelope extract_envelope(const Waveform& w, double window_s = 0.040, double hop_s = 0.020);

struct F0Params {
    double hop_s = 0.005;
    double f_min_hz = 70.0;
    double f_max_hz = 1000.0;
    // Frames whose best normalized autocorrelation falls below this emit 0.
    double voicing_threshold = 0.5;
    // A shorter-lag peak within this ratio of the best peak wins, which keeps
    // strongly harmonic tones from halving to the double period.
    double peak_ratio = 0.90;
};

// Normalized-autocorrelation pitch estimator with parabolic peak refinement.
// Voiced frames land inside [f_min, f_max]; unvoiced frames are exactly 0.
PitchTrack extract_f0(const Waveform& w, const F0Params& params = {});

}  // namespace vqsvc::signal
