#pragma once

#include "vqsvc/signal/waveform.hpp"

namespace vqsvc::signal {

// Windowed-sinc resampler. `taps` is the two-sided kernel support in samples
// of the lower-rate side; larger values sharpen the anti-aliasing cutoff.
struct ResampleSpec {
    int taps = 48;
    double kaiser_beta = 8.6;
};

// Output length is round(n * target / source), exact for integer ratios.
// Kernel weights are renormalized over the in-range samples, so constant
// signals pass through unchanged out to the edges.
Waveform resample(const Waveform& w, int target_rate_hz, const ResampleSpec& spec = {});

}  // namespace vqsvc::signal
