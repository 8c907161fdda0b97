#pragma once

#include <cstdint>
#include <vector>

#include "vqsvc/common.hpp"

namespace vqsvc::signal {

// Mono sample sequence, samples in [-1, 1].
struct Waveform {
    std::vector<double> samples;
    int sample_rate_hz = 0;

    double duration_s() const {
        return static_cast<double>(samples.size()) / sample_rate_hz;
    }
};

// 8-bit companded codes, one per sample.
struct MuLawSequence {
    std::vector<std::uint8_t> codes;
    int sample_rate_hz = 0;
};

// Framewise mean absolute amplitude.
struct Envelope {
    std::vector<double> values;
    double hop_s = 0.020;
    double window_s = 0.040;
};

// Framewise fundamental frequency; 0 encodes an unvoiced frame.
struct PitchTrack {
    std::vector<double> f0_hz;
    double hop_s = 0.005;
};

inline void validate(const Waveform& w) {
    require(!w.samples.empty(), ErrorCategory::invalid_input, "waveform is empty");
    require(w.sample_rate_hz > 0, ErrorCategory::invalid_input, "sample rate must be positive");
    for (double s : w.samples) {
        require(s >= -1.0 && s <= 1.0, ErrorCategory::invalid_input,
                "sample outside [-1, 1]");
    }
}

}  // namespace vqsvc::signal
