#pragma once

#include <optional>

#include "vqsvc/signal/waveform.hpp"

namespace vqsvc::conversion {

// Voiced frames move by 2^(semitones/12); unvoiced frames stay 0.
signal::PitchTrack shift_pitch(const signal::PitchTrack& track, double semitones);

// A^exp = a_max * (e^{theta*A/a_max} - 1) / (e^theta - 1).
// Fixes 0 and a_max exactly; lowers everything between.
signal::Envelope expand_envelope(const signal::Envelope& env, double theta, double a_max);

// A^comp = a_max * (ln(theta*A/a_max) + 1) / (ln theta + 1), clamped below
// at 0 (the raw curve is negative for A < a_max/(e*theta)). Fixes a_max
// exactly; raises the mid range.
signal::Envelope compress_envelope(const signal::Envelope& env, double theta, double a_max);

// Amplitude below which the compression curve clamps to zero.
double compress_clamp_threshold(double theta, double a_max);

struct DynamicsCurveSpec {
    enum class Mode { identity, expand, compress };
    Mode mode = Mode::identity;
    double theta = 3.0;
    // Peak the curves preserve; defaults to the envelope's own maximum.
    std::optional<double> a_max;
};

// Dispatches on mode; identity passes through.
signal::Envelope apply_dynamics(const signal::Envelope& env, const DynamicsCurveSpec& spec);

}  // namespace vqsvc::conversion
