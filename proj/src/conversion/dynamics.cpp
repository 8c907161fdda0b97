#include "vqsvc/conversion/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace vqsvc::conversion {

signal::PitchTrack shift_pitch(const signal::PitchTrack& track, double semitones) {
    const double ratio = std::pow(2.0, semitones / 12.0);
    signal::PitchTrack out = track;
    for (double& f : out.f0_hz)
        if (f > 0.0) f *= ratio;
    return out;
}

namespace {

double max_value(const signal::Envelope& env) {
    double m = 0.0;
    for (const double v : env.values) m = std::max(m, v);
    return m;
}

void check_peak(const signal::Envelope& env, double a_max) {
    require(a_max > 0.0, ErrorCategory::invalid_input, "peak amplitude must be positive");
    require(a_max >= max_value(env), ErrorCategory::invalid_input,
            "a_max is below the envelope's own maximum");
}

}  // namespace

signal::Envelope expand_envelope(const signal::Envelope& env, double theta, double a_max) {
    require(theta > 0.0, ErrorCategory::invalid_input, "expansion needs theta > 0");
    check_peak(env, a_max);
    const double denom = std::exp(theta) - 1.0;
    signal::Envelope out = env;
    for (double& v : out.values) {
        v = a_max * (std::exp(theta * (v / a_max)) - 1.0) / denom;
        v = std::clamp(v, 0.0, a_max);
    }
    return out;
}

signal::Envelope compress_envelope(const signal::Envelope& env, double theta, double a_max) {
    require(theta > 1.0, ErrorCategory::invalid_input, "compression needs theta > 1");
    check_peak(env, a_max);
    const double denom = std::log(theta) + 1.0;
    signal::Envelope out = env;
    for (double& v : out.values) {
        if (v <= 0.0) {
            v = 0.0;
            continue;
        }
        v = a_max * (std::log(theta * (v / a_max)) + 1.0) / denom;
        v = std::clamp(v, 0.0, a_max);
    }
    return out;
}

double compress_clamp_threshold(double theta, double a_max) {
    return a_max * std::exp(-1.0) / theta;
}

signal::Envelope apply_dynamics(const signal::Envelope& env, const DynamicsCurveSpec& spec) {
    if (spec.mode == DynamicsCurveSpec::Mode::identity) return env;
    const double a_max = spec.a_max ? *spec.a_max : max_value(env);
    if (spec.mode == DynamicsCurveSpec::Mode::expand)
        return expand_envelope(env, spec.theta, a_max);
    return compress_envelope(env, spec.theta, a_max);
}

}  // namespace vqsvc::conversion
