#include "vqsvc/signal/features.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace vqsvc::signal {

Envelope extract_envelope(const Waveform& w, double window_s, double hop_s) {
    require(w.sample_rate_hz > 0, ErrorCategory::invalid_input, "sample rate must be positive");
    require(window_s > 0 && hop_s > 0, ErrorCategory::invalid_input,
            "window and hop must be positive");
    const long window = std::lround(window_s * w.sample_rate_hz);
    const long hop = std::lround(hop_s * w.sample_rate_hz);
    const long n = static_cast<long>(w.samples.size());
    require(window > 0 && hop > 0, ErrorCategory::invalid_input, "window shorter than one sample");
    require(n >= window, ErrorCategory::invalid_input,
            "signal shorter than one envelope window");

    const long frames = (n - window) / hop + 1;
    Envelope env;
    env.window_s = window_s;
    env.hop_s = hop_s;
    env.values.resize(static_cast<std::size_t>(frames));
    for (long i = 0; i < frames; ++i) {
        const double* x = w.samples.data() + i * hop;
        double acc = 0.0;
        for (long j = 0; j < window; ++j) acc += std::abs(x[j]);
        env.values[static_cast<std::size_t>(i)] = acc / window;
    }
    return env;
}

PitchTrack extract_f0(const Waveform& w, const F0Params& p) {
    require(w.sample_rate_hz > 0, ErrorCategory::invalid_input, "sample rate must be positive");
    require(p.f_min_hz > 0 && p.f_min_hz < p.f_max_hz, ErrorCategory::invalid_input,
            "need 0 < f_min < f_max");
    require(p.f_max_hz < 0.5 * w.sample_rate_hz, ErrorCategory::invalid_input,
            "f_max must stay below Nyquist");

    const double sr = w.sample_rate_hz;
    const long hop = std::max<long>(1, std::lround(p.hop_s * sr));
    const long lag_min = std::max<long>(2, static_cast<long>(std::floor(sr / p.f_max_hz)));
    const long lag_max = static_cast<long>(std::ceil(sr / p.f_min_hz));
    const long window = 2 * lag_max;  // at least two periods of f_min
    const long span = window + lag_max + 1;
    const long n = static_cast<long>(w.samples.size());

    PitchTrack track;
    track.hop_s = static_cast<double>(hop) / sr;
    if (n < span) return track;  // too short for a single frame

    const long frames = (n - span) / hop + 1;
    track.f0_hz.resize(static_cast<std::size_t>(frames), 0.0);

    std::vector<double> energy_prefix(static_cast<std::size_t>(n) + 1, 0.0);
    for (long i = 0; i < n; ++i)
        energy_prefix[i + 1] = energy_prefix[i] + w.samples[i] * w.samples[i];

    std::vector<double> r(static_cast<std::size_t>(lag_max) + 2, 0.0);
    for (long f = 0; f < frames; ++f) {
        const long s = f * hop;
        const double* x = w.samples.data() + s;
        const double e0 = energy_prefix[s + window] - energy_prefix[s];
        if (e0 <= 1e-12) continue;  // silent frame

        for (long tau = lag_min - 1; tau <= lag_max + 1; ++tau) {
            double num = 0.0;
            const double* y = x + tau;
            for (long i = 0; i < window; ++i) num += x[i] * y[i];
            const double e1 = energy_prefix[s + tau + window] - energy_prefix[s + tau];
            r[static_cast<std::size_t>(tau - lag_min + 1)] =
                e1 > 1e-12 ? num / std::sqrt(e0 * e1) : 0.0;
        }

        // Local maxima inside the lag band, best first.
        double r_best = -1.0;
        for (long tau = lag_min; tau <= lag_max; ++tau) {
            const std::size_t i = static_cast<std::size_t>(tau - lag_min + 1);
            if (r[i] > r[i - 1] && r[i] >= r[i + 1]) r_best = std::max(r_best, r[i]);
        }
        if (r_best < p.voicing_threshold) continue;

        long tau_pick = 0;
        for (long tau = lag_min; tau <= lag_max; ++tau) {
            const std::size_t i = static_cast<std::size_t>(tau - lag_min + 1);
            if (r[i] > r[i - 1] && r[i] >= r[i + 1] && r[i] >= p.peak_ratio * r_best) {
                tau_pick = tau;  // smallest qualifying lag, i.e. the fundamental
                break;
            }
        }
        if (tau_pick == 0) continue;

        const std::size_t i = static_cast<std::size_t>(tau_pick - lag_min + 1);
        const double denom = r[i - 1] - 2.0 * r[i] + r[i + 1];
        double delta = 0.0;
        if (std::abs(denom) > 1e-12) delta = 0.5 * (r[i - 1] - r[i + 1]) / denom;
        delta = std::clamp(delta, -0.5, 0.5);
        const double f0 = sr / (static_cast<double>(tau_pick) + delta);
        track.f0_hz[static_cast<std::size_t>(f)] = std::clamp(f0, p.f_min_hz, p.f_max_hz);
    }
    return track;
}

}  // namespace vqsvc::signal
