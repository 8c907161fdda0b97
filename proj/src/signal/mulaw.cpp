#include "vqsvc/signal/mulaw.hpp"

#include <algorithm>
#include <cmath>

namespace vqsvc::signal {

double mu_law_compand(double x) {
    const double ax = std::abs(x);
    const double y = std::log1p(kMu * ax) / std::log1p(kMu);
    return x < 0.0 ? -y : y;
}

static double mu_law_expand(double y) {
    const double ay = std::abs(y);
    const double x = (std::pow(1.0 + kMu, ay) - 1.0) / kMu;
    return y < 0.0 ? -x : x;
}

int mu_law_encode_amp(double x, bool* clamped) {
    bool c = false;
    if (x > 1.0) { x = 1.0; c = true; }
    if (x < -1.0) { x = -1.0; c = true; }
    if (clamped) *clamped = c;
    const double y = mu_law_compand(x);             // [-1, 1]
    int code = static_cast<int>(std::floor((y + 1.0) * 0.5 * kMuLawLevels));
    return std::clamp(code, 0, kMuLawLevels - 1);
}

double mu_law_decode_amp(int code) {
    require(code >= 0 && code < kMuLawLevels, ErrorCategory::invalid_input,
            "mu-law code out of range [0, 255]");
    // Center of the bin on the amplitude axis, not the companded axis, so the
    // round-trip error never exceeds the bin's amplitude half-width.
    const double y_lo = static_cast<double>(code) / kMuLawLevels * 2.0 - 1.0;
    const double y_hi = static_cast<double>(code + 1) / kMuLawLevels * 2.0 - 1.0;
    return 0.5 * (mu_law_expand(y_lo) + mu_law_expand(y_hi));
}

MuLawSequence mu_law_encode(const Waveform& w, std::size_t* clamped_count) {
    require(!w.samples.empty(), ErrorCategory::invalid_input, "waveform is empty");
    require(w.sample_rate_hz > 0, ErrorCategory::invalid_input, "sample rate must be positive");
    MuLawSequence m;
    m.sample_rate_hz = w.sample_rate_hz;
    m.codes.reserve(w.samples.size());
    std::size_t clamped = 0;
    for (double s : w.samples) {
        bool c = false;
        m.codes.push_back(static_cast<std::uint8_t>(mu_law_encode_amp(s, &c)));
        if (c) ++clamped;
    }
    if (clamped_count) *clamped_count = clamped;
    return m;
}

Waveform mu_law_decode(const MuLawSequence& m) {
    require(!m.codes.empty(), ErrorCategory::invalid_input, "mu-law sequence is empty");
    Waveform w;
    w.sample_rate_hz = m.sample_rate_hz;
    w.samples.reserve(m.codes.size());
    for (std::uint8_t c : m.codes) w.samples.push_back(mu_law_decode_amp(c));
    return w;
}

}  // namespace vqsvc::signal
