#include "vqsvc/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "vqsvc/common.hpp"

namespace vqsvc::eval {

namespace {

struct PairStats {
    double mae_hz = 0.0;
    double maer = 0.0;  // fractional, not percent
    std::size_t joint = 0;
};

PairStats joint_voiced_stats(const signal::PitchTrack& ref, const signal::PitchTrack& rec) {
    require(ref.f0_hz.size() == rec.f0_hz.size(), ErrorCategory::invalid_input,
            "pitch tracks differ in length: " + std::to_string(ref.f0_hz.size()) + " vs " +
                std::to_string(rec.f0_hz.size()));
    PairStats s;
    double abs_sum = 0.0, rel_sum = 0.0;
    for (std::size_t i = 0; i < ref.f0_hz.size(); ++i) {
        const double r = ref.f0_hz[i], q = rec.f0_hz[i];
        if (r <= 0.0 || q <= 0.0) continue;  // unvoiced in either -> skip
        abs_sum += std::abs(r - q);
        rel_sum += std::abs(r - q) / r;
        ++s.joint;
    }
    if (s.joint > 0) {
        s.mae_hz = abs_sum / double(s.joint);
        s.maer = rel_sum / double(s.joint);
    }
    return s;
}

}  // namespace

double pitch_mae(const signal::PitchTrack& ref, const signal::PitchTrack& rec) {
    const PairStats s = joint_voiced_stats(ref, rec);
    require(s.joint > 0, ErrorCategory::invalid_input,
            "no jointly voiced frames (" + std::to_string(ref.f0_hz.size()) +
                " frames compared); pitch error is undefined");
    return s.mae_hz;
}

MetricsReport maer(const std::vector<signal::PitchTrack>& refs,
                   const std::vector<signal::PitchTrack>& recs) {
    require(!refs.empty(), ErrorCategory::invalid_input, "no samples to evaluate");
    require(refs.size() == recs.size(), ErrorCategory::invalid_input,
            "sample count mismatch between reference and reconstruction");
    MetricsReport rep;
    rep.n_samples = int(refs.size());
    double mae_acc = 0.0, maer_acc = 0.0;
    for (std::size_t m = 0; m < refs.size(); ++m) {
        const PairStats s = joint_voiced_stats(refs[m], recs[m]);
        require(s.joint > 0, ErrorCategory::invalid_input,
                "sample " + std::to_string(m) + " has no jointly voiced frames");
        rep.per_sample_mae_hz.push_back(s.mae_hz);
        rep.per_sample_maer_percent.push_back(100.0 * s.maer);
        mae_acc += s.mae_hz;
        maer_acc += s.maer;
    }
    rep.mae_hz = mae_acc / double(refs.size());
    rep.maer_percent = 100.0 * maer_acc / double(refs.size());
    return rep;
}

double envelope_correlation(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = std::min(a.size(), b.size());
    require(n > 1, ErrorCategory::invalid_input, "need at least two envelope frames");
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) { ma += a[i]; mb += b[i]; }
    ma /= double(n); mb /= double(n);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        saa += da * da; sbb += db * db; sab += da * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

double spectral_distance_db(const signal::Waveform& a, const signal::Waveform& b) {
    require(a.sample_rate_hz == b.sample_rate_hz, ErrorCategory::invalid_input,
            "sample rate mismatch in spectral comparison");
    constexpr std::size_t kFrame = 256;
    constexpr std::size_t kHop = 128;
    constexpr std::size_t kBins = kFrame / 2 + 1;
    const std::size_t n = std::min(a.samples.size(), b.samples.size());
    require(n >= kFrame, ErrorCategory::invalid_input, "signals too short for spectral comparison");
    const std::size_t frames = (n - kFrame) / kHop + 1;

    std::vector<double> window(kFrame);
    for (std::size_t i = 0; i < kFrame; ++i)
        window[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * double(i) / double(kFrame));

    // Precompute one period of the DFT twiddles.
    std::vector<std::complex<double>> tw(kFrame);
    for (std::size_t i = 0; i < kFrame; ++i) {
        const double ang = -2.0 * M_PI * double(i) / double(kFrame);
        tw[i] = {std::cos(ang), std::sin(ang)};
    }

    const double floor_mag = 1e-8;
    auto log_spectrum = [&](const std::vector<double>& x, std::size_t off, double* out) {
        for (std::size_t k = 0; k < kBins; ++k) {
            std::complex<double> acc{0.0, 0.0};
            for (std::size_t i = 0; i < kFrame; ++i)
                acc += (x[off + i] * window[i]) * tw[(k * i) % kFrame];
            out[k] = 20.0 * std::log10(std::max(std::abs(acc), floor_mag));
        }
    };

    double acc = 0.0;
    std::vector<double> sa(kBins), sb(kBins);
    for (std::size_t f = 0; f < frames; ++f) {
        const std::size_t off = f * kHop;
        log_spectrum(a.samples, off, sa.data());
        log_spectrum(b.samples, off, sb.data());
        double sq = 0.0;
        for (std::size_t k = 0; k < kBins; ++k) {
            const double d = sa[k] - sb[k];
            sq += d * d;
        }
        acc += std::sqrt(sq / double(kBins));
    }
    return acc / double(frames);
}

}  // namespace vqsvc::eval
