#include "vqsvc/signal/resample.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace vqsvc::signal {

namespace {

// Modified Bessel function of the first kind, order zero (series form).
double bessel_i0(double x) {
    double sum = 1.0;
    double term = 1.0;
    const double hx = 0.5 * x;
    for (int k = 1; k < 64; ++k) {
        term *= (hx / k) * (hx / k);
        sum += term;
        if (term < 1e-14 * sum) break;
    }
    return sum;
}

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    const double px = M_PI * x;
    return std::sin(px) / px;
}

struct Kernel {
    long rel_start = 0;           // first tap index relative to floor(center)
    std::vector<double> weights;  // windowed-sinc taps
    double wsum = 0.0;
};

// Tap weights for one fractional center position.
Kernel make_kernel(double frac, double half_width, double cutoff, double beta, double i0_beta) {
    Kernel k;
    k.rel_start = static_cast<long>(std::ceil(frac - half_width));
    const long rel_end = static_cast<long>(std::floor(frac + half_width));
    k.weights.reserve(static_cast<std::size_t>(rel_end - k.rel_start + 1));
    for (long rel = k.rel_start; rel <= rel_end; ++rel) {
        const double u = static_cast<double>(rel) - frac;
        const double r = u / half_width;
        const double win = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
        const double h = 2.0 * cutoff * sinc(2.0 * cutoff * u) * win;
        k.weights.push_back(h);
        k.wsum += h;
    }
    return k;
}

}  // namespace

Waveform resample(const Waveform& w, int target_rate_hz, const ResampleSpec& spec) {
    require(!w.samples.empty(), ErrorCategory::invalid_input, "waveform is empty");
    require(w.sample_rate_hz > 0, ErrorCategory::invalid_input, "sample rate must be positive");
    require(target_rate_hz > 0, ErrorCategory::invalid_input, "target rate must be positive");
    if (target_rate_hz == w.sample_rate_hz) return w;

    const long n_in = static_cast<long>(w.samples.size());
    const double ratio = static_cast<double>(target_rate_hz) / w.sample_rate_hz;
    const long n_out = std::llround(static_cast<double>(n_in) * ratio);

    // When downsampling, stretch the kernel so the lowpass lands at the new
    // Nyquist; when upsampling, the cutoff stays at the source Nyquist.
    const double scale = std::min(1.0, ratio);
    const double cutoff = 0.5 * scale;
    const double half_width = 0.5 * spec.taps / scale;  // in source samples
    const double i0_beta = bessel_i0(spec.kaiser_beta);

    // Output centers advance by src/dst per sample, so the fractional part
    // cycles with period dst/gcd; cache one kernel per phase.
    const long g = std::gcd(w.sample_rate_hz, target_rate_hz);
    const long src_step = w.sample_rate_hz / g;
    const long phases = target_rate_hz / g;
    const bool cache_phases = phases <= 4096;

    std::vector<Kernel> table;
    if (cache_phases) {
        table.reserve(static_cast<std::size_t>(phases));
        for (long r = 0; r < phases; ++r) {
            table.push_back(make_kernel(static_cast<double>(r) / phases, half_width, cutoff,
                                        spec.kaiser_beta, i0_beta));
        }
    }

    Waveform out;
    out.sample_rate_hz = target_rate_hz;
    out.samples.resize(static_cast<std::size_t>(n_out));

    const double* x = w.samples.data();
    for (long n = 0; n < n_out; ++n) {
        const long long num = static_cast<long long>(n) * src_step;
        const long base = static_cast<long>(num / phases);
        const long phase = static_cast<long>(num % phases);

        Kernel local;
        const Kernel& k = cache_phases
                              ? table[static_cast<std::size_t>(phase)]
                              : (local = make_kernel(static_cast<double>(phase) / phases,
                                                     half_width, cutoff, spec.kaiser_beta, i0_beta));
        const long m0 = base + k.rel_start;
        const long m1 = m0 + static_cast<long>(k.weights.size()) - 1;

        double acc = 0.0;
        if (m0 >= 0 && m1 < n_in) {
            for (std::size_t j = 0; j < k.weights.size(); ++j)
                acc += k.weights[j] * x[m0 + static_cast<long>(j)];
            acc /= k.wsum;
        } else {
            // Renormalizing over the in-range taps keeps DC exact at the edges.
            double wsum = 0.0;
            for (std::size_t j = 0; j < k.weights.size(); ++j) {
                const long m = m0 + static_cast<long>(j);
                if (m < 0 || m >= n_in) continue;
                acc += k.weights[j] * x[m];
                wsum += k.weights[j];
            }
            acc = wsum != 0.0 ? acc / wsum : 0.0;
        }
        out.samples[static_cast<std::size_t>(n)] = std::clamp(acc, -1.0, 1.0);
    }
    return out;
}

}  // namespace vqsvc::signal
