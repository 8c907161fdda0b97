#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vqsvc/hier/module.hpp"

namespace vqsvc::hier {

struct ConditioningMask {
    bool use_content = true;
    bool use_pitch = true;
    bool use_loudness = true;
    bool use_singer = true;
    bool use_low_res = true;
    double noise_level = 0.0;  // in [0, 1]

    void validate() const {
        require(noise_level >= 0.0 && noise_level <= 1.0, ErrorCategory::bad_config,
                "noise level must lie in [0, 1]");
    }
};

// Degrades or removes conditioning streams. noise_level r multiplies every
// pitch/envelope value by (1 + r*u), u uniform in [-1, 1], and replaces the
// content sequence by codes drawn from its own empirical distribution.
// Disabled streams become zeros.
template <class T>
ConditioningBundle<T> apply_mask(const ConditioningBundle<T>& cond, const ConditioningMask& mask,
                                 const quant::Codebook<T>& cb, std::uint64_t seed) {
    mask.validate();
    ConditioningBundle<T> out = cond;
    if (mask.noise_level > 0.0) {
        Rng rng = derived_rng(seed, 77);
        auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
        const double r = mask.noise_level;
        for (double& v : out.f0) v *= 1.0 + r * (2.0 * unit() - 1.0);
        for (double& v : out.env) v *= 1.0 + r * (2.0 * unit() - 1.0);
        // Content: each column of a conditioning bundle is an exact codebook
        // entry, so recover codes, then draw i.i.d. from their empirical
        // distribution.
        const long n = out.content.cols();
        std::vector<long> codes(static_cast<size_t>(n));
        for (long t = 0; t < n; ++t) codes[static_cast<size_t>(t)] = cb.nearest(out.content.col(t).data());
        for (long t = 0; t < n; ++t) {
            const long pick = codes[static_cast<size_t>(rng() % static_cast<std::uint64_t>(n))];
            out.content.col(t) = cb.embeddings().col(pick);
        }
    }
    if (!mask.use_content) out.content.setZero();
    if (!mask.use_pitch) out.use_pitch = false;
    if (!mask.use_loudness) out.use_loudness = false;
    if (!mask.use_singer) out.singer.setZero();
    if (!mask.use_low_res)
        std::fill(out.low_channel.begin(), out.low_channel.end(), 0.0);
    return out;
}

// Optional replacements applied to a freshly built bundle.
struct CondOverride {
    std::optional<std::vector<double>> f0;
    std::optional<std::vector<double>> env;
    std::optional<std::string> singer_id;
    std::optional<std::vector<double>> low_channel;
};

// Encode -> conditioned autoregressive regeneration of one waveform at the
// module's own rate.
template <class T>
signal::Waveform reconstruct(VqModule<T>& m, const signal::Waveform& w,
                             const std::string& singer_id, const CondOverride& ov,
                             net::GenMode mode, Rng& rng) {
    ConditioningBundle<T> bundle =
        m.build_bundle(w, ov.singer_id ? *ov.singer_id : singer_id);
    if (ov.f0) bundle.f0 = *ov.f0;
    if (ov.env) bundle.env = *ov.env;
    if (ov.low_channel) bundle.low_channel = *ov.low_channel;
    return m.generate_from(bundle, static_cast<long>(w.samples.size()), mode, rng);
}

// The already-manipulated features both scales consume, plus the identity to
// sing them with.
struct Manipulations {
    std::vector<double> f0;  // Hz, shared verbatim by both modules
    std::vector<double> env;
    std::string singer_id;
};

struct ChainTrace {
    std::vector<double> bottom_f0, upper_f0;  // what each module was conditioned on
    signal::Waveform low_output;              // bottom module's generated audio
};

// Low-to-high-resolution inference: the bottom module regenerates at its own
// rate; its output, upsampled, becomes the upper module's x^low stream. The
// upper module's content comes from the full-rate input. An optional mask
// degrades the upper module's conditioning (ablation studies).
template <class T>
signal::Waveform infer_chain(VqModule<T>& bottom, VqModule<T>& upper, const signal::Waveform& w,
                             const Manipulations& manip, net::GenMode mode, std::uint64_t seed,
                             const ConditioningMask* upper_mask = nullptr,
                             ChainTrace* trace = nullptr) {
    require(upper.spec().uses_low_res_conditioning, ErrorCategory::bad_config,
            "upper module must accept low-resolution conditioning");
    require(bottom.spec().sample_rate_hz == upper.spec().low_rate_hz, ErrorCategory::bad_config,
            "rate mismatch between modules");
    require(w.sample_rate_hz == upper.spec().sample_rate_hz, ErrorCategory::invalid_input,
            "input rate does not match the upper module");
    require(!manip.f0.empty() && !manip.env.empty(), ErrorCategory::invalid_input,
            "manipulated features are empty");

    signal::Waveform w_low = signal::resample(w, bottom.spec().sample_rate_hz);
    ConditioningBundle<T> bl = bottom.build_bundle(w_low, manip.singer_id);
    bl.f0 = manip.f0;
    bl.env = manip.env;
    Rng rng_b = derived_rng(seed, 11);
    signal::Waveform y_low =
        bottom.generate_from(bl, static_cast<long>(w_low.samples.size()), mode, rng_b);

    ConditioningBundle<T> bu = upper.build_bundle(w, manip.singer_id);
    bu.f0 = manip.f0;
    bu.env = manip.env;
    signal::Waveform up = signal::resample(y_low, upper.spec().sample_rate_hz);
    up.samples.resize(w.samples.size(), 0.0);
    bu.low_channel = std::move(up.samples);
    if (upper_mask) bu = apply_mask(bu, *upper_mask, upper.codebook(), seed);
    if (trace) {
        trace->bottom_f0 = bl.f0;
        trace->upper_f0 = bu.f0;
        trace->low_output = y_low;
    }
    Rng rng_u = derived_rng(seed, 22);
    return upper.generate_from(bu, static_cast<long>(w.samples.size()), mode, rng_u);
}

}  // namespace vqsvc::hier
