#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vqsvc/conversion/convert.hpp"
#include "vqsvc/eval/metrics.hpp"
#include "vqsvc/hier/infer.hpp"
#include "vqsvc/hier/module.hpp"
#include "vqsvc/io/corpus.hpp"
#include "vqsvc/quantizer/codebook.hpp"
#include "vqsvc/signal/features.hpp"
#include "vqsvc/signal/resample.hpp"

namespace vqsvc::eval {

// ---------------------------------------------------------------------------
// Codebook usage over a corpus.

struct UsageDoc {
    std::string scale;
    std::size_t total_codes = 0;
    quant::UsageReport usage;                       // frequencies indexed by code
    std::vector<std::pair<int, double>> sorted;     // (code, frequency), descending
};

template <class T>
UsageDoc codebook_report(hier::VqModule<T>& m, const io::Corpus& corpus) {
    require(!corpus.items.empty(), ErrorCategory::invalid_input, "corpus is empty");
    std::vector<int32_t> all;
    for (const auto& item : corpus.items) {
        signal::Waveform w = item.audio;
        if (w.sample_rate_hz != m.spec().sample_rate_hz)
            w = signal::resample(w, m.spec().sample_rate_hz);
        auto codes = m.encode_codes(w);
        all.insert(all.end(), codes.begin(), codes.end());
    }
    UsageDoc doc;
    doc.scale = m.spec().scale;
    doc.total_codes = all.size();
    doc.usage = quant::usage_histogram(all, m.spec().codebook_size);
    for (int k = 0; k < m.spec().codebook_size; ++k)
        doc.sorted.emplace_back(k, doc.usage.frequencies[static_cast<size_t>(k)]);
    std::stable_sort(doc.sorted.begin(), doc.sorted.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return doc;
}

// ---------------------------------------------------------------------------
// Conditioning ablations: rerun the conversion pipeline with a degraded
// upper module and compare against the intact pipeline on the same inputs.

enum class AblationVariant { noisy_conditioning, source_singer, no_embeddings };

inline AblationVariant parse_variant(const std::string& s) {
    if (s == "noisy_conditioning") return AblationVariant::noisy_conditioning;
    if (s == "source_singer") return AblationVariant::source_singer;
    if (s == "no_embeddings") return AblationVariant::no_embeddings;
    fail(ErrorCategory::unknown_metric, "unknown ablation variant: " + s);
}

inline const char* variant_name(AblationVariant v) {
    switch (v) {
        case AblationVariant::noisy_conditioning: return "noisy_conditioning";
        case AblationVariant::source_singer: return "source_singer";
        case AblationVariant::no_embeddings: return "no_embeddings";
    }
    return "?";
}

struct AblationItem {
    std::string wav_name;
    std::string source_singer;
    std::string pipeline_target;   // differs from source only for source_singer runs
    double maer_pipeline = 0.0;    // percent, vs the input's own pitch track
    double maer_variant = 0.0;
    double env_corr_pipeline = 0.0;
    double env_corr_variant = 0.0;
    double spec_db_pipeline = 0.0;
    double spec_db_variant = 0.0;
};

struct AblationResult {
    AblationVariant variant = AblationVariant::noisy_conditioning;
    double noise_level = 0.0;
    std::vector<AblationItem> items;
    std::vector<signal::Waveform> pipeline_out;
    std::vector<signal::Waveform> variant_out;
    double mean_maer_pipeline = 0.0, mean_maer_variant = 0.0;
    double mean_env_corr_pipeline = 0.0, mean_env_corr_variant = 0.0;
    double mean_spec_db_pipeline = 0.0, mean_spec_db_variant = 0.0;
};

// The three degradations:
//   noisy_conditioning  - conditioning streams jittered by +-noise_level
//   source_singer       - pipeline converts to another singer, the degraded
//                         run feeds the source identity instead
//   no_embeddings       - upper module sees only the low-resolution channel
template <class T>
AblationResult run_ablation(hier::VqModule<T>& bottom, hier::VqModule<T>& upper,
                            const io::Corpus& corpus, AblationVariant variant,
                            net::GenMode mode, std::uint64_t seed,
                            double noise_level = 0.2) {
    require(!corpus.items.empty(), ErrorCategory::invalid_input, "corpus is empty");
    require(corpus.sample_rate_hz == upper.spec().sample_rate_hz, ErrorCategory::invalid_input,
            "corpus rate does not match the upper module");
    AblationResult res;
    res.variant = variant;
    res.noise_level = (variant == AblationVariant::noisy_conditioning) ? noise_level : 0.0;

    hier::ConditioningMask degraded;  // defaults: all streams on, no noise
    if (variant == AblationVariant::noisy_conditioning) {
        degraded.noise_level = noise_level;
    } else if (variant == AblationVariant::no_embeddings) {
        degraded.use_content = false;
        degraded.use_pitch = false;
        degraded.use_loudness = false;
        degraded.use_singer = false;
    }

    for (std::size_t i = 0; i < corpus.items.size(); ++i) {
        const auto& item = corpus.items[i];
        const std::uint64_t item_seed = seed + 1000 * static_cast<std::uint64_t>(i);

        AblationItem row;
        row.wav_name = item.wav_name;
        row.source_singer = item.singer_id;
        row.pipeline_target = item.singer_id;
        conversion::ConversionRequest pipeline_req;  // pass-through
        if (variant == AblationVariant::source_singer) {
            // Convert to the next registered singer; the degraded run keeps
            // the source identity while everything else stays equal.
            for (std::size_t s = 0; s < corpus.singers.size(); ++s) {
                if (corpus.singers[s] == item.singer_id) {
                    row.pipeline_target = corpus.singers[(s + 1) % corpus.singers.size()];
                    break;
                }
            }
            pipeline_req.target_singer = row.pipeline_target;
        }

        signal::Waveform out_p = conversion::convert(bottom, upper, item.audio, item.singer_id,
                                                     pipeline_req, mode, item_seed);
        conversion::ConversionRequest variant_req;  // source identity throughout
        hier::ConditioningMask* mask =
            (variant == AblationVariant::source_singer) ? nullptr : &degraded;
        signal::Waveform out_v = conversion::convert(bottom, upper, item.audio, item.singer_id,
                                                     variant_req, mode, item_seed, nullptr, mask);

        const signal::PitchTrack ref_f0 = signal::extract_f0(item.audio);
        const auto env_ref = signal::extract_envelope(item.audio).values;
        auto measure = [&](const signal::Waveform& out, double& maer_out, double& corr_out,
                           double& spec_out) {
            const MetricsReport r = maer({ref_f0}, {signal::extract_f0(out)});
            maer_out = r.maer_percent;
            corr_out = envelope_correlation(env_ref, signal::extract_envelope(out).values);
            spec_out = spectral_distance_db(item.audio, out);
        };
        measure(out_p, row.maer_pipeline, row.env_corr_pipeline, row.spec_db_pipeline);
        measure(out_v, row.maer_variant, row.env_corr_variant, row.spec_db_variant);

        res.items.push_back(row);
        res.pipeline_out.push_back(std::move(out_p));
        res.variant_out.push_back(std::move(out_v));
    }

    const double n = static_cast<double>(res.items.size());
    for (const auto& r : res.items) {
        res.mean_maer_pipeline += r.maer_pipeline / n;
        res.mean_maer_variant += r.maer_variant / n;
        res.mean_env_corr_pipeline += r.env_corr_pipeline / n;
        res.mean_env_corr_variant += r.env_corr_variant / n;
        res.mean_spec_db_pipeline += r.spec_db_pipeline / n;
        res.mean_spec_db_variant += r.spec_db_variant / n;
    }
    return res;
}

}  // namespace vqsvc::eval
