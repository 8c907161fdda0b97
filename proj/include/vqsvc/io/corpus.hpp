#pragma once

#include <string>
#include <vector>

#include "vqsvc/signal/synth.hpp"
#include "vqsvc/signal/waveform.hpp"

namespace vqsvc::io {

struct CorpusItem {
    std::string wav_name;
    std::string singer_id;
    signal::Waveform audio;
    // Ground truth from synthesis, not re-extracted.
    signal::PitchTrack gt_f0;
    signal::Envelope gt_env;
};

struct Corpus {
    int sample_rate_hz = 0;
    std::vector<std::string> singers;
    std::vector<CorpusItem> items;
};

struct SynthDataParams {
    int n_singers = 4;
    int n_songs = 4;  // per singer
    int sample_rate_hz = 48000;
    std::uint64_t seed = 1234;
    signal::SongParams song;
};

// Writes WAVs + per-file ground-truth sidecars + manifest.json into dir.
// Refuses a non-empty directory unless force is set. Deterministic per seed.
void write_synthetic_corpus(const std::string& dir, const SynthDataParams& params, bool force);

Corpus load_corpus(const std::string& dir);

}  // namespace vqsvc::io
