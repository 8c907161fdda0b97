#pragma once

#include <vector>

#include "vqsvc/common.hpp"
#include "vqsvc/signal/waveform.hpp"

namespace vqsvc::signal {

// Relative harmonic amplitudes; normalized to unit absolute sum at synthesis
// time so the output peak stays within the envelope.
struct Timbre {
    std::vector<double> harmonic_amps;
};

// Additive harmonic synthesis with phase-continuous frequency interpolation.
// Harmonics that would cross Nyquist are dropped. Contour and envelope must
// span the same duration (within one hop).
Waveform synth_tone(const PitchTrack& f0, const Envelope& env, const Timbre& timbre,
                    int sample_rate_hz);

// Synthetic song: piecewise-constant semitone-quantized pitch with short
// glides, optional vibrato, and a slow loudness swell.
struct SongParams {
    double duration_s = 2.0;
    int notes_min = 4;
    int notes_max = 7;
    int midi_min = 52;   // ~165 Hz
    int midi_max = 63;   // ~311 Hz
    double glide_s = 0.02;
    bool vibrato = true;
    double vibrato_semitones = 0.3;
    double vibrato_hz = 5.5;
    double env_floor = 0.15;
    double env_swing = 0.65;
    double f0_hop_s = 0.005;
    double env_hop_s = 0.020;
    double env_window_s = 0.040;
};

struct SongScore {
    PitchTrack f0;
    Envelope envelope;
};

SongScore generate_song(const SongParams& params, Rng& rng);

// Fixed harmonic profiles standing in for distinct voices.
const std::vector<Timbre>& builtin_singer_timbres();

}  // namespace vqsvc::signal
