#include "vqsvc/signal/synth.hpp"

#include <algorithm>
#include <cmath>

namespace vqsvc::signal {

namespace {

double track_value(const std::vector<double>& v, double hop_s, double t) {
    if (v.empty()) return 0.0;
    const double pos = t / hop_s;
    if (pos <= 0.0) return v.front();
    const auto last = static_cast<double>(v.size() - 1);
    if (pos >= last) return v.back();
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return v[i] * (1.0 - frac) + v[i + 1] * frac;
}

}  // namespace

Waveform synth_tone(const PitchTrack& f0, const Envelope& env, const Timbre& timbre,
                    int sample_rate_hz) {
    require(sample_rate_hz > 0, ErrorCategory::invalid_input, "sample rate must be positive");
    require(!f0.f0_hz.empty() && !env.values.empty(), ErrorCategory::invalid_input,
            "contour and envelope must be nonempty");
    require(!timbre.harmonic_amps.empty(), ErrorCategory::invalid_input, "timbre is empty");

    const double dur_f0 = static_cast<double>(f0.f0_hz.size() - 1) * f0.hop_s;
    const double dur_env = static_cast<double>(env.values.size() - 1) * env.hop_s;
    require(std::abs(dur_f0 - dur_env) <= std::max(f0.hop_s, env.hop_s) + 1e-9,
            ErrorCategory::invalid_input, "contour and envelope cover different durations");

    double norm = 0.0;
    for (double a : timbre.harmonic_amps) norm += std::abs(a);
    require(norm > 0.0, ErrorCategory::invalid_input, "timbre has zero energy");

    const double dur = std::min(dur_f0, dur_env);
    const long n = std::lround(dur * sample_rate_hz);  // samples cover [0, dur)
    const double nyquist = 0.5 * sample_rate_hz;

    Waveform out;
    out.sample_rate_hz = sample_rate_hz;
    out.samples.resize(static_cast<std::size_t>(n));

    double phase = 0.0;
    for (long i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sample_rate_hz;
        const double f = track_value(f0.f0_hz, f0.hop_s, t);
        const double a = track_value(env.values, env.hop_s, t);
        double s = 0.0;
        if (f > 0.0) {
            phase += 2.0 * M_PI * f / sample_rate_hz;
            if (phase > 2.0 * M_PI) phase -= 2.0 * M_PI;
            for (std::size_t h = 0; h < timbre.harmonic_amps.size(); ++h) {
                const double fh = f * static_cast<double>(h + 1);
                if (fh >= nyquist) break;  // drop harmonics above Nyquist
                s += timbre.harmonic_amps[h] / norm * std::sin(static_cast<double>(h + 1) * phase);
            }
        }
        out.samples[static_cast<std::size_t>(i)] = std::clamp(a * s, -1.0, 1.0);
    }
    return out;
}

SongScore generate_song(const SongParams& p, Rng& rng) {
    require(p.duration_s > 0, ErrorCategory::invalid_input, "duration must be positive");
    std::uniform_int_distribution<int> n_notes_dist(p.notes_min, p.notes_max);
    std::uniform_int_distribution<int> midi_dist(p.midi_min, p.midi_max);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const int n_notes = n_notes_dist(rng);
    std::vector<double> note_hz(static_cast<std::size_t>(n_notes));
    int prev_midi = -1;
    for (auto& hz : note_hz) {
        int m = midi_dist(rng);
        if (m == prev_midi) m = (m < p.midi_max) ? m + 1 : m - 1;  // force note changes
        prev_midi = m;
        hz = 440.0 * std::pow(2.0, (m - 69) / 12.0);
    }

    const double note_dur = p.duration_s / n_notes;
    const double lfo_hz = 0.4 + 0.5 * unit(rng);
    const double lfo_phase = 2.0 * M_PI * unit(rng);
    const bool vibrato = p.vibrato && unit(rng) < 0.75;

    SongScore song;
    song.f0.hop_s = p.f0_hop_s;
    song.envelope.hop_s = p.env_hop_s;
    song.envelope.window_s = p.env_window_s;

    const long n_f0 = std::lround(p.duration_s / p.f0_hop_s) + 1;
    song.f0.f0_hz.resize(static_cast<std::size_t>(n_f0));
    for (long i = 0; i < n_f0; ++i) {
        const double t = static_cast<double>(i) * p.f0_hop_s;
        const double pos = std::min(t / note_dur, static_cast<double>(n_notes) - 1e-9);
        const auto idx = static_cast<std::size_t>(pos);
        double hz = note_hz[idx];
        const double into = (pos - static_cast<double>(idx)) * note_dur;
        if (idx + 1 < note_hz.size() && into > note_dur - p.glide_s) {
            const double a = (into - (note_dur - p.glide_s)) / p.glide_s;
            hz = hz * std::pow(note_hz[idx + 1] / hz, a);  // glide in log frequency
        }
        if (vibrato)
            hz *= std::pow(2.0, p.vibrato_semitones / 12.0 * std::sin(2.0 * M_PI * p.vibrato_hz * t));
        song.f0.f0_hz[static_cast<std::size_t>(i)] = hz;
    }

    const long n_env = std::lround(p.duration_s / p.env_hop_s) + 1;
    song.envelope.values.resize(static_cast<std::size_t>(n_env));
    for (long i = 0; i < n_env; ++i) {
        const double t = static_cast<double>(i) * p.env_hop_s;
        const double lfo = 0.5 + 0.5 * std::sin(2.0 * M_PI * lfo_hz * t + lfo_phase);
        song.envelope.values[static_cast<std::size_t>(i)] = p.env_floor + p.env_swing * lfo;
    }
    return song;
}

const std::vector<Timbre>& builtin_singer_timbres() {
    static const std::vector<Timbre> timbres = {
        {{1.00, 0.30, 0.10, 0.05, 0.02}},              // dark, fundamental-heavy
        {{1.00, 0.70, 0.50, 0.35, 0.25, 0.15, 0.08}},  // bright, slow rolloff
        {{1.00, 0.15, 0.45, 0.10, 0.22, 0.05}},        // odd-harmonic emphasis
        {{0.80, 1.00, 0.40, 0.30, 0.12, 0.05}},        // strong second partial
    };
    return timbres;
}

}  // namespace vqsvc::signal
