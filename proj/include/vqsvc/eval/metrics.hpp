#pragma once

#include <vector>

#include "vqsvc/signal/waveform.hpp"

namespace vqsvc::eval {

// Mean |f0' - f0_rec| in Hz over frames voiced in both tracks.
// Equal lengths required; zero jointly-voiced frames is an error.
double pitch_mae(const signal::PitchTrack& ref, const signal::PitchTrack& rec);

struct MetricsReport {
    double mae_hz = 0.0;
    double maer_percent = 0.0;
    int n_samples = 0;
    std::vector<double> per_sample_mae_hz;
    std::vector<double> per_sample_maer_percent;
};

// Mean absolute error ratio: per sample, the frame-mean of
// |f0' - f0_rec| / f0' over jointly voiced frames; then averaged over
// samples and scaled to percent. mae_hz aggregates the same way.
MetricsReport maer(const std::vector<signal::PitchTrack>& refs,
                   const std::vector<signal::PitchTrack>& recs);

// Pearson correlation over the common prefix length; 0 when either side is
// constant.
double envelope_correlation(const std::vector<double>& a, const std::vector<double>& b);

// Root-mean-square log-magnitude spectral difference in dB, averaged over
// short Hann-windowed frames (length 256, hop 128) of the common duration.
double spectral_distance_db(const signal::Waveform& a, const signal::Waveform& b);

}  // namespace vqsvc::eval
