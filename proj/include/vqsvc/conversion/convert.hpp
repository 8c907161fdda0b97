#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "vqsvc/conversion/dynamics.hpp"
#include "vqsvc/hier/infer.hpp"

namespace vqsvc::conversion {

struct ConversionRequest {
    std::optional<std::string> target_singer;
    double semitone_shift = 0.0;
    DynamicsCurveSpec dynamics;

    bool pass_through() const {
        return !target_singer && semitone_shift == 0.0 &&
               dynamics.mode == DynamicsCurveSpec::Mode::identity;
    }
};

// Features the request produced, for sidecar records and evaluation.
struct ConversionRecord {
    signal::PitchTrack f0;  // after shifting
    signal::Envelope env;   // after the dynamics curve
    std::string singer_id;  // the identity actually used
    double pitch_ratio = 1.0;
    std::optional<double> compress_clamp;  // set in compress mode
};

// Extract features from the source, transform them per the request, and run
// both scales. The same transformed contour conditions both modules.
template <class T>
signal::Waveform convert(hier::VqModule<T>& bottom, hier::VqModule<T>& upper,
                         const signal::Waveform& w, const std::string& source_singer,
                         const ConversionRequest& req, net::GenMode mode, std::uint64_t seed,
                         ConversionRecord* record = nullptr,
                         const hier::ConditioningMask* upper_mask = nullptr,
                         hier::ChainTrace* trace = nullptr) {
    if (req.target_singer) upper.singers().index_of(*req.target_singer);  // fail early

    signal::PitchTrack f0 = signal::extract_f0(w);
    signal::Envelope env = signal::extract_envelope(w);
    f0 = shift_pitch(f0, req.semitone_shift);
    env = apply_dynamics(env, req.dynamics);

    hier::Manipulations manip;
    manip.f0 = f0.f0_hz;
    manip.env = env.values;
    manip.singer_id = req.target_singer ? *req.target_singer : source_singer;

    if (record) {
        record->f0 = f0;
        record->env = env;
        record->singer_id = manip.singer_id;
        record->pitch_ratio = std::pow(2.0, req.semitone_shift / 12.0);
        if (req.dynamics.mode == DynamicsCurveSpec::Mode::compress) {
            const double a_max = req.dynamics.a_max ? *req.dynamics.a_max
                                                    : *std::max_element(env.values.begin(),
                                                                        env.values.end());
            record->compress_clamp = compress_clamp_threshold(req.dynamics.theta, a_max);
        }
    }
    return hier::infer_chain(bottom, upper, w, manip, mode, seed, upper_mask, trace);
}

}  // namespace vqsvc::conversion
