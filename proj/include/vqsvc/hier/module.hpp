#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vqsvc/net/decoder.hpp"
#include "vqsvc/net/encoder.hpp"
#include "vqsvc/net/feature_encoder.hpp"
#include "vqsvc/net/interp.hpp"
#include "vqsvc/net/singer_table.hpp"
#include "vqsvc/nn/seq.hpp"
#include "vqsvc/quantizer/codebook.hpp"
#include "vqsvc/signal/features.hpp"
#include "vqsvc/signal/mulaw.hpp"
#include "vqsvc/signal/resample.hpp"
#include "vqsvc/signal/waveform.hpp"

namespace vqsvc::hier {

using nn::Mat;
using nn::Vec;

// Pitch contours feed the feature encoder as f0 / this constant.
inline constexpr double kPitchNorm = 500.0;

struct ModuleSpec {
    std::string scale;  // "bottom" | "upper"
    int sample_rate_hz = 48000;
    int low_rate_hz = 0;  // rate of the x^low stream; upper module only
    bool uses_low_res_conditioning = false;
    net::EncoderSpec encoder;
    net::DecoderSpec decoder;
    int codebook_size = 320;
    int pitch_dim = 10;
    int loud_dim = 10;
    int singer_dim = 128;
};

// One training example at the module's rate.
struct FrameBundle {
    std::vector<double> samples;      // frame_length values in [-1, 1]
    std::vector<double> f0;           // Hz, 0 = unvoiced
    std::vector<double> env;
    long singer_index = 0;
    std::vector<double> low_channel;  // length frame_length; upper module only
};

// Decoder-side conditioning at the raw-feature stage. Embedding-space
// streams (content, singer) are stored directly; pitch/loudness stay as raw
// tracks so noise injection composes with the feature encoders.
template <class T>
struct ConditioningBundle {
    Mat<T> content;                   // latent_dim x latent steps (quantized)
    std::vector<double> f0;           // Hz
    std::vector<double> env;
    Vec<T> singer;                    // singer_dim
    std::vector<double> low_channel;  // target-length samples; empty if unused
    bool use_pitch = true;
    bool use_loudness = true;
};

// One VQ autoencoder scale: content encoder + codebook + feature encoders +
// singer table + autoregressive decoder, trained independently of the other
// scale.
template <class T>
class VqModule {
public:
    struct StepLosses {
        double total = 0.0;
        double rec = 0.0;
        double codebook = 0.0;
        double commitment = 0.0;
    };

    VqModule() = default;
    VqModule(const ModuleSpec& spec, const std::vector<std::string>& singer_ids)
        : spec_(spec),
          enc_(spec.encoder),
          cb_(spec.encoder.latent_dim, spec.codebook_size),
          pitch_enc_(spec.pitch_dim),
          loud_enc_(spec.loud_dim),
          singers_(singer_ids, spec.singer_dim),
          dec_(spec.decoder, cond_channels(spec)) {
        require(spec.scale == "bottom" || spec.scale == "upper", ErrorCategory::bad_config,
                "module scale must be bottom or upper");
        require(spec.encoder.in_rate_hz == spec.sample_rate_hz, ErrorCategory::bad_config,
                "encoder rate must match module rate");
        require(!spec.uses_low_res_conditioning || spec.low_rate_hz > 0,
                ErrorCategory::bad_config, "upper module needs the low-resolution rate");
    }

    static int cond_channels(const ModuleSpec& s) {
        return s.encoder.latent_dim + s.pitch_dim + s.loud_dim + s.singer_dim +
               (s.uses_low_res_conditioning ? 1 : 0);
    }

    const ModuleSpec& spec() const { return spec_; }
    net::ContentEncoder<T>& encoder() { return enc_; }
    quant::Codebook<T>& codebook() { return cb_; }
    net::SingerTable<T>& singers() { return singers_; }
    const net::SingerTable<T>& singers() const { return singers_; }
    net::Decoder<T>& decoder() { return dec_; }
    bool trained() const { return trained_; }
    void set_trained(bool t) { trained_ = t; }

    void init(Rng& rng) {
        enc_.init(rng);
        cb_.init(rng);
        pitch_enc_.init(rng);
        loud_enc_.init(rng);
        singers_.init(rng);
        dec_.init(rng);
    }

    // Trainable parameters; registration order is the checkpoint layout.
    void collect_params(nn::ParamSet<T>& ps) {
        enc_.register_params(ps, "encoder");
        cb_.register_params(ps, "codebook");
        pitch_enc_.register_params(ps, "pitch_enc");
        loud_enc_.register_params(ps, "loud_enc");
        singers_.register_params(ps, "singers");
        dec_.register_params(ps, "decoder");
    }

    // Parameters plus persistent non-optimized state (normalization stats).
    void collect_state(nn::ParamSet<T>& ps) {
        collect_params(ps);
        enc_.register_state(ps, "encoder");
    }

    // Forward + backward over one batch; gradients accumulate into the
    // registered parameter buffers (caller zeroes and applies them).
    StepLosses train_step_grads(const std::vector<FrameBundle>& batch, double beta) {
        const int b_n = static_cast<int>(batch.size());
        require(b_n >= 1, ErrorCategory::invalid_input, "empty training batch");
        const long t_len = static_cast<long>(batch[0].samples.size());
        const long nf = static_cast<long>(batch[0].f0.size());
        const long ne = static_cast<long>(batch[0].env.size());
        require(t_len >= 1 && nf >= 1 && ne >= 1, ErrorCategory::invalid_input,
                "frame too short for feature extraction");
        const long n = static_cast<long>(b_n) * t_len;

        std::vector<uint8_t> codes(static_cast<size_t>(n));
        Mat<T> x(1, n);
        Mat<T> f0_in(1, static_cast<long>(b_n) * nf);
        Mat<T> env_in(1, static_cast<long>(b_n) * ne);
        Mat<T> singer_cols(spec_.singer_dim, b_n);
        for (int b = 0; b < b_n; ++b) {
            const FrameBundle& it = batch[static_cast<size_t>(b)];
            require(static_cast<long>(it.samples.size()) == t_len &&
                        static_cast<long>(it.f0.size()) == nf &&
                        static_cast<long>(it.env.size()) == ne,
                    ErrorCategory::invalid_input, "ragged training batch");
            for (long t = 0; t < t_len; ++t) {
                const double s = it.samples[static_cast<size_t>(t)];
                codes[static_cast<size_t>(b * t_len + t)] =
                    static_cast<uint8_t>(signal::mu_law_encode_amp(s));
                x(0, b * t_len + t) = static_cast<T>(s);
            }
            for (long i = 0; i < nf; ++i)
                f0_in(0, b * nf + i) = static_cast<T>(it.f0[static_cast<size_t>(i)] / kPitchNorm);
            for (long i = 0; i < ne; ++i)
                env_in(0, b * ne + i) = static_cast<T>(it.env[static_cast<size_t>(i)]);
            singer_cols.col(b) = singers_.lookup(it.singer_index);
        }

        Mat<T> z = enc_.forward(x, b_n, /*train=*/true, /*keep_cache=*/true);
        const long t_lat = z.cols() / b_n;
        auto qr = quant::quantize(cb_, z, beta);
        Mat<T> pe = pitch_enc_.forward(f0_in, b_n, true);
        Mat<T> le = loud_enc_.forward(env_in, b_n, true);

        Mat<T> low;
        if (spec_.uses_low_res_conditioning) {
            low.resize(1, n);
            for (int b = 0; b < b_n; ++b) {
                const FrameBundle& it = batch[static_cast<size_t>(b)];
                require(static_cast<long>(it.low_channel.size()) == t_len,
                        ErrorCategory::invalid_input,
                        "low-resolution conditioning length mismatch");
                for (long t = 0; t < t_len; ++t)
                    low(0, b * t_len + t) = static_cast<T>(it.low_channel[static_cast<size_t>(t)]);
            }
        }

        Mat<T> h = assemble(b_n, t_len, qr.quantized, t_lat, &pe, nf, &le, ne, singer_cols, low);
        Mat<T> logits = dec_.forward_train(codes, h, b_n, true);
        auto [rec, glogits] = net::Decoder<T>::ce_loss(logits, codes);
        Mat<T> gh = dec_.backward_train(glogits);

        const int de = spec_.encoder.latent_dim;
        const int df = spec_.pitch_dim;
        const int da = spec_.loud_dim;
        Mat<T> gzq(de, static_cast<long>(b_n) * t_lat);
        Mat<T> gpe(df, static_cast<long>(b_n) * nf);
        Mat<T> gle(da, static_cast<long>(b_n) * ne);
        for (int b = 0; b < b_n; ++b) {
            const long o = static_cast<long>(b) * t_len;
            gzq.middleCols(b * t_lat, t_lat) =
                net::interpolate_backward(Mat<T>(gh.block(0, o, de, t_len)), t_lat);
            gpe.middleCols(b * nf, nf) =
                net::interpolate_backward(Mat<T>(gh.block(de, o, df, t_len)), nf);
            gle.middleCols(b * ne, ne) =
                net::interpolate_backward(Mat<T>(gh.block(de + df, o, da, t_len)), ne);
            singers_.accumulate_grad(batch[static_cast<size_t>(b)].singer_index,
                                     gh.block(de + df + da, o, spec_.singer_dim, t_len).rowwise().sum());
        }
        pitch_enc_.backward(gpe);
        loud_enc_.backward(gle);
        Mat<T> gz = quant::quantize_backward(cb_, z, qr, gzq, beta);
        enc_.backward(gz, b_n);

        enc_.drop_cache();
        pitch_enc_.drop_cache();
        loud_enc_.drop_cache();
        dec_.drop_cache();

        StepLosses out;
        out.rec = rec;
        out.codebook = qr.codebook_loss;
        out.commitment = qr.commitment_loss;
        out.total = rec + qr.codebook_loss + qr.commitment_loss;
        return out;
    }

    // Encode a waveform into the full conditioning needed to regenerate it.
    ConditioningBundle<T> build_bundle(const signal::Waveform& w, const std::string& singer_id) {
        require(w.sample_rate_hz == spec_.sample_rate_hz, ErrorCategory::invalid_input,
                "waveform rate does not match module rate");
        signal::validate(w);
        ConditioningBundle<T> bundle;
        Mat<T> x(1, static_cast<long>(w.samples.size()));
        for (size_t i = 0; i < w.samples.size(); ++i)
            x(0, static_cast<long>(i)) = static_cast<T>(w.samples[i]);
        Mat<T> z = enc_.forward(x, 1, /*train=*/false);
        bundle.content = quant::quantize(cb_, z, 0.0).quantized;
        bundle.f0 = signal::extract_f0(w).f0_hz;
        bundle.env = signal::extract_envelope(w).values;
        require(!bundle.f0.empty() && !bundle.env.empty(), ErrorCategory::invalid_input,
                "input too short for feature extraction");
        bundle.singer = singers_.lookup(singer_id);
        if (spec_.uses_low_res_conditioning) {
            signal::Waveform down = signal::resample(w, spec_.low_rate_hz);
            signal::Waveform up = signal::resample(down, spec_.sample_rate_hz);
            up.samples.resize(w.samples.size(), 0.0);
            bundle.low_channel = std::move(up.samples);
        }
        return bundle;
    }

    // Codebook indices chosen for a waveform (inference-mode encoder).
    std::vector<int32_t> encode_codes(const signal::Waveform& w) {
        require(w.sample_rate_hz == spec_.sample_rate_hz, ErrorCategory::invalid_input,
                "waveform rate does not match module rate");
        signal::validate(w);
        Mat<T> x(1, static_cast<long>(w.samples.size()));
        for (size_t i = 0; i < w.samples.size(); ++i)
            x(0, static_cast<long>(i)) = static_cast<T>(w.samples[i]);
        Mat<T> z = enc_.forward(x, 1, /*train=*/false);
        return quant::quantize(cb_, z, 0.0).codes;
    }

    // Assemble the decoder conditioning for one bundle at target length.
    Mat<T> conditioning_for(const ConditioningBundle<T>& bundle, long t_len) {
        require(t_len >= 1, ErrorCategory::invalid_input, "target length must be positive");
        require(bundle.content.rows() == spec_.encoder.latent_dim &&
                    bundle.content.cols() >= 1,
                ErrorCategory::invalid_input, "conditioning content missing");
        Mat<T> pe, le;
        Mat<T>* pe_ptr = nullptr;
        Mat<T>* le_ptr = nullptr;
        long nf = 0, ne = 0;
        if (bundle.use_pitch) {
            require(!bundle.f0.empty(), ErrorCategory::invalid_input, "pitch track missing");
            nf = static_cast<long>(bundle.f0.size());
            Mat<T> f0_in(1, nf);
            for (long i = 0; i < nf; ++i)
                f0_in(0, i) = static_cast<T>(bundle.f0[static_cast<size_t>(i)] / kPitchNorm);
            pe = pitch_enc_.forward(f0_in, 1, false);
            pe_ptr = &pe;
        }
        if (bundle.use_loudness) {
            require(!bundle.env.empty(), ErrorCategory::invalid_input, "envelope missing");
            ne = static_cast<long>(bundle.env.size());
            Mat<T> env_in(1, ne);
            for (long i = 0; i < ne; ++i)
                env_in(0, i) = static_cast<T>(bundle.env[static_cast<size_t>(i)]);
            le = loud_enc_.forward(env_in, 1, false);
            le_ptr = &le;
        }
        Mat<T> singer_cols(spec_.singer_dim, 1);
        singer_cols.col(0) = bundle.singer;
        Mat<T> low;
        if (spec_.uses_low_res_conditioning) {
            require(static_cast<long>(bundle.low_channel.size()) == t_len,
                    ErrorCategory::invalid_input,
                    "low-resolution conditioning length mismatch");
            low.resize(1, t_len);
            for (long t = 0; t < t_len; ++t)
                low(0, t) = static_cast<T>(bundle.low_channel[static_cast<size_t>(t)]);
        }
        return assemble(1, t_len, bundle.content, bundle.content.cols(), pe_ptr, nf, le_ptr,
                        ne, singer_cols, low);
    }

    // Autoregressive reconstruction from a bundle. Refuses to run untrained.
    signal::Waveform generate_from(const ConditioningBundle<T>& bundle, long t_len,
                                   net::GenMode mode, Rng& rng) {
        require(trained_, ErrorCategory::untrained_module,
                "module has no trained parameters loaded");
        Mat<T> h = conditioning_for(bundle, t_len);
        std::vector<uint8_t> codes = dec_.generate(h, mode, rng);
        signal::MuLawSequence seq;
        seq.codes = std::move(codes);
        seq.sample_rate_hz = spec_.sample_rate_hz;
        return signal::mu_law_decode(seq);
    }

private:
    // Streams, top to bottom: content, pitch, loudness, singer, x^low.
    // Null pitch/loudness pointers leave those rows zero (masked streams).
    Mat<T> assemble(int b_n, long t_len, const Mat<T>& zq, long t_lat, const Mat<T>* pe,
                    long nf, const Mat<T>* le, long ne, const Mat<T>& singer_cols,
                    const Mat<T>& low) {
        const int de = spec_.encoder.latent_dim;
        const int df = spec_.pitch_dim;
        const int da = spec_.loud_dim;
        const int di = spec_.singer_dim;
        Mat<T> h = Mat<T>::Zero(cond_channels(spec_), static_cast<long>(b_n) * t_len);
        for (int b = 0; b < b_n; ++b) {
            const long o = static_cast<long>(b) * t_len;
            h.block(0, o, de, t_len) =
                net::interpolate_to_length(Mat<T>(zq.middleCols(b * t_lat, t_lat)), t_len);
            if (pe)
                h.block(de, o, df, t_len) =
                    net::interpolate_to_length(Mat<T>(pe->middleCols(b * nf, nf)), t_len);
            if (le)
                h.block(de + df, o, da, t_len) =
                    net::interpolate_to_length(Mat<T>(le->middleCols(b * ne, ne)), t_len);
            h.block(de + df + da, o, di, t_len).colwise() = singer_cols.col(b);
            if (low.size() > 0) h.row(de + df + da + di).segment(o, t_len) = low.row(0).segment(o, t_len);
        }
        return h;
    }

    ModuleSpec spec_;
    net::ContentEncoder<T> enc_;
    quant::Codebook<T> cb_;
    net::FeatureEncoder<T> pitch_enc_;
    net::FeatureEncoder<T> loud_enc_;
    net::SingerTable<T> singers_;
    net::Decoder<T> dec_;
    bool trained_ = false;
};

}  // namespace vqsvc::hier
