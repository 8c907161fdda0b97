#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vqsvc/nn/conv1d.hpp"
#include "vqsvc/nn/seq.hpp"

namespace vqsvc::net {

using nn::Mat;
using nn::Vec;

struct DecoderSpec {
    int n_layers = 30;
    int channels = 64;  // residual/skip width
    int quant_levels = 256;
    std::vector<int> dilation_cycle = {1, 2, 4, 8, 16, 32, 64, 128, 256, 512};
};

enum class GenMode { argmax, sample };

// Autoregressive categorical waveform decoder: embedded previous code runs
// through gated dilated causal convolutions; every gate also receives a
// pointwise projection of the conditioning stream; skip connections feed the
// 256-way output head.
//
// Two execution paths: a batched im2col/GEMM path for training, and a
// fixed-accumulation-order stepwise path used for generation and per-step
// distributions, so that rollout and teacher-forced replay of the same codes
// are bit-identical.
template <class T>
class Decoder {
public:
    // The history before the first sample is silence; its mu-law code seeds
    // the shifted input (mu_law_encode_amp(0) == 128, pinned by test).
    static constexpr int zero_history_code = 128;

    Decoder() = default;
    Decoder(const DecoderSpec& spec, int cond_channels)
        : spec_(spec), cond_ch_(cond_channels) {
        require(spec.n_layers >= 1, ErrorCategory::bad_config, "decoder needs layers");
        require(!spec.dilation_cycle.empty(), ErrorCategory::bad_config,
                "decoder needs a dilation cycle");
        require(spec.quant_levels == 256, ErrorCategory::bad_config,
                "decoder is defined for 256 quantization levels");
        const int r = spec.channels;
        embed_ = Mat<T>::Zero(r, spec.quant_levels);
        gembed_ = Mat<T>::Zero(r, spec.quant_levels);
        dilations_.resize(static_cast<size_t>(spec.n_layers));
        for (int l = 0; l < spec.n_layers; ++l) {
            const int d = spec.dilation_cycle[static_cast<size_t>(l) % spec.dilation_cycle.size()];
            dilations_[static_cast<size_t>(l)] = d;
            gate_.push_back(nn::Conv1d<T>::causal(r, 2 * r, 2, d));
            cond_.push_back(nn::Conv1d<T>::pointwise(cond_ch_, 2 * r));
            res_.push_back(nn::Conv1d<T>::pointwise(r, r));
            skip_.push_back(nn::Conv1d<T>::pointwise(r, r));
        }
        head1_ = nn::Conv1d<T>::pointwise(r, r);
        head2_ = nn::Conv1d<T>::pointwise(r, spec.quant_levels);
        f_cache_.resize(static_cast<size_t>(spec.n_layers));
        g_cache_.resize(static_cast<size_t>(spec.n_layers));
    }

    const DecoderSpec& spec() const { return spec_; }
    int cond_channels() const { return cond_ch_; }

    // Number of past samples that can influence one output step.
    long receptive_field() const {
        long rf = 1;
        for (const int d : dilations_) rf += d;
        return rf;
    }

    void init(Rng& rng) {
        nn::uniform_init(embed_, 0.1, rng);
        for (auto& c : gate_) c.init(rng);
        for (auto& c : cond_) c.init(rng);
        for (auto& c : res_) c.init(rng);
        for (auto& c : skip_) c.init(rng);
        head1_.init(rng);
        head2_.init(rng);
    }

    void register_params(nn::ParamSet<T>& ps, const std::string& prefix) {
        ps.add(prefix + ".embed", embed_, gembed_);
        for (int l = 0; l < spec_.n_layers; ++l) {
            const std::string p = prefix + ".layer" + std::to_string(l);
            gate_[static_cast<size_t>(l)].register_params(ps, p + ".gate");
            cond_[static_cast<size_t>(l)].register_params(ps, p + ".cond");
            res_[static_cast<size_t>(l)].register_params(ps, p + ".res");
            skip_[static_cast<size_t>(l)].register_params(ps, p + ".skip");
        }
        head1_.register_params(ps, prefix + ".head1");
        head2_.register_params(ps, prefix + ".head2");
    }

    // ---- batched training path ----

    // codes: batch sequences of steps mu-law codes, concatenated.
    // h: cond_channels x (batch * steps). Returns logits 256 x (batch * steps).
    Mat<T> forward_train(const std::vector<uint8_t>& codes, const Mat<T>& h, int batch,
                         bool keep_cache = false) {
        const long n = static_cast<long>(codes.size());
        require(h.cols() == n, ErrorCategory::invalid_input,
                "conditioning length does not match target length");
        require(h.rows() == cond_ch_, ErrorCategory::invalid_input,
                "conditioning channel mismatch");
        require(n % batch == 0, ErrorCategory::internal, "ragged decoder batch");
        const long steps = n / batch;
        shift_codes(codes, batch, steps);
        const int r = spec_.channels;
        Mat<T> x(r, n);
        for (long i = 0; i < n; ++i) x.col(i) = embed_.col(shifted_[static_cast<size_t>(i)]);
        Mat<T> skip_sum = Mat<T>::Zero(r, n);
        for (int l = 0; l < spec_.n_layers; ++l) {
            const size_t li = static_cast<size_t>(l);
            Mat<T> a = gate_[li].forward(x, batch, keep_cache);
            a += cond_[li].forward(h, batch, keep_cache);
            Mat<T> f = a.topRows(r).array().tanh().matrix();
            Mat<T> g = ((-a.bottomRows(r).array()).exp() + T(1)).inverse().matrix();
            Mat<T> z = f.cwiseProduct(g);
            if (keep_cache) {
                f_cache_[li] = std::move(f);
                g_cache_[li] = std::move(g);
            }
            skip_sum += skip_[li].forward(z, batch, keep_cache);
            x += res_[li].forward(z, batch, keep_cache);
        }
        if (keep_cache) mask1_ = (skip_sum.array() > T(0)).template cast<T>();
        Mat<T> q1 = skip_sum.cwiseMax(T(0));
        Mat<T> y1 = head1_.forward(q1, batch, keep_cache);
        if (keep_cache) mask2_ = (y1.array() > T(0)).template cast<T>();
        Mat<T> q2 = y1.cwiseMax(T(0));
        return head2_.forward(q2, batch, keep_cache);
    }

    // Mean per-step cross-entropy of the target codes under the logits, plus
    // the matching logits gradient.
    static std::pair<double, Mat<T>> ce_loss(const Mat<T>& logits,
                                             const std::vector<uint8_t>& codes) {
        const long n = logits.cols();
        require(static_cast<long>(codes.size()) == n, ErrorCategory::invalid_input,
                "target length does not match logits");
        Mat<T> glogits(logits.rows(), n);
        double loss = 0.0;
        const T inv_n = static_cast<T>(1.0 / static_cast<double>(n));
        for (long t = 0; t < n; ++t) {
            const T m = logits.col(t).maxCoeff();
            Vec<T> e = (logits.col(t).array() - m).exp();
            const T se = e.sum();
            loss += static_cast<double>(m) + std::log(static_cast<double>(se)) -
                    static_cast<double>(logits(codes[static_cast<size_t>(t)], t));
            glogits.col(t) = e * (inv_n / se);
            glogits(codes[static_cast<size_t>(t)], t) -= inv_n;
        }
        return {loss / static_cast<double>(n), glogits};
    }

    // Backward through the training path. Returns the conditioning gradient
    // (cond_channels x n); parameter gradients accumulate internally.
    Mat<T> backward_train(const Mat<T>& glogits) {
        const long n = glogits.cols();
        const int r = spec_.channels;
        Mat<T> gq2 = head2_.backward(glogits);
        Mat<T> gq1 = head1_.backward(gq2.cwiseProduct(mask2_));
        Mat<T> gskip = gq1.cwiseProduct(mask1_);
        Mat<T> gx = Mat<T>::Zero(r, n);
        Mat<T> gh = Mat<T>::Zero(cond_ch_, n);
        Mat<T> ga(2 * r, n);
        for (int l = spec_.n_layers - 1; l >= 0; --l) {
            const size_t li = static_cast<size_t>(l);
            Mat<T> gz = skip_[li].backward(gskip);
            gz += res_[li].backward(gx);
            const Mat<T>& f = f_cache_[li];
            const Mat<T>& g = g_cache_[li];
            ga.topRows(r) = gz.cwiseProduct(g).cwiseProduct(
                (T(1) - f.array().square()).matrix());
            ga.bottomRows(r) = gz.cwiseProduct(f).cwiseProduct(g).cwiseProduct(
                (T(1) - g.array()).matrix());
            gh += cond_[li].backward(ga);
            gx += gate_[li].backward(ga);
        }
        for (long i = 0; i < n; ++i) gembed_.col(shifted_[static_cast<size_t>(i)]) += gx.col(i);
        return gh;
    }

    void drop_cache() {
        for (auto& c : gate_) c.drop_cache();
        for (auto& c : cond_) c.drop_cache();
        for (auto& c : res_) c.drop_cache();
        for (auto& c : skip_) c.drop_cache();
        head1_.drop_cache();
        head2_.drop_cache();
        for (auto& m : f_cache_) m.resize(0, 0);
        for (auto& m : g_cache_) m.resize(0, 0);
        mask1_.resize(0, 0);
        mask2_.resize(0, 0);
    }

    // ---- stepwise path ----

    // Teacher-forced per-step distributions over the 256 codes, one column
    // per step, each normalized. Single sequence.
    Mat<T> forward_dists(const std::vector<uint8_t>& codes, const Mat<T>& h) {
        const long n = static_cast<long>(codes.size());
        require(h.cols() == n, ErrorCategory::invalid_input,
                "conditioning length does not match target length");
        Gen st = begin_gen(h);
        Mat<T> dists(spec_.quant_levels, n);
        int prev = zero_history_code;
        for (long t = 0; t < n; ++t) {
            const Vec<T>& logits = step_logits(st, prev);
            const T m = logits.maxCoeff();
            Vec<T> e = (logits.array() - m).exp();
            dists.col(t) = e / e.sum();
            prev = codes[static_cast<size_t>(t)];
        }
        return dists;
    }

    // Autoregressive rollout over the full conditioning length.
    std::vector<uint8_t> generate(const Mat<T>& h, GenMode mode, Rng& rng) {
        Gen st = begin_gen(h);
        const long n = h.cols();
        std::vector<uint8_t> out(static_cast<size_t>(n));
        int prev = zero_history_code;
        for (long t = 0; t < n; ++t) {
            const Vec<T>& logits = step_logits(st, prev);
            const int code = mode == GenMode::argmax ? pick_argmax(logits) : pick_sample(logits, rng);
            out[static_cast<size_t>(t)] = static_cast<uint8_t>(code);
            prev = code;
        }
        return out;
    }

    static int pick_argmax(const Vec<T>& logits) {
        int best = 0;
        for (int k = 1; k < logits.rows(); ++k)
            if (logits(k) > logits(best)) best = k;
        return best;
    }

    static int pick_sample(const Vec<T>& logits, Rng& rng) {
        const double m = static_cast<double>(logits.maxCoeff());
        double total = 0.0;
        std::vector<double> w(static_cast<size_t>(logits.rows()));
        for (long k = 0; k < logits.rows(); ++k) {
            w[static_cast<size_t>(k)] = std::exp(static_cast<double>(logits(k)) - m);
            total += w[static_cast<size_t>(k)];
        }
        // 53-bit uniform in [0, 1); explicit construction keeps the draw
        // identical across standard libraries.
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * total;
        double cum = 0.0;
        for (long k = 0; k < logits.rows(); ++k) {
            cum += w[static_cast<size_t>(k)];
            if (u < cum) return static_cast<int>(k);
        }
        return static_cast<int>(logits.rows() - 1);
    }

private:
    struct Gen {
        std::vector<Mat<T>> ring;  // per layer: channels x dilation history of x_l
        Vec<T> x, a, z, tmp, skip_sum, q, logits;
        long t = 0;
    };

    Gen begin_gen(const Mat<T>& h) {
        require(h.rows() == cond_ch_, ErrorCategory::invalid_input,
                "conditioning channel mismatch");
        require(h.cols() >= 1, ErrorCategory::invalid_input, "empty conditioning");
        Gen st;
        const int r = spec_.channels;
        st.ring.reserve(dilations_.size());
        for (const int d : dilations_) st.ring.push_back(Mat<T>::Zero(r, d));
        st.x.resize(r);
        st.a.resize(2 * r);
        st.z.resize(r);
        st.tmp.resize(r);
        st.skip_sum.resize(r);
        st.q.resize(r);
        st.logits.resize(spec_.quant_levels);
        // Conditioning projections for the whole sequence up front; the
        // stepwise loop only reads columns.
        proj_.clear();
        proj_.reserve(cond_.size());
        for (auto& c : cond_) proj_.push_back(c.forward(h, 1, false));
        return st;
    }

    const Vec<T>& step_logits(Gen& st, int prev_code) {
        const int r = spec_.channels;
        st.x = embed_.col(prev_code);
        st.skip_sum.setZero();
        for (size_t l = 0; l < dilations_.size(); ++l) {
            const int d = dilations_[l];
            const long slot = st.t % d;
            const T* taps[2] = {st.ring[l].col(slot).data(), st.x.data()};
            gate_[l].step(taps, st.a);
            st.a += proj_[l].col(st.t);
            for (int c = 0; c < r; ++c) {
                const T f = std::tanh(st.a(c));
                const T g = T(1) / (T(1) + std::exp(-st.a(r + c)));
                st.z(c) = f * g;
            }
            const T* zt[1] = {st.z.data()};
            skip_[l].step(zt, st.tmp);
            st.skip_sum += st.tmp;
            res_[l].step(zt, st.tmp);
            st.ring[l].col(slot) = st.x;
            st.x += st.tmp;
        }
        st.q = st.skip_sum.cwiseMax(T(0));
        const T* qt[1] = {st.q.data()};  // stays valid: same-size assigns below don't reallocate
        head1_.step(qt, st.tmp);
        st.q = st.tmp.cwiseMax(T(0));
        head2_.step(qt, st.logits);
        ++st.t;
        return st.logits;
    }

    void shift_codes(const std::vector<uint8_t>& codes, int batch, long steps) {
        shifted_.resize(codes.size());
        for (int b = 0; b < batch; ++b) {
            const long o = static_cast<long>(b) * steps;
            shifted_[static_cast<size_t>(o)] = zero_history_code;
            for (long t = 1; t < steps; ++t)
                shifted_[static_cast<size_t>(o + t)] = codes[static_cast<size_t>(o + t - 1)];
        }
    }

    DecoderSpec spec_;
    int cond_ch_ = 0;
    std::vector<int> dilations_;
    Mat<T> embed_, gembed_;
    std::vector<nn::Conv1d<T>> gate_, cond_, res_, skip_;
    nn::Conv1d<T> head1_, head2_;

    std::vector<int> shifted_;
    std::vector<Mat<T>> f_cache_, g_cache_;
    Mat<T> mask1_, mask2_;
    std::vector<Mat<T>> proj_;
};

}  // namespace vqsvc::net
