#pragma once

#include <string>
#include <vector>

#include "vqsvc/nn/batchnorm.hpp"
#include "vqsvc/nn/conv1d.hpp"
#include "vqsvc/nn/seq.hpp"

namespace vqsvc::net {

using nn::Mat;
using nn::Vec;

struct EncoderSpec {
    int n_blocks = 6;            // halvings; total downsampling 2^n_blocks
    int in_rate_hz = 48000;
    int latent_dim = 512;
    std::vector<int> block_channels;  // one entry per block, each divisible by 4
};

// Waveform -> latent sequence at 1/2^N of the input step rate. Each block
// halves time with a stride-2 convolution and refines with a bottleneck
// residual; a final pointwise layer projects to the latent dimension.
template <class T>
class ContentEncoder {
public:
    ContentEncoder() = default;
    explicit ContentEncoder(const EncoderSpec& spec) : spec_(spec) {
        require(spec.n_blocks >= 1, ErrorCategory::bad_config, "encoder needs at least one block");
        require(static_cast<int>(spec.block_channels.size()) == spec.n_blocks,
                ErrorCategory::bad_config, "encoder needs one channel count per block");
        int in_ch = 1;
        blocks_.reserve(spec.block_channels.size());
        for (const int ch : spec.block_channels) {
            require(ch >= 4 && ch % 4 == 0, ErrorCategory::bad_config,
                    "encoder block channels must be positive multiples of 4");
            blocks_.emplace_back(in_ch, ch);
            in_ch = ch;
        }
        proj_ = nn::Conv1d<T>::pointwise(in_ch, spec.latent_dim);
    }

    const EncoderSpec& spec() const { return spec_; }
    int downsample_factor() const { return 1 << spec_.n_blocks; }

    void init(Rng& rng) {
        for (auto& b : blocks_) b.init(rng);
        proj_.init(rng);
    }

    void register_params(nn::ParamSet<T>& ps, const std::string& prefix) {
        for (size_t i = 0; i < blocks_.size(); ++i)
            blocks_[i].register_params(ps, prefix + ".block" + std::to_string(i));
        proj_.register_params(ps, prefix + ".proj");
    }

    void register_state(nn::ParamSet<T>& ps, const std::string& prefix) {
        for (size_t i = 0; i < blocks_.size(); ++i)
            blocks_[i].register_state(ps, prefix + ".block" + std::to_string(i));
    }

    long latent_steps(long in_steps) const {
        const long f = downsample_factor();
        return (in_steps + f - 1) / f;
    }

    // Samples right-padded with zeros to a multiple of 2^N before the first
    // block; the adopted pad length is visible afterwards.
    long last_pad() const { return last_pad_; }

    // x: 1 x (batch * steps). Returns latent_dim x (batch * steps / 2^N).
    Mat<T> forward(const Mat<T>& x, int batch, bool train, bool keep_cache = false) {
        require(x.cols() % batch == 0, ErrorCategory::internal, "ragged encoder batch");
        const long steps = x.cols() / batch;
        const long f = downsample_factor();
        const long padded = latent_steps(steps) * f;
        last_pad_ = padded - steps;
        Mat<T> h;
        if (last_pad_ == 0) {
            h = x;
        } else {
            h = Mat<T>::Zero(x.rows(), padded * batch);
            for (long b = 0; b < batch; ++b)
                h.middleCols(b * padded, steps) = x.middleCols(b * steps, steps);
        }
        in_steps_cache_ = steps;
        for (auto& blk : blocks_) h = blk.forward(h, batch, train, keep_cache);
        return proj_.forward(h, batch, keep_cache);
    }

    // gy: latent_dim x (batch * latent_steps). Returns 1 x (batch * steps),
    // padding gradients dropped.
    Mat<T> backward(const Mat<T>& gy, int batch) {
        Mat<T> g = proj_.backward(gy);
        for (size_t i = blocks_.size(); i-- > 0;) g = blocks_[i].backward(g);
        if (last_pad_ == 0) return g;
        const long padded = g.cols() / batch;
        const long steps = in_steps_cache_;
        Mat<T> gx(g.rows(), steps * batch);
        for (long b = 0; b < batch; ++b)
            gx.middleCols(b * steps, steps) = g.middleCols(b * padded, steps);
        return gx;
    }

    void drop_cache() {
        for (auto& b : blocks_) b.drop_cache();
        proj_.drop_cache();
    }

private:
    struct Block {
        Block(int in_ch, int ch)
            : down(nn::Conv1d<T>(in_ch, ch, 4, 2, 1, 1, 1)),
              bn_down(ch),
              squeeze(nn::Conv1d<T>::pointwise(ch, ch / 4)),
              bn_squeeze(ch / 4),
              mid(nn::Conv1d<T>::same(ch / 4, ch / 4, 3)),
              bn_mid(ch / 4),
              expand(nn::Conv1d<T>::pointwise(ch / 4, ch)),
              bn_expand(ch) {}

        void init(Rng& rng) {
            down.init(rng);
            squeeze.init(rng);
            mid.init(rng);
            expand.init(rng);
        }

        void register_params(nn::ParamSet<T>& ps, const std::string& p) {
            down.register_params(ps, p + ".down");
            bn_down.register_params(ps, p + ".bn_down");
            squeeze.register_params(ps, p + ".squeeze");
            bn_squeeze.register_params(ps, p + ".bn_squeeze");
            mid.register_params(ps, p + ".mid");
            bn_mid.register_params(ps, p + ".bn_mid");
            expand.register_params(ps, p + ".expand");
            bn_expand.register_params(ps, p + ".bn_expand");
        }

        void register_state(nn::ParamSet<T>& ps, const std::string& p) {
            bn_down.register_state(ps, p + ".bn_down");
            bn_squeeze.register_state(ps, p + ".bn_squeeze");
            bn_mid.register_state(ps, p + ".bn_mid");
            bn_expand.register_state(ps, p + ".bn_expand");
        }

        Mat<T> forward(const Mat<T>& x, int batch, bool train, bool keep) {
            Mat<T> h = bn_down.forward(down.forward(x, batch, keep), train, keep);
            if (keep) mask_down = (h.array() > T(0)).template cast<T>();
            h = h.cwiseMax(T(0));
            Mat<T> r = bn_squeeze.forward(squeeze.forward(h, batch, keep), train, keep);
            if (keep) mask_squeeze = (r.array() > T(0)).template cast<T>();
            r = r.cwiseMax(T(0));
            r = bn_mid.forward(mid.forward(r, batch, keep), train, keep);
            if (keep) mask_mid = (r.array() > T(0)).template cast<T>();
            r = r.cwiseMax(T(0));
            r = bn_expand.forward(expand.forward(r, batch, keep), train, keep);
            Mat<T> y = h + r;
            if (keep) mask_out = (y.array() > T(0)).template cast<T>();
            return y.cwiseMax(T(0));
        }

        Mat<T> backward(const Mat<T>& gy) {
            Mat<T> g = gy.cwiseProduct(mask_out);
            Mat<T> gr = expand.backward(bn_expand.backward(g));
            gr = gr.cwiseProduct(mask_mid);
            gr = mid.backward(bn_mid.backward(gr));
            gr = gr.cwiseProduct(mask_squeeze);
            gr = squeeze.backward(bn_squeeze.backward(gr));
            g += gr;  // residual skip
            g = g.cwiseProduct(mask_down);
            return down.backward(bn_down.backward(g));
        }

        void drop_cache() {
            down.drop_cache();
            squeeze.drop_cache();
            mid.drop_cache();
            expand.drop_cache();
            bn_down.drop_cache();
            bn_squeeze.drop_cache();
            bn_mid.drop_cache();
            bn_expand.drop_cache();
            mask_down.resize(0, 0);
            mask_squeeze.resize(0, 0);
            mask_mid.resize(0, 0);
            mask_out.resize(0, 0);
        }

        nn::Conv1d<T> down;
        nn::BatchNorm1d<T> bn_down;
        nn::Conv1d<T> squeeze;
        nn::BatchNorm1d<T> bn_squeeze;
        nn::Conv1d<T> mid;
        nn::BatchNorm1d<T> bn_mid;
        nn::Conv1d<T> expand;
        nn::BatchNorm1d<T> bn_expand;
        Mat<T> mask_down, mask_squeeze, mask_mid, mask_out;
    };

    EncoderSpec spec_;
    std::vector<Block> blocks_;
    nn::Conv1d<T> proj_;
    long last_pad_ = 0;
    long in_steps_cache_ = 0;
};

}  // namespace vqsvc::net
