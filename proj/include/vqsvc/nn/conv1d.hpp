#pragma once

#include <cmath>

#include "vqsvc/nn/seq.hpp"

namespace vqsvc::nn {

// 1-D convolution over a sequence batch. Weight layout is
// out_ch x (kernel * in_ch), tap-major, so column (j * in_ch + c) holds the
// weight for tap j, input channel c.
//
// Two execution paths share the weights: the im2col/GEMM path for batched
// training, and step(), a fixed-accumulation-order kernel used wherever
// bitwise agreement between full and incremental evaluation is required
// (autoregressive decoding).
template <class T>
class Conv1d {
public:
    Conv1d() = default;
    Conv1d(int in_ch, int out_ch, int kernel, int stride, int dilation, int pad_left,
           int pad_right)
        : in_ch_(in_ch),
          out_ch_(out_ch),
          kernel_(kernel),
          stride_(stride),
          dilation_(dilation),
          pad_left_(pad_left),
          pad_right_(pad_right) {
        w_ = Mat<T>::Zero(out_ch, kernel * in_ch);
        b_ = Vec<T>::Zero(out_ch);
        gw_ = Mat<T>::Zero(out_ch, kernel * in_ch);
        gb_ = Vec<T>::Zero(out_ch);
    }

    static Conv1d causal(int in_ch, int out_ch, int kernel, int dilation) {
        return Conv1d(in_ch, out_ch, kernel, 1, dilation, (kernel - 1) * dilation, 0);
    }
    static Conv1d same(int in_ch, int out_ch, int kernel, int dilation = 1) {
        const int reach = (kernel - 1) * dilation;
        return Conv1d(in_ch, out_ch, kernel, 1, dilation, reach / 2, reach - reach / 2);
    }
    static Conv1d pointwise(int in_ch, int out_ch) { return Conv1d(in_ch, out_ch, 1, 1, 1, 0, 0); }

    void init(Rng& rng) {
        const double limit = std::sqrt(1.0 / (in_ch_ * kernel_));
        uniform_init(w_, limit, rng);
        uniform_init(b_, limit, rng);
    }

    int in_channels() const { return in_ch_; }
    int out_channels() const { return out_ch_; }
    int kernel() const { return kernel_; }
    int dilation() const { return dilation_; }

    int out_steps(int in_steps) const {
        const int reach = (kernel_ - 1) * dilation_ + 1;
        return (in_steps + pad_left_ + pad_right_ - reach) / stride_ + 1;
    }

    void register_params(ParamSet<T>& ps, const std::string& prefix) {
        ps.add(prefix + ".w", w_, gw_);
        ps.add(prefix + ".b", b_, gb_);
    }

    // x: in_ch x (batch * in_steps). Returns out_ch x (batch * out_steps).
    Mat<T> forward(const Mat<T>& x, int batch, bool keep_cache = false) {
        const int in_steps = static_cast<int>(x.cols()) / batch;
        const int t_out = out_steps(in_steps);
        Mat<T> col = im2col(x, batch, in_steps, t_out);
        Mat<T> y = w_ * col;
        y.colwise() += b_;
        if (keep_cache) {
            col_cache_ = std::move(col);
            batch_cache_ = batch;
            in_steps_cache_ = in_steps;
        }
        return y;
    }

    // gy: out_ch x (batch * out_steps). Accumulates gw/gb, returns gx.
    Mat<T> backward(const Mat<T>& gy) {
        gw_.noalias() += gy * col_cache_.transpose();
        gb_.noalias() += gy.rowwise().sum();
        Mat<T> gcol = w_.transpose() * gy;
        return col2im(gcol, batch_cache_, in_steps_cache_,
                      static_cast<int>(gy.cols()) / batch_cache_);
    }

    void drop_cache() { col_cache_.resize(0, 0); }

    // Incremental evaluation for one output step. taps[j] points at the
    // input column for tap j (in_ch values), or nullptr for zero history.
    // Accumulation order (bias, then taps in order, channels in order) is
    // fixed so repeated evaluation is bit-stable.
    void step(const T* const* taps, Vec<T>& out) const {
        out = b_;
        for (int j = 0; j < kernel_; ++j) {
            const T* in = taps[j];
            if (!in) continue;
            const int base = j * in_ch_;
            for (int c = 0; c < in_ch_; ++c) out.noalias() += w_.col(base + c) * in[c];
        }
    }

    Mat<T>& weight() { return w_; }
    Vec<T>& bias() { return b_; }
    const Mat<T>& weight() const { return w_; }
    const Vec<T>& bias() const { return b_; }
    Mat<T>& weight_grad() { return gw_; }
    Vec<T>& bias_grad() { return gb_; }

private:
    Mat<T> im2col(const Mat<T>& x, int batch, int in_steps, int t_out) const {
        Mat<T> col = Mat<T>::Zero(static_cast<long>(kernel_) * in_ch_,
                                  static_cast<long>(batch) * t_out);
        for (int b = 0; b < batch; ++b) {
            const long x0 = static_cast<long>(b) * in_steps;
            const long c0 = static_cast<long>(b) * t_out;
            for (int j = 0; j < kernel_; ++j) {
                const long row0 = static_cast<long>(j) * in_ch_;
                if (stride_ == 1) {
                    // Valid t range for this tap is contiguous; block copy.
                    const int off = j * dilation_ - pad_left_;
                    const int t_lo = std::max(0, -off);
                    const int t_hi = std::min(t_out, in_steps - off);
                    if (t_hi > t_lo) {
                        col.block(row0, c0 + t_lo, in_ch_, t_hi - t_lo) =
                            x.block(0, x0 + t_lo + off, in_ch_, t_hi - t_lo);
                    }
                } else {
                    for (int t = 0; t < t_out; ++t) {
                        const int src = t * stride_ - pad_left_ + j * dilation_;
                        if (src >= 0 && src < in_steps) col.col(c0 + t).segment(row0, in_ch_) = x.col(x0 + src);
                    }
                }
            }
        }
        return col;
    }

    Mat<T> col2im(const Mat<T>& gcol, int batch, int in_steps, int t_out) const {
        Mat<T> gx = Mat<T>::Zero(in_ch_, static_cast<long>(batch) * in_steps);
        for (int b = 0; b < batch; ++b) {
            const long x0 = static_cast<long>(b) * in_steps;
            const long c0 = static_cast<long>(b) * t_out;
            for (int j = 0; j < kernel_; ++j) {
                const long row0 = static_cast<long>(j) * in_ch_;
                if (stride_ == 1) {
                    const int off = j * dilation_ - pad_left_;
                    const int t_lo = std::max(0, -off);
                    const int t_hi = std::min(t_out, in_steps - off);
                    if (t_hi > t_lo) {
                        gx.block(0, x0 + t_lo + off, in_ch_, t_hi - t_lo) +=
                            gcol.block(row0, c0 + t_lo, in_ch_, t_hi - t_lo);
                    }
                } else {
                    for (int t = 0; t < t_out; ++t) {
                        const int src = t * stride_ - pad_left_ + j * dilation_;
                        if (src >= 0 && src < in_steps)
                            gx.col(x0 + src) += gcol.col(c0 + t).segment(row0, in_ch_);
                    }
                }
            }
        }
        return gx;
    }

    int in_ch_ = 0, out_ch_ = 0, kernel_ = 1, stride_ = 1, dilation_ = 1;
    int pad_left_ = 0, pad_right_ = 0;
    Mat<T> w_, gw_;
    Vec<T> b_, gb_;

    Mat<T> col_cache_;
    int batch_cache_ = 0;
    int in_steps_cache_ = 0;
};

}  // namespace vqsvc::nn
