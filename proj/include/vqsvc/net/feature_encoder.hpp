#pragma once

#include <array>
#include <string>

#include "vqsvc/nn/conv1d.hpp"
#include "vqsvc/nn/seq.hpp"

namespace vqsvc::net {

using nn::Mat;
using nn::Vec;

// Maps a scalar track (pitch or loudness, one channel) to per-step
// embeddings: three kernel-3 convolutions with dilations 1, 2, 4, each
// followed by ReLU. Length-preserving via symmetric zero padding.
template <class T>
class FeatureEncoder {
public:
    FeatureEncoder() = default;
    explicit FeatureEncoder(int out_dim) : out_dim_(out_dim) {
        convs_[0] = nn::Conv1d<T>::same(1, out_dim, 3, 1);
        convs_[1] = nn::Conv1d<T>::same(out_dim, out_dim, 3, 2);
        convs_[2] = nn::Conv1d<T>::same(out_dim, out_dim, 3, 4);
    }

    void init(Rng& rng) {
        for (auto& c : convs_) c.init(rng);
    }

    int out_dim() const { return out_dim_; }

    // Frames outside this half-width of an input change keep their embedding:
    // total reach (kernel-1)/2 * (1+2+4) = 7 on each side.
    static constexpr int receptive_half_width() { return 7; }

    void register_params(nn::ParamSet<T>& ps, const std::string& prefix) {
        for (size_t i = 0; i < convs_.size(); ++i)
            convs_[i].register_params(ps, prefix + ".conv" + std::to_string(i));
    }

    // x: 1 x (batch * steps) scalar track. Returns out_dim x (batch * steps).
    Mat<T> forward(const Mat<T>& x, int batch, bool keep_cache = false) {
        Mat<T> h = x;
        for (size_t i = 0; i < convs_.size(); ++i) {
            h = convs_[i].forward(h, batch, keep_cache);
            if (keep_cache) mask_[i] = (h.array() > T(0)).template cast<T>();
            h = h.cwiseMax(T(0));
        }
        return h;
    }

    Mat<T> backward(const Mat<T>& gy) {
        Mat<T> g = gy;
        for (size_t i = convs_.size(); i-- > 0;) {
            g = g.cwiseProduct(mask_[i]);
            g = convs_[i].backward(g);
        }
        return g;
    }

    void drop_cache() {
        for (auto& c : convs_) c.drop_cache();
        for (auto& m : mask_) m.resize(0, 0);
    }

private:
    int out_dim_ = 0;
    std::array<nn::Conv1d<T>, 3> convs_;
    std::array<Mat<T>, 3> mask_;
};

}  // namespace vqsvc::net
