#pragma once

#include <cmath>

#include "vqsvc/nn/seq.hpp"

namespace vqsvc::nn {

// Per-channel batch normalization over all columns (batch * time).
// Training mode uses batch statistics and updates running estimates;
// eval mode applies the running estimates.
template <class T>
class BatchNorm1d {
public:
    BatchNorm1d() = default;
    explicit BatchNorm1d(int channels) : channels_(channels) {
        gamma_ = Vec<T>::Ones(channels);
        beta_ = Vec<T>::Zero(channels);
        ggamma_ = Vec<T>::Zero(channels);
        gbeta_ = Vec<T>::Zero(channels);
        running_mean_ = Vec<T>::Zero(channels);
        running_var_ = Vec<T>::Ones(channels);
    }

    void register_params(ParamSet<T>& ps, const std::string& prefix) {
        ps.add(prefix + ".gamma", gamma_, ggamma_);
        ps.add(prefix + ".beta", beta_, gbeta_);
    }

    // Running stats are state, not optimized parameters; checkpoints persist
    // them through this registry.
    void register_state(ParamSet<T>& ps, const std::string& prefix) {
        ps.add_state(prefix + ".running_mean", running_mean_);
        ps.add_state(prefix + ".running_var", running_var_);
    }

    Mat<T> forward(const Mat<T>& x, bool train, bool keep_cache = false) {
        const long n = x.cols();
        Mat<T> y(x.rows(), n);
        if (train) {
            Vec<T> mean = x.rowwise().mean();
            Vec<T> var = Vec<T>::Zero(channels_);
            for (long c = 0; c < n; ++c) {
                Vec<T> d = x.col(c) - mean;
                var.noalias() += d.cwiseProduct(d);
            }
            var /= static_cast<T>(n);
            inv_std_ = (var.array() + eps_).rsqrt().matrix();
            if (keep_cache) xhat_.resize(x.rows(), n);
            for (long c = 0; c < n; ++c) {
                Vec<T> xh = (x.col(c) - mean).cwiseProduct(inv_std_);
                if (keep_cache) xhat_.col(c) = xh;
                y.col(c) = gamma_.cwiseProduct(xh) + beta_;
            }
            const T unbias = n > 1 ? static_cast<T>(n) / static_cast<T>(n - 1) : T(1);
            running_mean_ = (T(1) - momentum_) * running_mean_ + momentum_ * mean;
            running_var_ = (T(1) - momentum_) * running_var_ + momentum_ * (var * unbias);
        } else {
            Vec<T> inv = (running_var_.array() + eps_).rsqrt().matrix();
            for (long c = 0; c < n; ++c)
                y.col(c) = gamma_.cwiseProduct((x.col(c) - running_mean_).cwiseProduct(inv)) + beta_;
        }
        return y;
    }

    Mat<T> backward(const Mat<T>& gy) {
        const long n = gy.cols();
        Vec<T> sum_gy = gy.rowwise().sum();
        Vec<T> sum_gy_xhat = Vec<T>::Zero(channels_);
        for (long c = 0; c < n; ++c) sum_gy_xhat.noalias() += gy.col(c).cwiseProduct(xhat_.col(c));
        gbeta_.noalias() += sum_gy;
        ggamma_.noalias() += sum_gy_xhat;

        Mat<T> gx(gy.rows(), n);
        const Vec<T> scale = gamma_.cwiseProduct(inv_std_) / static_cast<T>(n);
        for (long c = 0; c < n; ++c) {
            gx.col(c) = scale.cwiseProduct(static_cast<T>(n) * gy.col(c) - sum_gy -
                                           xhat_.col(c).cwiseProduct(sum_gy_xhat));
        }
        return gx;
    }

    void drop_cache() { xhat_.resize(0, 0); }

private:
    int channels_ = 0;
    T momentum_ = T(0.1);
    T eps_ = T(1e-5);
    Vec<T> gamma_, beta_, ggamma_, gbeta_;
    Vec<T> running_mean_, running_var_;
    Vec<T> inv_std_;
    Mat<T> xhat_;
};

}  // namespace vqsvc::nn
