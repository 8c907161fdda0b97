#pragma once

#include <cmath>
#include <vector>

#include "vqsvc/common.hpp"
#include "vqsvc/nn/seq.hpp"

namespace vqsvc::nn {

// Rescales all gradients in-place so their joint L2 norm is at most max_norm.
// Returns the pre-clip norm.
template <typename T>
double clip_global_norm(ParamSet<T>& ps, double max_norm) {
    double sq = 0.0;
    for (const auto& r : ps.refs()) {
        if (!r.grad) continue;
        for (long i = 0; i < r.size(); ++i) {
            const double g = static_cast<double>(r.grad[i]);
            sq += g * g;
        }
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const T scale = static_cast<T>(max_norm / norm);
        for (const auto& r : ps.refs()) {
            if (!r.grad) continue;
            for (long i = 0; i < r.size(); ++i) r.grad[i] *= scale;
        }
    }
    return norm;
}

template <typename T>
class Adam {
public:
    struct Config {
        double lr = 2e-4;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
    };

    Adam() = default;
    explicit Adam(Config cfg) : cfg_(cfg) {}

    // Moment buffers are lazily sized to the first param set seen; the layout
    // must stay fixed afterwards (same modules registered in the same order).
    void update(ParamSet<T>& ps) {
        const long n = ps.total_size();
        if (m_.empty()) {
            m_.assign(static_cast<size_t>(n), T(0));
            v_.assign(static_cast<size_t>(n), T(0));
        }
        require(static_cast<long>(m_.size()) == n, ErrorCategory::internal,
                "optimizer state size mismatch");
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        const T b1 = static_cast<T>(cfg_.beta1);
        const T b2 = static_cast<T>(cfg_.beta2);
        const T one_m_b1 = static_cast<T>(1.0 - cfg_.beta1);
        const T one_m_b2 = static_cast<T>(1.0 - cfg_.beta2);
        const T step = static_cast<T>(cfg_.lr * std::sqrt(bc2) / bc1);
        const T eps = static_cast<T>(cfg_.eps);
        long off = 0;
        for (const auto& r : ps.refs()) {
            if (!r.grad) continue;
            for (long i = 0; i < r.size(); ++i) {
                const T g = r.grad[i];
                T& m = m_[static_cast<size_t>(off + i)];
                T& v = v_[static_cast<size_t>(off + i)];
                m = b1 * m + one_m_b1 * g;
                v = b2 * v + one_m_b2 * g * g;
                r.value[i] -= step * m / (std::sqrt(v) + eps);
            }
            off += r.size();
        }
    }

    const Config& config() const { return cfg_; }
    void set_lr(double lr) { cfg_.lr = lr; }
    long step_count() const { return t_; }
    std::vector<T>& moment1() { return m_; }
    std::vector<T>& moment2() { return v_; }
    void set_step_count(long t) { t_ = t; }

private:
    Config cfg_;
    long t_ = 0;
    std::vector<T> m_, v_;
};

}  // namespace vqsvc::nn
