#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "vqsvc/common.hpp"

namespace vqsvc::nn {

// A sequence batch is channels x (batch * steps); sequence b occupies the
// column block [b * steps, (b + 1) * steps). All sequences in a batch share
// one length.
template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Named view of one parameter tensor and its gradient accumulator. The name
// doubles as the checkpoint key.
template <class T>
struct ParamRef {
    std::string name;
    T* value = nullptr;
    T* grad = nullptr;
    long rows = 0;
    long cols = 0;

    long size() const { return rows * cols; }
};

template <class T>
class ParamSet {
public:
    void add(const std::string& name, Mat<T>& value, Mat<T>& grad) {
        refs_.push_back({name, value.data(), grad.data(), value.rows(), value.cols()});
    }
    void add(const std::string& name, Vec<T>& value, Vec<T>& grad) {
        refs_.push_back({name, value.data(), grad.data(), value.rows(), 1});
    }
    // Non-optimized state (e.g. normalization running stats): persisted in
    // checkpoints but skipped by gradient handling.
    void add_state(const std::string& name, Mat<T>& value) {
        refs_.push_back({name, value.data(), nullptr, value.rows(), value.cols()});
    }
    void add_state(const std::string& name, Vec<T>& value) {
        refs_.push_back({name, value.data(), nullptr, value.rows(), 1});
    }

    const std::vector<ParamRef<T>>& refs() const { return refs_; }

    long total_size() const {
        long n = 0;
        for (const auto& r : refs_) n += r.size();
        return n;
    }

    void zero_grads() {
        for (auto& r : refs_)
            if (r.grad) std::fill(r.grad, r.grad + r.size(), T(0));
    }

    const ParamRef<T>* find(const std::string& name) const {
        for (const auto& r : refs_)
            if (r.name == name) return &r;
        return nullptr;
    }

private:
    std::vector<ParamRef<T>> refs_;
};

// Uniform init in [-limit, limit]; drawn in double so float and double
// instantiations see the same stream.
template <class T>
void uniform_init(Mat<T>& m, double limit, Rng& rng) {
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (long c = 0; c < m.cols(); ++c)
        for (long r = 0; r < m.rows(); ++r) m(r, c) = static_cast<T>(dist(rng));
}

template <class T>
void uniform_init(Vec<T>& v, double limit, Rng& rng) {
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (long r = 0; r < v.rows(); ++r) v(r) = static_cast<T>(dist(rng));
}

}  // namespace vqsvc::nn
