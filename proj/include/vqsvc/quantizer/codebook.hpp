#pragma once

#include <cstdint>
#include <vector>

#include "vqsvc/common.hpp"
#include "vqsvc/nn/seq.hpp"

namespace vqsvc::quant {

using nn::Mat;
using nn::Vec;

template <typename T>
struct QuantizationResult {
    std::vector<int32_t> codes;  // one code per column of z
    Mat<T> quantized;            // embeddings gathered by code, same shape as z
    double codebook_loss = 0.0;
    double commitment_loss = 0.0;
};

// K learnable embedding vectors of dimension dim, stored one per column.
template <typename T>
class Codebook {
public:
    Codebook() = default;
    Codebook(long dim, long count) {
        require(dim >= 1 && count >= 1, ErrorCategory::bad_config,
                "codebook needs positive dim and count");
        e_ = Mat<T>::Zero(dim, count);
        ge_ = Mat<T>::Zero(dim, count);
    }

    void init(Rng& rng) {
        // Uniform in [-1/K, 1/K].
        nn::uniform_init(e_, 1.0 / static_cast<double>(count()), rng);
    }

    long dim() const { return e_.rows(); }
    long count() const { return e_.cols(); }
    Mat<T>& embeddings() { return e_; }
    const Mat<T>& embeddings() const { return e_; }
    Mat<T>& grad() { return ge_; }

    void register_params(nn::ParamSet<T>& ps, const std::string& prefix) {
        ps.add(prefix + ".embeddings", e_, ge_);
    }

    // Index of the nearest embedding by squared distance; ties go to the
    // smallest index. Direct scan so results match a brute-force oracle
    // bit-for-bit.
    long nearest(const T* v) const {
        long best = 0;
        T best_d = (e_.col(0) - Eigen::Map<const Vec<T>>(v, dim())).squaredNorm();
        for (long k = 1; k < count(); ++k) {
            const T d = (e_.col(k) - Eigen::Map<const Vec<T>>(v, dim())).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        return best;
    }

private:
    Mat<T> e_, ge_;
};

template <typename T>
long nearest_code(const Codebook<T>& cb, const Vec<T>& v) {
    require(v.rows() == cb.dim(), ErrorCategory::invalid_input,
            "query dimension does not match codebook");
    return cb.nearest(v.data());
}

// Snap each column of z to its nearest embedding. codebook_loss and
// commitment_loss are per-column means of the squared distances; the
// commitment term carries the beta factor already.
template <typename T>
QuantizationResult<T> quantize(const Codebook<T>& cb, const Mat<T>& z, double beta) {
    require(z.rows() == cb.dim(), ErrorCategory::invalid_input,
            "latent dimension does not match codebook");
    require(z.cols() >= 1, ErrorCategory::invalid_input, "empty latent sequence");
    require(beta >= 0.0, ErrorCategory::bad_config, "beta must be nonnegative");
    QuantizationResult<T> r;
    const long n = z.cols();
    r.codes.resize(static_cast<size_t>(n));
    r.quantized.resize(z.rows(), n);
    double sq = 0.0;
    for (long t = 0; t < n; ++t) {
        const long k = cb.nearest(z.col(t).data());
        r.codes[static_cast<size_t>(t)] = static_cast<int32_t>(k);
        r.quantized.col(t) = cb.embeddings().col(k);
        sq += static_cast<double>((z.col(t) - r.quantized.col(t)).squaredNorm());
    }
    const double mean_sq = sq / static_cast<double>(n);
    r.codebook_loss = mean_sq;
    r.commitment_loss = beta * mean_sq;
    return r;
}

// Gradients for the quantization step during training.
//   gy: upstream gradient w.r.t. quantized (reconstruction path).
//   Returns gradient w.r.t. z: straight-through copy of gy plus the
//   commitment term beta * 2 * (z - z_q) / n.
//   Accumulates the codebook-loss gradient 2 * (e_k - z_t) / n into cb.grad().
template <typename T>
Mat<T> quantize_backward(Codebook<T>& cb, const Mat<T>& z,
                         const QuantizationResult<T>& r, const Mat<T>& gy,
                         double beta) {
    const long n = z.cols();
    require(gy.rows() == z.rows() && gy.cols() == n, ErrorCategory::internal,
            "quantize_backward shape mismatch");
    const T inv_n = static_cast<T>(1.0 / static_cast<double>(n));
    const T cscale = static_cast<T>(2.0 * beta) * inv_n;
    const T escale = static_cast<T>(2.0) * inv_n;
    Mat<T> gz = gy;
    for (long t = 0; t < n; ++t) {
        const long k = r.codes[static_cast<size_t>(t)];
        gz.col(t) += cscale * (z.col(t) - r.quantized.col(t));
        cb.grad().col(k) += escale * (cb.embeddings().col(k) - z.col(t));
    }
    return gz;
}

struct UsageReport {
    std::vector<double> frequencies;  // sums to 1
    int used_count = 0;
};

inline UsageReport usage_histogram(const std::vector<int32_t>& codes, long k) {
    require(k >= 1, ErrorCategory::bad_config, "histogram needs K >= 1");
    require(!codes.empty(), ErrorCategory::invalid_input,
            "cannot build a histogram from an empty code sequence");
    std::vector<long> counts(static_cast<size_t>(k), 0);
    for (const int32_t c : codes) {
        require(c >= 0 && c < k, ErrorCategory::invalid_input,
                "code index out of range");
        ++counts[static_cast<size_t>(c)];
    }
    UsageReport rep;
    rep.frequencies.resize(static_cast<size_t>(k));
    const double inv = 1.0 / static_cast<double>(codes.size());
    for (size_t i = 0; i < counts.size(); ++i) {
        rep.frequencies[i] = static_cast<double>(counts[i]) * inv;
        if (counts[i] > 0) ++rep.used_count;
    }
    return rep;
}

}  // namespace vqsvc::quant
