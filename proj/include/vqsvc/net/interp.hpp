#pragma once

#include "vqsvc/common.hpp"
#include "vqsvc/nn/seq.hpp"

namespace vqsvc::net {

using nn::Mat;
using nn::Vec;

// Linear interpolation of a channels x n sequence to length t_out. Endpoints
// map to endpoints; a length-1 input broadcasts. Each output column j sits at
// source position j * (n-1) / (t_out-1).
template <class T>
Mat<T> interpolate_to_length(const Mat<T>& seq, long t_out) {
    const long n = seq.cols();
    require(n >= 1, ErrorCategory::invalid_input, "cannot interpolate an empty sequence");
    require(t_out >= 1, ErrorCategory::invalid_input, "interpolation target length must be positive");
    if (n == t_out) return seq;
    Mat<T> out(seq.rows(), t_out);
    if (n == 1) {
        out.colwise() = seq.col(0);
        return out;
    }
    if (t_out == 1) {
        out.col(0) = seq.col(0);
        return out;
    }
    const double step = static_cast<double>(n - 1) / static_cast<double>(t_out - 1);
    for (long j = 0; j < t_out; ++j) {
        const double p = static_cast<double>(j) * step;
        long i0 = static_cast<long>(p);
        if (i0 >= n - 1) i0 = n - 2;
        const T w = static_cast<T>(p - static_cast<double>(i0));
        out.col(j) = (T(1) - w) * seq.col(i0) + w * seq.col(i0 + 1);
    }
    return out;
}

// Adjoint of interpolate_to_length: scatters the output gradient back onto
// the n source columns with the same weights.
template <class T>
Mat<T> interpolate_backward(const Mat<T>& gy, long n) {
    const long t_out = gy.cols();
    Mat<T> gx = Mat<T>::Zero(gy.rows(), n);
    if (n == t_out) return gy;
    if (n == 1) {
        gx.col(0) = gy.rowwise().sum();
        return gx;
    }
    if (t_out == 1) {
        gx.col(0) = gy.col(0);
        return gx;
    }
    const double step = static_cast<double>(n - 1) / static_cast<double>(t_out - 1);
    for (long j = 0; j < t_out; ++j) {
        const double p = static_cast<double>(j) * step;
        long i0 = static_cast<long>(p);
        if (i0 >= n - 1) i0 = n - 2;
        const T w = static_cast<T>(p - static_cast<double>(i0));
        gx.col(i0) += (T(1) - w) * gy.col(j);
        gx.col(i0 + 1) += w * gy.col(j);
    }
    return gx;
}

}  // namespace vqsvc::net
