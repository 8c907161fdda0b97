#pragma once

#include <string>
#include <vector>

#include "vqsvc/common.hpp"
#include "vqsvc/nn/seq.hpp"

namespace vqsvc::net {

using nn::Mat;
using nn::Vec;

// Learned time-invariant embedding per registered singer id.
template <class T>
class SingerTable {
public:
    SingerTable() = default;
    SingerTable(const std::vector<std::string>& ids, int dim) : ids_(ids), dim_(dim) {
        require(!ids.empty(), ErrorCategory::bad_config, "singer table needs at least one id");
        e_ = Mat<T>::Zero(dim, static_cast<long>(ids.size()));
        ge_ = Mat<T>::Zero(dim, static_cast<long>(ids.size()));
    }

    void init(Rng& rng) { nn::uniform_init(e_, 0.1, rng); }

    int dim() const { return dim_; }
    long size() const { return static_cast<long>(ids_.size()); }
    const std::vector<std::string>& ids() const { return ids_; }

    long index_of(const std::string& id) const {
        for (size_t i = 0; i < ids_.size(); ++i)
            if (ids_[i] == id) return static_cast<long>(i);
        std::string known;
        for (const auto& s : ids_) {
            if (!known.empty()) known += ", ";
            known += s;
        }
        fail(ErrorCategory::unknown_singer, "unknown singer id '" + id + "' (known: " + known + ")");
    }

    Vec<T> lookup(const std::string& id) const { return e_.col(index_of(id)); }
    Vec<T> lookup(long index) const {
        require(index >= 0 && index < size(), ErrorCategory::unknown_singer,
                "singer index out of range");
        return e_.col(index);
    }

    void accumulate_grad(long index, const Vec<T>& g) { ge_.col(index) += g; }

    void register_params(nn::ParamSet<T>& ps, const std::string& prefix) {
        ps.add(prefix + ".embeddings", e_, ge_);
    }

    Mat<T>& embeddings() { return e_; }
    const Mat<T>& embeddings() const { return e_; }

private:
    std::vector<std::string> ids_;
    int dim_ = 0;
    Mat<T> e_, ge_;
};

}  // namespace vqsvc::net
