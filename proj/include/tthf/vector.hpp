#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "tthf/errors.hpp"
#include "tthf/kernels.hpp"

namespace tthf {

// M-dimensional parameter vector. Entries are validated finite on
// construction from raw data; in-place arithmetic goes through the kernels.
class ModelVector {
  public:
    ModelVector() = default;
    explicit ModelVector(std::size_t dim) : v_(dim, 0.0) {}
    explicit ModelVector(std::vector<double> coords) : v_(std::move(coords)) {
        for (double x : v_)
            if (!std::isfinite(x))
                throw Error("ModelVector: non-finite entry");
    }

    std::size_t dim() const { return v_.size(); }
    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }
    double& operator[](std::size_t i) { return v_[i]; }
    double operator[](std::size_t i) const { return v_[i]; }
    const std::vector<double>& coords() const { return v_; }

    void add_scaled(double a, const ModelVector& x) {
        kernels::axpy(a, x.data(), v_.data(), v_.size());
    }
    void scale(double a) { kernels::scal(a, v_.data(), v_.size()); }
    double sq_norm() const { return kernels::sq_norm(v_.data(), v_.size()); }
    double norm() const { return std::sqrt(sq_norm()); }

    bool operator==(const ModelVector& o) const { return v_ == o.v_; }

  private:
    std::vector<double> v_;
};

inline double sq_dist(const ModelVector& a, const ModelVector& b) {
    return kernels::sq_dist(a.data(), b.data(), a.dim());
}

inline double dist(const ModelVector& a, const ModelVector& b) {
    return std::sqrt(sq_dist(a, b));
}

inline double dot(const ModelVector& a, const ModelVector& b) {
    return kernels::dot(a.data(), b.data(), a.dim());
}

// Equal-weight mean of a set of vectors.
ModelVector mean_of(const std::vector<ModelVector>& vs);

}  // namespace tthf
