#include "tthf/kernels.hpp"

namespace tthf::kernels::detail {

namespace {

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scal_scalar(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

double sq_norm_scalar(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
    return s;
}

double sq_dist_scalar(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

void weighted_sum_scalar(const double* const* rows, const double* w,
                         std::size_t k, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
        const double wr = w[r];
        const double* row = rows[r];
        for (std::size_t i = 0; i < n; ++i) out[i] += wr * row[i];
    }
}

}  // namespace

const Table& scalar_table() {
    static const Table t{axpy_scalar,    scal_scalar,    dot_scalar,
                         sq_norm_scalar, sq_dist_scalar, weighted_sum_scalar};
    return t;
}

}  // namespace tthf::kernels::detail
