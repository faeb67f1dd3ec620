#pragma once

#include <cstddef>
#include <string>

// Dense double-precision vector kernels used by the hot loops (SGD updates,
// consensus mixing, gradient accumulation). Scalar reference implementations
// and AVX2 variants are both compiled in; the active set is chosen at runtime
// from CPUID and can be overridden for equivalence testing.
namespace tthf::kernels {

enum class Isa { scalar, avx2 };

// Currently selected instruction set.
Isa active_isa();

// Override the dispatch (used by tests and the --isa CLI flag). Requesting
// an ISA the CPU does not support falls back to scalar and returns false.
bool force_isa(Isa isa);

const char* isa_name(Isa isa);

// y[i] += a * x[i]
void axpy(double a, const double* x, double* y, std::size_t n);

// x[i] *= a
void scal(double a, double* x, std::size_t n);

double dot(const double* x, const double* y, std::size_t n);

double sq_norm(const double* x, std::size_t n);

// sum_i (x[i] - y[i])^2
double sq_dist(const double* x, const double* y, std::size_t n);

// out[i] = sum_k w[k] * rows[k][i], rows given as pointer array
void weighted_sum(const double* const* rows, const double* w, std::size_t k,
                  double* out, std::size_t n);

namespace detail {
struct Table {
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scal)(double, double*, std::size_t);
    double (*dot)(const double*, const double*, std::size_t);
    double (*sq_norm)(const double*, std::size_t);
    double (*sq_dist)(const double*, const double*, std::size_t);
    void (*weighted_sum)(const double* const*, const double*, std::size_t,
                         double*, std::size_t);
};
const Table& scalar_table();
const Table& avx2_table();  // valid only if CPU supports AVX2
bool cpu_has_avx2();
}  // namespace detail

}  // namespace tthf::kernels
