#include "tthf/kernels.hpp"

namespace tthf::kernels {

namespace detail {
bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}
}  // namespace detail

namespace {

struct Dispatch {
    Isa isa;
    const detail::Table* table;
    Dispatch() {
        if (detail::cpu_has_avx2()) {
            isa = Isa::avx2;
            table = &detail::avx2_table();
        } else {
            isa = Isa::scalar;
            table = &detail::scalar_table();
        }
    }
};

Dispatch& dispatch() {
    static Dispatch d;
    return d;
}

}  // namespace

Isa active_isa() { return dispatch().isa; }

bool force_isa(Isa isa) {
    if (isa == Isa::avx2 && !detail::cpu_has_avx2()) {
        dispatch().isa = Isa::scalar;
        dispatch().table = &detail::scalar_table();
        return false;
    }
    dispatch().isa = isa;
    dispatch().table =
        isa == Isa::avx2 ? &detail::avx2_table() : &detail::scalar_table();
    return true;
}

const char* isa_name(Isa isa) {
    return isa == Isa::avx2 ? "avx2" : "scalar";
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    dispatch().table->axpy(a, x, y, n);
}
void scal(double a, double* x, std::size_t n) { dispatch().table->scal(a, x, n); }
double dot(const double* x, const double* y, std::size_t n) {
    return dispatch().table->dot(x, y, n);
}
double sq_norm(const double* x, std::size_t n) {
    return dispatch().table->sq_norm(x, n);
}
double sq_dist(const double* x, const double* y, std::size_t n) {
    return dispatch().table->sq_dist(x, y, n);
}
void weighted_sum(const double* const* rows, const double* w, std::size_t k,
                  double* out, std::size_t n) {
    dispatch().table->weighted_sum(rows, w, k, out, n);
}

}  // namespace tthf::kernels
