#pragma once

#include <span>

// Dense arithmetic used by the function approximator. Each kernel has a
// scalar reference implementation and an AVX2/FMA variant; the variant is
// chosen once at startup from the CPU features (IMBAL_ISA=scalar forces the
// reference path). Variants agree to rounding, not bit for bit.
namespace imbal::kernels {

enum class Isa { Scalar, Avx2 };

const char* isa_name(Isa isa);
bool isa_available(Isa isa);
Isa active_isa();
void set_isa(Isa isa);  // throws ValidationError if unavailable

double dot(std::span<const double> x, std::span<const double> y);
// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);
// y = W x + b, W row-major [y.size() x x.size()]
void gemv(std::span<const double> w, std::span<const double> b, std::span<const double> x, std::span<double> y);
// gx += W^T g
void gemv_t_accumulate(std::span<const double> w, std::span<const double> g, std::span<double> gx);
// gw += g x^T
void outer_accumulate(std::span<const double> g, std::span<const double> x, std::span<double> gw);
// target = mix * source + (1 - mix) * target
void lerp(double mix, std::span<const double> source, std::span<double> target);

struct AdamStep {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double bias_correction1 = 1.0;  // 1 - beta1^t
  double bias_correction2 = 1.0;  // 1 - beta2^t
};

void adam(const AdamStep& s, std::span<double> params, std::span<double> m, std::span<double> v,
          std::span<const double> grads);

// Per-ISA entry points, exposed for equivalence tests.
namespace scalar {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void lerp(double mix, const double* src, double* dst, std::size_t n);
void adam(const AdamStep& s, double* p, double* m, double* v, const double* g, std::size_t n);
}  // namespace scalar

namespace avx2 {
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void lerp(double mix, const double* src, double* dst, std::size_t n);
void adam(const AdamStep& s, double* p, double* m, double* v, const double* g, std::size_t n);
}  // namespace avx2

}  // namespace imbal::kernels
