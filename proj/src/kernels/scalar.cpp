#include <cmath>

#include "imbal/kernels.hpp"

namespace imbal::kernels::scalar {

double dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void lerp(double mix, const double* src, double* dst, std::size_t n) {
  const double keep = 1.0 - mix;
  for (std::size_t i = 0; i < n; ++i) dst[i] = mix * src[i] + keep * dst[i];
}

void adam(const AdamStep& s, double* p, double* m, double* v, const double* g, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
    const double mhat = m[i] / s.bias_correction1;
    const double vhat = v[i] / s.bias_correction2;
    p[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
  }
}

}  // namespace imbal::kernels::scalar
