#include <cstdlib>
#include <string>

#include "imbal/error.hpp"
#include "imbal/kernels.hpp"

namespace imbal::kernels {

namespace {

struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*lerp)(double, const double*, double*, std::size_t);
  void (*adam)(const AdamStep&, double*, double*, double*, const double*, std::size_t);
};

constexpr Table kScalar{scalar::dot, scalar::axpy, scalar::lerp, scalar::adam};
#if defined(IMBAL_HAVE_AVX2)
constexpr Table kAvx2{avx2::dot, avx2::axpy, avx2::lerp, avx2::adam};
#endif

Isa detect() {
  const char* forced = std::getenv("IMBAL_ISA");
  if (forced != nullptr && std::string(forced) == "scalar") return Isa::Scalar;
  return isa_available(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
}

Isa& current_isa() {
  static Isa isa = detect();
  return isa;
}

const Table& table() {
#if defined(IMBAL_HAVE_AVX2)
  if (current_isa() == Isa::Avx2) return kAvx2;
#endif
  return kScalar;
}

void require_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw ValidationError(std::string("kernels: size mismatch in ") + what);
}

}  // namespace

const char* isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) {
  if (isa == Isa::Scalar) return true;
#if defined(IMBAL_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa active_isa() { return current_isa(); }

void set_isa(Isa isa) {
  if (!isa_available(isa)) throw ValidationError(std::string("kernels: ISA not available: ") + isa_name(isa));
  current_isa() = isa;
}

double dot(std::span<const double> x, std::span<const double> y) {
  require_same(x.size(), y.size(), "dot");
  return table().dot(x.data(), y.data(), x.size());
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  require_same(x.size(), y.size(), "axpy");
  table().axpy(a, x.data(), y.data(), x.size());
}

void gemv(std::span<const double> w, std::span<const double> b, std::span<const double> x, std::span<double> y) {
  require_same(w.size(), x.size() * y.size(), "gemv");
  require_same(b.size(), y.size(), "gemv bias");
  const auto& t = table();
  const std::size_t n = x.size();
  for (std::size_t o = 0; o < y.size(); ++o) y[o] = b[o] + t.dot(w.data() + o * n, x.data(), n);
}

void gemv_t_accumulate(std::span<const double> w, std::span<const double> g, std::span<double> gx) {
  require_same(w.size(), g.size() * gx.size(), "gemv_t");
  const auto& t = table();
  const std::size_t n = gx.size();
  for (std::size_t o = 0; o < g.size(); ++o) {
    if (g[o] != 0.0) t.axpy(g[o], w.data() + o * n, gx.data(), n);
  }
}

void outer_accumulate(std::span<const double> g, std::span<const double> x, std::span<double> gw) {
  require_same(gw.size(), g.size() * x.size(), "outer");
  const auto& t = table();
  const std::size_t n = x.size();
  for (std::size_t o = 0; o < g.size(); ++o) {
    if (g[o] != 0.0) t.axpy(g[o], x.data(), gw.data() + o * n, n);
  }
}

void lerp(double mix, std::span<const double> source, std::span<double> target) {
  require_same(source.size(), target.size(), "lerp");
  table().lerp(mix, source.data(), target.data(), source.size());
}

void adam(const AdamStep& s, std::span<double> params, std::span<double> m, std::span<double> v,
          std::span<const double> grads) {
  require_same(params.size(), grads.size(), "adam");
  require_same(params.size(), m.size(), "adam m");
  require_same(params.size(), v.size(), "adam v");
  table().adam(s, params.data(), m.data(), v.data(), grads.data(), params.size());
}

}  // namespace imbal::kernels
