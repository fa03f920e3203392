#include <cmath>
#include <fstream>
#include <random>

#include "doctest.h"
#include "imbal/approximator.hpp"
#include "imbal/error.hpp"
#include "scratch.hpp"

using namespace imbal;

namespace {

LossProbe quadratic(std::vector<double> target) {
  return {[target](std::span<const double> o) {
            double s = 0.0;
            for (std::size_t i = 0; i < o.size(); ++i) s += (o[i] - target[i]) * (o[i] - target[i]);
            return s;
          },
          [target](std::span<const double> o) {
            std::vector<double> g(o.size());
            for (std::size_t i = 0; i < o.size(); ++i) g[i] = 2.0 * (o[i] - target[i]);
            return g;
          }};
}

LossProbe linear(std::vector<double> c) {
  return {[c](std::span<const double> o) {
            double s = 0.0;
            for (std::size_t i = 0; i < o.size(); ++i) s += c[i] * o[i];
            return s;
          },
          [c](std::span<const double>) { return c; }};
}

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("layout bookkeeping") {
  const MlpLayout l({6, 8, 3});
  CHECK(l.parameter_count() == 6 * 8 + 8 + 8 * 3 + 3);
  CHECK(l.weight_offset(1) == 6 * 8 + 8);
  CHECK(l.bias_offset(0) == 48);
  CHECK_THROWS_AS(MlpLayout({4}), ValidationError);
  CHECK_THROWS_AS(MlpLayout({4, 0, 2}), ValidationError);
}

TEST_CASE("forward: zero weights give the final bias") {
  Mlp net(MlpLayout({3, 5, 2}));
  auto p = net.parameters();
  const auto& l = net.layout();
  p[l.bias_offset(1)] = 1.5;
  p[l.bias_offset(1) + 1] = -2.0;
  const double x[] = {1.0, -3.0, 7.0};
  const auto y = net.forward(x);
  CHECK(y == std::vector<double>{1.5, -2.0});
}

TEST_CASE("forward: identity layer passes the input through") {
  Mlp net(MlpLayout({4, 4}));
  for (std::size_t i = 0; i < 4; ++i) net.parameters()[i * 4 + i] = 1.0;
  const double x[] = {0.5, -1.0, 2.0, -3.5};
  CHECK(net.forward(x) == std::vector<double>(std::begin(x), std::end(x)));
}

TEST_CASE("forward: 3-4-2 network matches straight-line arithmetic") {
  const auto net = Mlp::random({3, 4, 2}, 42);
  const auto p = net.parameters();
  const double x[] = {0.3, -1.2, 0.8};
  // W1 [4x3] at 0, b1 at 12, W2 [2x4] at 16, b2 at 24.
  double h[4];
  for (int o = 0; o < 4; ++o) {
    const double z = p[o * 3 + 0] * x[0] + p[o * 3 + 1] * x[1] + p[o * 3 + 2] * x[2] + p[12 + o];
    h[o] = z > 0.0 ? z : 0.0;
  }
  double y[2];
  for (int o = 0; o < 2; ++o) {
    y[o] = p[24 + o];
    for (int i = 0; i < 4; ++i) y[o] += p[16 + o * 4 + i] * h[i];
  }
  const auto out = net.forward(x);
  CHECK(out[0] == doctest::Approx(y[0]).epsilon(1e-14));
  CHECK(out[1] == doctest::Approx(y[1]).epsilon(1e-14));
  CHECK_THROWS_AS(net.forward(std::vector<double>{1.0, 2.0}), ValidationError);
}

TEST_CASE("backward basics") {
  auto net = Mlp::random({5, 7, 3}, 1);
  std::mt19937_64 rng(1);
  const auto x = random_vec(5, rng);
  MlpLayout::Cache cache;
  net.forward(x, cache);
  const auto zero = net.backward(cache, std::vector<double>(3, 0.0));
  for (double g : zero.params) CHECK(g == 0.0);
  for (double g : zero.input) CHECK(g == 0.0);

  // Quadratic head: upstream is 2 (pred - target); the output-bias gradient equals it.
  const std::vector<double> target{0.1, -0.2, 0.3};
  const auto probe = quadratic(target);
  const auto up = probe.gradient(cache.output());
  const auto g = net.backward(cache, up);
  const auto b2 = net.layout().bias_offset(1);
  for (std::size_t i = 0; i < 3; ++i) CHECK(g.params[b2 + i] == doctest::Approx(2.0 * (cache.output()[i] - target[i])));
  CHECK_THROWS_AS(net.backward(cache, std::vector<double>(2, 0.0)), ValidationError);
}

TEST_CASE("gradient check on random architectures") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> width(1, 12), depth(1, 4);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    std::vector<std::size_t> sizes{width(rng)};
    const auto d = depth(rng);
    for (std::size_t i = 0; i < d; ++i) sizes.push_back(width(rng));
    auto net = Mlp::random(sizes, 100 + k, k % 2 ? Activation::Relu : Activation::Identity);
    const auto x = random_vec(sizes.front(), rng);
    const auto t = random_vec(sizes.back(), rng);
    worst = std::max(worst, gradient_check(net, x, quadratic(t)));
  }
  MESSAGE("worst relative error " << worst);
  CHECK(worst < 1e-4);
}

TEST_CASE("gradient check: fresh 6-8-3, zero net and a corrupted gradient") {
  std::mt19937_64 rng(8);
  auto net = Mlp::random({6, 8, 3}, 5);
  const auto x = random_vec(6, rng);
  CHECK(gradient_check(net, x, quadratic({0.5, 0.0, -0.5})) < 1e-4);

  Mlp zero(MlpLayout({6, 8, 3}));
  CHECK(gradient_check(zero, x, linear({1.0, -2.0, 0.5})) == 0.0);

  // Negative control: perturb one analytic entry.
  const auto probe = quadratic({0.5, 0.0, -0.5});
  MlpLayout::Cache cache;
  net.forward(x, cache);
  auto g = net.backward(cache, probe.gradient(cache.output())).params;
  const auto numeric = numeric_gradient(net.parameters(), [&] { return probe.value(net.forward(x)); });
  CHECK(max_relative_error(g, numeric) < 1e-4);
  std::size_t biggest = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (std::abs(g[i]) > std::abs(g[biggest])) biggest = i;
  }
  g[biggest] *= 1.1;
  CHECK(max_relative_error(g, numeric) > 1e-2);
}

TEST_CASE("adaptive-moment update") {
  auto net = Mlp::random({3, 4, 2}, 9);
  const auto before = net;
  AdamState st(net.layout().parameter_count(), 0.01);
  update(net, st, std::vector<double>(net.layout().parameter_count(), 0.0));
  CHECK(net == before);

  // Constant gradient: moves against its sign by ~lr per step.
  Mlp one(MlpLayout({1, 1}));
  AdamState s1(2, 0.001);
  const std::vector<double> g{0.3, -2.0};
  double last_w = 0.0;
  for (int t = 0; t < 5000; ++t) {
    last_w = one.parameters()[0];
    update(one, s1, g);
  }
  CHECK(one.parameters()[0] < 0.0);
  CHECK(one.parameters()[1] > 0.0);
  // With m = g and v = g^2 after bias correction the step is lr * |g| / (|g| + eps).
  CHECK(last_w - one.parameters()[0] == doctest::Approx(0.001 * 0.3 / (0.3 + 1e-8)).epsilon(1e-6));
  CHECK_THROWS_AS(update(one, s1, std::vector<double>{1.0}), ValidationError);
}

TEST_CASE("identical seeds give bit-identical parameters after updates") {
  auto run = [] {
    auto net = Mlp::random({4, 6, 2}, 11);
    AdamState st(net.layout().parameter_count(), 0.01);
    std::mt19937_64 rng(3);
    for (int k = 0; k < 50; ++k) {
      const auto x = random_vec(4, rng);
      MlpLayout::Cache c;
      net.forward(x, c);
      update(net, st, net.backward(c, quadratic({1.0, -1.0}).gradient(c.output())).params);
    }
    return net;
  };
  CHECK(run() == run());
  CHECK_FALSE(Mlp::random({4, 6, 2}, 11) == Mlp::random({4, 6, 2}, 12));
}

TEST_CASE("checkpoint round trip is bit exact") {
  const auto dir = scratch_dir("ckpt");
  auto net = Mlp::random({5, 9, 4}, 77, Activation::Relu);
  net.parameters()[3] = -0.0;
  net.parameters()[4] = 1e-310;  // subnormal
  save_checkpoint(dir / "net.ckpt", net, {77, 1234});
  CheckpointMeta meta;
  const auto back = load_checkpoint(dir / "net.ckpt", &meta);
  CHECK(back.layout() == net.layout());
  CHECK(meta.seed == 77);
  CHECK(meta.step == 1234);
  REQUIRE(back.parameters().size() == net.parameters().size());
  for (std::size_t i = 0; i < net.parameters().size(); ++i) {
    REQUIRE(std::bit_cast<std::uint64_t>(back.parameters()[i]) == std::bit_cast<std::uint64_t>(net.parameters()[i]));
  }
  // Truncated blob is rejected.
  const auto size = std::filesystem::file_size(dir / "net.ckpt");
  std::filesystem::resize_file(dir / "net.ckpt", size - 8);
  CHECK_THROWS_AS(load_checkpoint(dir / "net.ckpt"), ValidationError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), ValidationError);
  std::filesystem::remove_all(dir);
}
