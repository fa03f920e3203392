#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "imbal/distsac.hpp"
#include "imbal/error.hpp"
#include "scratch.hpp"

using namespace imbal;

namespace {

// Network whose output ignores the input: zero weights, output bias = values.
AgentNet constant_net(std::size_t inputs, std::vector<double> values, std::size_t encoder_inputs = 0) {
  AgentNet net(NetworkShape{inputs, encoder_inputs, 4, 3}, values.size());
  const auto off = net.encoder_parameter_count() + net.head_layout().bias_offset(net.head_layout().layers() - 1);
  for (std::size_t i = 0; i < values.size(); ++i) net.parameters()[off + i] = values[i];
  return net;
}

Batch random_batch(std::size_t n, std::size_t dim, std::mt19937_64& rng, double terminal_prob = 0.2) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), p(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> a(0, kNumActions - 1);
  Batch b;
  b.obs_dim = dim;
  for (std::size_t k = 0; k < n; ++k) {
    Transition t;
    t.obs.resize(dim);
    t.next_obs.resize(dim);
    for (auto& x : t.obs) x = u(rng);
    for (auto& x : t.next_obs) x = u(rng);
    t.action = a(rng);
    t.reward = 3.0 * u(rng);
    t.terminal = p(rng) < terminal_prob;
    b.push(t);
  }
  return b;
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) h -= v > 0.0 ? v * std::log(v) : 0.0;
  return h;
}

}  // namespace

TEST_CASE("quantile levels") {
  const auto t = quantile_levels(20);
  REQUIRE(t.size() == 20);
  CHECK(t.front() == doctest::Approx(0.05));
  CHECK(t.back() == 1.0);
  const auto m = quantile_levels(20, true);
  CHECK(m.front() == doctest::Approx(0.025));
  CHECK(m.back() == doctest::Approx(0.975));
}

TEST_CASE("config validation") {
  AgentConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.gamma == 0.9995);
  CHECK(c.n_quantiles == 20);
  CHECK(c.mu == 0.1);
  CHECK(c.lr_actor == 5e-5);
  CHECK(c.lr_critic == 5e-4);
  c.gamma = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.mu = 1.5;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.alpha = -1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("softmax is positive and normalized") {
  const double logits[] = {1000.0, -5.0, 3.0};
  const auto p = softmax(logits);
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0));
  for (double v : p) CHECK(v >= 0.0);
  const double small[] = {0.1, -0.2, 0.3};
  for (double v : softmax(small)) CHECK(v > 0.0);
}

TEST_CASE("critic targets") {
  AgentConfig cfg;
  cfg.n_quantiles = 4;
  cfg.gamma = 0.9;
  cfg.alpha = 0.0;
  const std::size_t n = cfg.n_quantiles;
  const auto actor = constant_net(2, {0.0, 0.0, 0.0});  // uniform policy
  std::vector<double> q;
  for (double v : {3.0, 7.0, 5.0}) q.insert(q.end(), n, v);
  const auto target = constant_net(2, q);

  Batch b;
  b.obs_dim = 2;
  b.push({{0.1, 0.2}, 0, 5.0, {0.3, 0.4}, true});
  b.push({{0.1, 0.2}, 1, 1.0, {0.3, 0.4}, false});

  SUBCASE("terminal drops the bootstrap, uniform policy averages the actions") {
    const auto t = critic_targets(b, actor, target, cfg);
    for (std::size_t j = 0; j < n; ++j) CHECK(t[j] == 5.0);
    // mean over actions of (3, 7, 5) is 5
    for (std::size_t j = 0; j < n; ++j) CHECK(t[n + j] == doctest::Approx(1.0 + 0.9 * 5.0));
  }
  SUBCASE("myopic limit") {
    cfg.gamma = 0.0;
    const auto t = critic_targets(b, actor, target, cfg);
    for (std::size_t j = 0; j < n; ++j) CHECK(t[n + j] == 1.0);
  }
  SUBCASE("entropy bonus enters with the policy's log-probabilities") {
    cfg.alpha = 0.5;
    const auto t = critic_targets(b, actor, target, cfg);
    for (std::size_t j = 0; j < n; ++j) CHECK(t[n + j] == doctest::Approx(1.0 + 0.9 * (5.0 + 0.5 * std::log(3.0))));
  }
  SUBCASE("per-quantile expectation under a skewed policy") {
    const auto skew = constant_net(2, {1.0, 0.0, -1.0});
    std::vector<double> qq(3 * n);
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t j = 0; j < n; ++j) qq[a * n + j] = double(a) * 10.0 + double(j);
    }
    const auto tq = constant_net(2, qq);
    const double l[] = {1.0, 0.0, -1.0};
    const auto p = softmax(l);
    const auto t = critic_targets(b, skew, tq, cfg);
    for (std::size_t j = 0; j < n; ++j) {
      double v = 0.0;
      for (std::size_t a = 0; a < 3; ++a) v += p[a] * qq[a * n + j];
      CHECK(t[n + j] == doctest::Approx(1.0 + 0.9 * v));
    }
  }
}

TEST_CASE("pinball loss") {
  SUBCASE("predictions equal to deterministic targets") {
    const double pred[] = {2.0, 2.0, 2.0}, targets[] = {2.0, 2.0, 2.0}, taus[] = {0.25, 0.5, 0.75};
    double g[3];
    CHECK(pinball_loss(pred, targets, taus, g) == 0.0);
  }
  auto scan = [](double tau) {
    const double targets[] = {1.0, 2.0, 3.0, 4.0}, taus[] = {tau};
    double best = 1e300;
    std::vector<double> argmins;
    for (int k = 0; k <= 500; ++k) {
      const double c[] = {k * 0.01};
      double g[1];
      const double v = pinball_loss(c, targets, taus, g);
      if (v < best - 1e-12) {
        best = v;
        argmins = {c[0]};
      } else if (std::abs(v - best) <= 1e-12) {
        argmins.push_back(c[0]);
      }
    }
    return argmins;
  };
  SUBCASE("median set for tau = 0.5") {
    const auto m = scan(0.5);
    CHECK(m.front() == doctest::Approx(2.0));
    CHECK(m.back() == doctest::Approx(3.0));
  }
  SUBCASE("tau = 0.9 recovers the empirical 0.9-quantile") {
    const auto m = scan(0.9);
    CHECK(m.front() == doctest::Approx(4.0));
    CHECK(m.back() == doctest::Approx(4.0));
  }
  SUBCASE("analytic gradient matches finite differences") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const auto taus = quantile_levels(7);
    for (bool smooth : {false, true}) {
      std::vector<double> pred(7), targets(9), g(7), dummy(7);
      for (auto& x : pred) x = u(rng);
      for (auto& x : targets) x = u(rng);
      pinball_loss(pred, targets, taus, g, smooth, 0.7);
      const auto num = numeric_gradient(pred, [&] { return pinball_loss(pred, targets, taus, dummy, smooth, 0.7); }, 1e-6);
      CHECK(max_relative_error(g, num) < 1e-6);
    }
  }
}

TEST_CASE("policy objective") {
  double g[3];
  SUBCASE("indifference with alpha = 0 and constant Q") {
    const double q[] = {2.0, 2.0, 2.0};
    for (auto l : {std::array<double, 3>{0, 0, 0}, {3, -1, 0.5}, {-4, 2, 9}}) {
      policy_objective(l, q, 0.0, g);
      for (double v : g) CHECK(std::abs(v) < 1e-12);
    }
  }
  SUBCASE("loss decreases monotonically as pi(a0) -> 1") {
    const double q[] = {1.0, 0.0, 0.0};
    double last = 1e300;
    for (double p0 = 0.05; p0 < 0.999; p0 += 0.01) {
      const double rest = (1.0 - p0) / 2.0;
      const double l[] = {std::log(p0), std::log(rest), std::log(rest)};
      const double v = policy_objective(l, q, 0.0, g);
      CHECK(v < last);
      last = v;
    }
  }
  SUBCASE("entropy makes the uniform policy the unique minimizer") {
    const double q[] = {4.0, 4.0, 4.0};
    double l[] = {2.0, -1.0, 0.3};
    for (int it = 0; it < 5000; ++it) {
      policy_objective(l, q, 1.0, g);
      for (int a = 0; a < 3; ++a) l[a] -= 0.5 * g[a];
    }
    for (double p : softmax(l)) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
  }
  SUBCASE("gradient matches finite differences") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 20; ++k) {
      std::vector<double> l(3), q(3), dummy(3);
      for (auto& x : l) x = u(rng);
      for (auto& x : q) x = u(rng);
      double alpha = 0.1 * (k % 5);
      policy_objective(l, q, alpha, g);
      const auto num = numeric_gradient(l, [&] { return policy_objective(l, q, alpha, dummy); });
      CHECK(max_relative_error(std::span<const double>(g, 3), num) < 1e-7);
    }
  }
}

TEST_CASE("critic and actor loss gradients on random mini-batches") {
  std::mt19937_64 rng(10);
  for (int k = 0; k < 6; ++k) {
    AgentConfig cfg;
    cfg.n_quantiles = 5;
    cfg.alpha = 0.05 * k;
    const bool stacked = k % 2 == 1;
    const NetworkShape shape{7, stacked ? 4u : 0u, 8, 6};
    auto critic = AgentNet::random(shape, kNumActions * cfg.n_quantiles, 100 + k);
    auto target = AgentNet::random(shape, kNumActions * cfg.n_quantiles, 200 + k);
    auto actor = AgentNet::random(shape, kNumActions, 300 + k);
    const auto batch = random_batch(4, 7, rng);
    const auto targets = critic_targets(batch, actor, target, cfg);

    const auto cl = critic_loss(batch, critic, targets, cfg);
    const auto cnum = numeric_gradient(critic.parameters(), [&] { return critic_loss(batch, critic, targets, cfg).loss; }, 1e-6);
    CHECK(max_relative_error(cl.grads, cnum) < 1e-4);

    const auto al = actor_loss(batch, actor, critic, cfg);
    const auto anum = numeric_gradient(actor.parameters(), [&] { return actor_loss(batch, actor, critic, cfg).loss; }, 1e-6);
    CHECK(max_relative_error(al.grads, anum) < 1e-4);
    if (stacked) {
      double enc = 0.0;
      for (std::size_t i = 0; i < actor.encoder_parameter_count(); ++i) enc += std::abs(al.grads[i]);
      CHECK(enc > 0.0);
    }
  }
}

TEST_CASE("soft update") {
  const NetworkShape shape{3, 0, 4, 3};
  const auto online = constant_net(3, {1.0, 1.0, 1.0});
  auto target = constant_net(3, {0.0, 0.0, 0.0});
  auto t1 = target;
  soft_update(t1, online, 1.0);
  CHECK(t1 == online);
  auto t0 = target;
  soft_update(t0, online, 0.0);
  CHECK(t0 == target);
  soft_update(target, online, 0.1);
  const double x[] = {0.0, 0.0, 0.0};
  for (double v : target.forward(x)) CHECK(v == doctest::Approx(0.1).epsilon(1e-15));

  // Geometric convergence towards frozen online parameters.
  const auto on = AgentNet::random(shape, 3, 1);
  auto tg = AgentNet::random(shape, 3, 2);
  auto dist = [&] {
    double d = 0.0;
    for (std::size_t i = 0; i < on.parameter_count(); ++i) d = std::max(d, std::abs(on.parameters()[i] - tg.parameters()[i]));
    return d;
  };
  double prev = dist();
  for (int k = 0; k < 50; ++k) {
    soft_update(tg, on, 0.1);
    const double d = dist();
    CHECK(d / prev == doctest::Approx(0.9).epsilon(1e-9));
    prev = d;
  }
}

TEST_CASE("act") {
  std::mt19937_64 rng(1);
  const double obs[] = {0.0, 0.0};
  const auto peaked = constant_net(2, {10.0, 0.0, 0.0});
  CHECK(act(peaked, obs, ActMode::Greedy, rng) == 0);
  const auto flat = constant_net(2, {0.0, 0.0, 0.0});
  for (int k = 0; k < 10; ++k) CHECK(act(flat, obs, ActMode::Greedy, rng) == 0);  // lowest index on ties
  const auto mid = constant_net(2, {0.0, 1.0, 1.0});
  CHECK(act(mid, obs, ActMode::Greedy, rng) == 1);

  std::array<int, 3> counts{};
  for (int k = 0; k < 100000; ++k) ++counts[act(flat, obs, ActMode::Sample, rng)];
  for (int c : counts) CHECK(std::abs(c / 1e5 - 1.0 / 3.0) < 0.01);

  const double bad[] = {std::nan(""), 0.0};
  CHECK_THROWS_AS(act(flat, bad, ActMode::Greedy, rng), ValidationError);
}

TEST_CASE("greedy action is invariant to a constant shift of Q") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int k = 0; k < 1000; ++k) {
    std::array<double, 3> q{u(rng), u(rng), u(rng)};
    const double c = u(rng) * 100.0;
    std::array<double, 3> s{q[0] + c, q[1] + c, q[2] + c};
    REQUIRE(greedy_index(q) == greedy_index(s));
  }
}

TEST_CASE("replay buffer") {
  ReplayBuffer buf(5, 2);
  CHECK_THROWS_AS(buf.push(std::vector<double>{1.0}, 0, 0.0, std::vector<double>{1.0, 2.0}, false), ValidationError);
  CHECK_THROWS_AS(buf.push(std::vector<double>{1.0, 2.0}, 3, 0.0, std::vector<double>{1.0, 2.0}, false),
                  ValidationError);
  CHECK_THROWS_AS(buf.push(std::vector<double>{1.0, 2.0}, 0, std::nan(""), std::vector<double>{1.0, 2.0}, false),
                  ValidationError);
  for (int k = 0; k < 8; ++k) buf.push(std::vector<double>{double(k), 0.0}, 0, double(k), std::vector<double>{0.0, 0.0}, k == 7);
  CHECK(buf.size() == 5);
  // Oldest entries were overwritten: rewards 3..7 remain.
  std::vector<double> seen;
  for (std::size_t i = 0; i < buf.size(); ++i) seen.push_back(buf.at(i).reward);
  std::sort(seen.begin(), seen.end());
  CHECK(seen == std::vector<double>{3, 4, 5, 6, 7});

  // Uniform sampling over stored items.
  std::mt19937_64 rng(3);
  const auto b = buf.sample(50000, rng);
  std::array<int, 8> counts{};
  for (double r : b.rewards) ++counts[std::size_t(r)];
  for (int k = 3; k < 8; ++k) CHECK(std::abs(counts[k] / 50000.0 - 0.2) < 0.01);
  for (std::size_t i = 0; i < b.size(); ++i) {
    REQUIRE(b.observation(i)[0] == b.rewards[i]);
    REQUIRE(bool(b.terminal[i]) == (b.rewards[i] == 7.0));
  }
}

TEST_CASE("seed streams are distinct") {
  CHECK(seed_stream(1, 1) != seed_stream(1, 2));
  CHECK(seed_stream(1, 1) != seed_stream(2, 1));
  CHECK(seed_stream(1, 1) == seed_stream(1, 1));
}

TEST_CASE("build_agent shapes per variant") {
  AgentConfig cfg;
  cfg.hidden = 16;
  cfg.embedding = 8;
  const auto base = build_agent(AgentVariant::Base, observation_layout(AgentVariant::Base), cfg, 1);
  CHECK(base.actor.input_size() == kBaseFeatures);
  CHECK_FALSE(base.actor.stacked());
  CHECK(base.critic.output_size() == kNumActions * 20);
  CHECK(base.critic == base.target_critic);

  const auto fc = build_agent(AgentVariant::MpcFc, observation_layout(AgentVariant::MpcFc), cfg, 1);
  CHECK(fc.actor.input_size() == kBaseFeatures + 4);
  CHECK_FALSE(fc.actor.stacked());

  const auto g = build_agent(AgentVariant::MpcGuided, observation_layout(AgentVariant::MpcGuided), cfg, 1);
  CHECK(g.actor.stacked());
  CHECK(g.actor.shape().encoder_inputs == kBaseFeatures);
  CHECK(g.actor.head_layout().input_size() == 8 + 4);

  const auto wf = build_agent(AgentVariant::WithForecast, observation_layout(AgentVariant::WithForecast, 6), cfg, 1);
  CHECK(wf.actor.input_size() == kBaseFeatures + 2 + 6);

  CHECK_THROWS_AS(build_agent(AgentVariant::Base, {11, 0}, cfg, 1), ValidationError);
  CHECK_THROWS_AS(build_agent(AgentVariant::MpcGuided, {14, 0}, cfg, 1), ValidationError);
  // Actor and critic are initialized from different streams.
  CHECK_FALSE(build_agent(AgentVariant::Base, {10, 0}, cfg, 1).actor == build_agent(AgentVariant::Base, {10, 0}, cfg, 2).actor);
}

TEST_CASE("stacked composition passes a finite-difference check and reaches the encoder") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int active_cases = 0;
  for (int k = 0; k < 20; ++k) {
    auto net = AgentNet::random(NetworkShape{14, 10, 16, 8}, kNumActions * 4, 50 + k);
    std::vector<double> x(14), c(net.output_size());
    for (auto& v : x) v = u(rng);
    for (auto& v : c) v = u(rng);
    AgentNet::Cache cache;
    net.forward(x, cache);
    std::vector<double> grads(net.parameter_count(), 0.0), gx(14);
    net.backward(cache, c, grads, gx);
    auto probe = [&] {
      const auto y = net.forward(x);
      double s = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) s += c[i] * y[i];
      return s;
    };
    const auto num = numeric_gradient(net.parameters(), probe);
    REQUIRE(max_relative_error(grads, num) < 1e-4);
    const auto numx = numeric_gradient(x, probe);
    REQUIRE(max_relative_error(gx, numx) < 1e-4);
    double enc = 0.0;
    for (std::size_t i = 0; i < net.encoder_parameter_count(); ++i) enc += std::abs(grads[i]);
    // A rectified embedding can be entirely inactive for one input; otherwise gradient must reach the encoder.
    const auto emb = cache.encoder.output();
    const bool active = std::any_of(emb.begin(), emb.end(), [](double v) { return v > 0.0; });
    REQUIRE((enc > 0.0) == active);
    active_cases += active;
  }
  CHECK(active_cases >= 15);
}

TEST_CASE("train_step") {
  AgentConfig cfg;
  cfg.hidden = 8;
  cfg.embedding = 4;
  cfg.batch_size = 16;
  cfg.n_quantiles = 5;
  const auto layout = observation_layout(AgentVariant::MpcGuided);
  auto fill = [&](ReplayBuffer& buf, std::size_t n) {
    std::mt19937_64 r(5);
    const auto b = random_batch(n, layout.size, r);
    for (std::size_t i = 0; i < n; ++i) {
      buf.push(b.observation(i), b.actions[i], b.rewards[i], b.next_observation(i), b.terminal[i]);
    }
  };
  ReplayBuffer small(100, layout.size);
  fill(small, 10);
  auto ag = build_agent(AgentVariant::MpcGuided, layout, cfg, 3);
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(train_step(ag, small, rng), ValidationError);

  ReplayBuffer buf(100, layout.size);
  fill(buf, 64);
  auto run = [&](std::uint64_t seed) {
    auto a = build_agent(AgentVariant::MpcGuided, layout, cfg, 3);
    std::mt19937_64 r(seed);
    TrainDiagnostics d;
    for (int k = 0; k < 10; ++k) d = train_step(a, buf, r);
    CHECK(std::isfinite(d.critic_loss));
    CHECK(d.entropy > 0.0);
    CHECK(d.entropy <= std::log(3.0) + 1e-12);
    return a;
  };
  const auto a1 = run(9), a2 = run(9), a3 = run(10);
  CHECK(a1.actor == a2.actor);
  CHECK(a1.critic == a2.critic);
  CHECK(a1.target_critic == a2.target_critic);
  CHECK_FALSE(a1.critic == a3.critic);
  CHECK(a1.updates == 10);
  // The target trails the critic after soft updates.
  CHECK_FALSE(a1.target_critic == a1.critic);
}

TEST_CASE("large entropy weight drives the policy to uniform") {
  AgentConfig cfg;
  cfg.hidden = 16;
  cfg.alpha = 100.0;
  cfg.n_quantiles = 4;
  cfg.lr_actor = 1e-2;
  std::mt19937_64 rng(4);
  const auto layout = observation_layout(AgentVariant::Base);
  auto ag = build_agent(AgentVariant::Base, layout, cfg, 8);
  // Critic with strongly action-dependent values.
  std::vector<double> q;
  for (double v : {5.0, -3.0, 1.0}) q.insert(q.end(), 4, v);
  const auto critic = constant_net(layout.size, q);
  const auto batch = random_batch(64, layout.size, rng);
  for (int k = 0; k < 1500; ++k) {
    const auto al = actor_loss(batch, ag.actor, critic, cfg);
    ag.actor_opt.apply(ag.actor.parameters(), al.grads);
  }
  double h = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) h += entropy(softmax(ag.actor.forward(batch.observation(i))));
  h /= double(batch.size());
  CHECK(h > std::log(3.0) - 0.01);
}

TEST_CASE("quantile critic recovers a two-point reward distribution") {
  for (bool midpoints : {true, false}) {
    CAPTURE(midpoints);
    AgentConfig cfg;
    cfg.n_quantiles = 20;
    cfg.midpoint_quantiles = midpoints;
    cfg.lr_critic = 5e-3;
    auto critic = AgentNet::random(NetworkShape{1, 0, 8, 0}, kNumActions * cfg.n_quantiles, 1);
    const auto actor = constant_net(1, {0.0, 0.0, 0.0});
    AdamState opt(critic.parameter_count(), cfg.lr_critic);
    std::mt19937_64 rng(2);
    std::bernoulli_distribution coin(0.5);
    std::uniform_int_distribution<std::size_t> a(0, 2);
    for (int it = 0; it < 5000; ++it) {
      Batch b;
      b.obs_dim = 1;
      for (int k = 0; k < 64; ++k) b.push({{1.0}, a(rng), coin(rng) ? 10.0 : 0.0, {1.0}, true});
      const auto t = critic_targets(b, actor, critic, cfg);
      const auto l = critic_loss(b, critic, t, cfg);
      opt.apply(critic.parameters(), l.grads);
    }
    const auto taus = quantile_levels(cfg.n_quantiles, midpoints);
    const double obs[] = {1.0};
    const auto q = critic.forward(obs);
    for (std::size_t act_i = 0; act_i < kNumActions; ++act_i) {
      for (std::size_t i = 0; i < cfg.n_quantiles; ++i) {
        CAPTURE(act_i);
        CAPTURE(taus[i]);
        const double v = q[act_i * cfg.n_quantiles + i];
        if (taus[i] < 0.5) CHECK(std::abs(v) < 0.5);
        // At tau = 1 every value at or above the largest sample minimizes the loss.
        if (taus[i] == 1.0) {
          CHECK(v > 9.5);
        } else if (taus[i] > 0.5) {
          CHECK(std::abs(v - 10.0) < 0.5);
        }
      }
    }
  }
}

TEST_CASE("agent checkpoint round trip") {
  const auto dir = scratch_dir("agent");
  AgentConfig cfg;
  cfg.hidden = 8;
  cfg.embedding = 4;
  cfg.midpoint_quantiles = true;
  cfg.reward_scale = 0.25;
  for (auto v : {AgentVariant::Base, AgentVariant::MpcGuided}) {
    auto ag = build_agent(v, observation_layout(v), cfg, 17);
    ag.target_critic.parameters()[0] += 0.5;
    ag.updates = 42;
    save_agent(dir / variant_name(v), ag, {17, 99});
    CheckpointMeta meta;
    const auto back = load_agent(dir / variant_name(v), &meta);
    CHECK(back.variant == v);
    CHECK(back.actor == ag.actor);
    CHECK(back.critic == ag.critic);
    CHECK(back.target_critic == ag.target_critic);
    CHECK(back.updates == 42);
    CHECK(back.cfg.midpoint_quantiles);
    CHECK(back.cfg.reward_scale == 0.25);
    CHECK(meta.seed == 17);
    CHECK(meta.step == 99);
  }
  CHECK(std::filesystem::exists(dir / "mpc_guided" / "actor_encoder.ckpt"));
  CHECK(std::filesystem::exists(dir / "base" / "actor.ckpt"));
  CHECK_THROWS_AS(load_agent(dir / "nothing"), ValidationError);
  std::filesystem::remove_all(dir);
}
