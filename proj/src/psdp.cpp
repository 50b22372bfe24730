#include "bmdp/psdp.hpp"

#include <algorithm>
#include <cassert>

namespace bmdp {

namespace {

Policy greedy_suffix(int num_actions, int first_layer, const std::vector<std::vector<Predictor1>>& qhat,
                     int upto_layer) {
  std::vector<std::vector<ScoreFn>> scores;
  for (int g = first_layer; g <= upto_layer; ++g) {
    std::vector<ScoreFn> row;
    row.reserve(static_cast<std::size_t>(num_actions));
    for (const Predictor1& p : qhat[static_cast<std::size_t>(g - 1)])
      row.push_back([p](int x) { return p(x); });
    scores.push_back(std::move(row));
  }
  return make_argmax_policy(num_actions, first_layer, std::move(scores));
}

}  // namespace

Policy psdp(int k, const OneContextOracle& reg1, const RewardFn& reward,
            std::span<const PolicySet> psi, const PolicySet& gamma, long num_samples,
            RolloutEnv& env, Prng rng, double eps, double delta) {
  const int A = env.num_actions();
  if (k == 0) return make_uniform_policy(A);
  assert(k >= 1 && k + 1 <= env.horizon());
  assert(static_cast<int>(psi.size()) >= k);

  std::vector<std::vector<Predictor1>> qhat(static_cast<std::size_t>(k));
  Policy continuation = make_uniform_policy(A);  // pihat^{h+1:k}, empty at h = k

  for (int h = k; h >= 1; --h) {
    PolicyMixture mix(psi[static_cast<std::size_t>(h - 1)], gamma, A);
    Prng layer_rng = rng.child("psdp-layer", static_cast<std::uint64_t>(h));
    std::vector<Predictor1> per_action;
    per_action.reserve(static_cast<std::size_t>(A));
    for (int a = 0; a < A; ++a) {
      Prng action_rng = layer_rng.child("action", static_cast<std::uint64_t>(a));
      Policy arm = make_fixed_sequence_policy(A, std::vector<int>(static_cast<std::size_t>(k), a));
      OneContextDataset data;
      data.rows.reserve(static_cast<std::size_t>(num_samples));
      for (long i = 0; i < num_samples; ++i) {
        Policy roll = compose(compose(mix.sample(action_rng), h, arm), h + 1, continuation);
        Trajectory t = env.sample_episode_prefix(roll, k + 1);
        const int x_h = t.observations[static_cast<std::size_t>(h - 1)];
        const int r = action_rng.bernoulli(reward(t.observations[static_cast<std::size_t>(k)])) ? 1 : 0;
        data.rows.push_back({x_h, r});
      }
      FitContext ctx;
      ctx.kind = FitContext::Kind::psdp_q;
      ctx.layer = h;
      ctx.action = a;
      ctx.reward = &reward;
      ctx.continuation = &continuation;
      ctx.k_layer = k;
      per_action.push_back(reg1(data, eps, delta, ctx));
    }
    qhat[static_cast<std::size_t>(h - 1)] = std::move(per_action);
    continuation = greedy_suffix(A, h, qhat, k);
  }
  return continuation;  // pihat^{1:k}
}

TrueQ true_q(const BlockMdp& mdp, const Policy& pi, int k, const RewardFn& reward) {
  const int S = mdp.num_states(), A = mdp.num_actions(), X = mdp.num_obs();
  assert(k >= 0 && k + 1 <= mdp.horizon());
  TrueQ out;
  out.k = k;
  out.q.assign(static_cast<std::size_t>(k + 1), std::vector<double>(static_cast<std::size_t>(X) * A, 0.0));
  out.v.assign(static_cast<std::size_t>(k + 1), std::vector<double>(static_cast<std::size_t>(X), 0.0));

  auto reward_at = [&](int x) { return x == mdp.terminal_obs() ? 0.0 : reward(x); };

  // Layer k+1: Q(x, a) = V(x) = R(x).
  for (int x = 0; x < X; ++x) {
    const double r = reward_at(x);
    out.v[static_cast<std::size_t>(k)][static_cast<std::size_t>(x)] = r;
    for (int a = 0; a < A; ++a)
      out.q[static_cast<std::size_t>(k)][static_cast<std::size_t>(x) * A + static_cast<std::size_t>(a)] = r;
  }

  std::vector<double> probs(static_cast<std::size_t>(A));
  for (int g = k; g >= 1; --g) {
    const auto& v_next = out.v[static_cast<std::size_t>(g)];
    // EV[s'] = sum_x O_{g+1}(x|s') V_{g+1}(x); Q factors through the latent class.
    std::vector<double> ev(static_cast<std::size_t>(S), 0.0);
    for (int s = 0; s < S; ++s) {
      auto row = mdp.obs().row(g + 1, s);
      double acc = 0.0;
      for (int x = 0; x < X; ++x) acc += row[static_cast<std::size_t>(x)] * v_next[static_cast<std::size_t>(x)];
      ev[static_cast<std::size_t>(s)] = acc;
    }
    std::vector<double> w(static_cast<std::size_t>(S) * A, 0.0);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        auto row = mdp.latent().row(g + 1, s, a);
        double acc = 0.0;
        for (int s2 = 0; s2 < S; ++s2) acc += row[static_cast<std::size_t>(s2)] * ev[static_cast<std::size_t>(s2)];
        w[static_cast<std::size_t>(s) * A + static_cast<std::size_t>(a)] = acc;
      }
    auto& q_g = out.q[static_cast<std::size_t>(g - 1)];
    auto& v_g = out.v[static_cast<std::size_t>(g - 1)];
    for (int x = 0; x < X; ++x) {
      const int s = mdp.decode(x);
      for (int a = 0; a < A; ++a)
        q_g[static_cast<std::size_t>(x) * A + static_cast<std::size_t>(a)] =
            w[static_cast<std::size_t>(s) * A + static_cast<std::size_t>(a)];
      if (x == mdp.terminal_obs()) {
        v_g[static_cast<std::size_t>(x)] = q_g[static_cast<std::size_t>(x) * A];
      } else {
        pi.action_probs(g, x, probs);
        double acc = 0.0;
        for (int a = 0; a < A; ++a)
          acc += probs[static_cast<std::size_t>(a)] * q_g[static_cast<std::size_t>(x) * A + static_cast<std::size_t>(a)];
        v_g[static_cast<std::size_t>(x)] = acc;
      }
    }
  }
  return out;
}

double expected_reward(const BlockMdp& mdp, const Policy& pi, int k, const RewardFn& reward) {
  VisitationTable t = exact_visitation(mdp, pi);
  double acc = 0.0;
  for (int x = 0; x < mdp.num_obs(); ++x) {
    if (x == mdp.terminal_obs()) continue;
    acc += t.observation(k + 1, x) * reward(x);
  }
  return acc;
}

double optimal_expected_reward(const BlockMdp& mdp, int k, const RewardFn& reward) {
  const int S = mdp.num_states(), A = mdp.num_actions(), X = mdp.num_obs();
  std::vector<double> value(static_cast<std::size_t>(S), 0.0);
  for (int s = 0; s < S; ++s) {
    auto row = mdp.obs().row(k + 1, s);
    double acc = 0.0;
    for (int x = 0; x < X; ++x)
      if (x != mdp.terminal_obs()) acc += row[static_cast<std::size_t>(x)] * reward(x);
    value[static_cast<std::size_t>(s)] = acc;
  }
  for (int g = k; g >= 1; --g) {
    std::vector<double> prev(static_cast<std::size_t>(S), 0.0);
    for (int s = 0; s < S; ++s) {
      double best = -1.0;
      for (int a = 0; a < A; ++a) {
        auto row = mdp.latent().row(g + 1, s, a);
        double v = 0.0;
        for (int s2 = 0; s2 < S; ++s2) v += row[static_cast<std::size_t>(s2)] * value[static_cast<std::size_t>(s2)];
        best = std::max(best, v);
      }
      prev[static_cast<std::size_t>(s)] = best;
    }
    value.swap(prev);
  }
  double out = 0.0;
  auto p1 = mdp.latent().initial();
  for (int s = 0; s < S; ++s) out += p1[static_cast<std::size_t>(s)] * value[static_cast<std::size_t>(s)];
  return out;
}

}  // namespace bmdp
