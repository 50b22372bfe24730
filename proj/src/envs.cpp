#include "bmdp/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bmdp/analysis.hpp"
#include "bmdp/errors.hpp"

namespace bmdp {

namespace {

std::vector<double> random_simplex(Prng& rng, int dim) {
  std::vector<double> v(static_cast<std::size_t>(dim));
  double total = 0.0;
  for (double& x : v) {
    x = -std::log(1.0 - rng.uniform());  // Exp(1) draws normalize to Dirichlet(1)
    total += x;
  }
  for (double& x : v) x /= total;
  return v;
}

std::vector<int> random_permutation(Prng& rng, int n) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(rng.uniform_int(i + 1))]);
  return perm;
}

// Decoys permute the observation-to-state assignment; each must differ from
// the truth on at least one observation.
ConceptClass with_decoys(std::vector<int> truth, int num_states, int decoys, Prng rng) {
  const int X = static_cast<int>(truth.size());
  std::vector<std::vector<int>> members;
  members.push_back(truth);
  for (int d = 0; d < decoys; ++d) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      std::vector<int> perm = random_permutation(rng, X);
      std::vector<int> decoy(static_cast<std::size_t>(X));
      for (int x = 0; x < X; ++x) decoy[static_cast<std::size_t>(x)] = truth[static_cast<std::size_t>(perm[static_cast<std::size_t>(x)])];
      if (decoy != truth) {
        members.push_back(std::move(decoy));
        break;
      }
    }
  }
  return ConceptClass(X, num_states, std::move(members), 0);
}

std::vector<std::vector<double>> uniform_group_emissions(int horizon, int num_states, int num_obs,
                                                         const std::vector<int>& decoder) {
  std::vector<double> layer(static_cast<std::size_t>(num_states) * num_obs, 0.0);
  std::vector<int> group_size(static_cast<std::size_t>(num_states), 0);
  for (int x = 0; x < num_obs; ++x) ++group_size[static_cast<std::size_t>(decoder[static_cast<std::size_t>(x)])];
  for (int x = 0; x < num_obs; ++x) {
    const int s = decoder[static_cast<std::size_t>(x)];
    layer[static_cast<std::size_t>(s) * num_obs + static_cast<std::size_t>(x)] =
        1.0 / group_size[static_cast<std::size_t>(s)];
  }
  return std::vector<std::vector<double>>(static_cast<std::size_t>(horizon), layer);
}

}  // namespace

std::vector<int> lock_hidden_actions(int horizon, int num_actions, std::uint64_t seed) {
  Prng rng = Prng(seed).child("lock-actions");
  std::vector<int> actions(static_cast<std::size_t>(std::max(horizon - 1, 0)));
  for (int& a : actions) a = rng.uniform_int(num_actions);
  return actions;
}

GeneratedEnv make_lock(int horizon, int num_actions, double noise, int emissions_per_state,
                       std::uint64_t seed, int decoys) {
  if (!(noise >= 0.0 && noise < 0.5)) throw ModelInvariantViolation("lock-noise", "noise must be in [0, 1/2)");
  const int S = 2, good = 0, bad = 1;
  const int X = 2 * emissions_per_state;
  const std::vector<int> hidden = lock_hidden_actions(horizon, num_actions, seed);

  std::vector<double> p1(static_cast<std::size_t>(S), 0.0);
  p1[good] = 1.0;
  std::vector<std::vector<double>> trans;
  for (int h = 2; h <= horizon; ++h) {
    std::vector<double> layer(static_cast<std::size_t>(S) * num_actions * S, 0.0);
    auto cell = [&](int s, int a, int s2) -> double& {
      return layer[static_cast<std::size_t>((s * num_actions + a)) * S + static_cast<std::size_t>(s2)];
    };
    const int a_star = hidden[static_cast<std::size_t>(h - 2)];
    for (int a = 0; a < num_actions; ++a) {
      if (a == a_star) {
        cell(good, a, good) = 1.0 - noise;
        cell(good, a, bad) = noise;
      } else {
        cell(good, a, bad) = 1.0;
      }
      cell(bad, a, bad) = 1.0;
    }
    trans.push_back(std::move(layer));
  }

  std::vector<int> decoder(static_cast<std::size_t>(X));
  for (int x = 0; x < X; ++x) decoder[static_cast<std::size_t>(x)] = x < emissions_per_state ? good : bad;

  auto concepts = std::make_shared<const ConceptClass>(
      with_decoys(decoder, S, decoys, Prng(seed).child("lock-decoys")));
  BlockMdp mdp(LatentModel(horizon, S, num_actions, std::move(p1), std::move(trans)),
               ObservationModel(horizon, S, X, uniform_group_emissions(horizon, S, X, decoder), decoder),
               concepts);
  return GeneratedEnv{std::move(mdp), concepts};
}

GeneratedEnv make_random_block(int horizon, int num_states, int num_actions, int num_obs,
                               double min_reach, std::uint64_t seed, int decoys) {
  if (!(min_reach > 0.0 && min_reach <= 1.0))
    throw ModelInvariantViolation("reach-floor", "min_reach must be in (0, 1]");
  if (num_obs < num_states)
    throw ModelInvariantViolation("obs-per-state", "need |X| >= |S| for nonempty decoder preimages");
  Prng rng = Prng(seed).child("random-block");

  const bool deterministic_path = min_reach == 1.0;
  if (deterministic_path && num_actions < num_states)
    throw ModelInvariantViolation("reach-floor", "min_reach = 1 requires |A| >= |S|");

  for (int attempt = 0; attempt < 500; ++attempt) {
    Prng draw = rng.child("attempt", static_cast<std::uint64_t>(attempt));

    // Decoder: every state gets one dedicated observation, the rest spread at random.
    std::vector<int> decoder(static_cast<std::size_t>(num_obs));
    std::vector<int> perm = random_permutation(draw, num_obs);
    for (int i = 0; i < num_obs; ++i)
      decoder[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] =
          i < num_states ? i : draw.uniform_int(num_states);

    std::vector<double> p1;
    std::vector<std::vector<double>> trans;
    if (deterministic_path) {
      p1.assign(static_cast<std::size_t>(num_states), 0.0);
      p1[0] = 1.0;
      for (int h = 2; h <= horizon; ++h) {
        std::vector<double> layer(static_cast<std::size_t>(num_states) * num_actions * num_states, 0.0);
        for (int s = 0; s < num_states; ++s)
          for (int a = 0; a < num_actions; ++a)
            layer[static_cast<std::size_t>((s * num_actions + a)) * num_states +
                  static_cast<std::size_t>(std::min(a, num_states - 1))] = 1.0;
        trans.push_back(std::move(layer));
      }
    } else {
      p1 = random_simplex(draw, num_states);
      for (int h = 2; h <= horizon; ++h) {
        std::vector<double> layer;
        layer.reserve(static_cast<std::size_t>(num_states) * num_actions * num_states);
        for (int i = 0; i < num_states * num_actions; ++i) {
          std::vector<double> row = random_simplex(draw, num_states);
          layer.insert(layer.end(), row.begin(), row.end());
        }
        trans.push_back(std::move(layer));
      }
    }

    std::vector<std::vector<double>> emissions;
    emissions.reserve(static_cast<std::size_t>(horizon));
    for (int h = 1; h <= horizon; ++h) {
      std::vector<double> layer(static_cast<std::size_t>(num_states) * num_obs, 0.0);
      for (int s = 0; s < num_states; ++s) {
        std::vector<int> group;
        for (int x = 0; x < num_obs; ++x)
          if (decoder[static_cast<std::size_t>(x)] == s) group.push_back(x);
        std::vector<double> weights = random_simplex(draw, static_cast<int>(group.size()));
        for (std::size_t i = 0; i < group.size(); ++i)
          layer[static_cast<std::size_t>(s) * num_obs + static_cast<std::size_t>(group[i])] = weights[i];
      }
      emissions.push_back(std::move(layer));
    }

    BlockMdp candidate(LatentModel(horizon, num_states, num_actions, p1, trans),
                       ObservationModel(horizon, num_states, num_obs, emissions, decoder));
    bool ok = true;
    for (int h = 2; h <= horizon && ok; ++h)
      for (int s = 0; s < num_states && ok; ++s)
        if (max_reach_value(candidate, h, s) < min_reach) ok = false;
    if (!ok) continue;

    auto concepts = std::make_shared<const ConceptClass>(
        with_decoys(decoder, num_states, decoys, Prng(seed).child("decoys")));
    BlockMdp mdp(LatentModel(horizon, num_states, num_actions, std::move(p1), std::move(trans)),
                 ObservationModel(horizon, num_states, num_obs, std::move(emissions), decoder), concepts);
    return GeneratedEnv{std::move(mdp), concepts};
  }
  throw GenerationTimeout("make_random_block: no instance met min_reach after 500 attempts");
}

namespace {

void check_spec_support(const ConceptClass& cc, const std::vector<std::vector<double>>& q,
                        const char* which) {
  for (int s = 0; s < cc.num_states(); ++s) {
    const auto& row = q[static_cast<std::size_t>(s)];
    if (static_cast<int>(row.size()) != cc.num_obs())
      throw RealizabilityViolation(std::string(which) + " row size mismatch");
    for (int x = 0; x < cc.num_obs(); ++x)
      if (row[static_cast<std::size_t>(x)] > 0.0 && cc.truth_for_verification()[static_cast<std::size_t>(x)] != s)
        throw RealizabilityViolation(std::string(which) + " puts mass outside the decoder preimage");
  }
}

}  // namespace

OneContextDataset make_one_context_instance(const ConceptClass& phi_class,
                                            const std::vector<double>& f1,
                                            const OneContextDistSpec& spec, long n, Prng rng) {
  check_spec_support(phi_class, spec.q, "q");
  const auto& phi = phi_class.truth_for_verification();
  OneContextDataset data;
  data.rows.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const int s = rng.categorical(spec.latent);
    const int x = rng.categorical(spec.q[static_cast<std::size_t>(s)]);
    const int y = rng.bernoulli(f1[static_cast<std::size_t>(phi[static_cast<std::size_t>(x)])]) ? 1 : 0;
    data.rows.push_back({x, y});
  }
  return data;
}

TwoContextDataset make_two_context_instance(const ConceptClass& phi_class,
                                            const std::vector<double>& f2,
                                            const TwoContextDistSpec& spec, long n, Prng rng) {
  check_spec_support(phi_class, spec.q1, "q1");
  check_spec_support(phi_class, spec.q2, "q2");
  const auto& phi = phi_class.truth_for_verification();
  const int S = phi_class.num_states();
  TwoContextDataset data;
  data.rows.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const int joint = rng.categorical(spec.latent_joint);
    const int s1 = joint / S, s2 = joint % S;
    const int x1 = rng.categorical(spec.q1[static_cast<std::size_t>(s1)]);
    const int x2 = rng.categorical(spec.q2[static_cast<std::size_t>(s2)]);
    const double p = f2[static_cast<std::size_t>(phi[static_cast<std::size_t>(x1)]) * S +
                        static_cast<std::size_t>(phi[static_cast<std::size_t>(x2)])];
    data.rows.push_back({x1, x2, rng.bernoulli(p) ? 1 : 0});
  }
  return data;
}

std::vector<double> joint_table(const ConceptClass& phi_class, const TwoContextDistSpec& spec) {
  const int X = phi_class.num_obs(), S = phi_class.num_states();
  const auto& phi = phi_class.truth_for_verification();
  std::vector<double> joint(static_cast<std::size_t>(X) * X, 0.0);
  for (int x1 = 0; x1 < X; ++x1)
    for (int x2 = 0; x2 < X; ++x2) {
      const int s1 = phi[static_cast<std::size_t>(x1)], s2 = phi[static_cast<std::size_t>(x2)];
      joint[static_cast<std::size_t>(x1) * X + static_cast<std::size_t>(x2)] =
          spec.latent_joint[static_cast<std::size_t>(s1) * S + static_cast<std::size_t>(s2)] *
          spec.q1[static_cast<std::size_t>(s1)][static_cast<std::size_t>(x1)] *
          spec.q2[static_cast<std::size_t>(s2)][static_cast<std::size_t>(x2)];
    }
  return joint;
}

namespace {

std::vector<std::vector<double>> random_group_weights(const ConceptClass& cc, Prng& rng) {
  const int S = cc.num_states(), X = cc.num_obs();
  const auto& phi = cc.truth_for_verification();
  std::vector<std::vector<double>> q(static_cast<std::size_t>(S),
                                     std::vector<double>(static_cast<std::size_t>(X), 0.0));
  for (int s = 0; s < S; ++s) {
    std::vector<int> group;
    for (int x = 0; x < X; ++x)
      if (phi[static_cast<std::size_t>(x)] == s) group.push_back(x);
    std::vector<double> w = random_simplex(rng, static_cast<int>(group.size()));
    for (std::size_t i = 0; i < group.size(); ++i)
      q[static_cast<std::size_t>(s)][static_cast<std::size_t>(group[i])] = w[i];
  }
  return q;
}

}  // namespace

OneContextDistSpec random_one_context_spec(const ConceptClass& phi_class, Prng rng) {
  OneContextDistSpec spec;
  spec.latent = random_simplex(rng, phi_class.num_states());
  spec.q = random_group_weights(phi_class, rng);
  return spec;
}

TwoContextDistSpec random_two_context_spec(const ConceptClass& phi_class, Prng rng) {
  TwoContextDistSpec spec;
  spec.latent_joint = random_simplex(rng, phi_class.num_states() * phi_class.num_states());
  spec.q1 = random_group_weights(phi_class, rng);
  spec.q2 = random_group_weights(phi_class, rng);
  return spec;
}

}  // namespace bmdp
