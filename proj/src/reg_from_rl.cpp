#include "bmdp/reg_from_rl.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <memory>
#include <unordered_map>

#include "bmdp/errors.hpp"

namespace bmdp {

std::vector<double> make_action_grid(double eps_a) {
  assert(eps_a > 0.0 && eps_a <= 1.0);
  const int top = static_cast<int>(std::floor(1.0 / eps_a));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(top) + 1);
  for (int k = 0; k <= top; ++k) grid.push_back(k * eps_a);
  return grid;
}

double policy_action_value(const Policy& pi, const std::vector<double>& grid, int x) {
  std::vector<double> probs = pi.action_dist(1, x);
  double v = 0.0;
  for (std::size_t a = 0; a < grid.size(); ++a) v += probs[a] * grid[a];
  return v;
}

namespace {

// E_{y ~ Ber(p)} (a - y)^2.
double expected_sq_err(double a, double p) { return (1.0 - p) * a * a + p * (1.0 - a) * (1.0 - a); }

struct JointMarginals {
  std::vector<double> m1, m2;        // observation marginals
  std::vector<double> p1, p2;        // latent marginals
  std::vector<double> latent_joint;  // p~(s1, s2)
};

JointMarginals joint_marginals(const TwoContextTruth& t) {
  const int X = static_cast<int>(t.phi_star.size()), S = t.num_states;
  JointMarginals m;
  m.m1.assign(static_cast<std::size_t>(X), 0.0);
  m.m2.assign(static_cast<std::size_t>(X), 0.0);
  m.p1.assign(static_cast<std::size_t>(S), 0.0);
  m.p2.assign(static_cast<std::size_t>(S), 0.0);
  m.latent_joint.assign(static_cast<std::size_t>(S) * S, 0.0);
  for (int x1 = 0; x1 < X; ++x1)
    for (int x2 = 0; x2 < X; ++x2) {
      const double w = t.joint[static_cast<std::size_t>(x1) * X + static_cast<std::size_t>(x2)];
      if (w == 0.0) continue;
      m.m1[static_cast<std::size_t>(x1)] += w;
      m.m2[static_cast<std::size_t>(x2)] += w;
      m.latent_joint[static_cast<std::size_t>(t.phi_star[static_cast<std::size_t>(x1)]) * S +
                     static_cast<std::size_t>(t.phi_star[static_cast<std::size_t>(x2)])] += w;
    }
  for (int x = 0; x < X; ++x) {
    m.p1[static_cast<std::size_t>(t.phi_star[static_cast<std::size_t>(x)])] += m.m1[static_cast<std::size_t>(x)];
    m.p2[static_cast<std::size_t>(t.phi_star[static_cast<std::size_t>(x)])] += m.m2[static_cast<std::size_t>(x)];
  }
  return m;
}

void check_realizable(const TwoContextTruth& t, const JointMarginals& m) {
  const int X = static_cast<int>(t.phi_star.size()), S = t.num_states;
  double total = 0.0;
  for (double w : t.joint) {
    if (w < 0.0) throw RealizabilityViolation("joint has a negative entry");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw RealizabilityViolation("joint does not sum to 1");
  for (int x1 = 0; x1 < X; ++x1)
    for (int x2 = 0; x2 < X; ++x2) {
      const double w = t.joint[static_cast<std::size_t>(x1) * X + static_cast<std::size_t>(x2)];
      const int s1 = t.phi_star[static_cast<std::size_t>(x1)], s2 = t.phi_star[static_cast<std::size_t>(x2)];
      const double ps1 = m.p1[static_cast<std::size_t>(s1)], ps2 = m.p2[static_cast<std::size_t>(s2)];
      double expect = 0.0;
      if (ps1 > 0.0 && ps2 > 0.0)
        expect = m.latent_joint[static_cast<std::size_t>(s1) * S + static_cast<std::size_t>(s2)] *
                 (m.m1[static_cast<std::size_t>(x1)] / ps1) * (m.m2[static_cast<std::size_t>(x2)] / ps2);
      if (std::abs(w - expect) > 1e-9)
        throw RealizabilityViolation("joint fails the conditional-independence factorization");
    }
}

// Emission row over the augmented observation space for a base latent state,
// from an observation marginal. Zero-mass states emit uniformly over their
// decoder preimage.
std::vector<double> emission_row(const std::vector<int>& phi, int num_aug_obs, int s,
                                 const std::vector<double>& marginal, double state_mass) {
  const int X = static_cast<int>(phi.size());
  std::vector<double> row(static_cast<std::size_t>(num_aug_obs), 0.0);
  if (state_mass > 0.0) {
    for (int x = 0; x < X; ++x)
      if (phi[static_cast<std::size_t>(x)] == s)
        row[static_cast<std::size_t>(x)] = marginal[static_cast<std::size_t>(x)] / state_mass;
    return row;
  }
  int preimage = 0;
  for (int x = 0; x < X; ++x)
    if (phi[static_cast<std::size_t>(x)] == s) ++preimage;
  if (preimage == 0)
    throw ModelInvariantViolation("gadget-state-emission",
                                  "latent state " + std::to_string(s) + " has no observations");
  for (int x = 0; x < X; ++x)
    if (phi[static_cast<std::size_t>(x)] == s) row[static_cast<std::size_t>(x)] = 1.0 / preimage;
  return row;
}

}  // namespace

BlockMdp gadget_mdp(const TwoContextTruth& truth, double eps_a) {
  const int X = static_cast<int>(truth.phi_star.size()), S = truth.num_states;
  JointMarginals m = joint_marginals(truth);
  check_realizable(truth, m);
  const std::vector<double> grid = make_action_grid(eps_a);
  const int A = static_cast<int>(grid.size());
  const AugLayout lay{X, S};
  const int Xa = lay.num_obs(), Sa = lay.num_states();

  std::vector<double> p1(static_cast<std::size_t>(Sa), 0.0);
  for (int s = 0; s < S; ++s) p1[static_cast<std::size_t>(s)] = m.p1[static_cast<std::size_t>(s)];

  std::vector<double> trans(static_cast<std::size_t>(Sa) * A * Sa, 0.0);
  auto cell = [&](int s, int a, int s2) -> double& {
    return trans[static_cast<std::size_t>((s * A + a)) * Sa + static_cast<std::size_t>(s2)];
  };
  for (int s1 = 0; s1 < S; ++s1) {
    const double ps1 = m.p1[static_cast<std::size_t>(s1)];
    for (int a = 0; a < A; ++a) {
      if (ps1 == 0.0) {
        cell(s1, a, lay.state0()) = 1.0;  // unreachable; any valid row
        continue;
      }
      double fail = 0.0;
      for (int s2 = 0; s2 < S; ++s2) {
        const double cond = m.latent_joint[static_cast<std::size_t>(s1) * S + static_cast<std::size_t>(s2)] / ps1;
        if (cond == 0.0) continue;
        const double err = expected_sq_err(grid[static_cast<std::size_t>(a)],
                                           truth.f2[static_cast<std::size_t>(s1) * S + static_cast<std::size_t>(s2)]);
        cell(s1, a, s2) = cond * (1.0 - err);
        fail += cond * err;
      }
      cell(s1, a, lay.state0()) = fail;
    }
  }
  for (int a = 0; a < A; ++a) {
    cell(lay.state0(), a, lay.state0()) = 1.0;
    cell(lay.state1(), a, lay.state1()) = 1.0;
  }

  std::vector<std::vector<double>> emis(2);
  for (int layer = 0; layer < 2; ++layer) {
    std::vector<double> e(static_cast<std::size_t>(Sa) * Xa, 0.0);
    const auto& marginal = layer == 0 ? m.m1 : m.m2;
    const auto& mass = layer == 0 ? m.p1 : m.p2;
    for (int s = 0; s < S; ++s) {
      std::vector<double> row = emission_row(truth.phi_star, Xa, s, marginal, mass[static_cast<std::size_t>(s)]);
      std::copy(row.begin(), row.end(), e.begin() + static_cast<std::size_t>(s) * Xa);
    }
    e[static_cast<std::size_t>(lay.state0()) * Xa + static_cast<std::size_t>(lay.obs0())] = 1.0;
    e[static_cast<std::size_t>(lay.state1()) * Xa + static_cast<std::size_t>(lay.obs1())] = 1.0;
    emis[static_cast<std::size_t>(layer)] = std::move(e);
  }

  std::vector<int> decoder = truth.phi_star;
  decoder.push_back(lay.state0());
  decoder.push_back(lay.state1());
  return BlockMdp(LatentModel(2, Sa, A, std::move(p1), {std::move(trans)}),
                  ObservationModel(2, Sa, Xa, std::move(emis), std::move(decoder)));
}

BlockMdp one_red_gadget_mdp(const OneContextTruth& truth, double eps_a) {
  const int X = static_cast<int>(truth.phi_star.size()), S = truth.num_states;
  const std::vector<double> grid = make_action_grid(eps_a);
  const int A = static_cast<int>(grid.size());
  const AugLayout lay{X, S};
  const int Xa = lay.num_obs(), Sa = lay.num_states();

  std::vector<double> class_mass(static_cast<std::size_t>(S), 0.0);
  for (int x = 0; x < X; ++x)
    class_mass[static_cast<std::size_t>(truth.phi_star[static_cast<std::size_t>(x)])] +=
        truth.marginal[static_cast<std::size_t>(x)];

  std::vector<double> p1(static_cast<std::size_t>(Sa), 0.0);
  for (int s = 0; s < S; ++s) p1[static_cast<std::size_t>(s)] = class_mass[static_cast<std::size_t>(s)];

  std::vector<double> trans(static_cast<std::size_t>(Sa) * A * Sa, 0.0);
  auto cell = [&](int s, int a, int s2) -> double& {
    return trans[static_cast<std::size_t>((s * A + a)) * Sa + static_cast<std::size_t>(s2)];
  };
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      const double err = expected_sq_err(grid[static_cast<std::size_t>(a)], truth.f1[static_cast<std::size_t>(s)]);
      cell(s, a, lay.state0()) = err;
      cell(s, a, lay.state1()) = 1.0 - err;
    }
  for (int a = 0; a < A; ++a) {
    cell(lay.state0(), a, lay.state0()) = 1.0;
    cell(lay.state1(), a, lay.state1()) = 1.0;
  }

  std::vector<std::vector<double>> emis(2);
  for (int layer = 0; layer < 2; ++layer) {
    std::vector<double> e(static_cast<std::size_t>(Sa) * Xa, 0.0);
    for (int s = 0; s < S; ++s) {
      std::vector<double> row =
          emission_row(truth.phi_star, Xa, s, truth.marginal, class_mass[static_cast<std::size_t>(s)]);
      std::copy(row.begin(), row.end(), e.begin() + static_cast<std::size_t>(s) * Xa);
    }
    e[static_cast<std::size_t>(lay.state0()) * Xa + static_cast<std::size_t>(lay.obs0())] = 1.0;
    e[static_cast<std::size_t>(lay.state1()) * Xa + static_cast<std::size_t>(lay.obs1())] = 1.0;
    emis[static_cast<std::size_t>(layer)] = std::move(e);
  }

  std::vector<int> decoder = truth.phi_star;
  decoder.push_back(lay.state0());
  decoder.push_back(lay.state1());
  return BlockMdp(LatentModel(2, Sa, A, std::move(p1), {std::move(trans)}),
                  ObservationModel(2, Sa, Xa, std::move(emis), std::move(decoder)));
}

LossTables loss_tables(const TwoContextTruth& truth, const std::vector<double>& grid, const Policy& pi,
                       int s) {
  const int X = static_cast<int>(truth.phi_star.size()), S = truth.num_states;
  LossTables out;
  std::vector<double> probs(grid.size());
  for (int x1 = 0; x1 < X; ++x1) {
    bool have_probs = false;
    for (int x2 = 0; x2 < X; ++x2) {
      if (truth.phi_star[static_cast<std::size_t>(x2)] != s) continue;
      const double w = truth.joint[static_cast<std::size_t>(x1) * X + static_cast<std::size_t>(x2)];
      if (w == 0.0) continue;
      const double f = truth.f2[static_cast<std::size_t>(truth.phi_star[static_cast<std::size_t>(x1)]) * S +
                                static_cast<std::size_t>(s)];
      if (!have_probs) {
        pi.action_probs(1, x1, probs);
        have_probs = true;
      }
      double sq = 0.0;
      for (std::size_t a = 0; a < grid.size(); ++a) sq += probs[a] * (grid[a] - f) * (grid[a] - f);
      out.l_s += w * sq;
      out.z_s += w * f * (1.0 - f);
    }
  }
  return out;
}

namespace {

class OneContextSimEnv final : public EpisodicEnv {
 public:
  OneContextSimEnv(const OneSample* rows, long allotted, std::vector<double> grid, AugLayout lay,
                   Prng rng, std::optional<BlockMdp> truth)
      : rows_(rows), allotted_(allotted), grid_(std::move(grid)), lay_(lay), rng_(rng),
        truth_(std::move(truth)) {}

  int horizon() const override { return 2; }
  int num_actions() const override { return static_cast<int>(grid_.size()); }
  long episodes_used() const override { return cursor_; }
  const BlockMdp* verification_model() const override { return truth_ ? &*truth_ : nullptr; }

  Trajectory sample_episode_prefix(const Policy& pi, int upto_layer) override {
    if (cursor_ >= allotted_)
      throw DatasetExhausted("one_red: oracle requested more episodes than samples remain");
    const OneSample r = rows_[cursor_++];
    Trajectory t;
    t.observations.push_back(r.x);
    if (upto_layer >= 2) {
      const int a = pi.sample_action(1, r.x, rng_);
      const double err = grid_[static_cast<std::size_t>(a)] - r.y;
      t.actions.push_back(a);
      t.observations.push_back(rng_.bernoulli(err * err) ? lay_.obs0() : lay_.obs1());
    }
    return t;
  }
  Trajectory sample_episode(const Policy& pi) override {
    Trajectory t = sample_episode_prefix(pi, 2);
    t.actions.push_back(pi.sample_action(2, t.observations.back(), rng_));
    return t;
  }

 private:
  const OneSample* rows_;
  long allotted_;
  long cursor_ = 0;
  std::vector<double> grid_;
  AugLayout lay_;
  Prng rng_;
  std::optional<BlockMdp> truth_;
};

class TwoContextSimEnv final : public EpisodicEnv {
 public:
  TwoContextSimEnv(const TwoSample* rows, long allotted, std::vector<double> grid, AugLayout lay,
                   Prng rng, std::optional<BlockMdp> truth)
      : rows_(rows), allotted_(allotted), grid_(std::move(grid)), lay_(lay), rng_(rng),
        truth_(std::move(truth)) {}

  int horizon() const override { return 2; }
  int num_actions() const override { return static_cast<int>(grid_.size()); }
  long episodes_used() const override { return cursor_; }
  const BlockMdp* verification_model() const override { return truth_ ? &*truth_ : nullptr; }

  Trajectory sample_episode_prefix(const Policy& pi, int upto_layer) override {
    if (cursor_ >= allotted_)
      throw DatasetExhausted("two_red: oracle requested more episodes than samples remain");
    const TwoSample r = rows_[cursor_++];
    Trajectory t;
    t.observations.push_back(r.x1);
    if (upto_layer >= 2) {
      const int a = pi.sample_action(1, r.x1, rng_);
      const double err = grid_[static_cast<std::size_t>(a)] - r.y;
      t.actions.push_back(a);
      t.observations.push_back(rng_.bernoulli(err * err) ? lay_.obs0() : r.x2);
    }
    return t;
  }
  Trajectory sample_episode(const Policy& pi) override {
    Trajectory t = sample_episode_prefix(pi, 2);
    t.actions.push_back(pi.sample_action(2, t.observations.back(), rng_));
    return t;
  }

 private:
  const TwoSample* rows_;
  long allotted_;
  long cursor_ = 0;
  std::vector<double> grid_;
  AugLayout lay_;
  Prng rng_;
  std::optional<BlockMdp> truth_;
};

class NoiselessResetSimEnv final : public ResetEnv {
 public:
  NoiselessResetSimEnv(const OneSample* rows, long allotted, std::vector<double> grid, AugLayout lay,
                       Prng rng, std::optional<BlockMdp> truth)
      : rows_(rows), allotted_(allotted), grid_(std::move(grid)), lay_(lay), rng_(rng),
        truth_(std::move(truth)) {}

  int horizon() const override { return 2; }
  int num_actions() const override { return static_cast<int>(grid_.size()); }
  long queries_used() const override { return queries_; }
  long episodes_used() const override { return episodes_; }
  long rows_consumed() const { return cursor_; }
  const BlockMdp* verification_model() const override { return truth_ ? &*truth_ : nullptr; }

  int reset_initial() override {
    if (cursor_ >= allotted_)
      throw DatasetExhausted("noiseless_one_red: oracle requested more samples than remain");
    ++queries_;
    const OneSample r = rows_[cursor_++];
    seen_label_[r.x] = r.y;
    return r.x;
  }

  int reset_step(int h, int x, int a) override {
    if (h != 1) throw std::logic_error("reset_step layer out of range for horizon 2");
    auto it = seen_label_.find(x);
    if (it == seen_label_.end())
      throw UnregisteredObservation("reset to observation " + std::to_string(x) + " never issued");
    ++queries_;
    const double err = grid_[static_cast<std::size_t>(a)] - it->second;
    return rng_.bernoulli(err * err) ? lay_.obs0() : lay_.obs1();
  }

  Trajectory sample_episode_prefix(const Policy& pi, int upto_layer) override {
    ++episodes_;
    Trajectory t;
    const int x = reset_initial();
    t.observations.push_back(x);
    if (upto_layer >= 2) {
      const int a = pi.sample_action(1, x, rng_);
      t.actions.push_back(a);
      t.observations.push_back(reset_step(1, x, a));
    }
    return t;
  }
  Trajectory sample_episode(const Policy& pi) override {
    Trajectory t = sample_episode_prefix(pi, 2);
    t.actions.push_back(pi.sample_action(2, t.observations.back(), rng_));
    return t;
  }

 private:
  const OneSample* rows_;
  long allotted_;
  long cursor_ = 0;
  long queries_ = 0;
  long episodes_ = 0;
  std::vector<double> grid_;
  AugLayout lay_;
  Prng rng_;
  std::optional<BlockMdp> truth_;
  std::unordered_map<int, int> seen_label_;
};

long held_out_count(double eps, double delta, std::size_t psi_size) {
  const double m = 16.0 / (eps * eps) * std::log(4.0 * static_cast<double>(std::max<std::size_t>(psi_size, 1)) / delta);
  return static_cast<long>(std::ceil(m));
}

// argmin over psi of the held-out squared error, ties to lowest index.
std::size_t select_policy(const PolicySet& psi, const std::vector<double>& grid,
                          const OneSample* held, long m) {
  std::size_t best = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < psi.size(); ++p) {
    double loss = 0.0;
    for (long i = 0; i < m; ++i) {
      const double v = policy_action_value(psi[p], grid, held[i].x) - held[i].y;
      loss += v * v;
    }
    if (loss < best_loss) {
      best_loss = loss;
      best = p;
    }
  }
  return best;
}

}  // namespace

Predictor1 one_red(const EpisodicRlOracle& rl_oracle, const OneContextDataset& data, double eps,
                   double delta, const AugLayout& lay, Prng rng, const OneContextTruth* truth) {
  const long n = static_cast<long>(data.size());
  const double eps_a = std::sqrt(eps / 4.0);
  std::vector<double> grid = make_action_grid(eps_a);
  const long demand = rl_oracle.episode_demand(eps / 4.0, delta / 2.0, 2, static_cast<int>(grid.size()));
  if (demand > n)
    throw DatasetExhausted("one_red: oracle demands " + std::to_string(demand) + " episodes, have " +
                           std::to_string(n));

  std::optional<BlockMdp> model;
  if (truth) model = one_red_gadget_mdp(*truth, eps_a);
  OneContextSimEnv env(data.rows.data(), n, grid, lay, rng.child("sim"), std::move(model));
  PolicySet psi = rl_oracle.run(env, eps / 4.0, delta / 2.0, rng.child("oracle"));

  const long m = held_out_count(eps, delta, psi.size());
  if (env.episodes_used() > n - m)
    throw DatasetExhausted("one_red: oracle consumed into the held-out tail");
  const std::size_t best = select_policy(psi, grid, data.rows.data() + (n - m), m);
  const Policy chosen = psi[best];
  return Predictor1([chosen, grid](int x) { return policy_action_value(chosen, grid, x); }, "one_red");
}

Predictor1 noiseless_one_red(const ResetRlOracle& rl_oracle, const OneContextDataset& data, double eps,
                             double delta, const AugLayout& lay, Prng rng,
                             const OneContextTruth* truth) {
  const long n = static_cast<long>(data.size());
  {
    std::unordered_map<int, int> label;
    for (const auto& r : data.rows) {
      auto [it, inserted] = label.emplace(r.x, r.y);
      if (!inserted && it->second != r.y)
        throw NoiselessViolation("conflicting labels for observation " + std::to_string(r.x));
    }
  }
  const double eps_a = std::sqrt(eps / 4.0);
  std::vector<double> grid = make_action_grid(eps_a);
  const long demand = rl_oracle.query_demand(eps / 4.0, delta / 2.0, 2, static_cast<int>(grid.size()));
  if (demand > n)
    throw DatasetExhausted("noiseless_one_red: oracle demands " + std::to_string(demand) +
                           " queries, have " + std::to_string(n) + " samples");

  std::optional<BlockMdp> model;
  if (truth) model = one_red_gadget_mdp(*truth, eps_a);
  NoiselessResetSimEnv env(data.rows.data(), n, grid, lay, rng.child("sim"), std::move(model));
  PolicySet psi = rl_oracle.run(env, eps / 4.0, delta / 2.0, rng.child("oracle"));

  const long m = held_out_count(eps, delta, psi.size());
  if (env.rows_consumed() > n - m)
    throw DatasetExhausted("noiseless_one_red: oracle consumed into the held-out tail");
  const std::size_t best = select_policy(psi, grid, data.rows.data() + (n - m), m);
  const Policy chosen = psi[best];
  return Predictor1([chosen, grid](int x) { return policy_action_value(chosen, grid, x); },
                    "noiseless_one_red");
}

Predictor2 two_red(const EpisodicRlOracle& rl_oracle, const TwoContextDataset& data, double eps,
                   double delta, int S_count, const AugLayout& lay, Prng rng,
                   const TwoContextTruth* truth) {
  const long n = static_cast<long>(data.size());
  const long half = n / 2;
  const double eps_a = eps / (2.0 * S_count);
  std::vector<double> grid = make_action_grid(eps_a);
  const double eps_rl = eps * eps / (4.0 * S_count * S_count);
  const long demand = rl_oracle.episode_demand(eps_rl, delta / 2.0, 2, static_cast<int>(grid.size()));
  if (demand > half)
    throw DatasetExhausted("two_red: oracle demands " + std::to_string(demand) + " episodes, have " +
                           std::to_string(half));

  std::optional<BlockMdp> model;
  if (truth) model = gadget_mdp(*truth, eps_a);
  TwoContextSimEnv env(data.rows.data(), half, grid, lay, rng.child("sim"), std::move(model));
  PolicySet psi = rl_oracle.run(env, eps_rl, delta / 2.0, rng.child("oracle"));

  // Per-policy error functions on the second half, via one_red.
  JointMarginals marg;
  if (truth) marg = joint_marginals(*truth);
  std::vector<Predictor1> error_fn;
  error_fn.reserve(psi.size());
  Prng label_rng = rng.child("labels");
  const double inner_eps = std::pow(eps, 4) / (4.0 * std::pow(static_cast<double>(S_count), 4));
  for (std::size_t p = 0; p < psi.size(); ++p) {
    OneContextDataset c;
    c.rows.reserve(static_cast<std::size_t>(n - half));
    for (long i = half; i < n; ++i) {
      const TwoSample& r = data.rows[static_cast<std::size_t>(i)];
      const int a = psi[p].sample_action(1, r.x1, label_rng);
      const double err = grid[static_cast<std::size_t>(a)] - r.y;
      c.rows.push_back({r.x2, label_rng.bernoulli(err * err) ? 1 : 0});
    }
    std::optional<OneContextTruth> inner_truth;
    if (truth) {
      OneContextTruth it;
      it.phi_star = truth->phi_star;
      it.num_states = truth->num_states;
      it.marginal = marg.m2;
      it.f1.assign(static_cast<std::size_t>(truth->num_states), 0.0);
      for (int s = 0; s < truth->num_states; ++s) {
        const LossTables lt = loss_tables(*truth, grid, psi[p], s);
        const double mass = marg.p2[static_cast<std::size_t>(s)];
        it.f1[static_cast<std::size_t>(s)] = mass > 0.0 ? (lt.l_s + lt.z_s) / mass : 0.0;
      }
      inner_truth = std::move(it);
    }
    error_fn.push_back(one_red(rl_oracle, c, inner_eps, delta / (2.0 * static_cast<double>(psi.size())),
                               lay, rng.child("onered", static_cast<std::uint64_t>(p)),
                               inner_truth ? &*inner_truth : nullptr));
  }

  return Predictor2(
      [psi = std::move(psi), error_fn = std::move(error_fn), grid = std::move(grid)](int x1, int x2) {
        std::size_t best = 0;
        double best_err = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < error_fn.size(); ++p) {
          const double e = error_fn[p](x2);
          if (e < best_err) {
            best_err = e;
            best = p;
          }
        }
        return policy_action_value(psi[best], grid, x1);
      },
      "two_red");
}

Predictor2 reg_to_rl(const EpisodicRlOracle& rl_oracle, const TwoContextDataset& data_aug, double eps,
                     double delta, int S_count_base, const AugLayout& lay, Prng rng,
                     const TwoContextTruth* truth_aug) {
  auto call_index = std::make_shared<std::uint64_t>(0);
  auto base_rng = std::make_shared<Prng>(rng.child("cells"));
  TwoContextOracle inner = [&rl_oracle, S_count_base, lay, truth_aug, call_index, base_rng](
                               const TwoContextDataset& cell, double e, double d, const FitContext& ctx) {
    std::optional<TwoContextTruth> cell_truth;
    if (truth_aug && !cell.empty()) {
      // Project the augmented truth onto this cell: fixed coordinates pin the
      // special state and the padding observation, interior ones decode.
      const int X = lay.base_obs, S = lay.base_states;
      const int Xa = lay.num_obs();
      TwoContextTruth t;
      t.phi_star.assign(truth_aug->phi_star.begin(), truth_aug->phi_star.begin() + X);
      t.num_states = S;
      auto aug_obs_of = [&](FitContext::Resolve r) {
        return r == FitContext::Resolve::fixed0 ? lay.obs0() : lay.obs1();
      };
      auto aug_state_of = [&](FitContext::Resolve r) {
        return r == FitContext::Resolve::fixed0 ? lay.state0() : lay.state1();
      };
      const bool fix1 = ctx.resolve1 != FitContext::Resolve::decode;
      const bool fix2 = ctx.resolve2 != FitContext::Resolve::decode;
      const int pad1 = fix1 ? cell.rows.front().x1 : -1;
      const int pad2 = fix2 ? cell.rows.front().x2 : -1;
      t.joint.assign(static_cast<std::size_t>(X) * X, 0.0);
      double mass = 0.0;
      for (int u = 0; u < Xa; ++u)
        for (int v = 0; v < Xa; ++v) {
          const bool u_in_cell = fix1 ? u == aug_obs_of(ctx.resolve1) : lay.is_interior_obs(u);
          const bool v_in_cell = fix2 ? v == aug_obs_of(ctx.resolve2) : lay.is_interior_obs(v);
          if (!u_in_cell || !v_in_cell) continue;
          const double w = truth_aug->joint[static_cast<std::size_t>(u) * Xa + static_cast<std::size_t>(v)];
          if (w == 0.0) continue;
          mass += w;
          const int x1 = fix1 ? pad1 : u;
          const int x2 = fix2 ? pad2 : v;
          t.joint[static_cast<std::size_t>(x1) * X + static_cast<std::size_t>(x2)] += w;
        }
      if (mass > 0.0) {
        for (double& w : t.joint) w /= mass;
        const int Sa = lay.num_states();
        t.f2.assign(static_cast<std::size_t>(S) * S, 0.0);
        for (int s1 = 0; s1 < S; ++s1)
          for (int s2 = 0; s2 < S; ++s2) {
            const int a1 = fix1 ? aug_state_of(ctx.resolve1) : s1;
            const int a2 = fix2 ? aug_state_of(ctx.resolve2) : s2;
            t.f2[static_cast<std::size_t>(s1) * S + static_cast<std::size_t>(s2)] =
                truth_aug->f2[static_cast<std::size_t>(a1) * Sa + static_cast<std::size_t>(a2)];
          }
        cell_truth = std::move(t);
      }
    }
    return two_red(rl_oracle, cell, e, d, S_count_base, lay,
                   base_rng->child((*call_index)++), cell_truth ? &*cell_truth : nullptr);
  };
  return two_aug(inner, data_aug, eps, delta, lay);
}

long pco_episode_demand(int S_count, int H, int A, const PracticalOverrides& ov) {
  PcoParams p = pco_params_practical(S_count, H, A, ov);
  long total = 0;
  for (int h = 1; h < H; ++h) total += epco_episode_budget(h, A, p.config.layer, p.config.layer.n);
  return total * p.config.rounds;
}

long pcr_query_demand(int S_count, int H, int A, const PracticalOverrides& ov) {
  PcrParams p = pcr_params_practical(S_count, H, A, ov);
  long total = 0;
  for (int h = 1; h < H; ++h) total += epcr_query_budget(h, A, p.config.layer, p.config.layer.n);
  return total * p.config.rounds;
}

EpisodicRlOracle make_pco_rl_oracle(TwoContextOracle reg2, int S_count, PracticalOverrides ov) {
  EpisodicRlOracle oracle;
  oracle.episode_demand = [S_count, ov](double, double, int H, int A) {
    return pco_episode_demand(S_count, H, A, ov);
  };
  oracle.run = [reg2 = std::move(reg2), S_count, ov](EpisodicEnv& env, double, double, Prng rng) {
    PcoParams p = pco_params_practical(S_count, env.horizon(), env.num_actions(), ov);
    return pco(reg2, S_count, p.config, env, rng);
  };
  return oracle;
}

EpisodicRlOracle make_pco_bayes_rl_oracle(int S_count, PracticalOverrides ov) {
  EpisodicRlOracle oracle;
  oracle.episode_demand = [S_count, ov](double, double, int H, int A) {
    return pco_episode_demand(S_count, H, A, ov);
  };
  oracle.run = [S_count, ov](EpisodicEnv& env, double, double, Prng rng) {
    const BlockMdp* model = env.verification_model();
    if (!model) throw std::logic_error("bayes RL oracle: environment exposes no verification model");
    TwoContextOracle reg2 = make_bayes_two_oracle(*model);
    PcoParams p = pco_params_practical(S_count, env.horizon(), env.num_actions(), ov);
    return pco(reg2, S_count, p.config, env, rng);
  };
  return oracle;
}

ResetRlOracle make_pcr_rl_oracle(OneContextOracle reg1, int S_count, PracticalOverrides ov) {
  ResetRlOracle oracle;
  oracle.query_demand = [S_count, ov](double, double, int H, int A) {
    return pcr_query_demand(S_count, H, A, ov);
  };
  oracle.run = [reg1 = std::move(reg1), S_count, ov](ResetEnv& env, double, double, Prng rng) {
    PcrParams p = pcr_params_practical(S_count, env.horizon(), env.num_actions(), ov);
    return pcr(reg1, S_count, p.config, env, rng);
  };
  return oracle;
}

ResetRlOracle make_pcr_bayes_rl_oracle(int S_count, PracticalOverrides ov) {
  ResetRlOracle oracle;
  oracle.query_demand = [S_count, ov](double, double, int H, int A) {
    return pcr_query_demand(S_count, H, A, ov);
  };
  oracle.run = [S_count, ov](ResetEnv& env, double, double, Prng rng) {
    const BlockMdp* model = env.verification_model();
    if (!model) throw std::logic_error("bayes RL oracle: environment exposes no verification model");
    OneContextOracle reg1 = make_bayes_one_oracle(*model);
    PcrParams p = pcr_params_practical(S_count, env.horizon(), env.num_actions(), ov);
    return pcr(reg1, S_count, p.config, env, rng);
  };
  return oracle;
}

}  // namespace bmdp
