#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "bmdp/access.hpp"
#include "bmdp/explore_episodic.hpp"
#include "bmdp/explore_reset.hpp"
#include "bmdp/regression.hpp"

namespace bmdp {

// Action grid {0, eps_a, 2 eps_a, ..., eps_a * floor(1/eps_a)}. Actions are
// indices into it.
std::vector<double> make_action_grid(double eps_a);

// Expected grid value played by pi at the initial observation (equals the
// played value for deterministic policies).
double policy_action_value(const Policy& pi, const std::vector<double>& grid, int x);

// Ground truth of a regression data process, used to materialize explicit
// simulated models for verification runs. Ids index the data's observation
// space; states its latent space.
struct OneContextTruth {
  std::vector<int> phi_star;
  int num_states = 0;
  std::vector<double> f1;        // E[y|s]
  std::vector<double> marginal;  // context law over ids
};
struct TwoContextTruth {
  std::vector<int> phi_star;
  int num_states = 0;
  std::vector<double> f2;     // E[y|s1,s2], row-major num_states^2
  std::vector<double> joint;  // context law over id pairs, row-major |X|^2
};

// The explicit horizon-2 Block MDP a two-context dataset simulates: layer-1
// observations are the first contexts, layer-2 observations the second
// contexts plus the failure element "0"; actions are the grid. Throws
// RealizabilityViolation if the joint fails the factorization within 1e-9.
BlockMdp gadget_mdp(const TwoContextTruth& truth, double eps_a);

// The explicit model behind a one-context simulation: layer-2 observations
// are just {0, 1}.
BlockMdp one_red_gadget_mdp(const OneContextTruth& truth, double eps_a);

// L_s(pi) = E_D[ 1[phi(x2)=s] (pi(x1) - f(phi(x1),phi(x2)))^2 ] and the label
// variance mass Z_s, both exact.
struct LossTables {
  double l_s = 0.0;
  double z_s = 0.0;
};
LossTables loss_tables(const TwoContextTruth& truth, const std::vector<double>& grid, const Policy& pi,
                       int s);

// Reward-free RL oracles as values: a worst-case sample demand and a runner.
struct EpisodicRlOracle {
  std::function<long(double eps, double delta, int H, int A)> episode_demand;
  std::function<PolicySet(EpisodicEnv&, double eps, double delta, Prng rng)> run;
};
struct ResetRlOracle {
  std::function<long(double eps, double delta, int H, int A)> query_demand;
  std::function<PolicySet(ResetEnv&, double eps, double delta, Prng rng)> run;
};

// pco/pcr as RL oracles (closing the reduction loop in-code). Practical knobs
// are derived per call from (S_count, H, A) and the overrides. The bayes
// variants build their regression oracle from the environment's verification
// model and fail loudly when none is available.
EpisodicRlOracle make_pco_rl_oracle(TwoContextOracle reg2, int S_count, PracticalOverrides ov = {});
EpisodicRlOracle make_pco_bayes_rl_oracle(int S_count, PracticalOverrides ov = {});
ResetRlOracle make_pcr_rl_oracle(OneContextOracle reg1, int S_count, PracticalOverrides ov = {});
ResetRlOracle make_pcr_bayes_rl_oracle(int S_count, PracticalOverrides ov = {});

// Worst-case demand of the practical pco/pcr runs (every candidate center accepted).
long pco_episode_demand(int S_count, int H, int A, const PracticalOverrides& ov = {});
long pcr_query_demand(int S_count, int H, int A, const PracticalOverrides& ov = {});

// One-context regression from reward-free episodic RL: simulate the horizon-2
// gadget from the data stream, then select the best returned policy on a
// held-out tail. `lay` fixes the ids of the simulated {0,1} observations.
// `truth` (optional) enables exact-oracle verification runs.
Predictor1 one_red(const EpisodicRlOracle& rl_oracle, const OneContextDataset& data, double eps,
                   double delta, const AugLayout& lay, Prng rng,
                   const OneContextTruth* truth = nullptr);

// Noiseless variant against a reset oracle: conditional queries are answered
// by replaying the label of any previously seen equal context. Throws
// NoiselessViolation when two samples share a context but not a label.
Predictor1 noiseless_one_red(const ResetRlOracle& rl_oracle, const OneContextDataset& data, double eps,
                             double delta, const AugLayout& lay, Prng rng,
                             const OneContextTruth* truth = nullptr);

// Two-context regression from reward-free episodic RL: gadget simulation on
// the first half, per-policy error regression (via one_red) on the second,
// stitched by argmin error at query time (ties to lowest policy index).
Predictor2 two_red(const EpisodicRlOracle& rl_oracle, const TwoContextDataset& data, double eps,
                   double delta, int S_count, const AugLayout& lay, Prng rng,
                   const TwoContextTruth* truth = nullptr);

// Full reduction for a regular (augmented) class: two_aug around two_red.
Predictor2 reg_to_rl(const EpisodicRlOracle& rl_oracle, const TwoContextDataset& data_aug, double eps,
                     double delta, int S_count_base, const AugLayout& lay, Prng rng,
                     const TwoContextTruth* truth_aug = nullptr);

}  // namespace bmdp
