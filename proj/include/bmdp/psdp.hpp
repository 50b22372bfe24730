#pragma once

#include <span>
#include <vector>

#include "bmdp/access.hpp"
#include "bmdp/analysis.hpp"
#include "bmdp/regression.hpp"
#include "bmdp/reward.hpp"

namespace bmdp {

// Policy Search by Dynamic Programming: backward over layers k..1, fit
// Q-values per action by one-context regression on Monte-Carlo reward labels
// r ~ Ber(R(x_{k+1})), act greedily. Returns the greedy policy over layers
// 1..k (uniform above k). k = 0 returns the uniform policy.
//
// psi[h-1] is the roll-in cover for layer h; every roll-in draws from
// (1/2)(Unif(psi[h-1]) + Unif(gamma)). num_samples episodes are collected per
// (layer, action) regression; eps/delta are forwarded to the oracle.
Policy psdp(int k, const OneContextOracle& reg1, const RewardFn& reward,
            std::span<const PolicySet> psi, const PolicySet& gamma, long num_samples,
            RolloutEnv& env, Prng rng, double eps, double delta);

// Exact value tables for the reward R(x_{k+1}) under policy pi, for layers
// 1..k+1. Verification oracle; requires an explicit model.
struct TrueQ {
  int k = 0;
  std::vector<std::vector<double>> q;  // [g-1][x * A + a], g = 1..k+1
  std::vector<std::vector<double>> v;  // [g-1][x]
  double q_at(int g, int x, int a, int num_actions) const {
    return q[static_cast<std::size_t>(g - 1)][static_cast<std::size_t>(x) * num_actions + static_cast<std::size_t>(a)];
  }
  double v_at(int g, int x) const { return v[static_cast<std::size_t>(g - 1)][static_cast<std::size_t>(x)]; }
};
TrueQ true_q(const BlockMdp& mdp, const Policy& pi, int k, const RewardFn& reward);

// E^{M,pi}[R(x_{k+1})], exact.
double expected_reward(const BlockMdp& mdp, const Policy& pi, int k, const RewardFn& reward);

// max_pi E^{M,pi}[R(x_{k+1})] by backward DP over latent states.
double optimal_expected_reward(const BlockMdp& mdp, int k, const RewardFn& reward);

}  // namespace bmdp
