#pragma once

#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "bmdp/prng.hpp"

namespace bmdp {

enum class PolicyKind {
  uniform,
  fixed_action_sequence,
  greedy_table,
  composed,
  finite_mixture_member,
  table,  // explicit stochastic table; verification harness use
};

class PolicyImpl {
 public:
  virtual ~PolicyImpl() = default;
  virtual int num_actions() const = 0;
  virtual void action_probs(int h, int x, std::span<double> out) const = 0;
  virtual int sample_action(int h, int x, Prng& rng) const;
};

// Per-layer map from observations to action distributions. Value type over a
// shared immutable implementation; evaluable at any layer and any observation
// id the caller produces.
class Policy {
 public:
  Policy() = default;
  Policy(std::shared_ptr<const PolicyImpl> impl, PolicyKind kind) : impl_(std::move(impl)), kind_(kind) {}

  int num_actions() const { return impl_->num_actions(); }
  void action_probs(int h, int x, std::span<double> out) const { impl_->action_probs(h, x, out); }
  std::vector<double> action_dist(int h, int x) const {
    std::vector<double> out(static_cast<std::size_t>(num_actions()));
    impl_->action_probs(h, x, out);
    return out;
  }
  int sample_action(int h, int x, Prng& rng) const { return impl_->sample_action(h, x, rng); }

  PolicyKind kind() const { return kind_; }
  Policy with_kind(PolicyKind k) const { return Policy(impl_, k); }

  // Identity of the underlying evaluator; used to deduplicate policy sets.
  const PolicyImpl* id() const { return impl_.get(); }
  bool valid() const { return impl_ != nullptr; }

 private:
  std::shared_ptr<const PolicyImpl> impl_;
  PolicyKind kind_ = PolicyKind::uniform;
};

using PolicySet = std::vector<Policy>;
using ScoreFn = std::function<double(int)>;

Policy make_uniform_policy(int num_actions);

// Plays actions[h-1] at layer h; layers past the sequence fall back to the last entry.
Policy make_fixed_sequence_policy(int num_actions, std::vector<int> actions);

// Deterministic table over latent states, lifted to observations through a
// decoder. Verification-side construction (witness policies).
Policy make_latent_greedy_policy(int num_actions, std::vector<int> decoder,
                                 std::vector<std::vector<int>> action_for_state);

// argmax_a scores[h][a](x) with ties to the lowest action index; layers outside
// [first_layer, first_layer + scores.size()) act uniformly.
Policy make_argmax_policy(int num_actions, int first_layer, std::vector<std::vector<ScoreFn>> scores);

// Explicit per-(layer, observation) action distributions; rows are normalized
// at construction, queries outside the table act uniformly.
Policy make_table_policy(int num_actions, std::vector<std::vector<std::vector<double>>> table);

// Layer-switched composition: layers below h follow `below`, layers >= h follow `from_h`.
Policy compose(const Policy& below, int h, const Policy& from_h);

// The roll-in mixture (1/2)(Unif(psi) + Unif(gamma)). With one side empty it
// degrades to Unif of the other; with both empty, to the uniform policy.
class PolicyMixture {
 public:
  PolicyMixture(const PolicySet& psi, const PolicySet& gamma, int num_actions)
      : psi_(&psi), gamma_(&gamma), num_actions_(num_actions) {}

  Policy sample(Prng& rng) const;
  // Exact member weights for verification DP (sums to 1).
  std::vector<std::pair<Policy, double>> members_with_weights() const;

 private:
  const PolicySet* psi_;
  const PolicySet* gamma_;
  int num_actions_;
};

void append_unique(PolicySet& dst, const PolicySet& src);

}  // namespace bmdp
