#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "bmdp/mdp.hpp"
#include "bmdp/policy.hpp"
#include "bmdp/prng.hpp"

namespace bmdp {

// One episode's record. Hidden latent states are retained only behind the
// verification accessor (simulated environments may leave them empty).
struct Trajectory {
  std::vector<int> observations;  // x_1 .. x_L
  std::vector<int> actions;       // a_1 .. a_{L or L-1}

  const std::vector<int>& latent_trace_for_verification() const {
    if (latents.empty()) throw std::logic_error("latent trace unavailable for this trajectory");
    return latents;
  }

  std::vector<int> latents;  // populated by model-backed environments only
};

// Episode surface every RL algorithm in this library runs against. A prefix to
// layer L plays actions at layers 1..L-1 and returns observations x_1..x_L;
// a full episode additionally plays a_H. Action draws from the policy use the
// environment's stream, so a run is a pure function of the master seed.
class RolloutEnv {
 public:
  virtual ~RolloutEnv() = default;
  virtual int horizon() const = 0;
  virtual int num_actions() const = 0;
  virtual Trajectory sample_episode_prefix(const Policy& pi, int upto_layer) = 0;
  virtual Trajectory sample_episode(const Policy& pi) = 0;
};

class EpisodicEnv : public RolloutEnv {
 public:
  virtual long episodes_used() const = 0;
  // Explicit ground-truth model when one exists (real environments; simulated
  // gadgets built with verification enabled). Used only by exact test oracles.
  virtual const BlockMdp* verification_model() const { return nullptr; }
};

class ResetEnv : public RolloutEnv {
 public:
  virtual int reset_initial() = 0;
  virtual int reset_step(int h, int x, int a) = 0;
  virtual long queries_used() const = 0;
  virtual long episodes_used() const = 0;
  virtual const BlockMdp* verification_model() const { return nullptr; }
};

// Access model I: start-to-end episodes against a Block MDP; latent states are
// never exposed through the interface. Single-threaded session, one per run.
class EpisodicAccess final : public EpisodicEnv {
 public:
  EpisodicAccess(const BlockMdp& mdp, Prng rng) : mdp_(&mdp), rng_(rng) {}

  // Raw protocol: a new episode may be requested at any time; at most H
  // actions are accepted per episode.
  int begin_episode();
  std::optional<int> step(int a);
  int layer() const { return layer_; }

  int horizon() const override { return mdp_->horizon(); }
  int num_actions() const override { return mdp_->num_actions(); }
  long episodes_used() const override { return episodes_; }
  const BlockMdp* verification_model() const override { return mdp_; }

  Trajectory sample_episode_prefix(const Policy& pi, int upto_layer) override;
  Trajectory sample_episode(const Policy& pi) override;

 private:
  const BlockMdp* mdp_;
  Prng rng_;
  long episodes_ = 0;
  int layer_ = 0;  // 0 = no live episode
  int cur_state_ = -1;
  std::vector<int> ep_obs_, ep_act_, ep_lat_;
};

// Access model II: an initial-observation oracle plus conditional sampling
// from any previously seen (layer, observation). The registry grows
// monotonically; querying an unregistered pair is a contract violation.
class ResetAccess final : public ResetEnv {
 public:
  ResetAccess(const BlockMdp& mdp, Prng rng) : mdp_(&mdp), rng_(rng) {}

  int reset_initial() override;
  int reset_step(int h, int x, int a) override;

  bool is_registered(int h, int x) const {
    if (h < 1 || h > mdp_->horizon() || x < 0 || x >= mdp_->num_obs()) return false;
    const auto& layer = registry_[static_cast<std::size_t>(h - 1)];
    return !layer.empty() && layer[static_cast<std::size_t>(x)] != 0;
  }

  int horizon() const override { return mdp_->horizon(); }
  int num_actions() const override { return mdp_->num_actions(); }
  long queries_used() const override { return queries_; }
  long episodes_used() const override { return episodes_; }
  const BlockMdp* verification_model() const override { return mdp_; }

  // Episodes are chains of reset queries (upto_layer of them), registering
  // every observation along the way.
  Trajectory sample_episode_prefix(const Policy& pi, int upto_layer) override;
  Trajectory sample_episode(const Policy& pi) override;

 private:
  void register_obs(int h, int x) {
    if (registry_.empty()) registry_.resize(static_cast<std::size_t>(mdp_->horizon()));
    auto& layer = registry_[static_cast<std::size_t>(h - 1)];
    if (layer.empty()) layer.assign(static_cast<std::size_t>(mdp_->num_obs()), 0);
    layer[static_cast<std::size_t>(x)] = 1;
  }

  const BlockMdp* mdp_;
  Prng rng_;
  long queries_ = 0;
  long episodes_ = 0;
  std::vector<std::vector<char>> registry_;  // [layer][obs]
};

}  // namespace bmdp
