#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bmdp/concept_class.hpp"
#include "bmdp/errors.hpp"

namespace bmdp {

// Layers are 1-based throughout, matching the episodic process x_1 .. x_H.

// Finite latent chain: initial distribution over S and per-layer transition
// rows. Rows whose sum deviates from 1 by at most 1e-6 are renormalized at
// construction; larger deviations are rejected.
class LatentModel {
 public:
  LatentModel() = default;
  // trans[h-2] holds the S*A rows (each of length S) of the transition into layer h, h = 2..H.
  LatentModel(int horizon, int num_states, int num_actions, std::vector<double> initial,
              std::vector<std::vector<double>> trans);

  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }

  std::span<const double> initial() const { return initial_; }
  // Probability vector over next states, entering layer h from (s, a). h in 2..H.
  std::span<const double> row(int h, int s, int a) const {
    const auto& t = trans_[static_cast<std::size_t>(h - 2)];
    return {t.data() + static_cast<std::size_t>((s * num_actions_ + a)) * num_states_,
            static_cast<std::size_t>(num_states_)};
  }
  double prob(int h, int s, int a, int s_next) const { return row(h, s, a)[static_cast<std::size_t>(s_next)]; }

 private:
  int horizon_ = 0;
  int num_states_ = 0;
  int num_actions_ = 0;
  std::vector<double> initial_;
  std::vector<std::vector<double>> trans_;
};

// Per-layer emission distributions over X plus the ground-truth decoder.
// Emission supports must respect the decoder: O_h(x|s) > 0 implies decoder(x) = s.
class ObservationModel {
 public:
  ObservationModel() = default;
  // emissions[h-1] holds S rows (each of length X) for layer h.
  ObservationModel(int horizon, int num_states, int num_obs, std::vector<std::vector<double>> emissions,
                   std::vector<int> decoder);

  int num_obs() const { return num_obs_; }
  std::span<const double> row(int h, int s) const {
    const auto& e = emissions_[static_cast<std::size_t>(h - 1)];
    return {e.data() + static_cast<std::size_t>(s) * num_obs_, static_cast<std::size_t>(num_obs_)};
  }
  double prob(int h, int s, int x) const { return row(h, s)[static_cast<std::size_t>(x)]; }
  int decode(int x) const { return decoder_[static_cast<std::size_t>(x)]; }
  const std::vector<int>& decoder() const { return decoder_; }

 private:
  int horizon_ = 0;
  int num_states_ = 0;
  int num_obs_ = 0;
  std::vector<std::vector<double>> emissions_;
  std::vector<int> decoder_;
};

// A Block MDP: latent chain + emissions. The observed-process transition
// P_h(x'|x,a) = P~_h(phi*(x')|phi*(x),a) O~_h(x'|phi*(x')) is always derived,
// never stored. Immutable after construction and safe to share across threads.
//
// Truncations reuse this type: a truncated model has one extra absorbing
// latent state and observation, flagged by terminal_state()/terminal_obs().
class BlockMdp {
 public:
  BlockMdp() = default;
  BlockMdp(LatentModel latent, ObservationModel obs,
           std::shared_ptr<const ConceptClass> concepts = nullptr);

  int horizon() const { return latent_.horizon(); }
  int num_states() const { return latent_.num_states(); }
  int num_actions() const { return latent_.num_actions(); }
  int num_obs() const { return obs_.num_obs(); }

  const LatentModel& latent() const { return latent_; }
  const ObservationModel& obs() const { return obs_; }

  int decode(int x) const { return obs_.decode(x); }

  std::shared_ptr<const ConceptClass> concept_class_handle() const { return concepts_; }

  // Terminal markers for truncated models; -1 when absent.
  int terminal_state() const { return terminal_state_; }
  int terminal_obs() const { return terminal_obs_; }
  bool has_terminal() const { return terminal_state_ >= 0; }
  void mark_terminal(int state, int obs_id) {
    terminal_state_ = state;
    terminal_obs_ = obs_id;
  }

 private:
  LatentModel latent_;
  ObservationModel obs_;
  std::shared_ptr<const ConceptClass> concepts_;
  int terminal_state_ = -1;
  int terminal_obs_ = -1;
};

// Self-describing JSON serialization; doubles round-trip bit-exactly.
std::string save_env_json(const BlockMdp& mdp);
BlockMdp load_env_json(const std::string& text);
void save_env_file(const BlockMdp& mdp, const std::string& path);
BlockMdp load_env_file(const std::string& path);

}  // namespace bmdp
