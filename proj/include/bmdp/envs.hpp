#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bmdp/mdp.hpp"
#include "bmdp/prng.hpp"
#include "bmdp/regression.hpp"

namespace bmdp {

struct GeneratedEnv {
  BlockMdp mdp;  // carries the concept-class handle
  std::shared_ptr<const ConceptClass> concepts;
};

// Two-state lock: a hidden action sequence keeps the chain in the good state
// (up to `noise`); any other action drops it into the absorbing bad state.
// Each latent state emits uniformly over its own emissions_per_state
// observations. The concept class holds the true decoder plus `decoys`
// observation-permuted variants.
GeneratedEnv make_lock(int horizon, int num_actions, double noise, int emissions_per_state,
                       std::uint64_t seed, int decoys = 9);

// Verification-only peek at the lock's hidden action sequence.
std::vector<int> lock_hidden_actions(int horizon, int num_actions, std::uint64_t seed);

// Random Block MDP, rejection-sampled until every latent state is reachable
// with probability at least min_reach at every layer h >= 2 (layer-1 masses
// are policy-independent, so the cover criterion there is vacuous).
// min_reach == 1 takes a deterministic construction path and needs |A| >= |S|.
// Throws GenerationTimeout after a bounded number of rejections.
GeneratedEnv make_random_block(int horizon, int num_states, int num_actions, int num_obs,
                               double min_reach, std::uint64_t seed, int decoys = 9);

// Context laws specified as latent x per-state emission factors, making
// decoder-realizability hold by construction. Emission rows must be supported
// inside the decoder's preimages (RealizabilityViolation otherwise).
struct OneContextDistSpec {
  std::vector<double> latent;            // over S
  std::vector<std::vector<double>> q;    // per s, over X
};
struct TwoContextDistSpec {
  std::vector<double> latent_joint;      // S x S row-major
  std::vector<std::vector<double>> q1, q2;  // per s, over X
};

OneContextDataset make_one_context_instance(const ConceptClass& phi_class,
                                            const std::vector<double>& f1,
                                            const OneContextDistSpec& spec, long n, Prng rng);
TwoContextDataset make_two_context_instance(const ConceptClass& phi_class,
                                            const std::vector<double>& f2,
                                            const TwoContextDistSpec& spec, long n, Prng rng);

// Explicit joint table over X x X for a factored spec.
std::vector<double> joint_table(const ConceptClass& phi_class, const TwoContextDistSpec& spec);

// Uniform-ish random factored specs for tests.
OneContextDistSpec random_one_context_spec(const ConceptClass& phi_class, Prng rng);
TwoContextDistSpec random_two_context_spec(const ConceptClass& phi_class, Prng rng);

}  // namespace bmdp
