#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bmdp/access.hpp"
#include "bmdp/analysis.hpp"
#include "bmdp/psdp.hpp"
#include "bmdp/regression.hpp"

namespace bmdp {

// Contrastive dataset for layer h under action `action`: positives follow the
// real transition, negatives pair the same roll-in with an independent
// successor drawn under a uniform action. Labels are Ber(1/2) coins; each
// sample consumes two episodes.
TwoContextDataset build_contrastive_dataset(EpisodicEnv& env, int h, const PolicySet& psi_h,
                                            const PolicySet& gamma, int action, long n_samples,
                                            Prng rng);

// Exact episodic kinematics for layer h under roll-in (1/2)(Unif(psi)+Unif(gamma)):
// f(s, s'; a) = P(s'|s,a) / (P(s'|s,a) + F(s')), with F the mixture-then-
// uniform-action marginal over next states. 0/0 is defined as 0.
struct KinematicsF {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> beta_h;   // roll-in latent marginal at layer h
  std::vector<double> big_f;    // F_{h+1}(s')
  std::vector<double> values;   // [(s * S + s') * A + a]
  double at(int s, int s_next, int a) const {
    return values[static_cast<std::size_t>((s * num_states + s_next)) * num_actions + static_cast<std::size_t>(a)];
  }
};
KinematicsF exact_kinematics_f(const BlockMdp& mdp, int h, const PolicySet& psi_h,
                               const PolicySet& gamma);

struct EpcoConfig {
  int m = 0;             // test observations
  int n = 0;             // candidate cluster centers
  long N = 0;            // samples per regression
  double gamma_tol = 0;  // reward sharpness
  double gamma_sep = 0;  // center acceptance separation (strict >)
  double eps_reg = 0.05;
  double delta_reg = 0.05;
};

struct CenterRecord {
  int t = 0;              // candidate index (1-based)
  bool accepted = false;
  double min_separation = 0.0;  // distance to nearest previously accepted center
  double psdp_value_estimate = 0.0;
};
struct LayerDiagnostics {
  int layer = 0;
  int psi_size = 0;
  long episodes_used = 0;
  std::vector<CenterRecord> centers;
};

// Extends policy covers from layers 1..h to layer h+1: estimate kinematics per
// action, cluster candidate centers by their kinematics signature, and run
// PSDP (through the one-to-two reduction) on each accepted center's reward.
PolicySet epco(const TwoContextOracle& reg2, int h, std::span<const PolicySet> psi,
               const PolicySet& gamma, const EpcoConfig& cfg, EpisodicEnv& env, Prng rng,
               LayerDiagnostics* diag = nullptr);

// Episodes consumed by one epco call that accepted `accepted` centers.
long epco_episode_budget(int h, int num_actions, const EpcoConfig& cfg, int accepted);

struct PcoConfig {
  int rounds = 0;
  EpcoConfig layer;
};

struct RoundDiagnostics {
  int round = 0;
  std::vector<LayerDiagnostics> layers;
  std::vector<int> psi_sizes;  // |Psi_h| for h = 1..H
};
struct ExploreDiagnostics {
  std::vector<RoundDiagnostics> rounds;
  long episodes_total = 0;
  long reset_queries_total = 0;
};

// Outer loop: `rounds` passes of layer-by-layer extension, feeding each
// round's small covers into the backup set for the next; output is the union
// of all per-layer sets of size at most S_count.
PolicySet pco(const TwoContextOracle& reg2, int S_count, const PcoConfig& cfg, EpisodicEnv& env,
              Prng rng, ExploreDiagnostics* diag = nullptr);

// Parameter cascade. Theory mode evaluates the published formulas; the
// regression tolerance underflows doubles at any real size, so it is reported
// in log10 and never drives an executable run. Practical mode takes overrides.
struct PracticalOverrides {
  std::optional<int> m, n, rounds;
  std::optional<long> N;
  std::optional<double> gamma, gamma_sep, eps_reg, delta_reg, tau, tau_small;
};

struct PcoParams {
  enum class Mode { theory, practical };
  Mode mode = Mode::practical;
  double eps_final = 0.1, delta = 0.1;
  int S_count = 0, H = 0, A_count = 0;

  // Shared derived quantities (safe at any size).
  double tau = 0, tau_small = 0, alpha = 0;
  int rounds = 0;

  // Theory-mode: sample counts as doubles, tolerances in log10.
  double m_theory = 0, n_theory = 0;
  double log10_eps = 0, log10_gamma = 0, log10_gamma_sep = 0;

  // Practical-mode executable knobs.
  PcoConfig config;

  std::string describe() const;
};

PcoParams pco_params_theory(int S_count, int H, int A_count, double eps_final, double delta);
PcoParams pco_params_practical(int S_count, int H, int A_count, const PracticalOverrides& ov = {});

}  // namespace bmdp
