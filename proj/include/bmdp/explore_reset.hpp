#pragma once

#include <span>
#include <vector>

#include "bmdp/access.hpp"
#include "bmdp/explore_episodic.hpp"
#include "bmdp/psdp.hpp"
#include "bmdp/regression.hpp"

namespace bmdp {

enum class DiscriminatorMode {
  independent,  // one fresh stream of N conditional draws per (i, a) dataset
  shared,       // one stream of N draws, relabeled m*|A| ways
};

// For each discriminator i and action a, a dataset whose label marks whether
// the conditional draw came from (x_h^(i), a) among uniform (j, a_h) choices.
// Discriminators must already be registered at layer h.
std::vector<OneContextDataset> build_discriminator_datasets(ResetEnv& env, int h,
                                                            const std::vector<int>& discriminators,
                                                            long n_samples, DiscriminatorMode mode,
                                                            Prng rng);

// Exact reset kinematics: w(s'; s, a) = P(s'|s,a) / sum_{j,a'} P(s'|phi(x^(j)),a').
// Both vanishing -> 0.
double exact_kinematics_w(const BlockMdp& mdp, int h, const std::vector<int>& discriminator_latents,
                          int s_next, int s_from, int a);

struct EpcrConfig {
  int m = 0;
  int n = 0;
  long N = 0;
  double gamma_tol = 0;
  double gamma_sep = 0;
  double eps_reg = 0.05;
  double delta_reg = 0.05;
  DiscriminatorMode mode = DiscriminatorMode::independent;
};

// Reset-model cover extension: sample m discriminators at layer h, regress the
// per-(i,a) posteriors with one-context regression, cluster candidate centers
// by their posterior signature, and run PSDP on each accepted center's reward.
PolicySet epcr(const OneContextOracle& reg1, int h, std::span<const PolicySet> psi,
               const PolicySet& gamma, const EpcrConfig& cfg, ResetEnv& env, Prng rng,
               LayerDiagnostics* diag = nullptr);

// Reset queries consumed by one epcr call that accepted `accepted` centers.
long epcr_query_budget(int h, int num_actions, const EpcrConfig& cfg, int accepted);

struct PcrConfig {
  int rounds = 0;
  EpcrConfig layer;
};

// Outer loop identical to pco with epcr substituted.
PolicySet pcr(const OneContextOracle& reg1, int S_count, const PcrConfig& cfg, ResetEnv& env,
              Prng rng, ExploreDiagnostics* diag = nullptr);

struct PcrParams {
  enum class Mode { theory, practical };
  Mode mode = Mode::practical;
  double eps_final = 0.1, delta = 0.1;
  int S_count = 0, H = 0, A_count = 0;
  double tau = 0, tau_small = 0, alpha = 0;
  int rounds = 0;
  double m_theory = 0, n_theory = 0;
  double log10_eps = 0, log10_gamma = 0, log10_gamma_sep = 0;
  PcrConfig config;
  std::string describe() const;
};

PcrParams pcr_params_theory(int S_count, int H, int A_count, double eps_final, double delta);
PcrParams pcr_params_practical(int S_count, int H, int A_count, const PracticalOverrides& ov = {});

}  // namespace bmdp
