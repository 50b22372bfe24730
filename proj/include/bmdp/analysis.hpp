#pragma once

#include <string>
#include <vector>

#include "bmdp/mdp.hpp"
#include "bmdp/policy.hpp"

namespace bmdp {

// Exact per-layer visitation distributions, at latent and observation level.
// Layers sum to 1 (including terminal mass for truncated models).
struct VisitationTable {
  std::vector<std::vector<double>> latent;  // [h-1][s]
  std::vector<std::vector<double>> obs;     // [h-1][x]

  double state(int h, int s) const { return latent[static_cast<std::size_t>(h - 1)][static_cast<std::size_t>(s)]; }
  double observation(int h, int x) const { return obs[static_cast<std::size_t>(h - 1)][static_cast<std::size_t>(x)]; }
};

// Forward DP, exact to float precision. The policy must be evaluable on every
// observation of the model; terminal observations are never passed to it.
VisitationTable exact_visitation(const BlockMdp& mdp, const Policy& pi);

// max_pi d_h(s) by backward DP over latent states (optimal policies factor
// through the decoder), plus a deterministic greedy witness achieving it.
// Argmax ties break to the lowest action index.
struct ReachResult {
  double value = 0.0;
  Policy witness;
};
ReachResult max_reach(const BlockMdp& mdp, int h, int s);
double max_reach_value(const BlockMdp& mdp, int h, int s);

// The S-truncation chain M_bar_1 .. M_bar_H for backup set gamma and
// thresholds tau >= tau_small. model() is the full truncation M_bar(gamma);
// intermediate(h) truncates transitions up to and including layer h.
struct TruncatedMdp {
  double tau = 0.0;
  double tau_small = 0.0;
  std::vector<std::vector<int>> s_rch;          // [h-1], sorted subsets of base S
  std::vector<BlockMdp> intermediates;          // [h-1] = M_bar_h
  const BlockMdp& model() const { return intermediates.back(); }
  const BlockMdp& intermediate(int h) const { return intermediates[static_cast<std::size_t>(h - 1)]; }
  bool reachable(int h, int s) const;
};

TruncatedMdp truncate(const BlockMdp& base, const PolicySet& gamma, double tau, double tau_small);

// Certificate that psi reaches every (layer, latent state) within epsilon of
// the best possible probability.
struct CoverEntry {
  int layer = 0;
  int state = 0;
  double achieved = 0.0;
  double optimal = 0.0;
  double deficit = 0.0;
  bool pass = true;
};
struct CoverReport {
  double epsilon = 0.0;
  int psi_size = 0;
  bool pass = true;
  std::vector<CoverEntry> entries;
  double worst_deficit() const;
  std::string to_json() const;
};
CoverReport check_cover(const BlockMdp& mdp, const PolicySet& psi, double epsilon);

// Truncated policy covers, evaluated over observations against M_bar(empty).
enum class TruncCoverMode { average, max };
struct TruncCoverReport {
  int layer = 0;
  double alpha = 0.0;
  TruncCoverMode mode = TruncCoverMode::average;
  bool pass = true;
  double worst_gap = 0.0;  // max over x of rhs - lhs
};
TruncCoverReport check_truncated_cover(const BlockMdp& base, const TruncatedMdp& trunc_empty,
                                       const PolicySet& psi, int h, double alpha, TruncCoverMode mode);

// Latent visitation at layer h of the roll-in mixture (1/2)(Unif(psi)+Unif(gamma)).
std::vector<double> mixture_visitation(const BlockMdp& mdp, int h, const PolicySet& psi,
                                       const PolicySet& gamma);

}  // namespace bmdp
