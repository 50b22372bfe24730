#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bmdp/concept_class.hpp"
#include "bmdp/mdp.hpp"
#include "bmdp/policy.hpp"
#include "bmdp/reward.hpp"

namespace bmdp {

struct OneSample {
  int x = 0;
  int y = 0;  // binary label
};
struct TwoSample {
  int x1 = 0;
  int x2 = 0;
  int y = 0;
};

struct OneContextDataset {
  std::vector<OneSample> rows;
  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
};
struct TwoContextDataset {
  std::vector<TwoSample> rows;
  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
};

// Line-oriented text form, one sample per line.
std::string to_text(const OneContextDataset& d);
std::string to_text(const TwoContextDataset& d);
OneContextDataset one_context_from_text(const std::string& text);
TwoContextDataset two_context_from_text(const std::string& text);

class Predictor1 {
 public:
  Predictor1() = default;
  Predictor1(std::function<double(int)> f, std::string provenance)
      : f_(std::move(f)), provenance_(std::move(provenance)) {}
  double operator()(int x) const {
    const double v = f_(x);
    return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  }
  const std::string& provenance() const { return provenance_; }
  bool valid() const { return static_cast<bool>(f_); }

 private:
  std::function<double(int)> f_;
  std::string provenance_;
};

class Predictor2 {
 public:
  Predictor2() = default;
  Predictor2(std::function<double(int, int)> f, std::string provenance)
      : f_(std::move(f)), provenance_(std::move(provenance)) {}
  double operator()(int x1, int x2) const {
    const double v = f_(x1, x2);
    return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  }
  const std::string& provenance() const { return provenance_; }
  bool valid() const { return static_cast<bool>(f_); }

 private:
  std::function<double(int, int)> f_;
  std::string provenance_;
};

// Describes the process that generated a dataset, in terms of objects the
// calling algorithm itself holds (policies, rewards, observation ids). Sample-
// based oracles ignore it; the exact Bayes oracles interpret it to reproduce
// the conditional mean without touching the data. Pointers are borrowed for
// the duration of the fit call.
struct FitContext {
  enum class Kind { none, generic_one, generic_two, contrastive_f, discriminator_w, psdp_q };
  enum class Resolve { decode, fixed0, fixed1 };

  Kind kind = Kind::none;

  // generic_one / generic_two: latent target tables.
  const std::vector<double>* f1 = nullptr;
  const std::vector<double>* f2 = nullptr;  // row-major f2_dim x f2_dim
  int f2_dim = 0;
  Resolve resolve1 = Resolve::decode;  // how each context maps to a latent index
  Resolve resolve2 = Resolve::decode;

  // contrastive_f: layer-h transition-vs-marginal discrimination under action
  // `action`, rolling in with (1/2)(Unif(psi)+Unif(gamma)).
  int layer = 0;
  int action = -1;
  const PolicySet* psi = nullptr;
  const PolicySet* gamma = nullptr;

  // discriminator_w: which of `discriminators` x actions produced x_{h+1};
  // positive class is (disc_index, action).
  const std::vector<int>* discriminators = nullptr;
  int disc_index = -1;

  // psdp_q: E[r | x_h = x] for action `action` at layer `layer`, reward at
  // layer k_layer + 1, continuing with `continuation` in between.
  const RewardFn* reward = nullptr;
  const Policy* continuation = nullptr;
  int k_layer = 0;

  static FitContext generic1(const std::vector<double>& f) {
    FitContext c;
    c.kind = Kind::generic_one;
    c.f1 = &f;
    return c;
  }
  static FitContext generic2(const std::vector<double>& f, int dim) {
    FitContext c;
    c.kind = Kind::generic_two;
    c.f2 = &f;
    c.f2_dim = dim;
    return c;
  }
};

// The pluggable computational assumptions: (data, eps, delta, context) -> predictor.
using OneContextOracle = std::function<Predictor1(const OneContextDataset&, double, double, const FitContext&)>;
using TwoContextOracle = std::function<Predictor2(const TwoContextDataset&, double, double, const FitContext&)>;

// Realizable ERM over a finite concept class: per-cell empirical label means
// (empty cell -> 1/2), squared-loss minimizing member, ties to lowest index.
Predictor1 erm_one_context(const OneContextDataset& data, const ConceptClass& phi_class);
Predictor2 erm_two_context(const TwoContextDataset& data, const ConceptClass& phi_class);
OneContextOracle make_erm_one_oracle(ConceptClass phi_class);
TwoContextOracle make_erm_two_oracle(ConceptClass phi_class);

// Re-scoring helpers for the ERM optimality property tests: empirical squared
// loss of the hypothesis with index k.
double erm_one_candidate_loss(const OneContextDataset& data, const ConceptClass& phi_class, int k);
double erm_two_candidate_loss(const TwoContextDataset& data, const ConceptClass& phi_class, int k);

// Noise-free testing oracles: the caller supplies the ground truth; the
// dataset is ignored.
Predictor1 make_bayes_predictor1(std::vector<int> decoder, std::vector<double> f1);
Predictor2 make_bayes_predictor2(std::vector<int> decoder, std::vector<double> f2, int f2_dim);

// Environment-bound Bayes oracles that reconstruct the exact conditional mean
// from the FitContext (contrastive kinematics, discriminator posteriors,
// exact Q-values, or generic latent tables).
OneContextOracle make_bayes_one_oracle(const BlockMdp& env);
TwoContextOracle make_bayes_two_oracle(const BlockMdp& env);

// Decoder-only variants for plain regression instances (generic contexts only).
OneContextOracle make_bayes_one_oracle(std::vector<int> decoder);
TwoContextOracle make_bayes_two_oracle(std::vector<int> decoder);

// One-context regression via a two-context oracle: pad the second context
// with the lowest-index observation present in the data.
Predictor1 one_two(const TwoContextOracle& two_oracle, const OneContextDataset& data, double eps,
                   double delta, const FitContext& ctx = {});
OneContextOracle make_one_two_oracle(TwoContextOracle two_oracle);

// Regression for the augmented class: interior part through the base oracle
// at (eps/6, delta/6), boundary parts by empirical means (empty -> 1/2).
Predictor1 one_aug(const OneContextOracle& one_oracle, const OneContextDataset& data, double eps,
                   double delta, const AugLayout& lay, const FitContext& ctx = {});

// Two-context regression for the augmented class: partition by
// (B, B') in {{0},{1},X}^2, pad boundary contexts, fit each cell at
// (eps/18, delta/18), dispatch by cell at query time (empty cell -> 1/2).
Predictor2 two_aug(const TwoContextOracle& two_oracle, const TwoContextDataset& data, double eps,
                   double delta, const AugLayout& lay, const FitContext& ctx = {});

}  // namespace bmdp
