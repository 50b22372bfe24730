#include "bmdp/policy.hpp"

#include <algorithm>
#include <cassert>

namespace bmdp {

int PolicyImpl::sample_action(int h, int x, Prng& rng) const {
  std::vector<double> probs(static_cast<std::size_t>(num_actions()));
  action_probs(h, x, probs);
  return rng.categorical(probs);
}

namespace {

void point_mass(std::span<double> out, int a) {
  std::fill(out.begin(), out.end(), 0.0);
  out[static_cast<std::size_t>(a)] = 1.0;
}

class UniformPolicy final : public PolicyImpl {
 public:
  explicit UniformPolicy(int num_actions) : a_(num_actions) {}
  int num_actions() const override { return a_; }
  void action_probs(int, int, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 1.0 / a_);
  }
  int sample_action(int, int, Prng& rng) const override { return rng.uniform_int(a_); }

 private:
  int a_;
};

class FixedSequencePolicy final : public PolicyImpl {
 public:
  FixedSequencePolicy(int num_actions, std::vector<int> actions) : a_(num_actions), seq_(std::move(actions)) {}
  int num_actions() const override { return a_; }
  int at(int h) const {
    const std::size_t i = static_cast<std::size_t>(h - 1);
    return i < seq_.size() ? seq_[i] : seq_.back();
  }
  void action_probs(int h, int, std::span<double> out) const override { point_mass(out, at(h)); }
  int sample_action(int h, int, Prng&) const override { return at(h); }

 private:
  int a_;
  std::vector<int> seq_;
};

class LatentGreedyPolicy final : public PolicyImpl {
 public:
  LatentGreedyPolicy(int num_actions, std::vector<int> decoder, std::vector<std::vector<int>> table)
      : a_(num_actions), decoder_(std::move(decoder)), table_(std::move(table)) {}
  int num_actions() const override { return a_; }
  int at(int h, int x) const {
    // Observations outside the decoder (e.g. a truncation terminal) act as action 0;
    // such states are absorbing, so the choice is immaterial.
    if (x < 0 || x >= static_cast<int>(decoder_.size())) return 0;
    const std::size_t i = static_cast<std::size_t>(h - 1);
    if (i >= table_.size()) return 0;
    return table_[i][static_cast<std::size_t>(decoder_[static_cast<std::size_t>(x)])];
  }
  void action_probs(int h, int x, std::span<double> out) const override { point_mass(out, at(h, x)); }
  int sample_action(int h, int x, Prng&) const override { return at(h, x); }

 private:
  int a_;
  std::vector<int> decoder_;
  std::vector<std::vector<int>> table_;
};

class ArgmaxPolicy final : public PolicyImpl {
 public:
  ArgmaxPolicy(int num_actions, int first_layer, std::vector<std::vector<ScoreFn>> scores)
      : a_(num_actions), first_(first_layer), scores_(std::move(scores)) {}
  int num_actions() const override { return a_; }
  void action_probs(int h, int x, std::span<double> out) const override {
    const int idx = h - first_;
    if (idx < 0 || idx >= static_cast<int>(scores_.size())) {
      std::fill(out.begin(), out.end(), 1.0 / a_);
      return;
    }
    point_mass(out, argmax(idx, x));
  }
  int sample_action(int h, int x, Prng& rng) const override {
    const int idx = h - first_;
    if (idx < 0 || idx >= static_cast<int>(scores_.size())) return rng.uniform_int(a_);
    return argmax(idx, x);
  }

 private:
  int argmax(int idx, int x) const {
    const auto& row = scores_[static_cast<std::size_t>(idx)];
    int best = 0;
    double best_v = row[0](x);
    for (int a = 1; a < a_; ++a) {
      const double v = row[static_cast<std::size_t>(a)](x);
      if (v > best_v) {
        best_v = v;
        best = a;
      }
    }
    return best;
  }

  int a_;
  int first_;
  std::vector<std::vector<ScoreFn>> scores_;
};

class TablePolicy final : public PolicyImpl {
 public:
  TablePolicy(int num_actions, std::vector<std::vector<std::vector<double>>> table)
      : a_(num_actions), table_(std::move(table)) {
    for (auto& layer : table_)
      for (auto& row : layer) {
        double sum = 0.0;
        for (double v : row) sum += v;
        assert(sum > 0.0);
        for (double& v : row) v /= sum;
      }
  }
  int num_actions() const override { return a_; }
  void action_probs(int h, int x, std::span<double> out) const override {
    const std::size_t i = static_cast<std::size_t>(h - 1);
    if (i >= table_.size() || x < 0 || static_cast<std::size_t>(x) >= table_[i].size()) {
      std::fill(out.begin(), out.end(), 1.0 / a_);
      return;
    }
    const auto& row = table_[i][static_cast<std::size_t>(x)];
    std::copy(row.begin(), row.end(), out.begin());
  }

 private:
  int a_;
  std::vector<std::vector<std::vector<double>>> table_;
};

class ComposedPolicy final : public PolicyImpl {
 public:
  ComposedPolicy(Policy below, int h, Policy from_h) : below_(std::move(below)), h_(h), from_h_(std::move(from_h)) {}
  int num_actions() const override { return below_.num_actions(); }
  void action_probs(int h, int x, std::span<double> out) const override {
    (h < h_ ? below_ : from_h_).action_probs(h, x, out);
  }
  int sample_action(int h, int x, Prng& rng) const override {
    return (h < h_ ? below_ : from_h_).sample_action(h, x, rng);
  }

 private:
  Policy below_;
  int h_;
  Policy from_h_;
};

}  // namespace

Policy make_uniform_policy(int num_actions) {
  return Policy(std::make_shared<UniformPolicy>(num_actions), PolicyKind::uniform);
}

Policy make_fixed_sequence_policy(int num_actions, std::vector<int> actions) {
  assert(!actions.empty());
  return Policy(std::make_shared<FixedSequencePolicy>(num_actions, std::move(actions)),
                PolicyKind::fixed_action_sequence);
}

Policy make_latent_greedy_policy(int num_actions, std::vector<int> decoder,
                                 std::vector<std::vector<int>> action_for_state) {
  return Policy(std::make_shared<LatentGreedyPolicy>(num_actions, std::move(decoder), std::move(action_for_state)),
                PolicyKind::greedy_table);
}

Policy make_argmax_policy(int num_actions, int first_layer, std::vector<std::vector<ScoreFn>> scores) {
  return Policy(std::make_shared<ArgmaxPolicy>(num_actions, first_layer, std::move(scores)),
                PolicyKind::greedy_table);
}

Policy make_table_policy(int num_actions, std::vector<std::vector<std::vector<double>>> table) {
  return Policy(std::make_shared<TablePolicy>(num_actions, std::move(table)), PolicyKind::table);
}

Policy compose(const Policy& below, int h, const Policy& from_h) {
  if (h <= 1) return from_h;
  return Policy(std::make_shared<ComposedPolicy>(below, h, from_h), PolicyKind::composed);
}

Policy PolicyMixture::sample(Prng& rng) const {
  const bool has_psi = !psi_->empty();
  const bool has_gamma = !gamma_->empty();
  if (!has_psi && !has_gamma) return make_uniform_policy(num_actions_);
  const PolicySet* side;
  if (has_psi && has_gamma)
    side = rng.bernoulli(0.5) ? psi_ : gamma_;
  else
    side = has_psi ? psi_ : gamma_;
  const Policy& picked = (*side)[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(side->size())))];
  return picked.with_kind(PolicyKind::finite_mixture_member);
}

std::vector<std::pair<Policy, double>> PolicyMixture::members_with_weights() const {
  std::vector<std::pair<Policy, double>> out;
  const bool has_psi = !psi_->empty();
  const bool has_gamma = !gamma_->empty();
  if (!has_psi && !has_gamma) {
    out.emplace_back(make_uniform_policy(num_actions_), 1.0);
    return out;
  }
  const double psi_share = has_psi ? (has_gamma ? 0.5 : 1.0) : 0.0;
  if (has_psi)
    for (const Policy& p : *psi_) out.emplace_back(p, psi_share / static_cast<double>(psi_->size()));
  if (has_gamma)
    for (const Policy& p : *gamma_) out.emplace_back(p, (1.0 - psi_share) / static_cast<double>(gamma_->size()));
  return out;
}

void append_unique(PolicySet& dst, const PolicySet& src) {
  for (const Policy& p : src) {
    bool seen = false;
    for (const Policy& q : dst)
      if (q.id() == p.id()) {
        seen = true;
        break;
      }
    if (!seen) dst.push_back(p);
  }
}

}  // namespace bmdp
