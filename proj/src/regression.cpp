#include "bmdp/regression.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <sstream>

#include "bmdp/errors.hpp"

namespace bmdp {

std::string to_text(const OneContextDataset& d) {
  std::ostringstream out;
  for (const auto& r : d.rows) out << r.x << ' ' << r.y << '\n';
  return out.str();
}

std::string to_text(const TwoContextDataset& d) {
  std::ostringstream out;
  for (const auto& r : d.rows) out << r.x1 << ' ' << r.x2 << ' ' << r.y << '\n';
  return out.str();
}

OneContextDataset one_context_from_text(const std::string& text) {
  OneContextDataset d;
  std::istringstream in(text);
  OneSample s;
  while (in >> s.x >> s.y) d.rows.push_back(s);
  return d;
}

TwoContextDataset two_context_from_text(const std::string& text) {
  TwoContextDataset d;
  std::istringstream in(text);
  TwoSample s;
  while (in >> s.x1 >> s.x2 >> s.y) d.rows.push_back(s);
  return d;
}

namespace {

struct OneHistogram {
  std::vector<double> count, label_sum;
  double total_labels = 0.0;

  OneHistogram(const OneContextDataset& data, int num_obs)
      : count(static_cast<std::size_t>(num_obs), 0.0), label_sum(static_cast<std::size_t>(num_obs), 0.0) {
    for (const auto& r : data.rows) {
      if (r.x < 0 || r.x >= num_obs) throw ModelInvariantViolation("dataset-obs-range", "sample outside X");
      if (r.y != 0 && r.y != 1) throw ModelInvariantViolation("dataset-binary-labels", "label not in {0,1}");
      count[static_cast<std::size_t>(r.x)] += 1.0;
      label_sum[static_cast<std::size_t>(r.x)] += r.y;
      total_labels += r.y;
    }
  }
};

struct PairCell {
  int x1, x2;
  double count, label_sum;
};

std::vector<PairCell> pair_histogram(const TwoContextDataset& data, int num_obs) {
  std::vector<double> count(static_cast<std::size_t>(num_obs) * num_obs, 0.0);
  std::vector<double> label_sum(count.size(), 0.0);
  for (const auto& r : data.rows) {
    if (r.x1 < 0 || r.x1 >= num_obs || r.x2 < 0 || r.x2 >= num_obs)
      throw ModelInvariantViolation("dataset-obs-range", "sample outside X");
    if (r.y != 0 && r.y != 1) throw ModelInvariantViolation("dataset-binary-labels", "label not in {0,1}");
    const std::size_t i = static_cast<std::size_t>(r.x1) * num_obs + static_cast<std::size_t>(r.x2);
    count[i] += 1.0;
    label_sum[i] += r.y;
  }
  std::vector<PairCell> cells;
  for (int x1 = 0; x1 < num_obs; ++x1)
    for (int x2 = 0; x2 < num_obs; ++x2) {
      const std::size_t i = static_cast<std::size_t>(x1) * num_obs + static_cast<std::size_t>(x2);
      if (count[i] > 0.0) cells.push_back({x1, x2, count[i], label_sum[i]});
    }
  return cells;
}

// Cell means and empirical squared loss of candidate k on a one-context histogram.
std::pair<std::vector<double>, double> score_one(const OneHistogram& hist, const ConceptClass& cc, int k) {
  const int S = cc.num_states();
  std::vector<double> c(static_cast<std::size_t>(S), 0.0), y(static_cast<std::size_t>(S), 0.0);
  for (int x = 0; x < cc.num_obs(); ++x) {
    const int s = cc.decode(k, x);
    c[static_cast<std::size_t>(s)] += hist.count[static_cast<std::size_t>(x)];
    y[static_cast<std::size_t>(s)] += hist.label_sum[static_cast<std::size_t>(x)];
  }
  std::vector<double> mean(static_cast<std::size_t>(S), 0.5);
  for (int s = 0; s < S; ++s)
    if (c[static_cast<std::size_t>(s)] > 0.0)
      mean[static_cast<std::size_t>(s)] = y[static_cast<std::size_t>(s)] / c[static_cast<std::size_t>(s)];
  // sum_i (mu - y_i)^2 with binary labels, grouped by cell.
  double loss = hist.total_labels;
  for (int s = 0; s < S; ++s) {
    const double mu = mean[static_cast<std::size_t>(s)];
    loss += c[static_cast<std::size_t>(s)] * mu * mu - 2.0 * mu * y[static_cast<std::size_t>(s)];
  }
  return {std::move(mean), loss};
}

std::pair<std::vector<double>, double> score_two(const std::vector<PairCell>& cells, double total_labels,
                                                 const ConceptClass& cc, int k) {
  const int S = cc.num_states();
  std::vector<double> c(static_cast<std::size_t>(S) * S, 0.0), y(static_cast<std::size_t>(S) * S, 0.0);
  for (const auto& cell : cells) {
    const std::size_t i =
        static_cast<std::size_t>(cc.decode(k, cell.x1)) * S + static_cast<std::size_t>(cc.decode(k, cell.x2));
    c[i] += cell.count;
    y[i] += cell.label_sum;
  }
  std::vector<double> mean(static_cast<std::size_t>(S) * S, 0.5);
  for (std::size_t i = 0; i < mean.size(); ++i)
    if (c[i] > 0.0) mean[i] = y[i] / c[i];
  double loss = total_labels;
  for (std::size_t i = 0; i < mean.size(); ++i) loss += c[i] * mean[i] * mean[i] - 2.0 * mean[i] * y[i];
  return {std::move(mean), loss};
}

}  // namespace

Predictor1 erm_one_context(const OneContextDataset& data, const ConceptClass& phi_class) {
  if (data.empty()) throw EmptyDataset("erm_one_context: empty dataset");
  OneHistogram hist(data, phi_class.num_obs());
  int best_k = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<double> best_mean;
  for (int k = 0; k < phi_class.size(); ++k) {
    auto [mean, loss] = score_one(hist, phi_class, k);
    if (loss < best_loss) {
      best_loss = loss;
      best_k = k;
      best_mean = std::move(mean);
    }
  }
  std::vector<int> phi = phi_class.member(best_k);
  return Predictor1(
      [phi = std::move(phi), mean = std::move(best_mean)](int x) {
        if (x < 0 || x >= static_cast<int>(phi.size())) return 0.5;
        return mean[static_cast<std::size_t>(phi[static_cast<std::size_t>(x)])];
      },
      "erm_one_context[k=" + std::to_string(best_k) + "]");
}

Predictor2 erm_two_context(const TwoContextDataset& data, const ConceptClass& phi_class) {
  if (data.empty()) throw EmptyDataset("erm_two_context: empty dataset");
  auto cells = pair_histogram(data, phi_class.num_obs());
  double total_labels = 0.0;
  for (const auto& c : cells) total_labels += c.label_sum;
  int best_k = 0;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<double> best_mean;
  for (int k = 0; k < phi_class.size(); ++k) {
    auto [mean, loss] = score_two(cells, total_labels, phi_class, k);
    if (loss < best_loss) {
      best_loss = loss;
      best_k = k;
      best_mean = std::move(mean);
    }
  }
  const int S = phi_class.num_states();
  std::vector<int> phi = phi_class.member(best_k);
  return Predictor2(
      [phi = std::move(phi), mean = std::move(best_mean), S](int x1, int x2) {
        if (x1 < 0 || x1 >= static_cast<int>(phi.size()) || x2 < 0 || x2 >= static_cast<int>(phi.size()))
          return 0.5;
        return mean[static_cast<std::size_t>(phi[static_cast<std::size_t>(x1)]) * S +
                    static_cast<std::size_t>(phi[static_cast<std::size_t>(x2)])];
      },
      "erm_two_context[k=" + std::to_string(best_k) + "]");
}

double erm_one_candidate_loss(const OneContextDataset& data, const ConceptClass& phi_class, int k) {
  OneHistogram hist(data, phi_class.num_obs());
  return score_one(hist, phi_class, k).second;
}

double erm_two_candidate_loss(const TwoContextDataset& data, const ConceptClass& phi_class, int k) {
  auto cells = pair_histogram(data, phi_class.num_obs());
  double total_labels = 0.0;
  for (const auto& c : cells) total_labels += c.label_sum;
  return score_two(cells, total_labels, phi_class, k).second;
}

OneContextOracle make_erm_one_oracle(ConceptClass phi_class) {
  return [cc = std::move(phi_class)](const OneContextDataset& data, double, double, const FitContext&) {
    return erm_one_context(data, cc);
  };
}

TwoContextOracle make_erm_two_oracle(ConceptClass phi_class) {
  return [cc = std::move(phi_class)](const TwoContextDataset& data, double, double, const FitContext&) {
    return erm_two_context(data, cc);
  };
}

Predictor1 make_bayes_predictor1(std::vector<int> decoder, std::vector<double> f1) {
  return Predictor1(
      [decoder = std::move(decoder), f1 = std::move(f1)](int x) {
        return f1[static_cast<std::size_t>(decoder[static_cast<std::size_t>(x)])];
      },
      "bayes_one_context");
}

Predictor2 make_bayes_predictor2(std::vector<int> decoder, std::vector<double> f2, int f2_dim) {
  return Predictor2(
      [decoder = std::move(decoder), f2 = std::move(f2), f2_dim](int x1, int x2) {
        return f2[static_cast<std::size_t>(decoder[static_cast<std::size_t>(x1)]) * f2_dim +
                  static_cast<std::size_t>(decoder[static_cast<std::size_t>(x2)])];
      },
      "bayes_two_context");
}

Predictor1 one_two(const TwoContextOracle& two_oracle, const OneContextDataset& data, double eps,
                   double delta, const FitContext& ctx) {
  int pad = 0;
  if (!data.empty()) {
    pad = std::numeric_limits<int>::max();
    for (const auto& r : data.rows) pad = std::min(pad, r.x);
  }
  TwoContextDataset padded;
  padded.rows.reserve(data.size());
  for (const auto& r : data.rows) padded.rows.push_back({r.x, pad, r.y});
  Predictor2 wide = two_oracle(padded, eps, delta, ctx);
  return Predictor1([wide, pad](int x) { return wide(x, pad); },
                    "one_two(" + wide.provenance() + ")");
}

OneContextOracle make_one_two_oracle(TwoContextOracle two_oracle) {
  return [two = std::move(two_oracle)](const OneContextDataset& data, double eps, double delta,
                                       const FitContext& ctx) { return one_two(two, data, eps, delta, ctx); };
}

Predictor1 one_aug(const OneContextOracle& one_oracle, const OneContextDataset& data, double eps,
                   double delta, const AugLayout& lay, const FitContext& ctx) {
  OneContextDataset interior;
  double c0 = 0.0, y0 = 0.0, c1 = 0.0, y1 = 0.0;
  for (const auto& r : data.rows) {
    if (lay.is_interior_obs(r.x)) {
      interior.rows.push_back(r);
    } else if (r.x == lay.obs0()) {
      c0 += 1.0;
      y0 += r.y;
    } else {
      c1 += 1.0;
      y1 += r.y;
    }
  }
  const double r0 = c0 > 0.0 ? y0 / c0 : 0.5;
  const double r1 = c1 > 0.0 ? y1 / c1 : 0.5;
  Predictor1 inner;
  if (!interior.empty()) inner = one_oracle(interior, eps / 6.0, delta / 6.0, ctx);
  const int obs0 = lay.obs0(), obs1 = lay.obs1();
  return Predictor1(
      [inner, r0, r1, obs0, obs1](int x) {
        if (x == obs0) return r0;
        if (x == obs1) return r1;
        return inner.valid() ? inner(x) : 0.5;
      },
      "one_aug");
}

namespace {

FitContext::Resolve resolve_for(int tag) {
  switch (tag) {
    case 0: return FitContext::Resolve::fixed0;
    case 1: return FitContext::Resolve::fixed1;
    default: return FitContext::Resolve::decode;
  }
}

}  // namespace

Predictor2 two_aug(const TwoContextOracle& two_oracle, const TwoContextDataset& data, double eps,
                   double delta, const AugLayout& lay, const FitContext& ctx) {
  // Fixed padding observation: lowest interior id present anywhere in the
  // data, falling back to 0 when the data is boundary-only (then every cell
  // that would use it reduces to repeated-context queries anyway).
  int pad = std::numeric_limits<int>::max();
  for (const auto& r : data.rows) {
    if (lay.is_interior_obs(r.x1)) pad = std::min(pad, r.x1);
    if (lay.is_interior_obs(r.x2)) pad = std::min(pad, r.x2);
  }
  if (pad == std::numeric_limits<int>::max()) pad = 0;

  // Cell tags: 0 -> {0}, 1 -> {1}, 2 -> interior X.
  const int obs0 = lay.obs0(), obs1 = lay.obs1();
  auto tag_of = [obs0, obs1](int x) { return x == obs0 ? 0 : (x == obs1 ? 1 : 2); };

  std::array<TwoContextDataset, 9> cells;
  for (const auto& r : data.rows) {
    const int t1 = tag_of(r.x1), t2 = tag_of(r.x2);
    TwoSample padded{t1 == 2 ? r.x1 : pad, t2 == 2 ? r.x2 : pad, r.y};
    cells[static_cast<std::size_t>(t1 * 3 + t2)].rows.push_back(padded);
  }

  std::array<Predictor2, 9> fitted;
  for (int t1 = 0; t1 < 3; ++t1)
    for (int t2 = 0; t2 < 3; ++t2) {
      auto& cell = cells[static_cast<std::size_t>(t1 * 3 + t2)];
      if (cell.empty()) continue;  // dispatcher falls back to 1/2
      FitContext cell_ctx = ctx;
      cell_ctx.resolve1 = resolve_for(t1);
      cell_ctx.resolve2 = resolve_for(t2);
      fitted[static_cast<std::size_t>(t1 * 3 + t2)] = two_oracle(cell, eps / 18.0, delta / 18.0, cell_ctx);
    }

  return Predictor2(
      [fitted = std::move(fitted), tag_of, pad](int x1, int x2) {
        const int t1 = tag_of(x1), t2 = tag_of(x2);
        const auto& p = fitted[static_cast<std::size_t>(t1 * 3 + t2)];
        if (!p.valid()) return 0.5;
        return p(t1 == 2 ? x1 : pad, t2 == 2 ? x2 : pad);
      },
      "two_aug");
}

}  // namespace bmdp
