#include "bmdp/analysis.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace bmdp {

VisitationTable exact_visitation(const BlockMdp& mdp, const Policy& pi) {
  const int H = mdp.horizon(), S = mdp.num_states(), A = mdp.num_actions(), X = mdp.num_obs();
  VisitationTable table;
  table.latent.assign(static_cast<std::size_t>(H), std::vector<double>(static_cast<std::size_t>(S), 0.0));
  table.obs.assign(static_cast<std::size_t>(H), std::vector<double>(static_cast<std::size_t>(X), 0.0));

  std::vector<double> d_state(mdp.latent().initial().begin(), mdp.latent().initial().end());
  std::vector<double> probs(static_cast<std::size_t>(A));
  std::vector<double> occupancy(static_cast<std::size_t>(S) * A);

  for (int h = 1; h <= H; ++h) {
    auto& lat = table.latent[static_cast<std::size_t>(h - 1)];
    auto& obs = table.obs[static_cast<std::size_t>(h - 1)];
    lat = d_state;
    // Observation-level row and (s,a)-occupancy, aggregating the policy over
    // each latent class. The terminal observation of a truncated model is
    // never passed to the policy; its state is absorbing so the action is moot.
    std::fill(occupancy.begin(), occupancy.end(), 0.0);
    for (int s = 0; s < S; ++s) {
      const double ds = d_state[static_cast<std::size_t>(s)];
      if (ds == 0.0) continue;
      auto emis = mdp.obs().row(h, s);
      for (int x = 0; x < X; ++x) {
        const double px = ds * emis[static_cast<std::size_t>(x)];
        if (px == 0.0) continue;
        obs[static_cast<std::size_t>(x)] += px;
        if (h < H) {
          if (s == mdp.terminal_state()) {
            occupancy[static_cast<std::size_t>(s * A)] += px;
          } else {
            pi.action_probs(h, x, probs);
            for (int a = 0; a < A; ++a) occupancy[static_cast<std::size_t>(s * A + a)] += px * probs[static_cast<std::size_t>(a)];
          }
        }
      }
    }
    if (h == H) break;
    std::vector<double> next(static_cast<std::size_t>(S), 0.0);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        const double m = occupancy[static_cast<std::size_t>(s * A + a)];
        if (m == 0.0) continue;
        auto row = mdp.latent().row(h + 1, s, a);
        for (int s2 = 0; s2 < S; ++s2) next[static_cast<std::size_t>(s2)] += m * row[static_cast<std::size_t>(s2)];
      }
    d_state.swap(next);
  }
  return table;
}

namespace {

// Backward DP for max_pi P[s_h = target]; fills greedy argmax actions when asked.
double reach_dp(const BlockMdp& mdp, int h, int target, std::vector<std::vector<int>>* greedy) {
  const int S = mdp.num_states(), A = mdp.num_actions();
  std::vector<double> value(static_cast<std::size_t>(S), 0.0);
  value[static_cast<std::size_t>(target)] = 1.0;
  if (greedy) greedy->assign(static_cast<std::size_t>(std::max(h - 1, 0)), std::vector<int>(static_cast<std::size_t>(S), 0));
  for (int g = h - 1; g >= 1; --g) {
    std::vector<double> prev(static_cast<std::size_t>(S), 0.0);
    for (int s = 0; s < S; ++s) {
      double best = -1.0;
      int best_a = 0;
      for (int a = 0; a < A; ++a) {
        auto row = mdp.latent().row(g + 1, s, a);
        double v = 0.0;
        for (int s2 = 0; s2 < S; ++s2) v += row[static_cast<std::size_t>(s2)] * value[static_cast<std::size_t>(s2)];
        if (v > best) {
          best = v;
          best_a = a;
        }
      }
      prev[static_cast<std::size_t>(s)] = best;
      if (greedy) (*greedy)[static_cast<std::size_t>(g - 1)][static_cast<std::size_t>(s)] = best_a;
    }
    value.swap(prev);
  }
  double out = 0.0;
  auto p1 = mdp.latent().initial();
  for (int s = 0; s < S; ++s) out += p1[static_cast<std::size_t>(s)] * value[static_cast<std::size_t>(s)];
  return out;
}

// Materializes the (sets[0..H-1])-truncation of base as an explicit Block MDP
// over S+1 states and X+1 observations with an absorbing terminal.
BlockMdp make_truncation(const BlockMdp& base, const std::vector<std::vector<bool>>& keep) {
  const int H = base.horizon(), S = base.num_states(), A = base.num_actions(), X = base.num_obs();
  const int St = S + 1, Xt = X + 1, term_s = S, term_x = X;

  std::vector<double> p1(static_cast<std::size_t>(St), 0.0);
  {
    auto src = base.latent().initial();
    double lost = 0.0;
    for (int s = 0; s < S; ++s) {
      if (keep[0][static_cast<std::size_t>(s)])
        p1[static_cast<std::size_t>(s)] = src[static_cast<std::size_t>(s)];
      else
        lost += src[static_cast<std::size_t>(s)];
    }
    p1[static_cast<std::size_t>(term_s)] = lost;
  }

  std::vector<std::vector<double>> trans;
  trans.reserve(static_cast<std::size_t>(H - 1));
  for (int h = 2; h <= H; ++h) {
    std::vector<double> layer(static_cast<std::size_t>(St) * A * St, 0.0);
    auto cell = [&](int s, int a, int s2) -> double& {
      return layer[static_cast<std::size_t>((s * A + a)) * St + static_cast<std::size_t>(s2)];
    };
    const auto& keep_h = keep[static_cast<std::size_t>(h - 1)];
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        auto row = base.latent().row(h, s, a);
        double lost = 0.0;
        for (int s2 = 0; s2 < S; ++s2) {
          if (keep_h[static_cast<std::size_t>(s2)])
            cell(s, a, s2) = row[static_cast<std::size_t>(s2)];
          else
            lost += row[static_cast<std::size_t>(s2)];
        }
        cell(s, a, term_s) = lost;
      }
    for (int a = 0; a < A; ++a) cell(term_s, a, term_s) = 1.0;
    trans.push_back(std::move(layer));
  }

  std::vector<std::vector<double>> emis;
  emis.reserve(static_cast<std::size_t>(H));
  for (int h = 1; h <= H; ++h) {
    std::vector<double> layer(static_cast<std::size_t>(St) * Xt, 0.0);
    for (int s = 0; s < S; ++s) {
      auto row = base.obs().row(h, s);
      for (int x = 0; x < X; ++x)
        layer[static_cast<std::size_t>(s) * Xt + static_cast<std::size_t>(x)] = row[static_cast<std::size_t>(x)];
    }
    layer[static_cast<std::size_t>(term_s) * Xt + static_cast<std::size_t>(term_x)] = 1.0;
    emis.push_back(std::move(layer));
  }

  std::vector<int> decoder = base.obs().decoder();
  decoder.push_back(term_s);

  BlockMdp out(LatentModel(H, St, A, std::move(p1), std::move(trans)),
               ObservationModel(H, St, Xt, std::move(emis), std::move(decoder)));
  out.mark_terminal(term_s, term_x);
  return out;
}

}  // namespace

ReachResult max_reach(const BlockMdp& mdp, int h, int s) {
  std::vector<std::vector<int>> greedy;
  ReachResult res;
  res.value = reach_dp(mdp, h, s, &greedy);
  res.witness = make_latent_greedy_policy(mdp.num_actions(), mdp.obs().decoder(), std::move(greedy));
  return res;
}

double max_reach_value(const BlockMdp& mdp, int h, int s) { return reach_dp(mdp, h, s, nullptr); }

bool TruncatedMdp::reachable(int h, int s) const {
  const auto& set = s_rch[static_cast<std::size_t>(h - 1)];
  return std::binary_search(set.begin(), set.end(), s);
}

TruncatedMdp truncate(const BlockMdp& base, const PolicySet& gamma, double tau, double tau_small) {
  if (!(tau_small > 0.0 && tau_small <= tau && tau < 1.0))
    throw std::invalid_argument("truncate: need 0 < tau_small <= tau < 1");
  const int H = base.horizon(), S = base.num_states();

  // Reachable-set chain of the empty truncation: S_rch_h uses max reach in the
  // previous intermediate truncation.
  std::vector<std::vector<bool>> keep_empty(static_cast<std::size_t>(H),
                                            std::vector<bool>(static_cast<std::size_t>(S), true));
  {
    auto p1 = base.latent().initial();
    for (int s = 0; s < S; ++s) keep_empty[0][static_cast<std::size_t>(s)] = p1[static_cast<std::size_t>(s)] >= tau;
  }
  BlockMdp prev = make_truncation(base, keep_empty);
  for (int h = 2; h <= H; ++h) {
    for (int s = 0; s < S; ++s)
      keep_empty[static_cast<std::size_t>(h - 1)][static_cast<std::size_t>(s)] =
          max_reach_value(prev, h, s) >= tau;
    if (h < H) prev = make_truncation(base, keep_empty);
  }

  // Gamma rescue: states the backup mixture visits with mass >= tau_small stay.
  std::vector<std::vector<bool>> keep = keep_empty;
  if (!gamma.empty()) {
    std::vector<VisitationTable> tables;
    tables.reserve(gamma.size());
    for (const Policy& g : gamma) tables.push_back(exact_visitation(base, g));
    for (int h = 2; h <= H; ++h)
      for (int s = 0; s < S; ++s) {
        if (keep[static_cast<std::size_t>(h - 1)][static_cast<std::size_t>(s)]) continue;
        double mass = 0.0;
        for (const auto& t : tables) mass += t.state(h, s);
        mass /= static_cast<double>(gamma.size());
        if (mass >= tau_small) keep[static_cast<std::size_t>(h - 1)][static_cast<std::size_t>(s)] = true;
      }
  }

  TruncatedMdp out;
  out.tau = tau;
  out.tau_small = tau_small;
  out.s_rch.resize(static_cast<std::size_t>(H));
  for (int h = 1; h <= H; ++h)
    for (int s = 0; s < S; ++s)
      if (keep[static_cast<std::size_t>(h - 1)][static_cast<std::size_t>(s)])
        out.s_rch[static_cast<std::size_t>(h - 1)].push_back(s);

  // Intermediate chain M_bar_h: truncated through layer h, identity afterwards.
  out.intermediates.reserve(static_cast<std::size_t>(H));
  std::vector<std::vector<bool>> partial(static_cast<std::size_t>(H),
                                         std::vector<bool>(static_cast<std::size_t>(S), true));
  for (int h = 1; h <= H; ++h) {
    partial[static_cast<std::size_t>(h - 1)] = keep[static_cast<std::size_t>(h - 1)];
    out.intermediates.push_back(make_truncation(base, partial));
  }
  return out;
}

double CoverReport::worst_deficit() const {
  double w = 0.0;
  for (const auto& e : entries) w = std::max(w, e.deficit);
  return w;
}

std::string CoverReport::to_json() const {
  nlohmann::json j;
  j["epsilon"] = epsilon;
  j["psi_size"] = psi_size;
  j["pass"] = pass;
  j["worst_deficit"] = worst_deficit();
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : entries)
    rows.push_back({{"layer", e.layer},
                    {"state", e.state},
                    {"achieved", e.achieved},
                    {"optimal", e.optimal},
                    {"deficit", e.deficit},
                    {"pass", e.pass}});
  j["entries"] = std::move(rows);
  return j.dump(2);
}

CoverReport check_cover(const BlockMdp& mdp, const PolicySet& psi, double epsilon) {
  const int H = mdp.horizon(), S = mdp.num_states();
  CoverReport report;
  report.epsilon = epsilon;
  report.psi_size = static_cast<int>(psi.size());

  std::vector<VisitationTable> tables;
  tables.reserve(psi.size());
  for (const Policy& p : psi) tables.push_back(exact_visitation(mdp, p));

  for (int h = 1; h <= H; ++h)
    for (int s = 0; s < S; ++s) {
      CoverEntry e;
      e.layer = h;
      e.state = s;
      for (const auto& t : tables) e.achieved = std::max(e.achieved, t.state(h, s));
      e.optimal = max_reach_value(mdp, h, s);
      if (e.achieved > e.optimal + 1e-9)
        throw std::logic_error("cover accounting: achieved exceeds optimal");
      e.deficit = std::max(0.0, e.optimal - e.achieved);
      e.pass = e.achieved >= e.optimal - epsilon - 1e-12;
      report.pass = report.pass && e.pass;
      report.entries.push_back(e);
    }
  return report;
}

TruncCoverReport check_truncated_cover(const BlockMdp& base, const TruncatedMdp& trunc_empty,
                                       const PolicySet& psi, int h, double alpha, TruncCoverMode mode) {
  const int S = base.num_states(), X = base.num_obs();
  TruncCoverReport report;
  report.layer = h;
  report.alpha = alpha;
  report.mode = mode;
  if (psi.empty()) throw std::invalid_argument("check_truncated_cover: empty psi");

  std::vector<VisitationTable> tables;
  tables.reserve(psi.size());
  for (const Policy& p : psi) tables.push_back(exact_visitation(base, p));

  std::vector<double> opt_state(static_cast<std::size_t>(S));
  for (int s = 0; s < S; ++s) opt_state[static_cast<std::size_t>(s)] = max_reach_value(trunc_empty.model(), h, s);

  for (int x = 0; x < X; ++x) {
    double lhs = 0.0;
    if (mode == TruncCoverMode::average) {
      for (const auto& t : tables) lhs += t.observation(h, x);
      lhs /= static_cast<double>(tables.size());
    } else {
      for (const auto& t : tables) lhs = std::max(lhs, t.observation(h, x));
    }
    const int s = base.decode(x);
    const double rhs = alpha * base.obs().prob(h, s, x) * opt_state[static_cast<std::size_t>(s)];
    report.worst_gap = std::max(report.worst_gap, rhs - lhs);
    if (lhs + 1e-12 < rhs) report.pass = false;
  }
  return report;
}

std::vector<double> mixture_visitation(const BlockMdp& mdp, int h, const PolicySet& psi,
                                       const PolicySet& gamma) {
  PolicyMixture mix(psi, gamma, mdp.num_actions());
  std::vector<double> out(static_cast<std::size_t>(mdp.num_states()), 0.0);
  for (const auto& [policy, weight] : mix.members_with_weights()) {
    VisitationTable t = exact_visitation(mdp, policy);
    for (int s = 0; s < mdp.num_states(); ++s)
      out[static_cast<std::size_t>(s)] += weight * t.state(h, s);
  }
  return out;
}

}  // namespace bmdp
