#include "bmdp/explore_reset.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <sstream>

namespace bmdp {

std::vector<OneContextDataset> build_discriminator_datasets(ResetEnv& env, int h,
                                                            const std::vector<int>& discriminators,
                                                            long n_samples, DiscriminatorMode mode,
                                                            Prng rng) {
  const int m = static_cast<int>(discriminators.size());
  const int A = env.num_actions();
  std::vector<OneContextDataset> out(static_cast<std::size_t>(m) * A);
  for (auto& d : out) d.rows.reserve(static_cast<std::size_t>(n_samples));

  if (mode == DiscriminatorMode::shared) {
    // One draw stream, relabeled per (i, a).
    for (long t = 0; t < n_samples; ++t) {
      const int j = rng.uniform_int(m);
      const int a_h = rng.uniform_int(A);
      const int x_next = env.reset_step(h, discriminators[static_cast<std::size_t>(j)], a_h);
      for (int i = 0; i < m; ++i)
        for (int a = 0; a < A; ++a)
          out[static_cast<std::size_t>(i * A + a)].rows.push_back({x_next, (j == i && a_h == a) ? 1 : 0});
    }
    return out;
  }

  for (int i = 0; i < m; ++i)
    for (int a = 0; a < A; ++a) {
      Prng stream = rng.child("disc", static_cast<std::uint64_t>(i * A + a));
      auto& data = out[static_cast<std::size_t>(i * A + a)];
      for (long t = 0; t < n_samples; ++t) {
        const int j = stream.uniform_int(m);
        const int a_h = stream.uniform_int(A);
        const int x_next = env.reset_step(h, discriminators[static_cast<std::size_t>(j)], a_h);
        data.rows.push_back({x_next, (j == i && a_h == a) ? 1 : 0});
      }
    }
  return out;
}

double exact_kinematics_w(const BlockMdp& mdp, int h, const std::vector<int>& discriminator_latents,
                          int s_next, int s_from, int a) {
  const int A = mdp.num_actions();
  double denom = 0.0;
  for (int s_j : discriminator_latents)
    for (int a2 = 0; a2 < A; ++a2) denom += mdp.latent().prob(h + 1, s_j, a2, s_next);
  const double num = mdp.latent().prob(h + 1, s_from, a, s_next);
  if (denom <= 0.0) return 0.0;
  return num / denom;
}

namespace {

double posterior_distance(const std::vector<double>& sig_a, const std::vector<double>& sig_b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < sig_a.size(); ++i) worst = std::max(worst, std::abs(sig_a[i] - sig_b[i]));
  return worst;
}

std::vector<double> posterior_signature(const std::vector<Predictor1>& what, int x) {
  std::vector<double> sig(what.size());
  for (std::size_t i = 0; i < what.size(); ++i) sig[i] = what[i](x);
  return sig;
}

}  // namespace

PolicySet epcr(const OneContextOracle& reg1, int h, std::span<const PolicySet> psi,
               const PolicySet& gamma, const EpcrConfig& cfg, ResetEnv& env, Prng rng,
               LayerDiagnostics* diag) {
  assert(h >= 1 && h < env.horizon());
  const int A = env.num_actions();
  const long queries_at_entry = env.queries_used();
  const PolicySet& psi_h = psi[static_cast<std::size_t>(h - 1)];
  PolicyMixture mix(psi_h, gamma, A);

  // Discriminator observations at layer h; sampling registers them for resets.
  Prng disc_rng = rng.child("discriminators");
  std::vector<int> discriminators;
  discriminators.reserve(static_cast<std::size_t>(cfg.m));
  for (int i = 0; i < cfg.m; ++i)
    discriminators.push_back(env.sample_episode_prefix(mix.sample(disc_rng), h).observations.back());

  // Posterior regressions w_hat(.; i, a).
  std::vector<OneContextDataset> datasets =
      build_discriminator_datasets(env, h, discriminators, cfg.N, cfg.mode, rng.child("datasets"));
  std::vector<Predictor1> what;
  what.reserve(static_cast<std::size_t>(cfg.m) * A);
  for (int i = 0; i < cfg.m; ++i)
    for (int a = 0; a < A; ++a) {
      FitContext ctx;
      ctx.kind = FitContext::Kind::discriminator_w;
      ctx.layer = h;
      ctx.action = a;
      ctx.discriminators = &discriminators;
      ctx.disc_index = i;
      what.push_back(reg1(datasets[static_cast<std::size_t>(i * A + a)], cfg.eps_reg, cfg.delta_reg, ctx));
    }

  // Candidate centers drawn by resetting to a uniform discriminator and action.
  PolicySet psi_next;
  std::vector<std::vector<double>> accepted_sigs;
  Prng center_rng = rng.child("centers");
  for (int t = 1; t <= cfg.n; ++t) {
    const int j = center_rng.uniform_int(cfg.m);
    const int a_h = center_rng.uniform_int(A);
    const int center = env.reset_step(h, discriminators[static_cast<std::size_t>(j)], a_h);
    std::vector<double> sig = posterior_signature(what, center);

    double min_sep = std::numeric_limits<double>::infinity();
    for (const auto& prev : accepted_sigs) min_sep = std::min(min_sep, posterior_distance(sig, prev));
    const bool accept = accepted_sigs.empty() || min_sep > cfg.gamma_sep;

    CenterRecord rec;
    rec.t = t;
    rec.accepted = accept;
    rec.min_separation = accepted_sigs.empty() ? 0.0 : min_sep;
    if (accept) {
      const double gamma_tol = cfg.gamma_tol;
      RewardFn reward([what, sig, gamma_tol](int x) {
        double worst = 0.0;
        for (std::size_t i = 0; i < what.size(); ++i) worst = std::max(worst, std::abs(sig[i] - what[i](x)));
        return std::max(0.0, 1.0 - worst / gamma_tol);
      });
      Policy pihat = psdp(h, reg1, reward, psi, gamma, cfg.N, env,
                          rng.child("psdp", static_cast<std::uint64_t>(t)), cfg.eps_reg, cfg.delta_reg);
      rec.psdp_value_estimate = reward(center);
      psi_next.push_back(pihat);
      accepted_sigs.push_back(std::move(sig));
    }
    if (diag) diag->centers.push_back(rec);
  }

  if (diag) {
    diag->layer = h;
    diag->psi_size = static_cast<int>(psi_next.size());
    diag->episodes_used = env.queries_used() - queries_at_entry;
  }
  return psi_next;
}

long epcr_query_budget(int h, int num_actions, const EpcrConfig& cfg, int accepted) {
  const long dataset_queries = cfg.mode == DiscriminatorMode::shared
                                   ? cfg.N
                                   : static_cast<long>(cfg.m) * num_actions * cfg.N;
  return static_cast<long>(cfg.m) * h                         // discriminator roll-ins
         + dataset_queries                                    // posterior datasets
         + cfg.n                                              // candidate centers
         + static_cast<long>(accepted) * h * num_actions * cfg.N * (h + 1);  // PSDP episodes via resets
}

PolicySet pcr(const OneContextOracle& reg1, int S_count, const PcrConfig& cfg, ResetEnv& env,
              Prng rng, ExploreDiagnostics* diag) {
  const int H = env.horizon();
  Policy uniform = make_uniform_policy(env.num_actions());
  PolicySet backup;
  PolicySet output;

  for (int r = 1; r <= cfg.rounds; ++r) {
    Prng round_rng = rng.child("round", static_cast<std::uint64_t>(r));
    std::vector<PolicySet> covers(static_cast<std::size_t>(H));
    covers[0] = {uniform};
    RoundDiagnostics round_diag;
    round_diag.round = r;
    for (int h = 1; h < H; ++h) {
      LayerDiagnostics layer_diag;
      covers[static_cast<std::size_t>(h)] =
          epcr(reg1, h, std::span<const PolicySet>(covers.data(), static_cast<std::size_t>(h)), backup,
               cfg.layer, env, round_rng.child("layer", static_cast<std::uint64_t>(h)),
               diag ? &layer_diag : nullptr);
      if (diag) round_diag.layers.push_back(std::move(layer_diag));
    }
    for (int h = 0; h < H; ++h) {
      round_diag.psi_sizes.push_back(static_cast<int>(covers[static_cast<std::size_t>(h)].size()));
      if (static_cast<int>(covers[static_cast<std::size_t>(h)].size()) <= S_count) {
        append_unique(backup, covers[static_cast<std::size_t>(h)]);
        append_unique(output, covers[static_cast<std::size_t>(h)]);
      }
    }
    if (diag) diag->rounds.push_back(std::move(round_diag));
  }
  if (diag) {
    diag->reset_queries_total = env.queries_used();
    diag->episodes_total = env.episodes_used();
  }
  return output;
}

PcrParams pcr_params_theory(int S_count, int H, int A_count, double eps_final, double delta) {
  PcrParams p;
  p.mode = PcrParams::Mode::theory;
  p.eps_final = eps_final;
  p.delta = delta;
  p.S_count = S_count;
  p.H = H;
  p.A_count = A_count;
  const double S = S_count, A = A_count;
  p.tau = eps_final / (4.0 + H * S);
  p.rounds = S_count * H;
  p.tau_small = p.tau * p.tau / (p.rounds * S * S * H * H);
  p.alpha = (1.0 - 4.0 * p.tau) / S;
  const double floor = std::min(p.alpha * p.tau, p.tau_small);
  p.m_theory = std::ceil(2.0 / floor * std::log(S / delta));
  p.n_theory = std::ceil(p.m_theory * A / p.tau * std::log(S / delta));
  const double lg_eps1 = 8.0 * std::log10(p.alpha) + 16.0 * std::log10(p.tau) + 8.0 * std::log10(p.tau_small) -
                         8.0 * std::log10(6.0) - 8.0 * std::log10(static_cast<double>(H)) -
                         12.0 * std::log10(p.m_theory) - 12.0 * std::log10(A);
  const double lg_eps2 = 4.0 * std::log10(delta) - 2.0 * std::log10(p.m_theory) - 2.0 * std::log10(A) -
                         4.0 * std::log10(p.n_theory);
  p.log10_eps = std::min(lg_eps1, lg_eps2);
  p.log10_gamma = p.log10_eps / 8.0;
  p.log10_gamma_sep = std::log10(2.0) + p.log10_eps / 4.0;
  return p;
}

PcrParams pcr_params_practical(int S_count, int H, int A_count, const PracticalOverrides& ov) {
  PcrParams p;
  p.mode = PcrParams::Mode::practical;
  p.S_count = S_count;
  p.H = H;
  p.A_count = A_count;
  p.tau = ov.tau.value_or(p.eps_final / (4.0 + H * static_cast<double>(S_count)));
  p.rounds = ov.rounds.value_or(S_count * H);
  p.tau_small = ov.tau_small.value_or(p.tau * p.tau /
                                      (p.rounds * static_cast<double>(S_count) * S_count * H * H));
  p.alpha = (1.0 - 4.0 * p.tau) / S_count;
  p.config.rounds = p.rounds;
  p.config.layer.m = ov.m.value_or(8 * S_count);
  p.config.layer.n = ov.n.value_or(8 * S_count * A_count);
  p.config.layer.N = ov.N.value_or(4000);
  p.config.layer.gamma_tol = ov.gamma.value_or(0.05);
  p.config.layer.gamma_sep = ov.gamma_sep.value_or(0.15);
  p.config.layer.eps_reg = ov.eps_reg.value_or(0.05);
  p.config.layer.delta_reg = ov.delta_reg.value_or(0.05);
  return p;
}

std::string PcrParams::describe() const {
  std::ostringstream out;
  out << (mode == Mode::theory ? "theory" : "practical") << " params: S=" << S_count << " H=" << H
      << " A=" << A_count << " tau=" << tau << " tau_small=" << tau_small << " alpha=" << alpha
      << " rounds=" << rounds;
  if (mode == Mode::theory) {
    out << " m=" << m_theory << " n=" << n_theory << " log10(eps)=" << log10_eps
        << " log10(gamma)=" << log10_gamma << " log10(gamma')=" << log10_gamma_sep;
  } else {
    out << " m=" << config.layer.m << " n=" << config.layer.n << " N=" << config.layer.N
        << " gamma=" << config.layer.gamma_tol << " gamma'=" << config.layer.gamma_sep
        << " dataset_mode=" << (config.layer.mode == DiscriminatorMode::shared ? "shared" : "independent");
  }
  return out.str();
}

}  // namespace bmdp
