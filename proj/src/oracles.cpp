#include <stdexcept>

#include "bmdp/explore_episodic.hpp"
#include "bmdp/explore_reset.hpp"
#include "bmdp/psdp.hpp"
#include "bmdp/regression.hpp"

namespace bmdp {

namespace {

// fixed0/fixed1 refer to the two top states of an augmented layout: tables are
// indexed over S_aug, whose special states sit at dim-2 and dim-1.
int resolve_latent(const std::vector<int>& decoder, FitContext::Resolve r, int x, int dim) {
  switch (r) {
    case FitContext::Resolve::fixed0:
      return dim - 2;
    case FitContext::Resolve::fixed1:
      return dim - 1;
    default:
      return decoder[static_cast<std::size_t>(x)];
  }
}

Predictor1 generic_one_predictor(std::vector<int> decoder, const FitContext& ctx) {
  std::vector<double> f1 = *ctx.f1;
  const int dim = static_cast<int>(f1.size());
  const auto resolve = ctx.resolve1;
  return Predictor1(
      [decoder = std::move(decoder), f1 = std::move(f1), resolve, dim](int x) {
        return f1[static_cast<std::size_t>(resolve_latent(decoder, resolve, x, dim))];
      },
      "bayes_one[generic]");
}

Predictor2 generic_two_predictor(std::vector<int> decoder, const FitContext& ctx) {
  std::vector<double> f2 = *ctx.f2;
  const int dim = ctx.f2_dim;
  const auto r1 = ctx.resolve1, r2 = ctx.resolve2;
  return Predictor2(
      [decoder = std::move(decoder), f2 = std::move(f2), dim, r1, r2](int x1, int x2) {
        const int s1 = resolve_latent(decoder, r1, x1, dim);
        const int s2 = resolve_latent(decoder, r2, x2, dim);
        return f2[static_cast<std::size_t>(s1) * dim + static_cast<std::size_t>(s2)];
      },
      "bayes_two[generic]");
}

Predictor2 generic_one_as_two_predictor(std::vector<int> decoder, const FitContext& ctx) {
  std::vector<double> f1 = *ctx.f1;
  const int dim = static_cast<int>(f1.size());
  const auto resolve = ctx.resolve1;
  return Predictor2(
      [decoder = std::move(decoder), f1 = std::move(f1), resolve, dim](int x1, int) {
        return f1[static_cast<std::size_t>(resolve_latent(decoder, resolve, x1, dim))];
      },
      "bayes_two[generic-one]");
}

}  // namespace

OneContextOracle make_bayes_one_oracle(const BlockMdp& env) {
  const BlockMdp* model = &env;
  return [model](const OneContextDataset&, double, double, const FitContext& ctx) -> Predictor1 {
    switch (ctx.kind) {
      case FitContext::Kind::generic_one:
        return generic_one_predictor(model->obs().decoder(), ctx);
      case FitContext::Kind::discriminator_w: {
        std::vector<int> disc_latents;
        disc_latents.reserve(ctx.discriminators->size());
        for (int x : *ctx.discriminators) disc_latents.push_back(model->decode(x));
        const int s_from = disc_latents[static_cast<std::size_t>(ctx.disc_index)];
        const int h = ctx.layer, a = ctx.action;
        return Predictor1(
            [model, disc_latents = std::move(disc_latents), s_from, h, a](int x) {
              return exact_kinematics_w(*model, h, disc_latents, model->decode(x), s_from, a);
            },
            "bayes_one[w]");
      }
      case FitContext::Kind::psdp_q: {
        // Snapshot the exact Q table now; the reward and continuation are only
        // borrowed for the duration of this call.
        TrueQ tq = true_q(*model, *ctx.continuation, ctx.k_layer, *ctx.reward);
        const int A = model->num_actions();
        std::vector<double> row(static_cast<std::size_t>(model->num_obs()));
        for (int x = 0; x < model->num_obs(); ++x) row[static_cast<std::size_t>(x)] = tq.q_at(ctx.layer, x, ctx.action, A);
        return Predictor1([row = std::move(row)](int x) { return row[static_cast<std::size_t>(x)]; },
                          "bayes_one[q]");
      }
      default:
        throw std::logic_error("bayes one-context oracle: unsupported or missing fit context");
    }
  };
}

TwoContextOracle make_bayes_two_oracle(const BlockMdp& env) {
  const BlockMdp* model = &env;
  return [model](const TwoContextDataset&, double, double, const FitContext& ctx) -> Predictor2 {
    switch (ctx.kind) {
      case FitContext::Kind::generic_two:
        return generic_two_predictor(model->obs().decoder(), ctx);
      case FitContext::Kind::generic_one:
        // A one-context problem padded through the two-context interface.
        return generic_one_as_two_predictor(model->obs().decoder(), ctx);
      case FitContext::Kind::contrastive_f: {
        KinematicsF table = exact_kinematics_f(*model, ctx.layer, *ctx.psi, *ctx.gamma);
        const int a = ctx.action;
        return Predictor2(
            [model, table = std::move(table), a](int x1, int x2) {
              return table.at(model->decode(x1), model->decode(x2), a);
            },
            "bayes_two[f]");
      }
      case FitContext::Kind::psdp_q: {
        TrueQ tq = true_q(*model, *ctx.continuation, ctx.k_layer, *ctx.reward);
        const int A = model->num_actions();
        std::vector<double> row(static_cast<std::size_t>(model->num_obs()));
        for (int x = 0; x < model->num_obs(); ++x) row[static_cast<std::size_t>(x)] = tq.q_at(ctx.layer, x, ctx.action, A);
        return Predictor2([row = std::move(row)](int x1, int) { return row[static_cast<std::size_t>(x1)]; },
                          "bayes_two[q]");
      }
      default:
        throw std::logic_error("bayes two-context oracle: unsupported or missing fit context");
    }
  };
}

OneContextOracle make_bayes_one_oracle(std::vector<int> decoder) {
  return [decoder = std::move(decoder)](const OneContextDataset&, double, double,
                                        const FitContext& ctx) -> Predictor1 {
    if (ctx.kind != FitContext::Kind::generic_one)
      throw std::logic_error("decoder-only bayes oracle supports generic contexts only");
    return generic_one_predictor(decoder, ctx);
  };
}

TwoContextOracle make_bayes_two_oracle(std::vector<int> decoder) {
  return [decoder = std::move(decoder)](const TwoContextDataset&, double, double,
                                        const FitContext& ctx) -> Predictor2 {
    if (ctx.kind == FitContext::Kind::generic_two) return generic_two_predictor(decoder, ctx);
    if (ctx.kind == FitContext::Kind::generic_one) return generic_one_as_two_predictor(decoder, ctx);
    throw std::logic_error("decoder-only bayes oracle supports generic contexts only");
  };
}

}  // namespace bmdp
