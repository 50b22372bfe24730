#include "bmdp/access.hpp"

#include <cassert>

#include "bmdp/errors.hpp"

namespace bmdp {

namespace {

int draw_from(std::span<const double> probs, Prng& rng) { return rng.categorical(probs); }

}  // namespace

int EpisodicAccess::begin_episode() {
  ++episodes_;
  cur_state_ = draw_from(mdp_->latent().initial(), rng_);
  const int x = draw_from(mdp_->obs().row(1, cur_state_), rng_);
  layer_ = 1;
  ep_obs_.assign(1, x);
  ep_act_.clear();
  ep_lat_.assign(1, cur_state_);
  return x;
}

std::optional<int> EpisodicAccess::step(int a) {
  if (layer_ < 1 || layer_ > mdp_->horizon())
    throw std::logic_error("episode concluded; request a new episode");
  assert(a >= 0 && a < mdp_->num_actions());
  ep_act_.push_back(a);
  if (layer_ == mdp_->horizon()) {
    layer_ = mdp_->horizon() + 1;  // concluded
    return std::nullopt;
  }
  cur_state_ = draw_from(mdp_->latent().row(layer_ + 1, cur_state_, a), rng_);
  const int x = draw_from(mdp_->obs().row(layer_ + 1, cur_state_), rng_);
  ++layer_;
  ep_obs_.push_back(x);
  ep_lat_.push_back(cur_state_);
  return x;
}

Trajectory EpisodicAccess::sample_episode_prefix(const Policy& pi, int upto_layer) {
  assert(upto_layer >= 1 && upto_layer <= mdp_->horizon());
  int x = begin_episode();
  for (int h = 1; h < upto_layer; ++h) {
    const int a = pi.sample_action(h, x, rng_);
    x = *step(a);
  }
  Trajectory t;
  t.observations = ep_obs_;
  t.actions = ep_act_;
  t.latents = ep_lat_;
  return t;
}

Trajectory EpisodicAccess::sample_episode(const Policy& pi) {
  Trajectory t = sample_episode_prefix(pi, mdp_->horizon());
  const int h = mdp_->horizon();
  const int a = pi.sample_action(h, t.observations.back(), rng_);
  step(a);
  t.actions.push_back(a);
  return t;
}

int ResetAccess::reset_initial() {
  ++queries_;
  const int s = draw_from(mdp_->latent().initial(), rng_);
  const int x = draw_from(mdp_->obs().row(1, s), rng_);
  registry_.emplace(1, x);
  return x;
}

int ResetAccess::reset_step(int h, int x, int a) {
  if (h < 1 || h >= mdp_->horizon()) throw std::logic_error("reset_step layer out of range");
  if (!is_registered(h, x))
    throw UnregisteredObservation("reset to layer " + std::to_string(h) + ", observation " +
                                  std::to_string(x) + " which was never issued");
  ++queries_;
  const int s = mdp_->decode(x);
  const int s_next = draw_from(mdp_->latent().row(h + 1, s, a), rng_);
  const int x_next = draw_from(mdp_->obs().row(h + 1, s_next), rng_);
  registry_.emplace(h + 1, x_next);
  return x_next;
}

Trajectory ResetAccess::sample_episode_prefix(const Policy& pi, int upto_layer) {
  assert(upto_layer >= 1 && upto_layer <= mdp_->horizon());
  ++episodes_;
  Trajectory t;
  int x = reset_initial();
  t.observations.push_back(x);
  t.latents.push_back(mdp_->decode(x));
  for (int h = 1; h < upto_layer; ++h) {
    const int a = pi.sample_action(h, x, rng_);
    x = reset_step(h, x, a);
    t.actions.push_back(a);
    t.observations.push_back(x);
    t.latents.push_back(mdp_->decode(x));
  }
  return t;
}

Trajectory ResetAccess::sample_episode(const Policy& pi) {
  Trajectory t = sample_episode_prefix(pi, mdp_->horizon());
  t.actions.push_back(pi.sample_action(mdp_->horizon(), t.observations.back(), rng_));
  return t;
}

}  // namespace bmdp
