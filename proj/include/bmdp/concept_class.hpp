#pragma once

#include <vector>

#include "bmdp/errors.hpp"

namespace bmdp {

// A finite family of candidate decoders X -> S. The learner sees the whole
// family; which member generated the data is exposed only through a
// verification-only accessor.
class ConceptClass {
 public:
  ConceptClass() = default;
  ConceptClass(int num_obs, int num_states, std::vector<std::vector<int>> members, int truth_index);

  int num_obs() const { return num_obs_; }
  int num_states() const { return num_states_; }
  int size() const { return static_cast<int>(members_.size()); }
  const std::vector<int>& member(int k) const { return members_[k]; }
  int decode(int k, int x) const { return members_[k][static_cast<std::size_t>(x)]; }

  // Verification-only: index of the generating decoder.
  int truth_index_for_verification() const { return truth_index_; }
  const std::vector<int>& truth_for_verification() const { return members_[truth_index_]; }

 private:
  int num_obs_ = 0;
  int num_states_ = 0;
  std::vector<std::vector<int>> members_;
  int truth_index_ = 0;
};

// Observation/state id layout for the augmented spaces X + {0,1} and S + {0,1}.
// Interior ids keep their base values; the two fully observed elements sit at
// the top: "0" at base count, "1" at base count + 1.
struct AugLayout {
  int base_obs = 0;
  int base_states = 0;
  int obs0() const { return base_obs; }
  int obs1() const { return base_obs + 1; }
  int state0() const { return base_states; }
  int state1() const { return base_states + 1; }
  int num_obs() const { return base_obs + 2; }
  int num_states() const { return base_states + 2; }
  bool is_interior_obs(int x) const { return x >= 0 && x < base_obs; }
};

// Lifts every member phi to aug(phi) over the augmented spaces: interior
// observations decode as before, the two special observations decode to their
// own states. Regularity (phi_aug^{-1}(b) = {b}) holds by construction.
ConceptClass augment(const ConceptClass& base);

inline AugLayout aug_layout(const ConceptClass& base) {
  return AugLayout{base.num_obs(), base.num_states()};
}

}  // namespace bmdp
