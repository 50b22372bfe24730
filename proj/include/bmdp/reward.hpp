#pragma once

#include <algorithm>
#include <functional>

namespace bmdp {

// Reward over observations, extended by 0 at the terminal context. Negative
// ids stand for the terminal; verification DP over truncated models routes
// their terminal observation to 0 itself. Values clamp to [0,1].
class RewardFn {
 public:
  RewardFn() = default;
  explicit RewardFn(std::function<double(int)> f) : f_(std::move(f)) {}

  double operator()(int x) const {
    if (x < 0) return 0.0;
    return std::clamp(f_(x), 0.0, 1.0);
  }
  bool valid() const { return static_cast<bool>(f_); }

 private:
  std::function<double(int)> f_;
};

}  // namespace bmdp
