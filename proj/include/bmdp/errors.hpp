#pragma once

#include <stdexcept>
#include <string>

namespace bmdp {

// Constructor/validation failures carry the violated invariant by name.
class ModelInvariantViolation : public std::invalid_argument {
 public:
  ModelInvariantViolation(const std::string& invariant, const std::string& detail)
      : std::invalid_argument(invariant + ": " + detail), invariant_(invariant) {}
  const std::string& invariant() const { return invariant_; }

 private:
  std::string invariant_;
};

// A reset query named an (layer, observation) pair that was never issued by the access handle.
class UnregisteredObservation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyDataset : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A dataset-driven simulation ran out of samples before the RL oracle finished.
class DatasetExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Noisy data fed to the noiseless reset reduction: equal contexts with unequal labels.
class NoiselessViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A joint context distribution fails the conditional-independence factorization.
class RealizabilityViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GenerationTimeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bmdp
