#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "tpbc/dynamics.hpp"
#include "tpbc/types.hpp"

namespace tpbc {

enum class Direction { forward, backward };

inline const char* to_string(Direction d) {
  return d == Direction::forward ? "forward" : "backward";
}

/// Polynomial value-function basis. Each term is a monomial given by a
/// multi-index over the state; every term has total degree >= 2 so that
/// phi(0) = 0 and grad phi(0) = 0, keeping any induced policy zero at the
/// origin.
class BasisSet {
 public:
  explicit BasisSet(std::vector<std::vector<int>> exponents);

  int size() const { return static_cast<int>(exponents_.size()); }
  int state_dim() const { return state_dim_; }
  const std::vector<std::vector<int>>& terms() const { return exponents_; }

  /// phi(x): vector of monomial values, length size().
  Eigen::VectorXd eval(const StateVec& x) const;

  /// Row k holds grad of term k at x; size() by state_dim().
  Matrix gradient(const StateVec& x) const;

  /// Human-readable monomial like "x1^2*x2".
  std::string term_name(int k) const;

 private:
  std::vector<std::vector<int>> exponents_;
  int state_dim_;
};

struct CriticWeights {
  Eigen::VectorXd w;
  Direction direction = Direction::forward;
};

/// What the learned value function claims at x: w' phi(x).
double eval_value(const BasisSet& basis, const CriticWeights& weights, const StateVec& x);

/// Gradient of the approximated value: (grad phi)' w, length n.
Eigen::VectorXd eval_value_gradient(const BasisSet& basis, const CriticWeights& weights,
                                    const StateVec& x);

using PolicyFn = std::function<ControlVec(const StateVec&)>;

/// Control law induced by critic weights:
///   u(x) = sigma * (1/2) R^-1 g(x)' (grad phi(x))' w,
/// sigma = -1 for the forward regulator and +1 for the backward one. Works
/// on a g_only system view; only the input map is consulted.
PolicyFn policy_from_weights(const AffineDynamics& sys, const CostSpec& cost,
                             const BasisSet& basis, const CriticWeights& weights);

/// Flat weight record written next to training logs.
struct WeightsRecord {
  CriticWeights weights;
  std::vector<std::vector<int>> basis_terms;
  std::string benchmark;
  std::uint64_t trained_at_config_hash = 0;
};

void save_weights(const std::filesystem::path& path, const WeightsRecord& record);
WeightsRecord load_weights(const std::filesystem::path& path);

}  // namespace tpbc
