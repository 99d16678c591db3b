#include "tpbc/critic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace tpbc {

namespace {

double int_pow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

}  // namespace

BasisSet::BasisSet(std::vector<std::vector<int>> exponents)
    : exponents_(std::move(exponents)) {
  if (exponents_.empty()) {
    throw DimensionError("BasisSet: needs at least one term");
  }
  state_dim_ = static_cast<int>(exponents_.front().size());
  std::set<std::vector<int>> seen;
  for (const auto& alpha : exponents_) {
    if (static_cast<int>(alpha.size()) != state_dim_) {
      throw DimensionError("BasisSet: inconsistent multi-index lengths");
    }
    int degree = 0;
    for (int e : alpha) {
      if (e < 0) throw DimensionError("BasisSet: negative exponent");
      degree += e;
    }
    if (degree < 2) {
      throw DimensionError("BasisSet: every term needs total degree >= 2");
    }
    if (!seen.insert(alpha).second) {
      throw DimensionError("BasisSet: duplicate term");
    }
  }
}

Eigen::VectorXd BasisSet::eval(const StateVec& x) const {
  require_length("x", x, state_dim_);
  Eigen::VectorXd phi(size());
  for (int k = 0; k < size(); ++k) {
    double v = 1.0;
    for (int i = 0; i < state_dim_; ++i) {
      v *= int_pow(x[i], exponents_[k][i]);
    }
    phi[k] = v;
  }
  return phi;
}

Matrix BasisSet::gradient(const StateVec& x) const {
  require_length("x", x, state_dim_);
  Matrix grad = Matrix::Zero(size(), state_dim_);
  for (int k = 0; k < size(); ++k) {
    const auto& alpha = exponents_[k];
    for (int j = 0; j < state_dim_; ++j) {
      if (alpha[j] == 0) continue;
      double v = static_cast<double>(alpha[j]) * int_pow(x[j], alpha[j] - 1);
      for (int i = 0; i < state_dim_; ++i) {
        if (i == j) continue;
        v *= int_pow(x[i], alpha[i]);
      }
      grad(k, j) = v;
    }
  }
  return grad;
}

std::string BasisSet::term_name(int k) const {
  std::ostringstream os;
  bool first = true;
  for (int i = 0; i < state_dim_; ++i) {
    int e = exponents_[k][i];
    if (e == 0) continue;
    if (!first) os << "*";
    os << "x" << (i + 1);
    if (e > 1) os << "^" << e;
    first = false;
  }
  return os.str();
}

double eval_value(const BasisSet& basis, const CriticWeights& weights, const StateVec& x) {
  require_length("w", weights.w, basis.size());
  return weights.w.dot(basis.eval(x));
}

Eigen::VectorXd eval_value_gradient(const BasisSet& basis, const CriticWeights& weights,
                                    const StateVec& x) {
  require_length("w", weights.w, basis.size());
  return basis.gradient(x).transpose() * weights.w;
}

PolicyFn policy_from_weights(const AffineDynamics& sys, const CostSpec& cost,
                             const BasisSet& basis, const CriticWeights& weights) {
  require_length("w", weights.w, basis.size());
  const double sigma = weights.direction == Direction::forward ? -1.0 : 1.0;
  const Matrix r_inv = cost.control_weight_inverse();
  // Capture by value; the returned policy is self-contained and pure.
  return [sys, r_inv, basis, w = weights.w, sigma](const StateVec& x) -> ControlVec {
    const Eigen::VectorXd value_grad = basis.gradient(x).transpose() * w;
    return sigma * 0.5 * r_inv * sys.input_map(x).transpose() * value_grad;
  };
}

void save_weights(const std::filesystem::path& path, const WeightsRecord& record) {
  nlohmann::json j;
  j["direction"] = to_string(record.weights.direction);
  j["basis_terms"] = record.basis_terms;
  j["w"] = std::vector<double>(record.weights.w.begin(), record.weights.w.end());
  j["benchmark"] = record.benchmark;
  j["trained_at_config_hash"] = record.trained_at_config_hash;
  std::ofstream os(path);
  if (!os) throw Error("save_weights: cannot open " + path.string());
  os << j.dump(2) << "\n";
}

WeightsRecord load_weights(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("load_weights: cannot open " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("load_weights: " + path.string() + ": " + e.what());
  }
  WeightsRecord rec;
  try {
    const std::string dir = j.at("direction").get<std::string>();
    if (dir == "forward") {
      rec.weights.direction = Direction::forward;
    } else if (dir == "backward") {
      rec.weights.direction = Direction::backward;
    } else {
      throw ConfigError("load_weights: bad direction '" + dir + "'");
    }
    rec.basis_terms = j.at("basis_terms").get<std::vector<std::vector<int>>>();
    const auto w = j.at("w").get<std::vector<double>>();
    rec.weights.w = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    rec.benchmark = j.at("benchmark").get<std::string>();
    rec.trained_at_config_hash = j.at("trained_at_config_hash").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("load_weights: " + path.string() + ": " + e.what());
  }
  if (!rec.weights.w.allFinite()) {
    throw ConfigError("load_weights: " + path.string() + ": non-finite weights");
  }
  if (rec.basis_terms.empty() || rec.weights.w.size() != static_cast<Eigen::Index>(rec.basis_terms.size())) {
    throw ConfigError("load_weights: " + path.string() + ": weight/basis size mismatch");
  }
  return rec;
}

}  // namespace tpbc
