#pragma once

#include <Eigen/Dense>
#include <string>

#include "tpbc/errors.hpp"

namespace tpbc {

/// State and control vectors are plain dynamic-size vectors; the owning
/// system's n and m pin their lengths at the API boundaries.
using StateVec = Eigen::VectorXd;
using ControlVec = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  return m.allFinite();
}

inline void require_finite(const char* name, const Eigen::Ref<const Eigen::MatrixXd>& m) {
  if (!m.allFinite()) {
    throw DimensionError(std::string(name) + ": non-finite entries");
  }
}

inline void require_length(const char* name, const Eigen::Ref<const Eigen::VectorXd>& v,
                           Eigen::Index n) {
  if (v.size() != n) {
    throw DimensionError(std::string(name) + ": expected length " + std::to_string(n) +
                         ", got " + std::to_string(v.size()));
  }
}

}  // namespace tpbc
