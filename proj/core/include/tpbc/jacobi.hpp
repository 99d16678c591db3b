#pragma once

#include "tpbc/types.hpp"

namespace tpbc {

/// Eigenvalues of a small symmetric matrix by the cyclic Jacobi method,
/// returned in ascending order. Intended for N <= 32.
Eigen::VectorXd jacobi_eigenvalues(Matrix a, int max_sweeps = 64);

/// Smallest eigenvalue of a symmetric matrix (cyclic Jacobi).
double jacobi_min_eigenvalue(const Matrix& a);

}  // namespace tpbc
