#include "tpbc/jacobi.hpp"

#include <algorithm>
#include <cmath>

namespace tpbc {

Eigen::VectorXd jacobi_eigenvalues(Matrix a, int max_sweeps) {
  if (a.rows() != a.cols()) throw DimensionError("jacobi_eigenvalues: matrix must be square");
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + a.cwiseAbs().maxCoeff())) {
    throw DimensionError("jacobi_eigenvalues: matrix must be symmetric");
  }
  const Eigen::Index n = a.rows();
  a = 0.5 * (a + a.transpose().eval());

  auto off_norm = [&]() {
    double s = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) s += a(p, q) * a(p, q);
    return std::sqrt(2.0 * s);
  };

  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double tol = 1e-15 * scale * static_cast<double>(n);

  for (int sweep = 0; sweep < max_sweeps && off_norm() > tol; ++sweep) {
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= tol / static_cast<double>(n * n)) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        // smaller-angle root of t^2 + 2 theta t - 1 = 0
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }

  Eigen::VectorXd ev = a.diagonal();
  std::sort(ev.begin(), ev.end());
  return ev;
}

double jacobi_min_eigenvalue(const Matrix& a) {
  return jacobi_eigenvalues(a).minCoeff();
}

}  // namespace tpbc
