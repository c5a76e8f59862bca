#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

namespace entgeo::detail {

struct HermitianEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXcd vectors; // columns are orthonormal eigenvectors
};

// Cyclic Jacobi for a complex Hermitian matrix. Each rotation first removes
// the phase of the pivot a(p,q) and then applies a real Givens rotation, so
// the accumulated eigenvector matrix stays unitary to machine precision.
inline HermitianEigen jacobi_eigen(Eigen::MatrixXcd a, int max_sweeps = 64) {
  using Complex = std::complex<double>;
  const Eigen::Index n = a.rows();
  Eigen::MatrixXcd v = Eigen::MatrixXcd::Identity(n, n);
  a = (0.5 * (a + a.adjoint())).eval();

  const double total = a.squaredNorm();
  for (int sweep = 0; sweep < max_sweeps && n > 1; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += std::norm(a(p, q));
    if (off <= 1e-32 * total || off == 0.0) break;

    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double r = std::abs(a(p, q));
        if (r == 0.0) continue;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        // Skip rotations that cannot change the diagonal in floating point.
        if (sweep > 3 && r < 1e-18 * (std::abs(app) + std::abs(aqq))) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        const Complex phase = a(p, q) / r;
        const double tau = (aqq - app) / (2.0 * r);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        Eigen::Matrix2cd w;
        w << c, s, -s * std::conj(phase), c * std::conj(phase);

        Eigen::MatrixXcd cols(n, 2);
        cols.col(0) = a.col(p);
        cols.col(1) = a.col(q);
        cols = (cols * w).eval();
        a.col(p) = cols.col(0);
        a.col(q) = cols.col(1);

        Eigen::MatrixXcd rows(2, n);
        rows.row(0) = a.row(p);
        rows.row(1) = a.row(q);
        rows = (w.adjoint() * rows).eval();
        a.row(p) = rows.row(0);
        a.row(q) = rows.row(1);

        a(p, q) = a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();

        Eigen::MatrixXcd vc(n, 2);
        vc.col(0) = v.col(p);
        vc.col(1) = v.col(q);
        vc = (vc * w).eval();
        v.col(p) = vc.col(0);
        v.col(q) = vc.col(1);
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i).real() < a(j, j).real(); });

  HermitianEigen out{Eigen::VectorXd(n), Eigen::MatrixXcd(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]).real();
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

}  // namespace entgeo::detail
