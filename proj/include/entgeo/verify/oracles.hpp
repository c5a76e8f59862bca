#pragma once

// Reference computations used by the verification suites. Each one avoids the
// code path it is meant to check: dense Eigen eigensolvers instead of the
// Jacobi solver, brute-force search instead of Newton iterations.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "entgeo/algebra.hpp"

namespace entgeo::oracle {

/// f(a) for a dense Hermitian matrix via Eigen's solver.
template <class F>
Eigen::MatrixXcd dense_function(const Eigen::MatrixXcd& a, F f) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a);
  Eigen::VectorXcd v = es.eigenvalues().unaryExpr([&](double x) { return std::complex<double>(f(x), 0.0); });
  return es.eigenvectors() * v.asDiagonal() * es.eigenvectors().adjoint();
}

/// log tr exp(a), with the top eigenvalue shifted out.
inline double dense_free_energy(const HermElem& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a.dense());
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double top = ev.maxCoeff();
  return top + std::log((ev.array() - top).exp().sum());
}

/// exp(a) / tr exp(a) as a dense matrix.
inline Eigen::MatrixXcd dense_gibbs(const HermElem& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a.dense());
  const double top = es.eigenvalues().maxCoeff();
  Eigen::MatrixXcd e = dense_function(a.dense(), [top](double x) { return std::exp(x - top); });
  return e / e.trace().real();
}

inline double dense_trace_norm(const Eigen::MatrixXcd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a);
  return es.eigenvalues().cwiseAbs().sum();
}

inline double shannon(const Eigen::VectorXd& p) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p(i) > 0.0) s -= p(i) * std::log(p(i));
  return s;
}

/// Maximal Shannon entropy over the simplex subject to a p = xi, by projected
/// gradient ascent started from a known strictly positive feasible point p0.
/// Steps live in the null space of [a; 1^T] and are cut back to stay positive.
inline Eigen::VectorXd simplex_maxent(const Eigen::MatrixXd& a, const Eigen::VectorXd& p0, int iters = 200000,
                                      double tol = 1e-14) {
  const Eigen::Index n = p0.size();
  Eigen::MatrixXd c(a.rows() + 1, n);
  c << a, Eigen::RowVectorXd::Ones(n);
  // Orthogonal projector onto null(c).
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(c, Eigen::ComputeFullV);
  const Eigen::Index r = (svd.singularValues().array() > 1e-12 * svd.singularValues()(0)).count();
  const Eigen::MatrixXd nb = svd.matrixV().rightCols(n - r);
  const Eigen::MatrixXd proj = nb * nb.transpose();

  Eigen::VectorXd p = p0;
  auto h = [](const Eigen::VectorXd& q) { return shannon(q); };
  double step = 0.1;
  for (int it = 0; it < iters; ++it) {
    const Eigen::VectorXd g = proj * (-(p.array().log() + 1.0)).matrix();
    if (g.norm() < tol) break;
    double t = step;
    // Keep p strictly positive.
    for (Eigen::Index i = 0; i < n; ++i)
      if (g(i) < 0.0) t = std::min(t, -0.5 * p(i) / g(i));
    const double h0 = h(p);
    Eigen::VectorXd q = p + t * g;
    while (h(q) < h0 + 0.25 * t * g.squaredNorm() && t > 1e-18) {
      t *= 0.5;
      q = p + t * g;
    }
    if (t <= 1e-18) break;
    p = q;
    step = std::min(1.0, 2.0 * t);
  }
  return p;
}

/// Faces of conv{points} in the plane, as sets of point indices (all points on
/// the face). Found by sweeping support directions: a dense angle grid plus the
/// normals of every pair of points, which produce all edges exactly.
inline std::set<std::vector<int>> planar_faces(const std::vector<Eigen::Vector2d>& pts, double tie = 1e-9) {
  std::vector<Eigen::Vector2d> dirs;
  const int grid = 7200;
  for (int i = 0; i < grid; ++i) {
    const double a = 2.0 * M_PI * (i + 0.5) / grid;
    dirs.emplace_back(std::cos(a), std::sin(a));
  }
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const Eigen::Vector2d d = pts[j] - pts[i];
      if (d.norm() < 1e-12) continue;
      const Eigen::Vector2d nrm(-d(1), d(0));
      dirs.push_back(nrm.normalized());
      dirs.push_back(-nrm.normalized());
    }
  std::set<std::vector<int>> faces;
  double scale = 1.0;
  for (const auto& p : pts) scale = std::max(scale, p.norm());
  for (const auto& d : dirs) {
    double best = -1e300;
    for (const auto& p : pts) best = std::max(best, d.dot(p));
    std::vector<int> f;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (d.dot(pts[i]) >= best - tie * scale) f.push_back(static_cast<int>(i));
    faces.insert(f);
  }
  std::vector<int> all(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) all[i] = static_cast<int>(i);
  faces.insert(all);
  faces.insert(std::vector<int>{});
  return faces;
}

}  // namespace entgeo::oracle
