#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "entgeo/expfam.hpp"

namespace entgeo {

/// One link p_i > p_{i+1} of an access sequence: the child is the maximal
/// projection of the witness inside the compressed algebra of the parent.
struct AccessStep {
  Projection parent;
  HermElem witness;  // coordinates of compress(parent).target()
  Projection child;
};

struct LatticeNode {
  Projection projection;
  std::vector<AccessStep> access_sequence;  // empty for the identity
  bool exposed = true;

  int depth() const { return static_cast<int>(access_sequence.size()); }
};

struct LatticeBudget {
  int grid_per_sphere = 64;
  int random_samples = 32;
  double dedupe_tol = 1e-7;
  int max_depth = 4;
  std::uint64_t seed = 0;
  bool close_under_lattice_ops = true;
  int max_pair_checks = 5000;

  void check(const AlgebraSpec& alg) const {
    if (grid_per_sphere < 1 || random_samples < 0 || !(dedupe_tol > 0) || max_depth < 1)
      throw DomainError("lattice budget values must be positive");
    if (max_depth > alg.real_dim()) throw DomainError("max_depth exceeds the dimension of the algebra");
  }
};

struct LatticeResult {
  std::vector<LatticeNode> nodes;
  LatticeBudget budget;
  bool pair_checks_truncated = false;
};

namespace detail {

inline std::vector<HermElem> compressed_dirs(const Compression& c, const std::vector<HermElem>& dirs) {
  std::vector<HermElem> out;
  for (const auto& u : dirs) out.push_back(c.apply(u));
  return out;
}

/// Residual of the least-squares fit of u by span(dirs) + R 1.
inline double span_residual(const HermElem& u, const std::vector<HermElem>& dirs) {
  std::vector<HermElem> basis = dirs;
  basis.push_back(HermElem::identity(u.algebra()));
  const auto k = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd g(k, k);
  Eigen::VectorXd b(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    b(i) = hs_inner(basis[static_cast<std::size_t>(i)], u);
    for (Eigen::Index j = 0; j < k; ++j) g(i, j) = hs_inner(basis[static_cast<std::size_t>(i)], basis[static_cast<std::size_t>(j)]);
  }
  const Eigen::VectorXd c = g.completeOrthogonalDecomposition().solve(b);
  HermElem fit = HermElem::zero(u.algebra());
  for (Eigen::Index i = 0; i < k; ++i) fit += c(i) * basis[static_cast<std::size_t>(i)];
  return norm(u - fit);
}

}  // namespace detail

/// Maximal projection of u in U; u = 0 gives the identity.
inline Projection exposed_projection(const ExpFamilySpec& spec, const HermElem& u) {
  require_same(spec.algebra(), u.algebra(), "exposed_projection");
  const double nu = norm(u);
  if (nu <= 1e-14) return Projection::identity(spec.algebra());
  // Only the span of the directions matters here, not an added multiple of 1.
  std::vector<HermElem> basis = spec.directions();
  const auto k = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd g(k, k);
  Eigen::VectorXd b(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    b(i) = hs_inner(basis[static_cast<std::size_t>(i)], u);
    for (Eigen::Index j = 0; j < k; ++j) g(i, j) = hs_inner(basis[static_cast<std::size_t>(i)], basis[static_cast<std::size_t>(j)]);
  }
  const Eigen::VectorXd c = k ? Eigen::VectorXd(g.ldlt().solve(b)) : Eigen::VectorXd();
  HermElem fit = HermElem::zero(u.algebra());
  for (Eigen::Index i = 0; i < k; ++i) fit += c(i) * basis[static_cast<std::size_t>(i)];
  if (norm(u - fit) > 1e-9 * std::max(1.0, nu)) throw DomainError("exposed_projection: u is not in the span of the family directions");
  return max_projection(u).projection;
}

/// Extends node by the maximal projection of u inside the parent's compressed algebra.
inline LatticeNode access_step(const LatticeNode& node, const HermElem& u, const ExpFamilySpec& spec) {
  if (node.projection.is_zero()) throw DomainError("access_step: cannot descend from the zero projection");
  const Compression c(node.projection);
  require_same(u.algebra(), c.target(), "access_step");
  const auto dirs = detail::compressed_dirs(c, spec.directions());
  if (detail::span_residual(u, dirs) > 1e-9 * std::max(1.0, norm(u)))
    throw DomainError("access_step: witness is not in the compressed constraint space");
  const MaxProjection mp = max_projection(u);
  if (mp.projection.is_identity()) throw DomainError("access_step: witness is a multiple of the identity, step not strictly decreasing");
  LatticeNode child;
  child.projection = c.lift(mp.projection);
  child.access_sequence = node.access_sequence;
  child.access_sequence.push_back({node.projection, u, child.projection});
  child.exposed = child.depth() <= 1;
  return child;
}

/// Recomputes every step of the access sequence and compares with the stored projections.
inline bool validate_access_sequence(const LatticeNode& node, double tol = 1e-7) {
  // The zero projection belongs to the lattice without an access sequence.
  if (node.access_sequence.empty()) return node.projection.is_identity() || node.projection.is_zero();
  if (!node.access_sequence.front().parent.is_identity()) return false;
  for (std::size_t i = 0; i < node.access_sequence.size(); ++i) {
    const auto& s = node.access_sequence[i];
    if (i > 0 && !same_projection(s.parent, node.access_sequence[i - 1].child, tol)) return false;
    if (s.parent.is_zero()) return false;
    const Compression c(s.parent);
    const Projection recomputed = c.lift(max_projection(s.witness).projection);
    if (!same_projection(recomputed, s.child, tol)) return false;
    if (s.child.rank() >= s.parent.rank()) return false;
  }
  return same_projection(node.access_sequence.back().child, node.projection, tol);
}

// ---------------------------------------------------------------------------
// Face of a mean value

struct FaceResult {
  Projection face;
  std::vector<AccessStep> access_sequence;
  Compression compression;  // ambient algebra -> face algebra
  State state;              // the closure point over xi, in the ambient algebra
  Eigen::VectorXd params;   // state = R_face(c(theta0 + sum params_i u_i))
  double residual = 0.0;
  int iterations = 0;
};

/// The unique projection p of the lattice whose face has xi in its relative
/// interior, found by following escape directions of the mean value chart.
inline FaceResult face_of_mean_value(const ExpFamilySpec& spec, const Eigen::VectorXd& xi, const NewtonOptions& opt = {}) {
  const AlgebraSpec& alg = spec.algebra();
  Compression comp = Compression::identity(alg);
  Projection current = Projection::identity(alg);
  FaceResult out;
  for (int level = 0; level <= alg.dim(); ++level) {
    const HermElem theta_c = comp.apply(spec.theta0());
    const auto cb = detail::chart_basis(comp.target(), detail::compressed_dirs(comp, spec.directions()));
    const NewtonReport rep = detail::solve_chart(theta_c, cb, xi, opt);
    out.iterations += rep.iterations;
    if (!rep.diverged) {
      out.face = current;
      out.compression = comp;
      out.state = comp.lift(rep.state);
      out.params = rep.params;
      out.residual = rep.residual;
      return out;
    }
    const MaxProjection mp = max_projection(*rep.escape_direction);
    if (mp.projection.is_identity()) throw Error("face_of_mean_value: escape direction is a multiple of the identity");
    const Projection child = comp.lift(mp.projection);
    out.access_sequence.push_back({current, *rep.escape_direction, child});
    comp = compose(comp, Compression(mp.projection));
    current = child;
  }
  throw Error("face_of_mean_value: descent did not terminate");
}

// ---------------------------------------------------------------------------
// Exposedness

/// True if some u in U has maximal projection p. Searches the linear space of
/// u with (1-p)up = 0 and pup proportional to p.
inline bool is_exposed(const ExpFamilySpec& spec, const Projection& p, std::uint64_t seed = 0, int samples = 400,
                       double tol = 1e-7) {
  if (p.is_zero() || p.is_identity()) return true;
  const auto cb = detail::chart_basis(spec.algebra(), spec.directions());
  const Eigen::Index d = cb.d();
  if (d == 0) return false;
  const Projection q = p.complement();
  const double r = p.rank();
  std::vector<Eigen::VectorXd> rows;
  Eigen::VectorXd trace_row(d);
  for (Eigen::Index j = 0; j < d; ++j) trace_row(j) = hs_inner(p.elem(), cb.w[static_cast<std::size_t>(j)]) / r;
  for (std::size_t b = 0; b < p.basis().size(); ++b) {
    const auto& vb = p.basis(b);
    const auto& kb = q.basis(b);
    std::vector<Eigen::MatrixXcd> off, diag;
    for (Eigen::Index j = 0; j < d; ++j) {
      const auto& wb = cb.w[static_cast<std::size_t>(j)].block(b);
      off.push_back(kb.adjoint() * wb * vb);
      diag.push_back(vb.adjoint() * wb * vb);
    }
    for (Eigen::Index x = 0; x < kb.cols(); ++x)
      for (Eigen::Index y = 0; y < vb.cols(); ++y) {
        Eigen::VectorXd re(d), im(d);
        for (Eigen::Index j = 0; j < d; ++j) {
          re(j) = off[static_cast<std::size_t>(j)](x, y).real();
          im(j) = off[static_cast<std::size_t>(j)](x, y).imag();
        }
        rows.push_back(re);
        rows.push_back(im);
      }
    for (Eigen::Index x = 0; x < vb.cols(); ++x)
      for (Eigen::Index y = x; y < vb.cols(); ++y) {
        Eigen::VectorXd re(d), im(d);
        for (Eigen::Index j = 0; j < d; ++j) {
          re(j) = diag[static_cast<std::size_t>(j)](x, y).real() - (x == y ? trace_row(j) : 0.0);
          im(j) = diag[static_cast<std::size_t>(j)](x, y).imag();
        }
        rows.push_back(re);
        if (x != y) rows.push_back(im);
      }
  }
  Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  Eigen::MatrixXd null_space;
  if (a.rows() == 0) {
    null_space = Eigen::MatrixXd::Identity(d, d);
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double top = sv.size() ? sv(0) : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > 1e-10 * std::max(1.0, top);
    null_space = svd.matrixV().rightCols(d - rank);
  }
  if (null_space.cols() == 0) return false;

  auto hits = [&](const Eigen::VectorXd& v) {
    return same_projection(max_projection(cb.element(v)).projection, p, tol);
  };
  for (Eigen::Index c = 0; c < null_space.cols(); ++c)
    if (hits(null_space.col(c)) || hits(-null_space.col(c))) return true;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd z(null_space.cols());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = g(rng);
    if (hits(null_space * z)) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Enumeration

namespace detail {

inline std::vector<Eigen::VectorXd> sphere_directions(Eigen::Index d, int grid, int random, std::mt19937_64& rng) {
  std::vector<Eigen::VectorXd> out;
  if (d == 1) {
    out.push_back(Eigen::VectorXd::Constant(1, 1.0));
    out.push_back(Eigen::VectorXd::Constant(1, -1.0));
    return out;
  }
  if (d == 2) {
    for (int k = 0; k < grid; ++k) {
      const double phi = 2.0 * std::numbers::pi * k / grid;
      Eigen::VectorXd v(2);
      v << std::cos(phi), std::sin(phi);
      out.push_back(v);
    }
  } else if (d == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < grid; ++k) {
      const double z = 1.0 - 2.0 * (k + 0.5) / grid;
      const double r = std::sqrt(1.0 - z * z);
      Eigen::VectorXd v(3);
      v << r * std::cos(golden * k), r * std::sin(golden * k), z;
      out.push_back(v);
    }
  }
  for (Eigen::Index j = 0; j < d; ++j) {
    out.push_back(Eigen::VectorXd::Unit(d, j));
    out.push_back(-Eigen::VectorXd::Unit(d, j));
  }
  std::normal_distribution<double> g;
  const int extra = random + (d > 3 ? grid : 0);
  for (int s = 0; s < extra; ++s) {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = g(rng);
    out.push_back(v.normalized());
  }
  return out;
}

struct Child {
  Projection q;  // in the compressed algebra
  HermElem witness;
};

inline void add_child(std::vector<Child>& children, const MaxProjection& mp, const HermElem& u, double tol) {
  if (mp.projection.is_identity()) return;
  for (const auto& c : children)
    if (same_projection(c.q, mp.projection, tol)) return;
  children.push_back({mp.projection, u});
}

/// Bisects an arc of the unit circle in U_0 where the maximal projection jumps,
/// which locates directions exposing faces that only a measure-zero set of
/// directions can see.
inline void bisect_arc(const ChartBasis& cb, double a, const Projection& qa, double b, const Projection& qb, int level,
                       std::vector<Child>& children, double tol) {
  if (level > 45) return;
  const bool rank_jump = qa.rank_profile() != qb.rank_profile();
  const double diff = norm(qa.elem() - qb.elem(), NormKind::trace);
  if (!rank_jump && diff <= std::max(1e-3, 10.0 * (b - a))) return;
  const double m = 0.5 * (a + b);
  Eigen::VectorXd v(2);
  v << std::cos(m), std::sin(m);
  const HermElem u = cb.element(v);
  const MaxProjection mp = max_projection(u);
  // Projections that move continuously with the direction are not new faces;
  // deep in the bisection they would sit within tol of a non-exposed limit.
  if (std::min(norm(mp.projection.elem() - qa.elem(), NormKind::trace), norm(mp.projection.elem() - qb.elem(), NormKind::trace)) > 1e-3)
    add_child(children, mp, u, tol);
  bisect_arc(cb, a, qa, m, mp.projection, level + 1, children, tol);
  bisect_arc(cb, m, mp.projection, b, qb, level + 1, children, tol);
}

inline std::vector<Child> explore(const ChartBasis& cb, const LatticeBudget& budget, std::mt19937_64& rng) {
  std::vector<Child> children;
  const Eigen::Index d = cb.d();
  if (d == 0) return children;
  const auto dirs = sphere_directions(d, budget.grid_per_sphere, budget.random_samples, rng);
  std::vector<Projection> grid_q;
  for (const auto& v : dirs) {
    const HermElem u = cb.element(v);
    const MaxProjection mp = max_projection(u);
    add_child(children, mp, u, budget.dedupe_tol);
    if (d == 2 && static_cast<int>(grid_q.size()) < budget.grid_per_sphere) grid_q.push_back(mp.projection);
  }
  if (d == 2) {
    const int g = budget.grid_per_sphere;
    for (int k = 0; k < g; ++k) {
      const double a = 2.0 * std::numbers::pi * k / g;
      const double b = 2.0 * std::numbers::pi * (k + 1) / g;
      bisect_arc(cb, a, grid_q[static_cast<std::size_t>(k)], b, grid_q[static_cast<std::size_t>((k + 1) % g)], 0, children,
                 budget.dedupe_tol);
    }
  }
  return children;
}

inline Eigen::VectorXd centre_mean(const ExpFamilySpec& spec, const Projection& p) {
  return mean_value(p.elem() / static_cast<double>(p.rank()), spec.directions());
}

/// Meet of two projections: the range intersection, from the eigenvalue 2 of p + q.
inline Projection meet(const Projection& p, const Projection& q) {
  const auto c = cluster(eigensystem(p.elem() + q.elem()));
  return select(p.algebra(), c, [](double v) { return v > 2.0 - 1e-6; });
}

}  // namespace detail

/// Budgeted search of the projection lattice along access sequences. Every
/// returned node is certified by its access sequence; completeness is not
/// guaranteed and depends on the budget.
inline LatticeResult enumerate_lattice(const ExpFamilySpec& spec, const LatticeBudget& budget = {}) {
  const AlgebraSpec& alg = spec.algebra();
  budget.check(alg);
  LatticeResult res;
  res.budget = budget;
  auto& nodes = res.nodes;

  LatticeNode root{Projection::identity(alg), {}, true};
  nodes.push_back(root);
  nodes.push_back(LatticeNode{Projection::zero(alg), {}, true});

  auto find = [&](const Projection& p) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (same_projection(nodes[i].projection, p, budget.dedupe_tol)) return i;
    return std::nullopt;
  };
  // Returns true if the node is new or replaced a deeper copy.
  auto insert = [&](LatticeNode node) {
    if (auto i = find(node.projection)) {
      if (nodes[*i].projection.is_zero() || nodes[*i].depth() <= node.depth()) return false;
      nodes[*i] = std::move(node);
      return true;
    }
    nodes.push_back(std::move(node));
    return true;
  };

  std::mt19937_64 rng(budget.seed);
  std::deque<LatticeNode> queue{root};
  while (!queue.empty()) {
    LatticeNode node = std::move(queue.front());
    queue.pop_front();
    if (node.depth() >= budget.max_depth || node.projection.rank() <= 1) continue;
    const Compression c(node.projection);
    const auto cb = detail::chart_basis(c.target(), detail::compressed_dirs(c, spec.directions()));
    for (const auto& ch : detail::explore(cb, budget, rng)) {
      LatticeNode child;
      child.projection = c.lift(ch.q);
      child.access_sequence = node.access_sequence;
      child.access_sequence.push_back({node.projection, ch.witness, child.projection});
      if (insert(child)) queue.push_back(std::move(child));
    }
  }

  if (budget.close_under_lattice_ops) {
    int checks = 0;
    auto try_face = [&](const Eigen::VectorXd& xi) {
      ++checks;
      try {
        FaceResult fr = face_of_mean_value(spec, xi);
        if (fr.face.is_identity()) return false;
        LatticeNode n{fr.face, std::move(fr.access_sequence), true};
        if (!validate_access_sequence(n, 1e-6)) return false;
        return insert(std::move(n));
      } catch (const Error&) {
        return false;
      }
    };
    for (int round = 0; round < 3; ++round) {
      bool added = false;
      const std::size_t count = nodes.size();
      for (std::size_t i = 0; i < count && !res.pair_checks_truncated; ++i) {
        for (std::size_t j = i + 1; j < count; ++j) {
          const Projection p = nodes[i].projection;  // copies: try_face may grow nodes
          const Projection q = nodes[j].projection;
          if (p.is_zero() || q.is_zero() || p.is_identity() || q.is_identity()) continue;
          if (projection_leq(p, q) || projection_leq(q, p)) continue;
          if (checks >= budget.max_pair_checks) {
            res.pair_checks_truncated = true;
            break;
          }
          const Projection m = detail::meet(p, q);
          if (!m.is_zero() && !find(m)) {
            const Eigen::VectorXd xi = detail::centre_mean(spec, m);
            added |= try_face(xi);
          }
          added |= try_face(0.5 * (detail::centre_mean(spec, p) + detail::centre_mean(spec, q)));
        }
      }
      if (!added) break;
    }
  }

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    auto& n = nodes[i];
    n.exposed = n.depth() <= 1 || is_exposed(spec, n.projection, budget.seed + i);
  }
  return res;
}

}  // namespace entgeo
