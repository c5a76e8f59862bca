#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "entgeo/algebra.hpp"

namespace entgeo {

/// Eigenvalues within this relative distance are treated as one spectral value.
inline constexpr double kClusterTol = 1e-8;
/// Spectral values with |lambda| below this relative size count as zero.
inline constexpr double kZeroTol = 1e-10;

/// Per-block eigendecomposition, values ascending within each block.
struct Eigensystem {
  std::vector<detail::HermitianEigen> blocks;
  double scale = 1.0;  // max(1, spectral norm)
};

inline Eigensystem eigensystem(const HermElem& a) {
  Eigensystem es;
  double mx = 0.0;
  for (const auto& b : a.blocks()) {
    es.blocks.push_back(detail::jacobi_eigen(b));
    const auto& v = es.blocks.back().values;
    if (v.size()) mx = std::max({mx, std::abs(v(0)), std::abs(v(v.size() - 1))});
  }
  es.scale = std::max(1.0, mx);
  return es;
}

/// Orthogonal projection in an algebra, stored through an orthonormal basis of
/// its range in every block (k_i x r_i).
class Projection {
 public:
  Projection() = default;

  /// From per-block column-orthonormal bases.
  Projection(AlgebraSpec alg, std::vector<Eigen::MatrixXcd> basis) : alg_(std::move(alg)), basis_(std::move(basis)) {
    if (basis_.size() != alg_.num_blocks()) throw DomainError("projection basis has wrong block count");
    std::vector<Eigen::MatrixXcd> b;
    for (std::size_t i = 0; i < basis_.size(); ++i) {
      if (basis_[i].rows() != alg_.block(i)) throw DomainError("projection basis has wrong row count");
      b.push_back(basis_[i] * basis_[i].adjoint());
    }
    elem_ = HermElem(alg_, std::move(b), HermElem::Trusted{});
  }

  /// From a matrix that is idempotent within 1e-9.
  static Projection from_elem(const HermElem& p, double tol = 1e-9) {
    const auto sq = p.product(p);
    for (std::size_t i = 0; i < sq.size(); ++i)
      if ((sq[i] - p.block(i)).norm() > tol * std::max(1.0, p.block(i).norm()))
        throw DomainError("element is not a projection");
    std::vector<Eigen::MatrixXcd> basis;
    for (const auto& b : p.blocks()) {
      auto e = detail::jacobi_eigen(b);
      int r = 0;
      for (Eigen::Index j = 0; j < e.values.size(); ++j) r += e.values(j) > 0.5;
      basis.push_back(e.vectors.rightCols(r));
    }
    return Projection(p.algebra(), std::move(basis));
  }

  static Projection identity(const AlgebraSpec& alg) {
    std::vector<Eigen::MatrixXcd> basis;
    for (int k : alg.blocks()) basis.push_back(Eigen::MatrixXcd::Identity(k, k));
    return Projection(alg, std::move(basis));
  }
  static Projection zero(const AlgebraSpec& alg) {
    std::vector<Eigen::MatrixXcd> basis;
    for (int k : alg.blocks()) basis.push_back(Eigen::MatrixXcd(k, 0));
    return Projection(alg, std::move(basis));
  }

  const HermElem& elem() const { return elem_; }
  const AlgebraSpec& algebra() const { return alg_; }
  const std::vector<Eigen::MatrixXcd>& basis() const { return basis_; }
  const Eigen::MatrixXcd& basis(std::size_t i) const { return basis_[i]; }

  std::vector<int> rank_profile() const {
    std::vector<int> r;
    for (const auto& b : basis_) r.push_back(static_cast<int>(b.cols()));
    return r;
  }
  int rank() const {
    int r = 0;
    for (const auto& b : basis_) r += static_cast<int>(b.cols());
    return r;
  }
  bool is_zero() const { return rank() == 0; }
  bool is_identity() const { return rank() == alg_.dim(); }

  /// 1 - p, with a basis for the orthogonal complement.
  Projection complement() const {
    std::vector<Eigen::MatrixXcd> basis;
    for (std::size_t i = 0; i < basis_.size(); ++i) {
      const int k = alg_.block(i);
      const Eigen::MatrixXcd c = Eigen::MatrixXcd::Identity(k, k) - basis_[i] * basis_[i].adjoint();
      auto e = detail::jacobi_eigen(c);
      basis.push_back(e.vectors.rightCols(k - basis_[i].cols()));
    }
    return Projection(alg_, std::move(basis));
  }

 private:
  AlgebraSpec alg_;
  std::vector<Eigen::MatrixXcd> basis_;
  HermElem elem_;
};

/// a = sum_i values[i] * projections[i] with distinct values, ascending.
struct SpectralForm {
  std::vector<double> values;
  std::vector<Projection> projections;

  HermElem reconstruct() const {
    HermElem r = HermElem::zero(projections.front().algebra());
    for (std::size_t i = 0; i < values.size(); ++i) r += values[i] * projections[i].elem();
    return r;
  }
};

namespace detail {

struct Clustered {
  Eigensystem es;
  std::vector<double> cluster_values;                 // ascending
  std::vector<std::vector<int>> labels;               // per block, per eigenvalue: cluster index
};

inline Clustered cluster(Eigensystem es) {
  struct Item {
    double v;
    std::size_t block;
    Eigen::Index idx;
  };
  std::vector<Item> items;
  for (std::size_t b = 0; b < es.blocks.size(); ++b)
    for (Eigen::Index j = 0; j < es.blocks[b].values.size(); ++j) items.push_back({es.blocks[b].values(j), b, j});
  std::sort(items.begin(), items.end(), [](const Item& x, const Item& y) { return x.v < y.v; });

  Clustered c;
  c.labels.resize(es.blocks.size());
  for (std::size_t b = 0; b < es.blocks.size(); ++b) c.labels[b].assign(static_cast<std::size_t>(es.blocks[b].values.size()), -1);
  const double tol = kClusterTol * es.scale;
  std::size_t start = 0;
  while (start < items.size()) {
    std::size_t end = start + 1;
    while (end < items.size() && items[end].v - items[end - 1].v <= tol) ++end;
    double mean = 0.0;
    for (std::size_t i = start; i < end; ++i) mean += items[i].v;
    mean /= static_cast<double>(end - start);
    const int label = static_cast<int>(c.cluster_values.size());
    c.cluster_values.push_back(mean);
    for (std::size_t i = start; i < end; ++i) c.labels[items[i].block][static_cast<std::size_t>(items[i].idx)] = label;
    start = end;
  }
  c.es = std::move(es);
  return c;
}

/// Projection onto the eigenvectors selected by pred(cluster value).
template <class Pred>
Projection select(const AlgebraSpec& alg, const Clustered& c, Pred pred) {
  std::vector<Eigen::MatrixXcd> basis;
  for (std::size_t b = 0; b < c.es.blocks.size(); ++b) {
    const auto& e = c.es.blocks[b];
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < e.values.size(); ++j)
      if (pred(c.cluster_values[static_cast<std::size_t>(c.labels[b][static_cast<std::size_t>(j)])])) cols.push_back(j);
    Eigen::MatrixXcd m(e.vectors.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = e.vectors.col(cols[j]);
    basis.push_back(std::move(m));
  }
  return Projection(alg, std::move(basis));
}

inline HermElem apply_function(const AlgebraSpec& alg, const Clustered& c, const std::function<double(double)>& f) {
  std::vector<double> fv;
  for (double v : c.cluster_values) {
    const double y = f(v);
    if (!std::isfinite(y)) throw DomainError("function undefined at spectral value " + std::to_string(v));
    fv.push_back(y);
  }
  std::vector<Eigen::MatrixXcd> out;
  for (std::size_t b = 0; b < c.es.blocks.size(); ++b) {
    const auto& e = c.es.blocks[b];
    Eigen::VectorXd d(e.values.size());
    for (Eigen::Index j = 0; j < d.size(); ++j) d(j) = fv[static_cast<std::size_t>(c.labels[b][static_cast<std::size_t>(j)])];
    out.push_back(e.vectors * d.asDiagonal() * e.vectors.adjoint());
  }
  return HermElem(alg, std::move(out), HermElem::Trusted{});
}

}  // namespace detail

inline SpectralForm eig(const HermElem& a) {
  const auto c = detail::cluster(eigensystem(a));
  SpectralForm sf;
  for (std::size_t i = 0; i < c.cluster_values.size(); ++i) {
    sf.values.push_back(c.cluster_values[i]);
    const int label = static_cast<int>(i);
    std::vector<Eigen::MatrixXcd> basis;
    for (std::size_t b = 0; b < c.es.blocks.size(); ++b) {
      const auto& e = c.es.blocks[b];
      std::vector<Eigen::Index> cols;
      for (Eigen::Index j = 0; j < e.values.size(); ++j)
        if (c.labels[b][static_cast<std::size_t>(j)] == label) cols.push_back(j);
      Eigen::MatrixXcd m(e.vectors.rows(), static_cast<Eigen::Index>(cols.size()));
      for (std::size_t j = 0; j < cols.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = e.vectors.col(cols[j]);
      basis.push_back(std::move(m));
    }
    sf.projections.emplace_back(a.algebra(), std::move(basis));
  }
  return sf;
}

/// Compression of an algebra to p A p, expressed in the coordinates of the
/// smaller block algebra whose blocks are the nonzero ranks of p.
class Compression {
 public:
  Compression() = default;
  explicit Compression(const Projection& p) : source_(p.algebra()), projection_(p) {
    std::vector<int> blocks;
    for (std::size_t i = 0; i < p.basis().size(); ++i) {
      if (p.basis(i).cols() == 0) continue;
      blocks.push_back(static_cast<int>(p.basis(i).cols()));
      block_map_.push_back(i);
      isometries_.push_back(p.basis(i));
    }
    if (blocks.empty()) throw DomainError("cannot compress to the zero projection");
    target_ = AlgebraSpec(blocks);
  }

  static Compression identity(const AlgebraSpec& alg) { return Compression(Projection::identity(alg)); }

  const AlgebraSpec& source() const { return source_; }
  const AlgebraSpec& target() const { return target_; }
  const Projection& projection() const { return projection_; }
  const std::vector<Eigen::MatrixXcd>& isometries() const { return isometries_; }
  const std::vector<std::size_t>& block_map() const { return block_map_; }

  /// V* a V per block.
  HermElem apply(const HermElem& a) const {
    require_same(a.algebra(), source_, "Compression::apply");
    std::vector<Eigen::MatrixXcd> out;
    for (std::size_t j = 0; j < isometries_.size(); ++j)
      out.push_back(isometries_[j].adjoint() * a.block(block_map_[j]) * isometries_[j]);
    return HermElem(target_, std::move(out), HermElem::Trusted{});
  }
  State apply(const State& s) const { return State::normalized(apply(s.elem())); }

  /// V b V*, zero outside the range of p.
  HermElem lift(const HermElem& b) const {
    require_same(b.algebra(), target_, "Compression::lift");
    HermElem out = HermElem::zero(source_);
    std::vector<Eigen::MatrixXcd> blocks = out.blocks();
    for (std::size_t j = 0; j < isometries_.size(); ++j)
      blocks[block_map_[j]] = isometries_[j] * b.block(j) * isometries_[j].adjoint();
    return HermElem(source_, std::move(blocks), HermElem::Trusted{});
  }
  State lift(const State& s) const { return State::unchecked(lift(s.elem())); }

  /// Projection of the target algebra carried to the source algebra.
  Projection lift(const Projection& q) const {
    require_same(q.algebra(), target_, "Compression::lift");
    std::vector<Eigen::MatrixXcd> basis;
    for (std::size_t i = 0; i < source_.num_blocks(); ++i) basis.push_back(Eigen::MatrixXcd(source_.block(i), 0));
    for (std::size_t j = 0; j < isometries_.size(); ++j) basis[block_map_[j]] = isometries_[j] * q.basis(j);
    return Projection(source_, std::move(basis));
  }

 private:
  AlgebraSpec source_, target_;
  Projection projection_;
  std::vector<Eigen::MatrixXcd> isometries_;
  std::vector<std::size_t> block_map_;
};

inline Compression compress(const Projection& p) { return Compression(p); }

/// outer: A -> pAp, inner: pAp -> q(pAp)q. Result maps A directly to the inner target.
inline Compression compose(const Compression& outer, const Compression& inner) {
  require_same(outer.target(), inner.source(), "compose");
  return Compression(outer.lift(inner.projection()));
}

/// f(a) by functional calculus. With a domain projection p the calculus runs in
/// pAp: spectral values coming from the kernel of p are excluded and the result
/// is supported on p.
inline HermElem func_calc(const std::function<double(double)>& f, const HermElem& a,
                          const std::optional<Projection>& domain = std::nullopt) {
  if (!domain) return detail::apply_function(a.algebra(), detail::cluster(eigensystem(a)), f);
  require_same(a.algebra(), domain->algebra(), "func_calc");
  if (domain->is_zero()) return HermElem::zero(a.algebra());
  const Compression c(*domain);
  const HermElem b = c.apply(a);
  if (norm(c.lift(b) - a) > 1e-8 * std::max(1.0, norm(a)))
    throw DomainError("func_calc: element is not supported on the domain projection");
  return c.lift(detail::apply_function(b.algebra(), detail::cluster(eigensystem(b)), f));
}

inline Projection support_projection(const HermElem& a) {
  const auto c = detail::cluster(eigensystem(a));
  const double z = kZeroTol * c.es.scale;
  return detail::select(a.algebra(), c, [z](double v) { return std::abs(v) > z; });
}

inline Projection kernel_projection(const HermElem& a) {
  const auto c = detail::cluster(eigensystem(a));
  const double z = kZeroTol * c.es.scale;
  return detail::select(a.algebra(), c, [z](double v) { return std::abs(v) <= z; });
}

struct MaxProjection {
  double value;
  Projection projection;
};

/// Largest spectral value and its spectral projection.
inline MaxProjection max_projection(const HermElem& u) {
  const auto c = detail::cluster(eigensystem(u));
  const double top = c.cluster_values.back();
  return {top, detail::select(u.algebra(), c, [top](double v) { return v == top; })};
}

/// Distance between the two largest spectral values, 0 if u is a scalar.
inline double top_spectral_gap(const HermElem& u) {
  const auto c = detail::cluster(eigensystem(u));
  const auto& v = c.cluster_values;
  return v.size() < 2 ? 0.0 : v[v.size() - 1] - v[v.size() - 2];
}

/// a <= b in the Loewner order (b - a positive semidefinite up to tol).
inline bool ordered_leq(const HermElem& a, const HermElem& b, double tol = 1e-9) {
  const Eigen::VectorXd ev = eigenvalues(b - a);
  return ev.size() == 0 || ev(0) >= -tol;
}

/// p <= q for projections, i.e. pq = p.
inline bool projection_leq(const Projection& p, const Projection& q, double tol = 1e-7) {
  require_same(p.algebra(), q.algebra(), "projection_leq");
  for (std::size_t i = 0; i < p.basis().size(); ++i) {
    const auto& pb = p.basis(i);
    if (pb.cols() == 0) continue;
    const auto& qb = q.basis(i);
    // Component of range(p) outside range(q).
    const Eigen::MatrixXcd resid = pb - qb * (qb.adjoint() * pb);
    if (resid.norm() > tol) return false;
  }
  return true;
}

inline bool same_projection(const Projection& p, const Projection& q, double tol = 1e-7) {
  return p.rank_profile() == q.rank_profile() && norm(p.elem() - q.elem(), NormKind::trace) <= tol;
}

/// max_k |lambda_k(a) - lambda_k(b)| over the ordered spectra.
inline double weyl_gap(const HermElem& a, const HermElem& b) {
  require_same(a.algebra(), b.algebra(), "weyl_gap");
  const Eigen::VectorXd ea = eigenvalues(a), eb = eigenvalues(b);
  return (ea - eb).cwiseAbs().maxCoeff();
}

}  // namespace entgeo
