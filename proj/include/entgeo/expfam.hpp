#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "entgeo/entropy.hpp"
#include "entgeo/spectral.hpp"

namespace entgeo {

/// Affine parameter space theta0 + span(u_1, ..., u_k) and its exponential family.
class ExpFamilySpec {
 public:
  ExpFamilySpec() = default;
  ExpFamilySpec(HermElem theta0, std::vector<HermElem> directions)
      : theta0_(std::move(theta0)), directions_(std::move(directions)) {
    for (const auto& u : directions_) require_same(theta0_.algebra(), u.algebra(), "ExpFamilySpec");
    check_independent();
  }
  /// The linear family R(U), theta0 = 0.
  static ExpFamilySpec linear(const AlgebraSpec& alg, std::vector<HermElem> directions) {
    return ExpFamilySpec(HermElem::zero(alg), std::move(directions));
  }

  const AlgebraSpec& algebra() const { return theta0_.algebra(); }
  const HermElem& theta0() const { return theta0_; }
  const std::vector<HermElem>& directions() const { return directions_; }
  const HermElem& direction(std::size_t i) const { return directions_[i]; }
  std::size_t size() const { return directions_.size(); }

  /// theta0 + sum_i lambda_i u_i
  HermElem parameter(const Eigen::VectorXd& lambda) const {
    if (static_cast<std::size_t>(lambda.size()) != directions_.size()) throw DomainError("parameter vector has wrong length");
    HermElem t = theta0_;
    for (std::size_t i = 0; i < directions_.size(); ++i) t += lambda(static_cast<Eigen::Index>(i)) * directions_[i];
    return t;
  }
  /// sum_i c_i u_i
  HermElem combination(const Eigen::VectorXd& c) const {
    HermElem t = HermElem::zero(algebra());
    for (std::size_t i = 0; i < directions_.size(); ++i) t += c(static_cast<Eigen::Index>(i)) * directions_[i];
    return t;
  }

 private:
  void check_independent() const {
    const auto k = static_cast<Eigen::Index>(directions_.size());
    if (k == 0) return;
    Eigen::MatrixXcd g(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j) g(i, j) = hs_inner(directions_[i], directions_[j]);
    const auto e = detail::jacobi_eigen(g);
    if (!(e.values(0) > 1e-12 * std::max(1.0, e.values(k - 1))))
      throw DomainError("family directions are linearly dependent");
  }

  HermElem theta0_;
  std::vector<HermElem> directions_;
};

// ---------------------------------------------------------------------------
// Free energy, Gibbs states, derivatives

namespace detail {

struct GibbsData {
  Eigensystem es;
  std::vector<Eigen::VectorXd> probs;  // eigenvalues of R(theta) per block
  double free_energy = 0.0;
};

inline GibbsData gibbs_data(const HermElem& theta) {
  GibbsData g;
  g.es = eigensystem(theta);
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& b : g.es.blocks)
    if (b.values.size()) top = std::max(top, b.values.maxCoeff());
  double z = 0.0;
  for (const auto& b : g.es.blocks) {
    Eigen::VectorXd w = (b.values.array() - top).exp();
    z += w.sum();
    g.probs.push_back(std::move(w));
  }
  for (auto& p : g.probs) p /= z;
  g.free_energy = top + std::log(z);
  return g;
}

inline HermElem gibbs_elem(const AlgebraSpec& alg, const GibbsData& g) {
  std::vector<Eigen::MatrixXcd> out;
  for (std::size_t b = 0; b < g.es.blocks.size(); ++b) {
    const auto& v = g.es.blocks[b].vectors;
    out.push_back(v * g.probs[b].asDiagonal() * v.adjoint());
  }
  return HermElem(alg, std::move(out), HermElem::Trusted{});
}

/// Logarithmic mean of p_a = e^{la} and p_c = e^{lc}, from the logarithms:
/// (p_a - p_c) / (la - lc). Working with la, lc keeps the kernel right when one
/// probability underflows, where it decays only like 1 / |la - lc|.
inline double log_mean_exp(double la, double lc) {
  const double d = la - lc;
  if (std::abs(d) >= 1e-3) return (std::exp(la) - std::exp(lc)) / d;
  const double d2 = d * d;
  return std::exp(0.5 * (la + lc)) * (1.0 + d2 / 24.0 + d2 * d2 / 1920.0);
}

/// BKM Gram matrix of the directions at the Gibbs state described by g.
inline Eigen::MatrixXd bkm_gram(const GibbsData& g, const std::vector<HermElem>& dirs) {
  const auto k = static_cast<Eigen::Index>(dirs.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(k);
  for (std::size_t b = 0; b < g.es.blocks.size(); ++b) {
    const auto& v = g.es.blocks[b].vectors;
    const auto& r = g.probs[b];
    const auto& th = g.es.blocks[b].values;
    const Eigen::Index n = r.size();
    Eigen::MatrixXd lm(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index c = 0; c < n; ++c) lm(a, c) = log_mean_exp(th(a) - g.free_energy, th(c) - g.free_energy);
    std::vector<Eigen::MatrixXcd> w;
    for (Eigen::Index j = 0; j < k; ++j) {
      w.push_back(v.adjoint() * dirs[static_cast<std::size_t>(j)].block(b) * v);
      m(j) += (r.array() * w.back().diagonal().real().array()).sum();
    }
    for (Eigen::Index j = 0; j < k; ++j) {
      const Eigen::MatrixXcd kj = lm.cast<Complex>().cwiseProduct(w[static_cast<std::size_t>(j)]);
      for (Eigen::Index l = j; l < k; ++l) {
        const double s = (kj.array() * w[static_cast<std::size_t>(l)].conjugate().array()).sum().real();
        h(j, l) += s;
      }
    }
  }
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index l = j; l < k; ++l) {
      h(j, l) -= m(j) * m(l);
      h(l, j) = h(j, l);
    }
  return h;
}

struct SymEigen {
  Eigen::VectorXd values;  // ascending
  Eigen::MatrixXd vectors;
};

inline SymEigen sym_eigen(const Eigen::MatrixXd& a) {
  if (a.rows() == 0) return {};
  const auto e = jacobi_eigen(a.cast<Complex>());
  return {e.values, e.vectors.real()};
}

}  // namespace detail

/// R(theta) = exp(theta) / tr exp(theta), evaluated with the top eigenvalue shifted out.
inline State gibbs_state(const HermElem& theta) {
  return State::unchecked(detail::gibbs_elem(theta.algebra(), detail::gibbs_data(theta)));
}

/// F(theta) = log tr exp(theta).
inline double free_energy(const HermElem& theta) { return detail::gibbs_data(theta).free_energy; }

/// Directional derivative of F at theta along u, i.e. <u, R(theta)>.
inline double dF(const HermElem& theta, const HermElem& u) { return hs_inner(u, gibbs_state(theta).elem()); }

/// Bogoliubov-Kubo-Mori inner product, the second derivative of F.
inline double bkm(const HermElem& theta, const HermElem& u, const HermElem& v) {
  require_same(theta.algebra(), u.algebra(), "bkm");
  require_same(theta.algebra(), v.algebra(), "bkm");
  return detail::bkm_gram(detail::gibbs_data(theta), {u, v})(0, 1);
}

inline Eigen::MatrixXd bkm_gram(const HermElem& theta, const std::vector<HermElem>& dirs) {
  return detail::bkm_gram(detail::gibbs_data(theta), dirs);
}

inline Eigen::VectorXd mean_value(const HermElem& a, const std::vector<HermElem>& dirs) {
  Eigen::VectorXd m(static_cast<Eigen::Index>(dirs.size()));
  for (std::size_t i = 0; i < dirs.size(); ++i) m(static_cast<Eigen::Index>(i)) = hs_inner(dirs[i], a);
  return m;
}

/// Coordinates (<u_1, rho>, ..., <u_k, rho>).
inline Eigen::VectorXd mean_value(const State& rho, const ExpFamilySpec& spec) {
  require_same(rho.algebra(), spec.algebra(), "mean_value");
  return mean_value(rho.elem(), spec.directions());
}

// ---------------------------------------------------------------------------
// Mean value chart

/// Proof that a mean value vector lies outside the convex support: the direction
/// u = sum_i coefficients_i u_i has <u, xi> - lambda_max(u) = violation > 0.
struct SupportCertificate {
  Eigen::VectorXd coefficients;
  HermElem direction;
  double violation = 0.0;
};

class OutsideConvexSupport : public Error {
 public:
  OutsideConvexSupport(const std::string& what, SupportCertificate cert) : Error(what), cert_(std::move(cert)) {}
  const SupportCertificate& certificate() const { return cert_; }

 private:
  SupportCertificate cert_;
};

struct NewtonOptions {
  int max_iter = 200;
  double tol = 1e-12;          // gradient norm in orthonormal coordinates
  double accept_tol = 1e-10;   // fallback acceptance when the iteration stalls
  double lambda_cap = 1e5;     // parameter norm treated as divergence
  double null_tol = 1e-12;     // BKM eigenvalue counted as degenerate
  double face_tol = 1e-10;     // support-function slack accepted as "on the face"
  double max_step = 30.0;
  std::optional<Eigen::VectorXd> warm_start;  // orthonormal coordinates
};

struct NewtonReport {
  HermElem theta;               // theta0 + sum_i params_i u_i
  Eigen::VectorXd params;       // minimum-norm coefficients
  State state;                  // R(theta)
  double residual = 0.0;        // |m(R(theta)) - xi|
  int iterations = 0;
  bool diverged = false;
  std::optional<HermElem> escape_direction;  // unit HS norm, traceless, in U
  Eigen::VectorXd escape_coefficients;       // in terms of u_i
  double face_slack = 0.0;                   // <u, xi> - lambda_max(u) for the escape direction
};

namespace detail {

/// Orthonormal traceless basis w_j of the projection of U onto traceless elements.
struct ChartBasis {
  AlgebraSpec alg;
  std::vector<HermElem> dirs;
  std::vector<HermElem> w;
  Eigen::MatrixXd coef;    // k x d: w_j = sum_i coef(i,j) (u_i - shift_i 1)
  Eigen::MatrixXd nulls;   // k x (k-d): sum_i a_i u_i is a multiple of 1
  Eigen::VectorXd shift;   // tr(u_i) / n

  Eigen::Index d() const { return static_cast<Eigen::Index>(w.size()); }
  Eigen::VectorXd eta(const Eigen::VectorXd& xi) const { return coef.transpose() * (xi - shift); }
  HermElem element(const Eigen::VectorXd& v) const {
    HermElem e = HermElem::zero(alg);
    for (Eigen::Index j = 0; j < d(); ++j) e += v(j) * w[static_cast<std::size_t>(j)];
    return e;
  }
  HermElem original(const Eigen::VectorXd& beta) const {
    HermElem e = HermElem::zero(alg);
    for (std::size_t i = 0; i < dirs.size(); ++i) e += beta(static_cast<Eigen::Index>(i)) * dirs[i];
    return e;
  }
};

inline ChartBasis chart_basis(const AlgebraSpec& alg, const std::vector<HermElem>& dirs, double rel_tol = 1e-11) {
  ChartBasis cb;
  cb.alg = alg;
  cb.dirs = dirs;
  const auto k = static_cast<Eigen::Index>(dirs.size());
  const double n = alg.dim();
  cb.shift.resize(k);
  std::vector<HermElem> u0;
  for (Eigen::Index i = 0; i < k; ++i) {
    cb.shift(i) = dirs[static_cast<std::size_t>(i)].trace() / n;
    u0.push_back(dirs[static_cast<std::size_t>(i)].shifted(-cb.shift(i)));
  }
  Eigen::MatrixXd g(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i; j < k; ++j) g(i, j) = g(j, i) = hs_inner(u0[static_cast<std::size_t>(i)], u0[static_cast<std::size_t>(j)]);
  const auto e = sym_eigen(g);
  const double top = k ? std::max(e.values.maxCoeff(), 0.0) : 0.0;
  std::vector<Eigen::Index> keep, drop;
  for (Eigen::Index j = 0; j < k; ++j) (e.values(j) > rel_tol * std::max(top, 1e-300) && e.values(j) > 1e-24 ? keep : drop).push_back(j);
  cb.coef.resize(k, static_cast<Eigen::Index>(keep.size()));
  cb.nulls.resize(k, static_cast<Eigen::Index>(drop.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const Eigen::Index j = keep[c];
    cb.coef.col(static_cast<Eigen::Index>(c)) = e.vectors.col(j) / std::sqrt(e.values(j));
    HermElem wj = HermElem::zero(alg);
    for (Eigen::Index i = 0; i < k; ++i) wj += cb.coef(i, static_cast<Eigen::Index>(c)) * u0[static_cast<std::size_t>(i)];
    cb.w.push_back(std::move(wj));
  }
  for (std::size_t c = 0; c < drop.size(); ++c) cb.nulls.col(static_cast<Eigen::Index>(c)) = e.vectors.col(drop[c]);
  return cb;
}

struct Probe {
  Eigen::VectorXd v;  // unit, orthonormal coordinates
  double slack;       // v.eta - lambda_max(u_v)
};

inline Probe probe(const ChartBasis& cb, const Eigen::VectorXd& eta, Eigen::VectorXd v) {
  v.normalize();
  const Eigen::VectorXd ev = eigenvalues(cb.element(v));
  return {v, v.dot(eta) - ev(ev.size() - 1)};
}

/// Refines an approximate normal direction so that the top eigenvalues of
/// u_v, for a chosen number of them, coincide with <u_v, xi>. Tries the largest
/// eigenvalue groups first; the first group that solves regularly wins.
inline std::optional<Probe> polish_normal(const ChartBasis& cb, const Eigen::VectorXd& eta, const Eigen::VectorXd& v0,
                                          double face_tol) {
  const Eigensystem es0 = eigensystem(cb.element(v0.normalized()));
  struct Item {
    double v;
    std::size_t b;
  };
  std::vector<Item> items;
  for (std::size_t b = 0; b < es0.blocks.size(); ++b)
    for (Eigen::Index j = 0; j < es0.blocks[b].values.size(); ++j) items.push_back({es0.blocks[b].values(j), b});
  std::sort(items.begin(), items.end(), [](const Item& x, const Item& y) { return x.v > y.v; });
  const std::size_t n = items.size();
  const Eigen::Index d = cb.d();

  for (std::size_t m = n - 1; m >= 1; --m) {
    std::vector<int> counts(es0.blocks.size(), 0);
    for (std::size_t i = 0; i < m; ++i) ++counts[items[i].b];
    Eigen::VectorXd v = v0.normalized();
    double res_norm = 1.0;
    double jac_min_sv = 0.0;  // a singular Jacobian means the root is not isolated
    for (int it = 0; it < 60; ++it) {
      const Eigensystem es = eigensystem(cb.element(v));
      std::vector<double> res;
      std::vector<Eigen::VectorXd> rows;
      for (std::size_t b = 0; b < es.blocks.size(); ++b) {
        const auto& e = es.blocks[b];
        const Eigen::Index kb = e.values.size();
        for (int t = 0; t < counts[b]; ++t) {
          const Eigen::Index j = kb - 1 - t;
          res.push_back(e.values(j) - v.dot(eta));
          Eigen::VectorXd row(d);
          for (Eigen::Index i = 0; i < d; ++i)
            row(i) = e.vectors.col(j).dot(cb.w[static_cast<std::size_t>(i)].block(b) * e.vectors.col(j)).real() - eta(i);
          rows.push_back(std::move(row));
        }
      }
      res.push_back(0.5 * (v.squaredNorm() - 1.0));
      rows.push_back(v);
      Eigen::MatrixXd jac(static_cast<Eigen::Index>(rows.size()), d);
      Eigen::VectorXd r(static_cast<Eigen::Index>(res.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        jac.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
        r(static_cast<Eigen::Index>(i)) = res[i];
      }
      res_norm = r.norm();
      const Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
      jac_min_sv = jac.rows() >= d ? svd.singularValues()(d - 1) : 0.0;
      if (res_norm <= 1e-15) break;
      const Eigen::VectorXd dv = svd.solve(-r);
      v += dv;
      if (!v.allFinite()) break;
    }
    if (v.allFinite() && res_norm <= 1e-13 && jac_min_sv >= 1e-8) {
      const HermElem u = cb.element(v);
      const MaxProjection mp = max_projection(u);
      if (mp.projection.rank_profile() == counts && std::abs(v.dot(eta) - mp.value) <= face_tol)
        return Probe{v.normalized(), v.normalized().dot(eta) - mp.value / v.norm()};
    }
    if (m == 1) break;
  }
  return std::nullopt;
}

/// When the top eigenvalue of u_v is simple, the face over v is the single
/// point m(v) = <psi, w_j psi>. Newton on the unit sphere for m(v) = eta, with
/// the first-order eigenvector perturbation as Jacobian, turns a normal that is
/// only accurate to first order into one accurate to rounding.
inline std::optional<Probe> refine_simple_normal(const ChartBasis& cb, const Eigen::VectorXd& eta,
                                                 const Eigen::VectorXd& v0) {
  const Eigen::Index d = cb.d();
  Eigen::VectorXd v = v0.normalized();
  for (int it = 0; it < 40; ++it) {
    const Eigensystem es = eigensystem(cb.element(v));
    std::size_t tb = 0;
    double top = -std::numeric_limits<double>::infinity(), second = top;
    for (std::size_t b = 0; b < es.blocks.size(); ++b) {
      const auto& vals = es.blocks[b].values;
      for (Eigen::Index j = 0; j < vals.size(); ++j) {
        if (vals(j) > top) {
          second = top;
          top = vals(j);
          tb = b;
        } else {
          second = std::max(second, vals(j));
        }
      }
    }
    if (!(top - second > 1e-8 * es.scale)) return std::nullopt;
    const auto& e = es.blocks[tb];
    const Eigen::Index kb = e.values.size();
    const Eigen::VectorXcd psi = e.vectors.col(kb - 1);
    Eigen::VectorXd r(d);
    Eigen::MatrixXcd coup(kb - 1, d);  // <k| w_j |psi> for the other eigenvectors k
    for (Eigen::Index j = 0; j < d; ++j) {
      const Eigen::VectorXcd wpsi = cb.w[static_cast<std::size_t>(j)].block(tb) * psi;
      r(j) = psi.dot(wpsi).real() - eta(j);
      for (Eigen::Index k = 0; k + 1 < kb; ++k) coup(k, j) = e.vectors.col(k).dot(wpsi);
    }
    if (r.norm() <= 1e-14 * es.scale) return Probe{v, v.dot(eta) - top};
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index k = 0; k + 1 < kb; ++k) {
      const double gap = top - e.values(k);
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) jac(i, j) += 2.0 * (std::conj(coup(k, i)) * coup(k, j)).real() / gap;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-12);
    Eigen::VectorXd dv = svd.solve(-r);
    dv -= v * v.dot(dv);
    if (!dv.allFinite()) return std::nullopt;
    if (dv.norm() > 0.5) dv *= 0.5 / dv.norm();
    v = (v + dv).normalized();
  }
  return std::nullopt;
}

inline NewtonReport finish_report(const HermElem& theta0, const ChartBasis& cb, const Eigen::VectorXd& xi,
                                  const Eigen::VectorXd& lambda, int iterations) {
  NewtonReport rep;
  rep.params = cb.coef * lambda;
  rep.theta = theta0 + cb.original(rep.params);
  rep.state = gibbs_state(rep.theta);
  rep.residual = (mean_value(rep.state.elem(), cb.dirs) - xi).norm();
  rep.iterations = iterations;
  return rep;
}

[[noreturn]] inline void throw_outside(const ChartBasis& cb, const Eigen::VectorXd& beta, double violation) {
  SupportCertificate cert{beta, cb.original(beta), violation};
  throw OutsideConvexSupport("mean value lies outside the convex support (violation " + std::to_string(violation) + ")",
                             std::move(cert));
}

/// Damped Newton on the dual function lambda -> F(theta0 + sum lambda_j w_j) - lambda.eta.
inline NewtonReport solve_chart(const HermElem& theta0, const ChartBasis& cb, const Eigen::VectorXd& xi,
                                const NewtonOptions& opt) {
  if (xi.size() != static_cast<Eigen::Index>(cb.dirs.size())) throw DomainError("mean value has wrong length");

  // Directions with sum a_i u_i = c 1 pin the mean value to c.
  for (Eigen::Index c = 0; c < cb.nulls.cols(); ++c) {
    const Eigen::VectorXd a = cb.nulls.col(c);
    const double gap = a.dot(xi) - a.dot(cb.shift);
    if (std::abs(gap) > 1e-8 * std::max(1.0, std::abs(a.dot(xi)))) {
      const Eigen::VectorXd beta = gap > 0 ? a : Eigen::VectorXd(-a);
      throw_outside(cb, beta, std::abs(gap));
    }
  }

  const Eigen::Index d = cb.d();
  const Eigen::VectorXd eta = cb.eta(xi);
  if (d == 0) return finish_report(theta0, cb, xi, Eigen::VectorXd::Zero(0), 0);

  struct Eval {
    Eigen::VectorXd g;
    Eigen::MatrixXd h;
    double phi;
  };
  auto evaluate = [&](const Eigen::VectorXd& lam, bool with_hessian) {
    const GibbsData gd = gibbs_data(theta0 + cb.element(lam));
    const HermElem r = gibbs_elem(cb.alg, gd);
    Eval e;
    e.g = mean_value(r, cb.w) - eta;
    e.phi = gd.free_energy - lam.dot(eta);
    if (with_hessian) e.h = bkm_gram(gd, cb.w);
    return e;
  };

  Eigen::VectorXd lam = opt.warm_start && opt.warm_start->size() == d ? *opt.warm_start : Eigen::VectorXd::Zero(d);
  Eigen::VectorXd best = lam;
  double best_g = std::numeric_limits<double>::infinity();
  Eigen::VectorXd last_step = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd null_step = Eigen::VectorXd::Zero(d);
  double radius = opt.max_step;

  auto boundary_check = [&](const std::vector<Eigen::VectorXd>& cands, bool accept_raw,
                            bool polish) -> std::optional<Probe> {
    std::optional<Probe> closest;
    for (const auto& c : cands) {
      if (!(c.norm() > 1e-14) || !c.allFinite()) continue;
      const Probe p = probe(cb, eta, c);
      if (p.slack > opt.face_tol) throw_outside(cb, cb.coef * p.v, p.slack);
      if (!closest || p.slack > closest->slack) closest = p;
    }
    // The slack is only second order in the direction error at smooth boundary
    // points, so take the best candidate rather than the first acceptable one.
    if (!closest || closest->slack <= -1e-2) return std::nullopt;
    if (accept_raw || polish)
      if (auto ref = refine_simple_normal(cb, eta, closest->v); ref && std::abs(ref->slack) <= opt.face_tol) return ref;
    if (accept_raw && std::abs(closest->slack) <= opt.face_tol) return closest;
    if (polish) return polish_normal(cb, eta, closest->v, opt.face_tol);
    return std::nullopt;
  };
  auto diverged_report = [&](const Probe& p, int it) {
    NewtonReport rep = finish_report(theta0, cb, xi, lam, it);
    rep.diverged = true;
    rep.escape_direction = cb.element(p.v);
    rep.escape_coefficients = cb.coef * p.v;
    rep.face_slack = p.slack;
    return rep;
  };

  int it = 0;
  for (; it < opt.max_iter; ++it) {
    const Eval e = evaluate(lam, true);
    const double gn = e.g.norm();
    if (gn < best_g) {
      best_g = gn;
      best = lam;
    }
    const SymEigen he = sym_eigen(e.h);
    const double mu_max = std::max(he.values(d - 1), 1e-300);
    Eigen::VectorXd step = Eigen::VectorXd::Zero(d);
    for (Eigen::Index j = 0; j < d; ++j)
      if (he.values(j) > 1e-14 * mu_max) step -= he.vectors.col(j) * (he.vectors.col(j).dot(e.g) / he.values(j));

    const bool degenerate = he.values(0) <= opt.null_tol;
    const bool converged = gn <= opt.tol;
    // Slowly (polynomially) degenerating iterations come from faces reached
    // through ties; refine the normal every few steps instead of waiting.
    const bool periodic = he.values(0) <= 1e-6 && it % 10 == 9;
    if (degenerate || periodic || (converged && he.values(0) <= 1e-6)) {
      // Near the relative boundary the Newton step concentrates on the
      // degenerate BKM directions; they span the normal cone at the limit.
      std::vector<Eigen::VectorXd> cands;
      for (double cut : {1e-8 * mu_max, opt.null_tol, 1e-6}) {
        Eigen::VectorXd s = Eigen::VectorXd::Zero(d);
        for (Eigen::Index j = 0; j < d; ++j)
          if (he.values(j) <= cut) s += he.vectors.col(j) * he.vectors.col(j).dot(step);
        cands.push_back(s);
      }
      cands.push_back(he.vectors.col(0));
      cands.push_back(-he.vectors.col(0));
      cands.push_back(lam);
      if (cands.front().norm() > 1e-14) null_step = cands.front();
      if (auto p = boundary_check(cands, degenerate || converged, periodic && !degenerate)) return diverged_report(*p, it);
    }
    if (converged) return finish_report(theta0, cb, xi, lam, it);

    const bool capped = step.norm() > radius;
    if (capped) step *= radius / step.norm();
    const double slope = e.g.dot(step);
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Eigen::VectorXd trial = lam + alpha * step;
      const Eval et = evaluate(trial, false);
      if (et.phi <= e.phi + 1e-4 * alpha * slope || et.g.norm() <= (1.0 - 1e-4 * alpha) * gn) {
        last_step = trial - lam;
        lam = trial;
        accepted = true;
        // Interior points close to a non-exposed boundary point can sit at a
        // very large parameter norm; full capped steps widen the trust region.
        if (capped && ls == 0) radius *= 2.0;
        else if (ls > 0) radius = std::max(opt.max_step, 0.5 * radius);
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted || lam.norm() > opt.lambda_cap) {
      ++it;
      break;
    }
  }

  const Eval e = evaluate(lam, false);
  if (e.g.norm() < best_g) {
    best_g = e.g.norm();
    best = lam;
  }
  if (best_g <= opt.accept_tol) return finish_report(theta0, cb, xi, best, it);
  if (auto p = boundary_check({null_step, last_step, lam}, true, true)) return diverged_report(*p, it);
  throw SolverBudgetExhausted("mean value chart: no convergence after " + std::to_string(it) + " iterations", best_g);
}

}  // namespace detail

/// Finds theta in the family with mean value xi. For xi on the relative boundary
/// of the convex support the report is flagged diverged and carries the escape
/// direction along which the parameters run off.
inline NewtonReport invert_mean_chart(const ExpFamilySpec& spec, const Eigen::VectorXd& xi, const NewtonOptions& opt = {}) {
  const auto cb = detail::chart_basis(spec.algebra(), spec.directions());
  return detail::solve_chart(spec.theta0(), cb, xi, opt);
}

// ---------------------------------------------------------------------------
// Limits along e-geodesics

struct GeodesicLimit {
  State state;
  Compression compression;
};

/// lim_{t -> inf} R(theta + t u) = R_{pAp}(c^p(theta)) with p the maximal projection of u.
inline GeodesicLimit e_geodesic_limit(const HermElem& theta, const HermElem& u) {
  require_same(theta.algebra(), u.algebra(), "e_geodesic_limit");
  const Compression c(max_projection(u).projection);
  return {c.lift(gibbs_state(c.apply(theta))), c};
}

/// A value of t large enough that R(theta + t u) sits within about 1e-7 of its
/// limit. The first-order error of the eigenvectors is |theta| / (t gap), so t
/// grows with the norm of theta and never drops below 40 / gap.
inline double large_t(const HermElem& theta, const HermElem& u) {
  const double gap = top_spectral_gap(u);
  if (gap <= 0.0) return 1.0;
  const double th = norm(theta, NormKind::spectral);
  return std::max(40.0, 1e7 * (1.0 + th) * (1.0 + th)) / gap;
}

/// lim_{t -> inf} exp(theta + t u) for u with nonpositive spectrum.
inline HermElem exp_limit_nonpositive(const HermElem& theta, const HermElem& u) {
  require_same(theta.algebra(), u.algebra(), "exp_limit_nonpositive");
  const MaxProjection mp = max_projection(u);
  const double z = kZeroTol * std::max(1.0, norm(u, NormKind::spectral));
  if (mp.value > z) throw DomainError("exp_limit_nonpositive: u has positive spectral value " + std::to_string(mp.value));
  const Projection k = kernel_projection(u);
  if (k.is_zero()) return HermElem::zero(u.algebra());
  const Compression c(k);
  return c.lift(func_calc([](double x) { return std::exp(x); }, c.apply(theta)));
}

/// S(rho, R(theta + t u)) along a grid of t. Requires s(rho) <= p_max(u).
inline std::vector<double> monotone_geodesic_divergence(const State& rho, const HermElem& theta, const HermElem& u,
                                                        const std::vector<double>& t_grid) {
  const MaxProjection mp = max_projection(u);
  if (mp.projection.is_identity()) throw DomainError("monotone_geodesic_divergence: u is a multiple of the identity");
  if (!projection_leq(support_projection(rho.elem()), mp.projection, 1e-6))
    throw DomainError("monotone_geodesic_divergence: support of rho is not below the maximal projection of u");
  std::vector<double> out;
  for (double t : t_grid) {
    const ExtReal s = relative_entropy(rho, gibbs_state(theta + t * u));
    out.push_back(s.as_double());
  }
  return out;
}

/// The family in the image algebra of phi whose states pull back to the states
/// of spec under the adjoint map: theta -> phi(theta - (+) ln(m_i) 1).
inline ExpFamilySpec shift_family(const EmbeddingSpec& phi, const ExpFamilySpec& spec) {
  const AlgebraSpec& src = spec.algebra();
  phi.check(src);
  HermElem correction = HermElem::zero(src);
  for (std::size_t i = 0; i < src.num_blocks(); ++i)
    correction += HermElem::block_unit(src, i, std::log(static_cast<double>(phi.multiplicities[i])));
  std::vector<HermElem> dirs;
  for (const auto& u : spec.directions()) dirs.push_back(embed(phi, u, false));
  return ExpFamilySpec(embed(phi, spec.theta0() - correction, false), std::move(dirs));
}

}  // namespace entgeo
