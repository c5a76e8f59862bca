#pragma once

// Property suites backing the acceptance test and `entgeo verify`. Each suite
// returns a single verdict with a one-line summary of what it measured.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "entgeo/algebra.hpp"
#include "entgeo/entropy.hpp"
#include "entgeo/expfam.hpp"
#include "entgeo/families.hpp"
#include "entgeo/lattice.hpp"
#include "entgeo/maxent.hpp"
#include "entgeo/spectral.hpp"
#include "entgeo/topology.hpp"
#include "entgeo/verify/oracles.hpp"

namespace entgeo::verify {

struct SuiteResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Tolerances of the acceptance criteria.
namespace tol {
inline constexpr double pythagoras_gap = 1e-7;
inline constexpr double projection_slack = 1e-12;   // rounding allowance in S(rho, pi) <= S(rho, sigma)
inline constexpr double projection_equal = 1e-6;    // "equality only near pi"
// A margin below this counts as equality. S(rho, sigma) - S(rho, pi) = S(pi, sigma)
// is at least half the squared trace distance, so sigma farther than
// projection_equal from pi has a margin of at least this much.
inline constexpr double projection_tie = 0.5 * projection_equal * projection_equal;
inline constexpr double maxent_interior = 1e-6;
inline constexpr double maxent_boundary = 1e-8;
inline constexpr double gradient_fd = 1e-6;
inline constexpr double hessian_fd = 1e-5;
inline constexpr double limit_trace = 1e-6;
inline constexpr double free_energy_limit = 1e-6;
inline constexpr double pinsker_floor = -1e-8;
inline constexpr double segment_floor = 0.05;
inline constexpr double segment_top = 1e-6;
inline constexpr double topology_eps = 2e-2;
inline constexpr double representation = 1e-10;
}  // namespace tol

namespace detail {

inline std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

inline Eigen::VectorXd gauss(std::mt19937_64& rng, Eigen::Index k, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::VectorXd v(k);
  for (Eigen::Index i = 0; i < k; ++i) v(i) = g(rng);
  return v;
}

inline Eigen::MatrixXcd random_unitary(std::mt19937_64& rng, int k) {
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(entgeo::detail::gaussian_matrix(rng, k, k));
  return qr.householderQ();
}

/// Element with prescribed spectrum per block, rotated by random unitaries.
inline HermElem with_spectrum(const AlgebraSpec& alg, const std::vector<std::vector<double>>& spec,
                              std::mt19937_64& rng) {
  std::vector<Eigen::MatrixXcd> blocks;
  for (std::size_t b = 0; b < alg.num_blocks(); ++b) {
    const int k = alg.block(b);
    const Eigen::MatrixXcd v = random_unitary(rng, k);
    Eigen::VectorXcd d(k);
    for (int i = 0; i < k; ++i) d(i) = spec[b][static_cast<std::size_t>(i)];
    blocks.push_back(v * d.asDiagonal() * v.adjoint());
  }
  return HermElem(alg, std::move(blocks));
}

inline const std::vector<AlgebraSpec>& test_algebras() {
  static const std::vector<AlgebraSpec> algs{AlgebraSpec({2, 1}), AlgebraSpec({3}), AlgebraSpec({1, 1, 1}),
                                             AlgebraSpec({2, 2}), AlgebraSpec({4}), AlgebraSpec({1, 2})};
  return algs;
}

/// Random rank profile with at least one nonzero entry.
inline std::vector<int> random_profile(const AlgebraSpec& alg, std::mt19937_64& rng) {
  std::vector<int> r(alg.num_blocks());
  for (;;) {
    int total = 0;
    for (std::size_t b = 0; b < r.size(); ++b) {
      r[b] = std::uniform_int_distribution<int>(0, alg.block(b))(rng);
      total += r[b];
    }
    if (total > 0) return r;
  }
}

inline Eigen::MatrixXd diag_matrix(const std::vector<HermElem>& u) {
  const int n = u.front().algebra().dim();
  Eigen::MatrixXd a(static_cast<Eigen::Index>(u.size()), n);
  for (std::size_t i = 0; i < u.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = u[i].dense().diagonal().real();
  return a;
}

inline std::vector<int> indicator(const Projection& p) {
  std::vector<int> out;
  const auto r = p.rank_profile();
  for (std::size_t i = 0; i < r.size(); ++i)
    if (r[i]) out.push_back(static_cast<int>(i));
  return out;
}

}  // namespace detail

/// Complete Pythagorean theorem on the two planar families.
inline SuiteResult suite_pythagoras(std::uint64_t seed) {
  int finite = 0, infinite = 0, inconsistent = 0, errors = 0;
  double max_gap = 0.0;
  const std::vector<std::vector<int>> profiles{{1, 0}, {0, 1}, {1, 1}, {2, 0}};
  for (int f = 0; f < 2; ++f) {
    const ExpFamilySpec spec = f == 0 ? families::staffelberg() : families::swallow();
    const AlgebraSpec& alg = spec.algebra();
    std::mt19937_64 rng(seed * 7919 + static_cast<std::uint64_t>(f));
    for (int k = 0; k < 100; ++k) {
      try {
        State sigma;
        switch (k % 3) {
          case 0: sigma = gibbs_state(spec.parameter(detail::gauss(rng, 2, 2.0))); break;
          case 1: {
            const HermElem th = spec.parameter(detail::gauss(rng, 2));
            sigma = e_geodesic_limit(th, spec.combination(detail::gauss(rng, 2))).state;
            break;
          }
          default: sigma = rI_projection(spec, random_state(alg, rng, profiles[static_cast<std::size_t>(k) % 4])).pi;
        }
        State rho;
        if (k % 2 == 0) {
          rho = random_state(alg, rng);
        } else {
          const Compression c(support_projection(sigma.elem()));
          rho = c.lift(random_state(c.target(), rng, detail::random_profile(c.target(), rng)));
        }
        const auto r = pythagoras_check(spec, rho, sigma);
        if (!r.consistent) ++inconsistent;
        if (r.pi_sigma.is_finite() && r.rho_sigma.is_finite()) {
          ++finite;
          max_gap = std::max(max_gap, r.gap);
        } else {
          ++infinite;
        }
      } catch (const Error&) {
        ++errors;
      }
    }
  }
  SuiteResult s;
  s.passed = inconsistent == 0 && errors == 0 && finite > 0 && max_gap <= tol::pythagoras_gap;
  s.detail = detail::fmt("max gap %.3g over %d finite pairs, %d infinite, %d inconsistent, %d errors (tol %.0e)",
                         max_gap, finite, infinite, inconsistent, errors, tol::pythagoras_gap);
  return s;
}

/// rI-projection beats every sampled member of the family.
inline SuiteResult suite_projection(std::uint64_t seed) {
  int violations = 0, near_equal_far = 0, samples = 0, errors = 0;
  double min_margin = 1e300;
  const std::vector<std::vector<int>> profiles{{1, 0}, {0, 1}, {1, 1}, {2, 0}, {1, 0}};
  for (int f = 0; f < 2; ++f) {
    const ExpFamilySpec spec = f == 0 ? families::staffelberg() : families::swallow();
    const AlgebraSpec& alg = spec.algebra();
    std::mt19937_64 rng(seed * 104729 + static_cast<std::uint64_t>(f));
    for (int k = 0; k < 20; ++k) {
      try {
        const State rho = k < 15 ? random_state(alg, rng) : random_state(alg, rng, profiles[static_cast<std::size_t>(k - 15)]);
        const auto pr = rI_projection(spec, rho);
        const double d = pr.distance.value();
        const bool interior = pr.face.is_identity();
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int s = 0; s < 10000; ++s, ++samples) {
          Eigen::VectorXd lam;
          if (interior && s % 3 == 0) {
            lam = pr.parameters + detail::gauss(rng, 2, std::pow(10.0, -4.0 * unif(rng)));
          } else {
            const double scale = std::pow(10.0, 2.0 * unif(rng) - 0.5);
            lam = detail::gauss(rng, 2, scale);
          }
          const State sigma = gibbs_state(spec.parameter(lam));
          const ExtReal srs = relative_entropy(rho, sigma);
          if (srs.is_infinite()) continue;
          const double margin = srs.value() - d;
          min_margin = std::min(min_margin, margin);
          if (margin < -tol::projection_slack) ++violations;
          if (margin < tol::projection_tie && trace_distance(sigma.elem(), pr.pi.elem()) > tol::projection_equal)
            ++near_equal_far;
        }
      } catch (const Error&) {
        ++errors;
      }
    }
  }
  SuiteResult s;
  s.passed = violations == 0 && near_equal_far == 0 && errors == 0;
  s.detail = detail::fmt("%d samples, %d below the projection, %d ties away from pi, min margin %.3g, %d errors",
                         samples, violations, near_equal_far, min_margin, errors);
  return s;
}

/// Max-entropy against a projected-gradient simplex solver and polygon faces.
inline SuiteResult suite_maxent(std::uint64_t seed) {
  double max_interior = 0.0, max_boundary = 0.0, max_formula = 0.0;
  int interior = 0, boundary = 0, face_mismatch = 0, errors = 0;
  std::mt19937_64 rng(seed * 31337 + 3);
  for (int n : {4, 6}) {
    const AlgebraSpec alg(std::vector<int>(static_cast<std::size_t>(n), 1));
    for (int inst = 0; inst < 4; ++inst) {
      std::vector<HermElem> u;
      for (int i = 0; i < 2; ++i) {
        const Eigen::VectorXd d = detail::gauss(rng, n);
        u.push_back(HermElem::diagonal(alg, std::vector<double>(d.data(), d.data() + n)));
      }
      const Eigen::MatrixXd a = detail::diag_matrix(u);
      std::uniform_real_distribution<double> unif(0.05, 1.0);
      for (int q = 0; q < 5; ++q) {
        Eigen::VectorXd p0(n);
        for (int i = 0; i < n; ++i) p0(i) = unif(rng);
        p0 /= p0.sum();
        const Eigen::VectorXd xi = a * p0;
        try {
          const auto r = max_entropy(alg, u, xi);
          const Eigen::VectorXd p = oracle::simplex_maxent(a, p0);
          max_interior = std::max(max_interior, std::abs(r.entropy - oracle::shannon(p)));
          max_formula = std::max(max_formula, r.formula_residual);
          ++interior;
        } catch (const Error&) {
          ++errors;
        }
      }
      std::vector<Eigen::Vector2d> pts;
      for (int j = 0; j < n; ++j) pts.emplace_back(a(0, j), a(1, j));
      for (const auto& face : oracle::planar_faces(pts)) {
        if (face.empty() || static_cast<int>(face.size()) == n) continue;
        Eigen::VectorXd xi;
        double expected = 0.0;
        if (face.size() == 1) {
          xi = a.col(face[0]);
        } else if (face.size() == 2) {
          const double t = 0.3;
          xi = t * a.col(face[0]) + (1.0 - t) * a.col(face[1]);
          expected = -t * std::log(t) - (1.0 - t) * std::log(1.0 - t);
        } else {
          continue;
        }
        try {
          const auto r = max_entropy(alg, u, xi);
          if (detail::indicator(r.face) != face) ++face_mismatch;
          max_boundary = std::max(max_boundary, std::abs(r.entropy - expected));
          max_formula = std::max(max_formula, r.formula_residual);
          ++boundary;
        } catch (const Error&) {
          ++errors;
        }
      }
    }
  }
  SuiteResult s;
  s.passed = errors == 0 && face_mismatch == 0 && max_interior <= tol::maxent_interior &&
             max_boundary <= tol::maxent_boundary && max_formula <= tol::maxent_boundary;
  s.detail = detail::fmt(
      "%d interior: max |dS| %.3g; %d boundary: max |dS| %.3g, %d face mismatches; closed-form residual %.3g; %d errors",
      interior, max_interior, boundary, max_boundary, face_mismatch, max_formula, errors);
  return s;
}

/// Derivatives of the free energy against finite differences of a dense oracle.
inline SuiteResult suite_calculus(std::uint64_t seed) {
  std::mt19937_64 rng(seed * 2654435761u + 4);
  const auto& algs = detail::test_algebras();
  double max_grad = 0.0, max_hess = 0.0, min_gram = 1e300;
  for (int t = 0; t < 100; ++t) {
    const AlgebraSpec& alg = algs[static_cast<std::size_t>(t) % algs.size()];
    const HermElem th = random_hermitian(alg, rng), u = random_hermitian(alg, rng);
    const double h = 1e-5;
    const double fd = (oracle::dense_free_energy(th + h * u) - oracle::dense_free_energy(th - h * u)) / (2 * h);
    max_grad = std::max(max_grad, std::abs(dF(th, u) - fd));
  }
  for (int t = 0; t < 50; ++t) {
    const AlgebraSpec& alg = algs[static_cast<std::size_t>(t) % algs.size()];
    const HermElem th = random_hermitian(alg, rng), u = random_hermitian(alg, rng), v = random_hermitian(alg, rng);
    const double h = 1e-4;
    auto f = [&](double a, double b) { return oracle::dense_free_energy(th + a * u + b * v); };
    const double fd = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4 * h * h);
    max_hess = std::max(max_hess, std::abs(bkm(th, u, v) - fd));
  }
  for (int t = 0; t < 50; ++t) {
    const AlgebraSpec& alg = algs[static_cast<std::size_t>(t) % algs.size()];
    const int k = std::min(3, alg.real_dim() - 1);
    std::vector<HermElem> dirs;
    for (int i = 0; i < k; ++i) {
      const HermElem w = random_hermitian(alg, rng);
      dirs.push_back(w.shifted(-w.trace() / alg.dim()));
    }
    const Eigen::MatrixXd g = bkm_gram(random_hermitian(alg, rng), dirs);
    min_gram = std::min(min_gram, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g).eigenvalues()(0));
  }
  SuiteResult s;
  s.passed = max_grad <= tol::gradient_fd && max_hess <= tol::hessian_fd && min_gram > 0.0;
  s.detail = detail::fmt("max |dF - fd| %.3g (tol %.0e), max |bkm - fd2| %.3g (tol %.0e), min Gram eigenvalue %.3g",
                         max_grad, tol::gradient_fd, max_hess, tol::hessian_fd, min_gram);
  return s;
}

/// Limits along e-geodesics against dense evaluation at large t.
inline SuiteResult suite_limits(std::uint64_t seed) {
  std::mt19937_64 rng(seed * 6364136223846793005ull + 5);
  const auto& algs = detail::test_algebras();
  std::uniform_real_distribution<double> low(-1.0, 0.4), neg(-1.5, -0.5);
  double max_geo = 0.0, max_nonpos = 0.0, max_free = 0.0;
  for (int t = 0; t < 30; ++t) {
    const AlgebraSpec& alg = algs[static_cast<std::size_t>(t) % algs.size()];
    // Top value 1 with random multiplicity spread over the blocks, the rest below 0.4.
    std::vector<std::vector<double>> sp;
    int tops = 0;
    for (int k : alg.blocks()) {
      std::vector<double> v;
      for (int i = 0; i < k; ++i) v.push_back(low(rng));
      const int m = std::uniform_int_distribution<int>(0, std::min(k, 2))(rng);
      for (int i = 0; i < m; ++i) v[static_cast<std::size_t>(i)] = 1.0;
      tops += m;
      sp.push_back(v);
    }
    if (tops == 0) sp[0][0] = 1.0;
    const HermElem u = detail::with_spectrum(alg, sp, rng);
    const HermElem th = random_hermitian(alg, rng, 0.7);
    // Direct evaluation at t carries an O(1/t) bias; Richardson extrapolation
    // from t and 2t removes it, leaving O(1/t^2) plus eigensolver rounding.
    const double big = 1e6;
    const auto lim = e_geodesic_limit(th, u);
    const Eigen::MatrixXcd direct = 2.0 * oracle::dense_gibbs(th + 2.0 * big * u) - oracle::dense_gibbs(th + big * u);
    max_geo = std::max(max_geo, oracle::dense_trace_norm(lim.state.elem().dense() - direct));
    const double asym = 2.0 * (oracle::dense_free_energy(th + 2.0 * big * u) - 2.0 * big) -
                        (oracle::dense_free_energy(th + big * u) - big);
    max_free = std::max(max_free, std::abs(asym - free_energy(lim.compression.apply(th))));

    std::vector<std::vector<double>> sn;
    int zeros = 0;
    for (int k : alg.blocks()) {
      std::vector<double> v;
      for (int i = 0; i < k; ++i) v.push_back(neg(rng));
      const int m = std::uniform_int_distribution<int>(0, std::min(k, 2))(rng);
      for (int i = 0; i < m; ++i) v[static_cast<std::size_t>(i)] = 0.0;
      zeros += m;
      sn.push_back(v);
    }
    if (zeros == 0) sn[0][0] = 0.0;
    const HermElem w = detail::with_spectrum(alg, sn, rng);
    const auto exp_at = [&](double t) {
      return oracle::dense_function((th + t * w).dense(), [](double x) { return std::exp(x); });
    };
    const Eigen::MatrixXcd ex = 2.0 * exp_at(2.0 * big) - exp_at(big);
    max_nonpos = std::max(max_nonpos, oracle::dense_trace_norm(exp_limit_nonpositive(th, w).dense() - ex));
  }
  SuiteResult s;
  s.passed = max_geo <= tol::limit_trace && max_nonpos <= tol::limit_trace && max_free <= tol::free_energy_limit;
  s.detail = detail::fmt("trace-norm error: geodesic limit %.3g, exp limit %.3g; free-energy asymptote %.3g (tol %.0e)",
                         max_geo, max_nonpos, max_free, tol::limit_trace);
  return s;
}

/// 2 S(rho, sigma) >= ||rho - sigma||_1^2.
inline SuiteResult suite_pinsker(std::uint64_t seed) {
  std::mt19937_64 rng(seed * 1442695040888963407ull + 6);
  const auto& algs = detail::test_algebras();
  double min_slack = 1e300;
  int finite = 0;
  for (int t = 0; t < 1000; ++t) {
    const AlgebraSpec& alg = algs[static_cast<std::size_t>(t) % algs.size()];
    const State rho = t % 2 ? random_state(alg, rng, detail::random_profile(alg, rng)) : random_state(alg, rng);
    const State sigma = t % 5 == 0 ? random_state(alg, rng, detail::random_profile(alg, rng)) : random_state(alg, rng);
    const ExtReal s = pinsker_slack(rho, sigma);
    if (s.is_infinite()) continue;
    ++finite;
    min_slack = std::min(min_slack, s.value());
  }
  SuiteResult s;
  s.passed = finite > 0 && min_slack >= tol::pinsker_floor;
  s.detail = detail::fmt("min slack %.3g over %d finite pairs (floor %.0e)", min_slack, finite, tol::pinsker_floor);
  return s;
}

/// Staffelberg segment outside the rI-closure; Swallow non-exposed node.
inline SuiteResult suite_closure(std::uint64_t seed) {
  const auto spec = families::staffelberg();
  const Eigen::MatrixXcd q = 0.5 * (pauli::one() + pauli::y());
  auto segment = [&](double w) { return State(families::qubit_plus(w * q, 1.0 - w)); };
  auto h = [](double w) { return -w * std::log(w) - (1 - w) * std::log(1 - w); };
  SuiteResult s;
  try {
    const double d_mid = entropy_distance(spec, segment(0.75)).value();
    const double d_top = entropy_distance(spec, segment(0.5)).value();
    const double closed = std::log(2.0) - h(0.75);
    // Dense sampling of the family from above: no member may beat the computed distance.
    std::mt19937_64 rng(seed * 97 + 7);
    std::uniform_real_distribution<double> tt(0.0, 40.0), aa(-3.0, 3.0);
    double inf_sample = 1e300;
    const State mid = segment(0.75);
    for (int i = 0; i < 10000; ++i) {
      const double t = tt(rng);
      Eigen::Vector2d lam(aa(rng) * std::sqrt(t + 1.0) * 0.5, t);
      inf_sample = std::min(inf_sample, relative_entropy(mid, gibbs_state(spec.parameter(lam))).as_double());
    }
    const auto lat = enumerate_lattice(families::swallow(), LatticeBudget{});
    int deep_non_exposed = 0;
    for (const auto& n : lat.nodes)
      if (n.depth() == 2 && !n.exposed) ++deep_non_exposed;
    s.passed = d_mid >= tol::segment_floor && d_top <= tol::segment_top && std::abs(d_mid - closed) <= 1e-8 &&
               inf_sample >= d_mid - 1e-9 && deep_non_exposed > 0;
    s.detail = detail::fmt(
        "staffelberg segment d(w=3/4) %.6f (closed form %.6f, sampled inf %.6f, floor %.2f), top end d %.3g; swallow depth-2 "
        "non-exposed nodes %d",
        d_mid, closed, inf_sample, tol::segment_floor, d_top, deep_non_exposed);
  } catch (const Error& e) {
    s.detail = std::string("error: ") + e.what();
  }
  return s;
}

/// Convergence counterexamples and the one-way implication arrows.
inline SuiteResult suite_topology(std::uint64_t seed) {
  const double eps = tol::topology_eps;
  const AlgebraSpec c2({1, 1});
  const State e1(HermElem::diagonal(c2, {1.0, 0.0}));
  const StateSequence commutative{[&](int i) { return State(HermElem::diagonal(c2, {(i - 1.0) / i, 1.0 / i})); }, {}};
  const auto a = implication_suite(commutative, e1, 200, eps);
  const bool c2_ok = a.ri_verdict == Verdict::converging && a.i_verdict == Verdict::diverging &&
                     a.norm_verdict == Verdict::converging;

  const AlgebraSpec m2({2});
  auto bloch = [&](double al) {
    return State(HermElem(m2, {0.5 * (pauli::one() + std::cos(al) * pauli::x() + std::sin(al) * pauli::y())}));
  };
  const StateSequence rotating{[&](int i) { return bloch(1.0 / i); }, {}};
  const auto b = implication_suite(rotating, bloch(0.0), 200, eps);
  const bool m2_ok = b.ri_verdict == Verdict::diverging && b.norm_verdict == Verdict::converging;

  std::mt19937_64 rng(seed * 271828 + 8);
  const auto& algs = detail::test_algebras();
  int violations = 0, conv = 0, div = 0;
  for (int k = 0; k < 200; ++k) {
    const AlgebraSpec& alg = algs[static_cast<std::size_t>(k) % algs.size()];
    const State rho = random_state(alg, rng);
    const std::uint64_t base = rng();
    const int kind = k % 3;
    const StateSequence seq{[&, base, kind](int i) {
                              const State tau = random_state(alg, base + static_cast<std::uint64_t>(i));
                              const double w = kind == 0 ? 1.0 / i : kind == 1 ? 1.0 / std::sqrt(i) : 0.5;
                              return State((1.0 - w) * rho.elem() + w * tau.elem());
                            },
                            {}};
    const auto r = implication_suite(seq, rho, 200, eps);
    if (!r.ok()) ++violations;
    conv += r.i_verdict == Verdict::converging;
    div += r.norm_verdict == Verdict::diverging;
  }
  SuiteResult s;
  s.passed = c2_ok && m2_ok && violations == 0;
  s.detail = detail::fmt(
      "C^2: rI %s, I %s, norm %s; Mat(2): rI %s, norm %s; random: %d violations over 200 (%d I-converging, %d "
      "norm-diverging)",
      to_string(a.ri_verdict), to_string(a.i_verdict), to_string(a.norm_verdict), to_string(b.ri_verdict),
      to_string(b.norm_verdict), violations, conv, div);
  return s;
}

/// Commutative projection lattice against the face lattice of the polygon.
inline SuiteResult suite_lattice(std::uint64_t seed) {
  std::mt19937_64 rng(seed * 1000003 + 9);
  const AlgebraSpec alg({1, 1, 1, 1, 1});
  int matched = 0, errors = 0;
  std::string first_mismatch;
  for (int inst = 0; inst < 10; ++inst) {
    std::vector<HermElem> u;
    for (int i = 0; i < 2; ++i) {
      const Eigen::VectorXd d = detail::gauss(rng, 5);
      u.push_back(HermElem::diagonal(alg, std::vector<double>(d.data(), d.data() + 5)));
    }
    const Eigen::MatrixXd a = detail::diag_matrix(u);
    std::vector<Eigen::Vector2d> pts;
    for (int j = 0; j < 5; ++j) pts.emplace_back(a(0, j), a(1, j));
    const auto faces = oracle::planar_faces(pts);
    try {
      LatticeBudget budget;
      budget.seed = seed + static_cast<std::uint64_t>(inst);
      const auto lat = enumerate_lattice(ExpFamilySpec::linear(alg, u), budget);
      std::set<std::vector<int>> got;
      for (const auto& n : lat.nodes) got.insert(detail::indicator(n.projection));
      if (got == faces && got.size() == lat.nodes.size()) {
        ++matched;
      } else if (first_mismatch.empty()) {
        first_mismatch = detail::fmt(" (instance %d: %zu nodes vs %zu faces)", inst, lat.nodes.size(), faces.size());
      }
    } catch (const Error&) {
      ++errors;
    }
  }
  SuiteResult s;
  s.passed = matched == 10;
  s.detail = detail::fmt("%d/10 instances match the polygon face lattice, %d errors", matched, errors) + first_mismatch;
  return s;
}

/// Adjoint of the block embedding: exact example and entropy preservation.
inline SuiteResult suite_representation(std::uint64_t seed) {
  bool example_ok = true;
  for (int n : {3, 5}) {
    const AlgebraSpec cn(std::vector<int>(static_cast<std::size_t>(n), 1));
    const EmbeddingSpec phi{{1, n - 1}, 0};
    const HermElem pulled = embed_adjoint(phi, HermElem::identity(cn) / static_cast<double>(n));
    const Eigen::MatrixXcd d = pulled.dense();
    example_ok &= d(0, 0).real() == 1.0 / n && d(1, 1).real() == (n - 1.0) / n;
  }
  struct Case {
    AlgebraSpec alg;
    EmbeddingSpec phi;
  };
  const std::vector<Case> cases{{AlgebraSpec({2, 1}), {{2, 3}, 1}}, {AlgebraSpec({1, 1, 1}), {{1, 2, 1}, 0}},
                                {AlgebraSpec({2}), {{3}, 2}}, {AlgebraSpec({1, 2}), {{2, 1}, 0}}};
  std::mt19937_64 rng(seed * 4242 + 10);
  double max_entropy_err = 0.0, max_roundtrip = 0.0, max_family = 0.0;
  int inconsistent = 0;
  for (int t = 0; t < 40; ++t) {
    const Case& c = cases[static_cast<std::size_t>(t) % cases.size()];
    // Image state of b: each copy of block i carries b_i / m_i.
    auto image = [&](const State& b) {
      HermElem scaled = HermElem::zero(c.alg);
      for (std::size_t i = 0; i < c.alg.num_blocks(); ++i) {
        std::vector<Eigen::MatrixXcd> blocks(c.alg.num_blocks());
        for (std::size_t j = 0; j < c.alg.num_blocks(); ++j)
          blocks[j] = j == i ? Eigen::MatrixXcd(b.elem().block(i) / c.phi.multiplicities[i])
                             : Eigen::MatrixXcd::Zero(c.alg.block(j), c.alg.block(j));
        scaled += HermElem(c.alg, blocks);
      }
      return State::unchecked(embed(c.phi, scaled));
    };
    const State b1 = t % 3 ? random_state(c.alg, rng) : random_state(c.alg, rng, detail::random_profile(c.alg, rng));
    const State b2 = random_state(c.alg, rng);
    const State r1 = image(b1), r2 = image(b2);
    max_roundtrip = std::max(max_roundtrip, norm(embed_adjoint(c.phi, r1.elem()) - b1.elem()));
    const ExtReal s_img = relative_entropy(r1, r2), s_src = relative_entropy(b1, b2);
    const ExtReal s_rev = relative_entropy(r2, r1), s_rsrc = relative_entropy(b2, b1);
    for (auto [x, y] : {std::pair{s_img, s_src}, std::pair{s_rev, s_rsrc}}) {
      if (x.is_finite() != y.is_finite()) ++inconsistent;
      else if (x.is_finite()) max_entropy_err = std::max(max_entropy_err, std::abs(x.value() - y.value()));
    }
    // Shifted family: pulled-back Gibbs states equal the original ones.
    const HermElem th0 = random_hermitian(c.alg, rng), u1 = random_hermitian(c.alg, rng), u2 = random_hermitian(c.alg, rng);
    const ExpFamilySpec spec(th0, {u1, u2});
    const ExpFamilySpec shifted = shift_family(c.phi, spec);
    const Eigen::VectorXd lam = detail::gauss(rng, 2);
    const HermElem back = embed_adjoint(c.phi, gibbs_state(shifted.parameter(lam)).elem());
    max_family = std::max(max_family, norm(back - gibbs_state(spec.parameter(lam)).elem(), NormKind::trace));
  }
  SuiteResult s;
  s.passed = example_ok && inconsistent == 0 && max_entropy_err <= tol::representation &&
             max_roundtrip <= tol::representation && max_family <= tol::representation;
  s.detail = detail::fmt(
      "uniform-state example %s; relative entropy error %.3g, round trip %.3g, shifted family %.3g, %d inf mismatches",
      example_ok ? "exact" : "WRONG", max_entropy_err, max_roundtrip, max_family, inconsistent);
  return s;
}

struct Suite {
  int id;
  const char* name;
  std::function<SuiteResult(std::uint64_t)> run;
};

inline const std::vector<Suite>& all_suites() {
  static const std::vector<Suite> suites{
      {1, "pythagoras", suite_pythagoras}, {2, "projection", suite_projection},
      {3, "maxent", suite_maxent},         {4, "calculus", suite_calculus},
      {5, "limits", suite_limits},         {6, "pinsker", suite_pinsker},
      {7, "closure", suite_closure},       {8, "topology", suite_topology},
      {9, "lattice", suite_lattice},       {10, "representation", suite_representation},
  };
  return suites;
}

/// Runs one suite, filling in id, name and timing; exceptions become failures.
inline SuiteResult run_suite(const Suite& suite, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  SuiteResult r;
  try {
    r = suite.run(seed);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("uncaught exception: ") + e.what();
  }
  r.id = suite.id;
  r.name = suite.name;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace entgeo::verify
