#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "entgeo/entropy.hpp"
#include "entgeo/expfam.hpp"
#include "entgeo/lattice.hpp"

namespace entgeo {

/// The rI-projection of a state onto the closure of an exponential family.
struct ProjectionResult {
  State pi;
  Projection face;                   // support of pi
  Compression compression;           // ambient algebra -> face algebra
  std::vector<AccessStep> access_sequence;
  Eigen::VectorXd parameters;        // pi = R_face(c(theta0 + sum_i parameters_i u_i))
  ExtReal distance;                  // S(rho, pi)
  double residual = 0.0;             // |m(pi) - m(rho)|
};

namespace detail {

/// S(rho, sigma) for sigma = R_face(c(theta)). log sigma = c(theta) - F(c(theta))
/// on the face, exactly; diagonalizing sigma instead would lose eigenvalues far
/// below the top one. Mass of rho outside the face above max_outside gives +inf.
inline ExtReal divergence_to_member(const State& rho, const Compression& c, const HermElem& theta, double max_outside) {
  const HermElem rho_c = c.apply(rho.elem());
  if (1.0 - rho_c.trace() > max_outside) return ExtReal::infinity();
  const HermElem theta_c = c.apply(theta);
  return ExtReal::nonnegative(-von_neumann_entropy(rho) - hs_inner(rho_c, theta_c) + free_energy(theta_c) * rho_c.trace());
}

}  // namespace detail

/// pi is the unique point of the closure with the mean values of rho.
inline ProjectionResult rI_projection(const ExpFamilySpec& spec, const State& rho, const NewtonOptions& opt = {}) {
  require_same(rho.algebra(), spec.algebra(), "rI_projection");
  FaceResult fr = face_of_mean_value(spec, mean_value(rho, spec), opt);
  ProjectionResult r{fr.state, fr.face, fr.compression, std::move(fr.access_sequence), fr.params, {}, fr.residual};
  r.distance = detail::divergence_to_member(rho, r.compression, spec.parameter(r.parameters), kSupportLeakTol);
  // The support of rho always lies below the face of its projection, so mass
  // outside means the face search went wrong.
  if (r.distance.is_infinite()) throw Error("rI_projection: support of rho is not below the computed face");
  return r;
}

/// d(rho) = min over the closure of S(rho, .).
inline ExtReal entropy_distance(const ExpFamilySpec& spec, const State& rho, const NewtonOptions& opt = {}) {
  return rI_projection(spec, rho, opt).distance;
}

// ---------------------------------------------------------------------------
// Maximum entropy

struct MaxEntResult {
  State rho;
  Projection face;
  Compression compression;
  Eigen::VectorXd betas;           // rho = R_face(c(-sum_i betas_i u_i))
  double entropy = 0.0;            // measured S(rho)
  double free_energy_face = 0.0;   // F_face(c(-sum_i betas_i u_i))
  double formula_residual = 0.0;   // |entropy - free_energy_face - betas . xi|
  double residual = 0.0;           // |m(rho) - xi|
  int iterations = 0;
};

/// The state of maximal von Neumann entropy with mean values xi, for the
/// constraints u_1, ..., u_k. Throws OutsideConvexSupport when xi is infeasible.
inline MaxEntResult max_entropy(const AlgebraSpec& alg, const std::vector<HermElem>& u, const Eigen::VectorXd& xi,
                                const NewtonOptions& opt = {}) {
  if (static_cast<std::size_t>(xi.size()) != u.size()) throw DomainError("max_entropy: xi has wrong length");
  const auto spec = ExpFamilySpec::linear(alg, u);
  const FaceResult fr = face_of_mean_value(spec, xi, opt);
  MaxEntResult r{fr.state, fr.face, fr.compression, -fr.params};
  r.entropy = von_neumann_entropy(r.rho);
  r.free_energy_face = free_energy(fr.compression.apply(spec.combination(fr.params)));
  r.formula_residual = std::abs(r.entropy - r.free_energy_face - r.betas.dot(xi));
  r.residual = fr.residual;
  r.iterations = fr.iterations;
  return r;
}

/// Same, for a linear family (theta0 must vanish).
inline MaxEntResult max_entropy(const ExpFamilySpec& spec, const Eigen::VectorXd& xi, const NewtonOptions& opt = {}) {
  if (norm(spec.theta0()) > 1e-12) throw DomainError("max_entropy: the family must be linear (theta0 = 0)");
  return max_entropy(spec.algebra(), spec.directions(), xi, opt);
}

// ---------------------------------------------------------------------------
// Pythagorean identities

struct PythagorasResult {
  ExtReal rho_pi;     // S(rho, pi)
  ExtReal pi_sigma;   // S(pi, sigma)
  ExtReal rho_sigma;  // S(rho, sigma)
  double gap = 0.0;   // |S(rho, pi) + S(pi, sigma) - S(rho, sigma)|, 0 when both sides are infinite
  bool consistent = true;
};

inline constexpr double kClosureMembershipTol = 1e-6;

/// True if sigma is a fixed point of the rI-projection, i.e. lies in the closure.
inline bool in_rI_closure(const ExpFamilySpec& spec, const State& sigma, double tol = kClosureMembershipTol) {
  return trace_distance(sigma.elem(), rI_projection(spec, sigma).pi.elem()) <= tol;
}

/// S(rho, pi) + S(pi, sigma) = S(rho, sigma) for sigma in the closure of the family.
inline PythagorasResult pythagoras_check(const ExpFamilySpec& spec, const State& rho, const State& sigma) {
  const auto ps = rI_projection(spec, sigma);
  const double moved = trace_distance(sigma.elem(), ps.pi.elem());
  if (moved > kClosureMembershipTol)
    throw DomainError("pythagoras_check: sigma is not in the closure (moved by " + std::to_string(moved) + ")");
  const auto pr = rI_projection(spec, rho);
  // Divergences to sigma go through its own face and parameters, which stay
  // accurate when sigma has eigenvalues many orders below the largest.
  const HermElem theta_s = spec.parameter(ps.parameters);
  const double leak = kSupportLeakTol * kSupportLeakTol;
  PythagorasResult r{pr.distance, detail::divergence_to_member(pr.pi, ps.compression, theta_s, leak),
                     detail::divergence_to_member(rho, ps.compression, theta_s, leak)};
  if (r.pi_sigma.is_infinite() || r.rho_sigma.is_infinite()) {
    r.consistent = r.pi_sigma.is_infinite() && r.rho_sigma.is_infinite();
    r.gap = r.consistent ? 0.0 : std::numeric_limits<double>::infinity();
    return r;
  }
  r.gap = std::abs(r.rho_pi.value() + r.pi_sigma.value() - r.rho_sigma.value());
  return r;
}

/// S(rho, sigma) + S(sigma, tau) = S(rho, tau) for invertible sigma, tau with
/// rho - sigma orthogonal to log(tau) - log(sigma).
inline double classic_pythagoras_check(const State& rho, const State& sigma, const State& tau, double orth_tol = 1e-9) {
  require_same(rho.algebra(), sigma.algebra(), "classic_pythagoras_check");
  require_same(rho.algebra(), tau.algebra(), "classic_pythagoras_check");
  for (const State* s : {&sigma, &tau})
    if (!kernel_projection(s->elem()).is_zero()) throw DomainError("classic_pythagoras_check: sigma and tau must be invertible");
  const auto log = [](double x) { return std::log(x); };
  const double ip = hs_inner(rho.elem() - sigma.elem(), func_calc(log, tau) - func_calc(log, sigma));
  if (std::abs(ip) > orth_tol)
    throw DomainError("classic_pythagoras_check: orthogonality fails, inner product " + std::to_string(ip));
  const ExtReal a = relative_entropy(rho, sigma), b = relative_entropy(sigma, tau), c = relative_entropy(rho, tau);
  if (a.is_infinite() || c.is_infinite()) return a.is_infinite() && c.is_infinite() ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(a.value() + b.value() - c.value());
}

// ---------------------------------------------------------------------------
// Local maximizers of the entropy distance

struct MaximizerCertificate {
  // Support bound: the face of the state space through rho has dimension at most dim E.
  bool rank_bound_ok = false;
  int face_dim = 0;
  int family_dim = 0;
  // Cutoff: rho = R_pAp(p theta p) with p = s(rho) and theta from the projection.
  bool cutoff_ok = false;
  double cutoff_residual = 0.0;
  // d(rho) = F_qAq(q theta q) - F_pAp(p theta p) with q = s(pi).
  double free_energy_q = 0.0;
  double free_energy_p = 0.0;
  double distance = 0.0;
  double distance_residual = 0.0;
  // Norm of the derivative of d along traceless directions of pAp.
  double gradient_norm = 0.0;
};

/// Evaluates the necessary conditions for rho to be a local maximizer of d.
inline MaximizerCertificate maximizer_certificate(const ExpFamilySpec& spec, const State& rho, double tol = 1e-6) {
  MaximizerCertificate c;
  const Projection p = support_projection(rho.elem());
  int dim_pap = 0;
  for (int r : p.rank_profile()) dim_pap += r * r;
  c.face_dim = dim_pap - 1;
  c.family_dim = static_cast<int>(detail::chart_basis(spec.algebra(), spec.directions()).d());
  c.rank_bound_ok = c.face_dim <= c.family_dim;

  const auto pr = rI_projection(spec, rho);
  const HermElem theta = spec.parameter(pr.parameters);
  const Compression cp(p);
  const HermElem theta_p = cp.apply(theta);
  c.cutoff_residual = trace_distance(rho.elem(), cp.lift(gibbs_state(theta_p)).elem());
  c.cutoff_ok = c.cutoff_residual <= tol;

  c.free_energy_q = free_energy(pr.compression.apply(theta));
  c.free_energy_p = free_energy(theta_p);
  c.distance = pr.distance.value();
  c.distance_residual = std::abs(c.distance - (c.free_energy_q - c.free_energy_p));

  HermElem g = func_calc([](double x) { return std::log(x); }, cp.apply(rho.elem())) - theta_p;
  g = g.shifted(-g.trace() / cp.target().dim());
  c.gradient_norm = norm(g);
  return c;
}

struct AscentOptions {
  int max_iter = 400;
  double grad_tol = 1e-8;    // stop once the in-face gradient is this small
  double truncate = 1e-12;   // eigenvalues below this are set to zero
  double initial_step = 1.0;
  int probes = 8;            // random mixing directions tried at a stationary point
  double probe_weight = 1e-3;
};

struct AscentStep {
  State state;
  double distance = 0.0;
  double step = 0.0;
};

struct AscentResult {
  std::vector<AscentStep> trace;
  MaximizerCertificate certificate;
  bool converged = false;
};

namespace detail {

/// rho with eigenvalues below cut removed and renormalized.
inline State truncate_spectrum(const State& rho, double cut) {
  const auto c = cluster(eigensystem(rho.elem()));
  return State::normalized(apply_function(rho.algebra(), c, [cut](double x) { return x < cut ? 0.0 : x; }));
}

}  // namespace detail

/// Heuristic search for a local maximizer of d. Inside the face of the current
/// iterate it follows the mirror ascent rho -> R_pAp((1 + eta) log rho - eta p theta p),
/// whose direction is the gradient of d; small eigenvalues are cut off so the
/// iterate can reach lower-dimensional faces. At a stationary point a few random
/// mixtures probe whether leaving the face increases d.
inline AscentResult ascend_entropy_distance(const ExpFamilySpec& spec, std::uint64_t seed, const AscentOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  AscentResult res;
  State rho = random_state(spec.algebra(), rng);
  auto proj = rI_projection(spec, rho);
  double d = proj.distance.value();
  res.trace.push_back({rho, d, 0.0});
  double eta = opt.initial_step;
  const auto log = [](double x) { return std::log(x); };

  for (int it = 0; it < opt.max_iter; ++it) {
    const Compression cp(support_projection(rho.elem()));
    const HermElem theta_p = cp.apply(spec.parameter(proj.parameters));
    const HermElem log_rho = func_calc(log, cp.apply(rho.elem()));
    HermElem g = log_rho - theta_p;
    g = g.shifted(-g.trace() / cp.target().dim());

    bool moved = false;
    if (norm(g) > opt.grad_tol) {
      for (; eta > 1e-10; eta *= 0.5) {
        const HermElem arg = (1.0 + eta) * log_rho - eta * theta_p;
        State cand = detail::truncate_spectrum(cp.lift(gibbs_state(arg)), opt.truncate);
        auto cand_proj = rI_projection(spec, cand);
        const double cd = cand_proj.distance.value();
        if (cd > d) {
          rho = std::move(cand);
          proj = std::move(cand_proj);
          d = cd;
          res.trace.push_back({rho, d, eta});
          eta = std::min(2.0 * eta, 1e3);
          moved = true;
          break;
        }
      }
      if (!moved) eta = opt.initial_step;
    }
    if (moved) continue;

    for (int k = 0; k < opt.probes && !moved; ++k) {
      const State tau = random_state(spec.algebra(), rng);
      State cand((1.0 - opt.probe_weight) * rho.elem() + opt.probe_weight * tau.elem());
      auto cand_proj = rI_projection(spec, cand);
      const double cd = cand_proj.distance.value();
      if (cd > d + 1e-12) {
        rho = std::move(cand);
        proj = std::move(cand_proj);
        d = cd;
        res.trace.push_back({rho, d, 0.0});
        moved = true;
      }
    }
    if (!moved) {
      res.converged = true;
      break;
    }
  }
  res.certificate = maximizer_certificate(spec, rho);
  return res;
}

}  // namespace entgeo
