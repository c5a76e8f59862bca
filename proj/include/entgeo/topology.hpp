#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "entgeo/entropy.hpp"

namespace entgeo {

/// A lazily generated sequence of states, indexed from 1.
struct StateSequence {
  std::function<State(int)> generator;
  std::optional<int> length;  // empty for unbounded sequences

  State operator()(int i) const { return generator(i); }
};

enum class Verdict { converging, diverging, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::converging: return "converging";
    case Verdict::diverging: return "diverging";
    default: return "inconclusive";
  }
}

struct ConvergenceReport {
  Verdict verdict = Verdict::inconclusive;
  std::vector<ExtReal> trace;  // S^omega(rho, rho_i) for i = 1..N
};

namespace detail {

/// Tail window [N/2, N] of a 1-based trace, as a verdict on "value < eps".
inline Verdict tail_verdict(const std::vector<ExtReal>& trace, double eps) {
  const std::size_t n = trace.size();
  bool all_below = true, all_above = true;
  for (std::size_t i = n / 2 == 0 ? 0 : n / 2 - 1; i < n; ++i) {
    const bool below = trace[i] < ExtReal(eps);
    all_below &= below;
    all_above &= !below;
  }
  if (all_below) return Verdict::converging;
  if (all_above) return Verdict::diverging;
  return Verdict::inconclusive;
}

inline void require_length(const StateSequence& seq, int n) {
  if (n < 1) throw DomainError("sequence test needs N >= 1");
  if (seq.length && *seq.length < n) throw DomainError("sequence is shorter than N");
}

}  // namespace detail

/// Empirical test of rho_i -> rho in the omega-divergence: converging if
/// S^omega(rho, rho_i) < eps on the whole tail [N/2, N], diverging if it stays
/// at or above eps there.
inline ConvergenceReport omega_converges(const StateSequence& seq, const State& rho, Divergence w, int n = 200,
                                         double eps = 1e-2) {
  detail::require_length(seq, n);
  ConvergenceReport r;
  for (int i = 1; i <= n; ++i) r.trace.push_back(omega_divergence(rho, seq(i), w));
  r.verdict = detail::tail_verdict(r.trace, eps);
  return r;
}

/// Same test in trace norm.
inline ConvergenceReport norm_converges(const StateSequence& seq, const State& rho, int n = 200, double eps = 1e-2) {
  detail::require_length(seq, n);
  ConvergenceReport r;
  for (int i = 1; i <= n; ++i) r.trace.push_back(ExtReal(trace_distance(rho.elem(), seq(i).elem())));
  r.verdict = detail::tail_verdict(r.trace, eps);
  return r;
}

struct ImplicationReport {
  Verdict i_verdict, ri_verdict, norm_verdict;
  bool i_implies_ri = true;     // no I-convergence with rI-divergence
  bool ri_implies_norm = true;  // no rI-convergence with norm divergence
  bool ok() const { return i_implies_ri && ri_implies_norm; }
};

/// Checks the one-way arrows I-convergence => rI-convergence => norm convergence
/// on a sampled tail. The norm threshold sqrt(2 eps) is what Pinsker's
/// inequality guarantees from S(rho, rho_i) < eps. A violation is a converging
/// verdict above a diverging one; inconclusive verdicts never count.
inline ImplicationReport implication_suite(const StateSequence& seq, const State& rho, int n = 200, double eps = 1e-2) {
  ImplicationReport r;
  r.i_verdict = omega_converges(seq, rho, Divergence::I, n, eps).verdict;
  r.ri_verdict = omega_converges(seq, rho, Divergence::rI, n, eps).verdict;
  r.norm_verdict = norm_converges(seq, rho, n, std::sqrt(2.0 * eps)).verdict;
  r.i_implies_ri = !(r.i_verdict == Verdict::converging && r.ri_verdict == Verdict::diverging);
  r.ri_implies_norm = !(r.ri_verdict == Verdict::converging && r.norm_verdict == Verdict::diverging);
  return r;
}

enum class DiskKind { open, closed };

/// sigma in {S^omega(rho, .) < eps} (open) or {<= eps} (closed); eps may be +inf.
inline bool disk_membership(const State& rho, const State& sigma, double eps, Divergence w, DiskKind kind) {
  if (!(eps > 0.0)) throw DomainError("disk radius must be positive");
  const ExtReal s = omega_divergence(rho, sigma, w);
  const ExtReal r = std::isinf(eps) ? ExtReal::infinity() : ExtReal(eps);
  return kind == DiskKind::open ? s < r : s <= r;
}

struct ClosureReport {
  ExtReal inf_set;      // inf over samples of X
  ExtReal inf_closure;  // inf over the samples together with the proposed closure points
  bool consistent = false;  // inf_set - inf_closure <= tol
};

/// The closure of X does not lower inf S^omega(rho, .). Samples X densely, adds
/// the proposed closure points and checks that the infimum drops by at most tol.
inline ClosureReport closure_infimum_experiment(const State& rho, const std::function<State(std::mt19937_64&)>& sampler,
                                                const std::vector<State>& closure_points, Divergence w, int budget,
                                                std::uint64_t seed, double tol = 1e-3) {
  std::mt19937_64 rng(seed);
  ClosureReport r{ExtReal::infinity(), ExtReal::infinity()};
  for (int s = 0; s < budget; ++s) r.inf_set = std::min(r.inf_set, omega_divergence(rho, sampler(rng), w));
  r.inf_closure = r.inf_set;
  for (const auto& c : closure_points) r.inf_closure = std::min(r.inf_closure, omega_divergence(rho, c, w));
  if (r.inf_closure.is_infinite()) r.consistent = true;
  else r.consistent = r.inf_set.is_finite() && r.inf_set.value() - r.inf_closure.value() <= tol;
  return r;
}

}  // namespace entgeo
