#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "entgeo/spectral.hpp"

namespace entgeo {

/// Real number or +infinity. Infinity is a flag, never a large float.
class ExtReal {
 public:
  constexpr ExtReal() = default;
  constexpr explicit ExtReal(double v) : value_(v) {}
  static constexpr ExtReal infinity() {
    ExtReal r;
    r.inf_ = true;
    return r;
  }
  /// Entropy-like quantity: tiny negative rounding is clamped to zero.
  static ExtReal nonnegative(double v) {
    if (v < -1e-9) throw Error("negative divergence " + std::to_string(v));
    return ExtReal(std::max(0.0, v));
  }

  bool is_finite() const { return !inf_; }
  bool is_infinite() const { return inf_; }
  /// Finite value; throws for infinity.
  double value() const {
    if (inf_) throw DomainError("value() of infinite ExtReal");
    return value_;
  }
  /// IEEE view, +inf for the infinite marker.
  double as_double() const { return inf_ ? std::numeric_limits<double>::infinity() : value_; }

  std::string to_string() const { return inf_ ? "inf" : std::to_string(value_); }

  friend ExtReal operator+(ExtReal a, ExtReal b) {
    if (a.inf_ || b.inf_) return infinity();
    return ExtReal(a.value_ + b.value_);
  }
  friend ExtReal operator*(double s, ExtReal a) {
    if (a.inf_) {
      if (s < 0) throw DomainError("negative multiple of infinity");
      return s == 0.0 ? ExtReal(0.0) : infinity();
    }
    return ExtReal(s * a.value_);
  }
  friend bool operator==(ExtReal a, ExtReal b) { return a.inf_ == b.inf_ && (a.inf_ || a.value_ == b.value_); }
  friend bool operator<(ExtReal a, ExtReal b) {
    if (a.inf_) return false;
    if (b.inf_) return true;
    return a.value_ < b.value_;
  }
  friend bool operator<=(ExtReal a, ExtReal b) { return a < b || a == b; }
  friend bool operator>(ExtReal a, ExtReal b) { return b < a; }
  friend bool operator>=(ExtReal a, ExtReal b) { return b <= a; }

 private:
  double value_ = 0.0;
  bool inf_ = false;
};

/// Support leak above which s(rho) is not dominated by s(sigma).
inline constexpr double kSupportLeakTol = 1e-6;

/// Eigenvalues of sigma below this fraction of its scale count as kernel in
/// S(rho, sigma). Much smaller than kZeroTol: Gibbs states carry genuine tiny
/// eigenvalues, and only rounding noise (about 1e-16) should be discarded.
inline constexpr double kKernelTol = 1e-14;

inline double von_neumann_entropy(const State& rho) {
  const auto es = eigensystem(rho.elem());
  const double z = kZeroTol * es.scale;
  double s = 0.0;
  for (const auto& b : es.blocks)
    for (Eigen::Index j = 0; j < b.values.size(); ++j) {
      const double r = b.values(j);
      if (r > z) s -= r * std::log(r);
    }
  return std::max(0.0, s);
}

/// S(rho, sigma) = tr rho (log rho - log sigma), +inf unless s(rho) <= s(sigma).
inline ExtReal relative_entropy(const State& rho, const State& sigma) {
  require_same(rho.algebra(), sigma.algebra(), "relative_entropy");
  const auto er = eigensystem(rho.elem());
  const auto es = eigensystem(sigma.elem());
  const double zr = kZeroTol * er.scale, zs = kKernelTol * es.scale;

  double s = 0.0;
  for (std::size_t b = 0; b < er.blocks.size(); ++b) {
    const auto& r = er.blocks[b];
    const auto& q = es.blocks[b];
    // Overlap of the supports: columns of r.vectors with r > zr against q's kernel.
    std::vector<Eigen::Index> supp_r, supp_q, ker_q;
    for (Eigen::Index j = 0; j < r.values.size(); ++j)
      if (r.values(j) > zr) supp_r.push_back(j);
    for (Eigen::Index j = 0; j < q.values.size(); ++j) (q.values(j) > zs ? supp_q : ker_q).push_back(j);
    if (supp_r.empty()) continue;
    if (!ker_q.empty()) {
      Eigen::MatrixXcd overlap(static_cast<Eigen::Index>(ker_q.size()), static_cast<Eigen::Index>(supp_r.size()));
      for (std::size_t i = 0; i < ker_q.size(); ++i)
        for (std::size_t j = 0; j < supp_r.size(); ++j)
          overlap(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
              q.vectors.col(ker_q[i]).dot(r.vectors.col(supp_r[j]));
      const double leak = Eigen::JacobiSVD<Eigen::MatrixXcd>(overlap).singularValues()(0);
      if (leak > kSupportLeakTol) return ExtReal::infinity();
    }
    for (Eigen::Index j : supp_r) s += r.values(j) * std::log(r.values(j));
    const Eigen::MatrixXcd& rb = rho.elem().block(b);
    for (Eigen::Index j : supp_q) {
      const double w = q.vectors.col(j).dot(rb * q.vectors.col(j)).real();
      s -= std::log(q.values(j)) * w;
    }
  }
  return ExtReal::nonnegative(s);
}

enum class Divergence { I, rI };

inline const char* to_string(Divergence w) { return w == Divergence::I ? "I" : "rI"; }

/// S^rI(rho, sigma) = S(rho, sigma); S^I(rho, sigma) = S(sigma, rho).
inline ExtReal omega_divergence(const State& rho, const State& sigma, Divergence w) {
  return w == Divergence::rI ? relative_entropy(rho, sigma) : relative_entropy(sigma, rho);
}

inline ExtReal divergence_to_set(const State& rho, const std::vector<State>& set, Divergence w) {
  if (set.empty()) throw DomainError("divergence_to_set: empty set");
  ExtReal best = ExtReal::infinity();
  for (const auto& tau : set) best = std::min(best, omega_divergence(rho, tau, w));
  return best;
}

/// 2 S(rho, sigma) - ||rho - sigma||_1^2, nonnegative by Pinsker's inequality.
inline ExtReal pinsker_slack(const State& rho, const State& sigma) {
  const ExtReal s = relative_entropy(rho, sigma);
  if (s.is_infinite()) return s;
  const double d = trace_distance(rho.elem(), sigma.elem());
  return ExtReal(2.0 * s.value() - d * d);
}

}  // namespace entgeo
