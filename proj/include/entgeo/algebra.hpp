#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "entgeo/detail/jacobi.hpp"
#include "entgeo/errors.hpp"

namespace entgeo {

using Complex = std::complex<double>;

/// Block structure of a direct sum of full matrix algebras Mat(k_1) + ... + Mat(k_N).
/// The identity of the algebra is the identity of C^n with n = sum k_i.
class AlgebraSpec {
 public:
  AlgebraSpec() = default;
  explicit AlgebraSpec(std::vector<int> blocks) : blocks_(std::move(blocks)) {
    if (blocks_.empty()) throw DomainError("algebra needs at least one block");
    for (int k : blocks_)
      if (k < 1) throw DomainError("block sizes must be positive");
  }
  AlgebraSpec(std::initializer_list<int> blocks) : AlgebraSpec(std::vector<int>(blocks)) {}

  const std::vector<int>& blocks() const { return blocks_; }
  std::size_t num_blocks() const { return blocks_.size(); }
  int block(std::size_t i) const { return blocks_[i]; }
  int dim() const { return std::accumulate(blocks_.begin(), blocks_.end(), 0); }
  /// Real dimension of the self-adjoint part, i.e. the complex dimension sum k_i^2.
  int real_dim() const {
    int d = 0;
    for (int k : blocks_) d += k * k;
    return d;
  }
  bool commutative() const {
    return std::all_of(blocks_.begin(), blocks_.end(), [](int k) { return k == 1; });
  }

  std::string to_string() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < blocks_.size(); ++i) os << (i ? "," : "") << blocks_[i];
    os << ')';
    return os.str();
  }

  friend bool operator==(const AlgebraSpec& a, const AlgebraSpec& b) { return a.blocks_ == b.blocks_; }

 private:
  std::vector<int> blocks_;
};

inline void require_same(const AlgebraSpec& a, const AlgebraSpec& b, const char* op) {
  if (!(a == b))
    throw AlgebraMismatch(std::string(op) + ": algebras " + a.to_string() + " and " + b.to_string() + " differ");
}

/// A self-adjoint element of an algebra, stored block by block.
class HermElem {
 public:
  HermElem() = default;

  /// Takes ownership of the blocks and symmetrizes them. Asymmetry above 1e-9
  /// (relative to the block norm) is reported through the warning handler.
  HermElem(AlgebraSpec alg, std::vector<Eigen::MatrixXcd> blocks)
      : alg_(std::move(alg)), blocks_(std::move(blocks)) {
    if (blocks_.size() != alg_.num_blocks())
      throw DomainError("element has " + std::to_string(blocks_.size()) + " blocks, algebra " +
                        alg_.to_string() + " expects " + std::to_string(alg_.num_blocks()));
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      auto& b = blocks_[i];
      if (b.rows() != alg_.block(i) || b.cols() != alg_.block(i))
        throw DomainError("block " + std::to_string(i) + " has wrong size for algebra " + alg_.to_string());
      const double asym = (b - b.adjoint()).norm();
      if (asym > 1e-9 * std::max(1.0, b.norm()))
        warn("non-Hermitian input symmetrized (asymmetry " + std::to_string(asym) + ")");
      b = (0.5 * (b + b.adjoint())).eval();
    }
  }

  static HermElem zero(const AlgebraSpec& alg) {
    std::vector<Eigen::MatrixXcd> b;
    for (int k : alg.blocks()) b.push_back(Eigen::MatrixXcd::Zero(k, k));
    return HermElem(alg, std::move(b), Trusted{});
  }
  static HermElem identity(const AlgebraSpec& alg) {
    std::vector<Eigen::MatrixXcd> b;
    for (int k : alg.blocks()) b.push_back(Eigen::MatrixXcd::Identity(k, k));
    return HermElem(alg, std::move(b), Trusted{});
  }
  /// Diagonal element with the given entries along C^n (block by block).
  static HermElem diagonal(const AlgebraSpec& alg, const std::vector<double>& d) {
    if (static_cast<int>(d.size()) != alg.dim()) throw DomainError("diagonal length does not match algebra dimension");
    std::vector<Eigen::MatrixXcd> b;
    std::size_t off = 0;
    for (int k : alg.blocks()) {
      Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(k, k);
      for (int j = 0; j < k; ++j) m(j, j) = d[off++];
      b.push_back(std::move(m));
    }
    return HermElem(alg, std::move(b), Trusted{});
  }
  /// Multiple of the identity of one block, zero elsewhere.
  static HermElem block_unit(const AlgebraSpec& alg, std::size_t i, double c = 1.0) {
    HermElem z = zero(alg);
    z.blocks_[i].diagonal().setConstant(c);
    return z;
  }

  const AlgebraSpec& algebra() const { return alg_; }
  const std::vector<Eigen::MatrixXcd>& blocks() const { return blocks_; }
  const Eigen::MatrixXcd& block(std::size_t i) const { return blocks_[i]; }
  std::size_t num_blocks() const { return blocks_.size(); }

  /// Block-diagonal n x n matrix.
  Eigen::MatrixXcd dense() const {
    const int n = alg_.dim();
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
    int off = 0;
    for (const auto& b : blocks_) {
      m.block(off, off, b.rows(), b.cols()) = b;
      off += static_cast<int>(b.rows());
    }
    return m;
  }

  double trace() const {
    double t = 0.0;
    for (const auto& b : blocks_) t += b.trace().real();
    return t;
  }

  HermElem& operator+=(const HermElem& o) {
    require_same(alg_, o.alg_, "operator+");
    for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i] += o.blocks_[i];
    return *this;
  }
  HermElem& operator-=(const HermElem& o) {
    require_same(alg_, o.alg_, "operator-");
    for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i] -= o.blocks_[i];
    return *this;
  }
  HermElem& operator*=(double s) {
    for (auto& b : blocks_) b *= s;
    return *this;
  }
  friend HermElem operator+(HermElem a, const HermElem& b) { return a += b; }
  friend HermElem operator-(HermElem a, const HermElem& b) { return a -= b; }
  friend HermElem operator*(HermElem a, double s) { return a *= s; }
  friend HermElem operator*(double s, HermElem a) { return a *= s; }
  friend HermElem operator/(HermElem a, double s) { return a *= 1.0 / s; }
  friend HermElem operator-(HermElem a) { return a *= -1.0; }

  /// a + c * 1
  HermElem shifted(double c) const {
    HermElem r = *this;
    for (auto& b : r.blocks_) b.diagonal().array() += c;
    return r;
  }

  /// The self-adjoint product x a x.
  HermElem sandwich(const HermElem& x) const {
    require_same(alg_, x.alg_, "sandwich");
    std::vector<Eigen::MatrixXcd> b;
    for (std::size_t i = 0; i < blocks_.size(); ++i) b.push_back(x.blocks_[i] * blocks_[i] * x.blocks_[i]);
    return HermElem(alg_, std::move(b), Trusted{});
  }

  /// Block products a*b; not self-adjoint in general, hence raw matrices.
  std::vector<Eigen::MatrixXcd> product(const HermElem& o) const {
    require_same(alg_, o.alg_, "product");
    std::vector<Eigen::MatrixXcd> out;
    for (std::size_t i = 0; i < blocks_.size(); ++i) out.push_back(blocks_[i] * o.blocks_[i]);
    return out;
  }

  /// Internal constructor for blocks known to be Hermitian up to rounding.
  struct Trusted {};
  HermElem(AlgebraSpec alg, std::vector<Eigen::MatrixXcd> blocks, Trusted)
      : alg_(std::move(alg)), blocks_(std::move(blocks)) {
    for (auto& b : blocks_) b = (0.5 * (b + b.adjoint())).eval();
  }

 private:
  AlgebraSpec alg_;
  std::vector<Eigen::MatrixXcd> blocks_;
};

/// Hilbert-Schmidt inner product tr(a b*).
inline double hs_inner(const HermElem& a, const HermElem& b) {
  require_same(a.algebra(), b.algebra(), "hs_inner");
  double s = 0.0;
  for (std::size_t i = 0; i < a.num_blocks(); ++i) s += (a.block(i).array() * b.block(i).conjugate().array()).sum().real();
  return s;
}

/// All eigenvalues of the element, ascending, merged over blocks.
inline Eigen::VectorXd eigenvalues(const HermElem& a) {
  std::vector<double> all;
  for (const auto& b : a.blocks()) {
    auto e = detail::jacobi_eigen(b);
    all.insert(all.end(), e.values.data(), e.values.data() + e.values.size());
  }
  std::sort(all.begin(), all.end());
  return Eigen::Map<Eigen::VectorXd>(all.data(), static_cast<Eigen::Index>(all.size()));
}

enum class NormKind { trace, two, spectral };

inline double norm(const HermElem& a, NormKind kind = NormKind::two) {
  if (kind == NormKind::two) {
    double s = 0.0;
    for (const auto& b : a.blocks()) s += b.squaredNorm();
    return std::sqrt(s);
  }
  const Eigen::VectorXd ev = eigenvalues(a);
  if (ev.size() == 0) return 0.0;
  if (kind == NormKind::trace) return ev.cwiseAbs().sum();
  return ev.cwiseAbs().maxCoeff();
}

inline double trace_distance(const HermElem& a, const HermElem& b) { return norm(a - b, NormKind::trace); }

/// A density matrix: unit trace and nonnegative spectrum.
class State {
 public:
  State() = default;
  explicit State(HermElem elem) : elem_(std::move(elem)) {
    const double tr = elem_.trace();
    if (std::abs(tr - 1.0) > 1e-10) throw DomainError("state trace is " + std::to_string(tr) + ", expected 1");
    const Eigen::VectorXd ev = eigenvalues(elem_);
    if (ev.size() && ev(0) < -1e-10)
      throw DomainError("state has negative eigenvalue " + std::to_string(ev(0)));
  }

  /// Rescales a positive semidefinite element to unit trace.
  static State normalized(HermElem elem) {
    const double tr = elem.trace();
    if (!(tr > 0.0)) throw DomainError("cannot normalize an element with nonpositive trace");
    return State(elem / tr);
  }

  /// Skips validation; for results that are states by construction.
  static State unchecked(HermElem elem) {
    State s;
    s.elem_ = std::move(elem);
    return s;
  }

  static State maximally_mixed(const AlgebraSpec& alg) {
    return State(HermElem::identity(alg) / static_cast<double>(alg.dim()));
  }

  const HermElem& elem() const { return elem_; }
  const AlgebraSpec& algebra() const { return elem_.algebra(); }
  operator const HermElem&() const { return elem_; }

 private:
  HermElem elem_;
};

// ---------------------------------------------------------------------------
// Representation change

/// Embedding b -> (+)_i (+)_{j<=m_i} b_i (+) 0_l of the canonical algebra into a
/// larger block algebra.
struct EmbeddingSpec {
  std::vector<int> multiplicities;
  int padding = 0;

  void check(const AlgebraSpec& source) const {
    if (multiplicities.size() != source.num_blocks())
      throw DomainError("embedding has " + std::to_string(multiplicities.size()) + " multiplicities, source algebra has " +
                        std::to_string(source.num_blocks()) + " blocks");
    for (int m : multiplicities)
      if (m < 1) throw DomainError("multiplicities must be positive");
    if (padding < 0) throw DomainError("padding must be nonnegative");
  }

  /// Block structure of the image algebra without the padding block.
  AlgebraSpec image_algebra(const AlgebraSpec& source) const {
    check(source);
    std::vector<int> b;
    for (std::size_t i = 0; i < source.num_blocks(); ++i)
      for (int j = 0; j < multiplicities[i]; ++j) b.push_back(source.block(i));
    return AlgebraSpec(b);
  }

  /// Block structure of the ambient algebra, including the padding block.
  AlgebraSpec target_algebra(const AlgebraSpec& source) const {
    AlgebraSpec img = image_algebra(source);
    if (padding == 0) return img;
    std::vector<int> b = img.blocks();
    b.push_back(padding);
    return AlgebraSpec(b);
  }

  /// Source algebra recovered from a target (or image) algebra.
  AlgebraSpec source_from(const AlgebraSpec& target) const {
    std::vector<int> b;
    std::size_t pos = 0;
    for (int m : multiplicities) {
      if (pos >= target.num_blocks()) throw AlgebraMismatch("algebra does not match embedding");
      b.push_back(target.block(pos));
      pos += static_cast<std::size_t>(m);
    }
    const std::size_t expect_img = pos, expect_tgt = pos + (padding > 0 ? 1 : 0);
    if (target.num_blocks() != expect_img && target.num_blocks() != expect_tgt)
      throw AlgebraMismatch("algebra " + target.to_string() + " does not match embedding");
    AlgebraSpec src(b);
    if (!(image_algebra(src) == AlgebraSpec(std::vector<int>(target.blocks().begin(), target.blocks().begin() + expect_img))))
      throw AlgebraMismatch("algebra " + target.to_string() + " does not match embedding");
    if (target.num_blocks() == expect_tgt && padding > 0 && target.block(expect_img) != padding)
      throw AlgebraMismatch("padding block size differs from embedding");
    return src;
  }
};

inline HermElem embed(const EmbeddingSpec& phi, const HermElem& b, bool with_padding = true) {
  const AlgebraSpec& src = b.algebra();
  phi.check(src);
  std::vector<Eigen::MatrixXcd> out;
  for (std::size_t i = 0; i < src.num_blocks(); ++i)
    for (int j = 0; j < phi.multiplicities[i]; ++j) out.push_back(b.block(i));
  if (with_padding && phi.padding > 0) out.push_back(Eigen::MatrixXcd::Zero(phi.padding, phi.padding));
  return HermElem(with_padding ? phi.target_algebra(src) : phi.image_algebra(src), std::move(out), HermElem::Trusted{});
}

/// Adjoint map (+)(+)F_i (+) 0 -> (+) m_i F_i. Accepts elements of the target
/// algebra (padding block ignored) or of the image algebra.
inline HermElem embed_adjoint(const EmbeddingSpec& phi, const HermElem& f, double tol = 1e-9) {
  const AlgebraSpec src = phi.source_from(f.algebra());
  std::vector<Eigen::MatrixXcd> out;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < src.num_blocks(); ++i) {
    const Eigen::MatrixXcd& first = f.block(pos);
    for (int j = 1; j < phi.multiplicities[i]; ++j) {
      const double dev = (f.block(pos + j) - first).norm();
      if (dev > tol * std::max(1.0, first.norm()))
        throw DomainError("element is not constant over the copies of block " + std::to_string(i));
    }
    out.push_back(static_cast<double>(phi.multiplicities[i]) * first);
    pos += static_cast<std::size_t>(phi.multiplicities[i]);
  }
  return HermElem(src, std::move(out), HermElem::Trusted{});
}

// ---------------------------------------------------------------------------
// Random elements

namespace detail {
inline Eigen::MatrixXcd gaussian_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXcd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      const double re = g(rng);
      const double im = g(rng);
      m(i, j) = Complex(re, im);
    }
  return m;
}
inline Eigen::MatrixXcd gaussian_hermitian(std::mt19937_64& rng, int k) {
  Eigen::MatrixXcd m = gaussian_matrix(rng, k, k);
  return 0.5 * (m + m.adjoint());
}
}  // namespace detail

/// Gaussian Hermitian element (GUE per block). Commutative blocks stay real.
inline HermElem random_hermitian(const AlgebraSpec& alg, std::mt19937_64& rng, double scale = 1.0) {
  std::vector<Eigen::MatrixXcd> b;
  for (int k : alg.blocks()) b.push_back(scale * detail::gaussian_hermitian(rng, k));
  return HermElem(alg, std::move(b), HermElem::Trusted{});
}

inline State random_state(const AlgebraSpec& alg, std::mt19937_64& rng,
                          const std::optional<std::vector<int>>& rank_profile = std::nullopt) {
  std::vector<int> ranks = rank_profile.value_or(alg.blocks());
  if (ranks.size() != alg.num_blocks()) throw DomainError("rank profile length differs from block count");
  std::vector<Eigen::MatrixXcd> b;
  bool any = false;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    const int k = alg.block(i);
    if (ranks[i] < 0 || ranks[i] > k)
      throw DomainError("requested rank " + std::to_string(ranks[i]) + " exceeds block size " + std::to_string(k));
    if (ranks[i] == 0) {
      b.push_back(Eigen::MatrixXcd::Zero(k, k));
      continue;
    }
    any = true;
    const Eigen::MatrixXcd g = detail::gaussian_matrix(rng, k, ranks[i]);
    b.push_back(g * g.adjoint());
  }
  if (!any) throw DomainError("rank profile is zero everywhere");
  HermElem e(alg, std::move(b), HermElem::Trusted{});
  return State(e / e.trace());
}

inline State random_state(const AlgebraSpec& alg, std::uint64_t seed,
                          const std::optional<std::vector<int>>& rank_profile = std::nullopt) {
  std::mt19937_64 rng(seed);
  return random_state(alg, rng, rank_profile);
}

}  // namespace entgeo
