// Algebra, spectral calculus, entropies and the exponential family chart.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "entgeo/entgeo.hpp"
#include "entgeo/verify/oracles.hpp"

namespace {

using namespace entgeo;

const AlgebraSpec kQubit({2});
const AlgebraSpec kC2({1, 1});

HermElem qubit(const Eigen::MatrixXcd& m) { return HermElem(kQubit, {m}); }

double dist(const HermElem& a, const HermElem& b) { return norm(a - b, NormKind::two); }

// ---------------------------------------------------------------------------
// algebra

TEST(Algebra, InnerProductExamples) {
  EXPECT_NEAR(hs_inner(HermElem::identity(kQubit), HermElem::identity(kQubit)), 2.0, 1e-15);
  EXPECT_NEAR(hs_inner(qubit(pauli::x()), qubit(pauli::y())), 0.0, 1e-15);
  const HermElem a = families::qubit_plus(pauli::z(), 1.0);
  EXPECT_NEAR(hs_inner(a, a), 3.0, 1e-15);
  EXPECT_THROW(hs_inner(a, HermElem::identity(kQubit)), AlgebraMismatch);
}

TEST(Algebra, Norms) {
  const HermElem z = qubit(pauli::z());
  EXPECT_NEAR(norm(z, NormKind::trace), 2.0, 1e-14);
  EXPECT_NEAR(norm(z, NormKind::spectral), 1.0, 1e-14);
  EXPECT_NEAR(norm(HermElem::diagonal(kC2, {3, -4}), NormKind::two), 5.0, 1e-14);

  std::mt19937_64 rng(3);
  const AlgebraSpec alg({3, 1, 2});
  for (int i = 0; i < 50; ++i) {
    const HermElem a = random_hermitian(alg, rng), b = random_hermitian(alg, rng);
    EXPECT_LE(norm(a, NormKind::spectral), norm(a, NormKind::two) + 1e-12);
    EXPECT_LE(norm(a, NormKind::two), norm(a, NormKind::trace) + 1e-12);
    EXPECT_LE(std::abs(hs_inner(a, b)), norm(a) * norm(b) + 1e-12);
  }
}

TEST(Algebra, EmbedExamples) {
  const AlgebraSpec src({1, 1});
  const HermElem xy = HermElem::diagonal(src, {2.0, 5.0});
  EXPECT_LT(dist(embed({{1, 1}, 0}, xy), xy), 1e-15);

  const HermElem e = embed({{1, 2}, 0}, xy);
  ASSERT_EQ(e.algebra().dim(), 3);
  EXPECT_LT((e.dense() - HermElem::diagonal(AlgebraSpec({1, 1, 1}), {2, 5, 5}).dense()).norm(), 1e-15);

  std::mt19937_64 rng(5);
  const AlgebraSpec alg({2, 1});
  const EmbeddingSpec phi{{2, 3}, 1};
  for (int i = 0; i < 10; ++i) {
    const HermElem b = random_hermitian(alg, rng), c = random_hermitian(alg, rng);
    const auto lhs = embed(phi, b).product(embed(phi, c));
    const auto rhs = embed(phi, c).product(embed(phi, b));
    // Products agree block by block with the embedded product.
    const auto bc = b.product(c);
    const auto cb = c.product(b);
    std::vector<Eigen::MatrixXcd> sym;
    for (std::size_t k = 0; k < bc.size(); ++k) sym.push_back(0.5 * (bc[k] + cb[k]));
    const HermElem jordan(alg, sym);
    std::vector<Eigen::MatrixXcd> emb;
    for (std::size_t k = 0; k < lhs.size(); ++k) emb.push_back(0.5 * (lhs[k] + rhs[k]));
    EXPECT_LT(dist(HermElem(embed(phi, jordan).algebra(), emb), embed(phi, jordan)), 1e-12);
    EXPECT_NEAR(norm(embed(phi, b), NormKind::spectral), norm(b, NormKind::spectral), 1e-12);
    std::vector<Eigen::MatrixXcd> scaled;
    for (std::size_t k = 0; k < alg.num_blocks(); ++k) scaled.push_back(phi.multiplicities[k] * b.block(k));
    EXPECT_LT(dist(embed_adjoint(phi, embed(phi, b)), HermElem(alg, scaled)), 1e-12);
  }
}

TEST(Algebra, EmbedAdjointUniform) {
  for (int n : {3, 5}) {
    const EmbeddingSpec phi{{1, n - 1}, 0};
    const AlgebraSpec target = phi.target_algebra(kC2);
    const HermElem f = HermElem::identity(target) / static_cast<double>(n);
    const HermElem pulled = embed_adjoint(phi, f);
    EXPECT_LT(dist(pulled, HermElem::diagonal(kC2, {1.0 / n, (n - 1.0) / n})), 1e-15);
    EXPECT_NEAR(pulled.trace(), 1.0, 1e-15);
  }
  const EmbeddingSpec id{{1, 1}, 0};
  const HermElem a = HermElem::diagonal(kC2, {0.3, 0.7});
  EXPECT_LT(dist(embed_adjoint(id, a), a), 1e-15);

  const AlgebraSpec ccc({1, 1, 1});
  EXPECT_THROW(embed_adjoint({{1, 2}, 0}, HermElem::diagonal(ccc, {0.2, 0.3, 0.5})), DomainError);
}

TEST(Algebra, ShiftFamily) {
  const ExpFamilySpec spec = ExpFamilySpec::linear(kC2, {HermElem::diagonal(kC2, {1, -1})});
  const ExpFamilySpec same = shift_family({{1, 1}, 0}, spec);
  EXPECT_LT(dist(same.theta0(), spec.theta0()), 1e-15);

  const ExpFamilySpec shifted = shift_family({{1, 2}, 0}, spec);
  EXPECT_LT(dist(shifted.theta0(), HermElem::diagonal(AlgebraSpec({1, 1, 1}), {0, -std::log(2.0), -std::log(2.0)})),
            1e-15);
  // States of the shifted family pull back to states of the original.
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 10; ++i) {
    Eigen::VectorXd lam(1);
    lam << 2.0 * nd(rng);
    const State up = gibbs_state(shifted.parameter(lam));
    const HermElem back = embed_adjoint({{1, 2}, 0}, up.elem());
    EXPECT_LT(dist(back, gibbs_state(spec.parameter(lam)).elem()), 1e-12);
  }
}

TEST(Algebra, RandomStates) {
  const AlgebraSpec alg = families::qubit_plus_bit();
  EXPECT_EQ(dist(random_state(alg, 9).elem(), random_state(alg, 9).elem()), 0.0);
  EXPECT_GT(eigenvalues(random_state(alg, 9).elem()).minCoeff(), 0.0);
  const State pure = random_state(alg, 9, std::vector<int>{1, 0});
  EXPECT_NEAR(norm(pure.elem(), NormKind::spectral), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(pure.elem().block(1)(0, 0)), 0.0, 0.0);
  EXPECT_THROW(random_state(alg, 9, std::vector<int>{3, 0}), DomainError);
}

// ---------------------------------------------------------------------------
// spectral

TEST(Spectral, EigExamples) {
  const SpectralForm z = eig(qubit(pauli::z()));
  ASSERT_EQ(z.values.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    const double s = z.values[i];
    EXPECT_NEAR(std::abs(s), 1.0, 1e-14);
    const HermElem expect = HermElem::diagonal(kQubit, s > 0 ? std::vector<double>{1, 0} : std::vector<double>{0, 1});
    EXPECT_LT(dist(z.projections[i].elem(), expect), 1e-14);
  }
  const SpectralForm one = eig(HermElem::identity(kQubit));
  ASSERT_EQ(one.values.size(), 1u);
  EXPECT_TRUE(one.projections[0].is_identity());

  const SpectralForm y = eig(families::qubit_plus(pauli::y(), 1.0));
  ASSERT_EQ(y.values.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    const double s = y.values[i];
    const HermElem expect = s > 0 ? families::qubit_plus(0.5 * (pauli::one() + pauli::y()), 1.0)
                                  : families::qubit_plus(0.5 * (pauli::one() - pauli::y()), 0.0);
    EXPECT_LT(dist(y.projections[i].elem(), expect), 1e-12);
  }

  std::mt19937_64 rng(2);
  const AlgebraSpec alg({3, 2, 1});
  for (int i = 0; i < 20; ++i) {
    const HermElem a = random_hermitian(alg, rng);
    EXPECT_LE(dist(eig(a).reconstruct(), a), 1e-8 * std::max(1.0, norm(a)));
    EXPECT_LT(dist(func_calc([](double x) { return x; }, a), a), 1e-12);
  }
}

TEST(Spectral, Degeneracy) {
  // Eigenvalues within the cluster tolerance merge into one spectral value.
  const HermElem a = HermElem::diagonal(AlgebraSpec({3}), {1.0, 1.0 + 1e-12, -2.0});
  const SpectralForm f = eig(a);
  ASSERT_EQ(f.values.size(), 2u);
  EXPECT_EQ(max_projection(a).projection.rank(), 2);
}

TEST(Spectral, FunctionalCalculus) {
  const HermElem p10 = HermElem::diagonal(kC2, {1, 0});
  const auto log = [](double x) { return std::log(x); };
  const auto exp = [](double x) { return std::exp(x); };
  EXPECT_LT(norm(func_calc(log, p10, support_projection(p10))), 1e-15);
  EXPECT_THROW(func_calc(log, HermElem::diagonal(kC2, {1, 0.5}), support_projection(p10)), DomainError);
  EXPECT_LT(dist(func_calc(exp, HermElem::zero(kQubit)), HermElem::identity(kQubit)), 1e-15);
  EXPECT_LT(dist(func_calc(exp, qubit(pauli::z())), qubit(Eigen::Vector2cd(std::exp(1.0), std::exp(-1.0)).asDiagonal())),
            1e-14);
}

TEST(Spectral, SupportAndKernel) {
  const HermElem p10 = HermElem::diagonal(kC2, {1, 0});
  EXPECT_LT(dist(support_projection(p10).elem(), p10), 1e-15);
  EXPECT_TRUE(support_projection(HermElem::identity(kQubit)).is_identity());
  const HermElem plus = qubit(0.5 * (pauli::one() + pauli::x()));
  EXPECT_LT(dist(support_projection(plus).elem(), plus), 1e-12);
  EXPECT_TRUE(kernel_projection(HermElem::identity(kQubit)).is_zero());
  EXPECT_LT(dist(kernel_projection(p10).elem(), HermElem::diagonal(kC2, {0, 1})), 1e-15);
  EXPECT_TRUE(kernel_projection(qubit(pauli::z())).is_zero());

  // s(a) is below every projection p with pap = a.
  std::mt19937_64 rng(8);
  const AlgebraSpec alg({3, 2});
  for (int i = 0; i < 10; ++i) {
    const State r = random_state(alg, rng, std::vector<int>{1, 1});
    const State big = random_state(alg, rng, std::vector<int>{1, 1});
    const Projection p = support_projection(r.elem() + big.elem());
    EXPECT_TRUE(projection_leq(support_projection(r.elem()), p));
  }
}

TEST(Spectral, MaxProjection) {
  const MaxProjection z = max_projection(qubit(pauli::z()));
  EXPECT_NEAR(z.value, 1.0, 1e-14);
  EXPECT_LT(dist(z.projection.elem(), qubit(Eigen::Vector2cd(1, 0).asDiagonal())), 1e-14);
  const MaxProjection zero = max_projection(HermElem::zero(kQubit));
  EXPECT_EQ(zero.value, 0.0);
  EXPECT_TRUE(zero.projection.is_identity());
  const MaxProjection y = max_projection(families::qubit_plus(pauli::y(), 1.0));
  EXPECT_NEAR(y.value, 1.0, 1e-14);
  EXPECT_LT(dist(y.projection.elem(), families::qubit_plus(0.5 * (pauli::one() + pauli::y()), 1.0)), 1e-12);
}

TEST(Spectral, Compression) {
  std::mt19937_64 rng(4);
  const AlgebraSpec alg({3, 2});
  const HermElem a = random_hermitian(alg, rng);
  const Compression id = Compression::identity(alg);
  EXPECT_LT(dist(id.apply(a), a), 1e-14);

  const Compression c(support_projection(HermElem::diagonal(kQubit, {1, 0})));
  const HermElem z = c.apply(qubit(pauli::z()));
  ASSERT_EQ(z.algebra().dim(), 1);
  EXPECT_NEAR(z.block(0)(0, 0).real(), 1.0, 1e-15);

  const Projection p = support_projection(random_state(alg, rng, std::vector<int>{2, 1}).elem());
  const Compression cp(p);
  const HermElem pap = a.sandwich(p.elem());
  EXPECT_LT(dist(cp.lift(cp.apply(pap)), pap), 1e-12);
  EXPECT_LT(dist(cp.lift(cp.apply(a)), pap), 1e-12);
  EXPECT_THROW(Compression(Projection::zero(alg)), DomainError);

  // Spectral values of the compression are the nonzero-subspace values of pap.
  const Eigen::VectorXd inner = eigenvalues(cp.apply(pap));
  EXPECT_EQ(inner.size(), 3);
  const Eigen::MatrixXcd pap_dense = p.elem().dense() * a.dense() * p.elem().dense();
  const Eigen::VectorXd dense = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(pap_dense).eigenvalues();
  int matched = 0;
  for (Eigen::Index i = 0; i < inner.size(); ++i)
    for (Eigen::Index j = 0; j < dense.size(); ++j)
      if (std::abs(inner(i) - dense(j)) < 1e-10) {
        ++matched;
        break;
      }
  EXPECT_EQ(matched, 3);
}

TEST(Spectral, Order) {
  const State r = random_state(families::qubit_plus_bit(), 1);
  EXPECT_TRUE(ordered_leq(HermElem::zero(r.elem().algebra()), r.elem()));
  EXPECT_TRUE(ordered_leq(HermElem::diagonal(kC2, {1, 0}), HermElem::identity(kC2)));
  EXPECT_FALSE(ordered_leq(HermElem::identity(kC2), HermElem::diagonal(kC2, {1, 0})));

  std::mt19937_64 rng(6);
  const AlgebraSpec alg({2, 2});
  for (int i = 0; i < 30; ++i) {
    const State a = random_state(alg, rng, std::vector<int>{1, i % 3 == 0 ? 0 : 1});
    const State b = random_state(alg, rng, std::vector<int>{i % 2 ? 2 : 1, 1});
    const bool leq = projection_leq(support_projection(a.elem()), support_projection(b.elem()));
    EXPECT_EQ(leq, relative_entropy(a, b).is_finite());
  }
}

TEST(Spectral, Weyl) {
  std::mt19937_64 rng(10);
  const AlgebraSpec alg({3, 2});
  const HermElem a = random_hermitian(alg, rng);
  EXPECT_NEAR(weyl_gap(a, a), 0.0, 1e-14);
  EXPECT_NEAR(weyl_gap(a, a.shifted(0.25)), 0.25, 1e-12);
  for (int i = 0; i < 30; ++i) {
    const HermElem b = random_hermitian(alg, rng), c = random_hermitian(alg, rng);
    EXPECT_LE(weyl_gap(b, c), norm(b - c, NormKind::spectral) + 1e-12);
  }
}

// ---------------------------------------------------------------------------
// entropy

TEST(Entropy, VonNeumann) {
  EXPECT_NEAR(von_neumann_entropy(State(HermElem::diagonal(kC2, {1, 0}))), 0.0, 1e-15);
  EXPECT_NEAR(von_neumann_entropy(State::maximally_mixed(AlgebraSpec({2, 3}))), std::log(5.0), 1e-14);
  EXPECT_NEAR(von_neumann_entropy(State(HermElem::diagonal(kC2, {0.25, 0.75}))),
              -0.25 * std::log(0.25) - 0.75 * std::log(0.75), 1e-15);
}

TEST(Entropy, RelativeEntropyExamples) {
  const State r = random_state(families::qubit_plus_bit(), 12);
  EXPECT_EQ(relative_entropy(r, r), ExtReal(0.0));
  EXPECT_TRUE(relative_entropy(State(HermElem::diagonal(kC2, {0.5, 0.5})), State(HermElem::diagonal(kC2, {1, 0})))
                  .is_infinite());

  const auto bloch = [](double a) {
    return State(qubit(0.5 * (pauli::one() + std::cos(a) * pauli::x() + std::sin(a) * pauli::y())));
  };
  const State plus = bloch(0.0);
  EXPECT_TRUE(relative_entropy(plus, bloch(M_PI / 2)).is_infinite());
  EXPECT_NEAR(relative_entropy(plus, bloch(0.0)).value(), 0.0, 1e-12);
  EXPECT_NEAR(relative_entropy(plus, bloch(2.0 * M_PI)).value(), 0.0, 1e-10);
}

TEST(Entropy, DivergencesAndPinsker) {
  const State p10(HermElem::diagonal(kC2, {1, 0}));
  const State half(HermElem::diagonal(kC2, {0.5, 0.5}));
  EXPECT_TRUE(omega_divergence(p10, half, Divergence::I).is_infinite());
  EXPECT_NEAR(omega_divergence(p10, half, Divergence::rI).value(), std::log(2.0), 1e-15);
  EXPECT_NEAR(pinsker_slack(p10, half).value(), 2.0 * std::log(2.0) - 1.0, 1e-14);
  EXPECT_EQ(pinsker_slack(half, half), ExtReal(0.0));

  EXPECT_EQ(divergence_to_set(p10, {half, p10}, Divergence::rI), ExtReal(0.0));
  EXPECT_TRUE(divergence_to_set(half, {p10, State(HermElem::diagonal(kC2, {0, 1}))}, Divergence::rI).is_infinite());
  EXPECT_EQ(divergence_to_set(p10, {half}, Divergence::rI), relative_entropy(p10, half));
  EXPECT_THROW(divergence_to_set(p10, {}, Divergence::rI), DomainError);

  std::mt19937_64 rng(13);
  const AlgebraSpec alg({2, 2, 1});
  for (int i = 0; i < 50; ++i) {
    const State a = random_state(alg, rng), b = random_state(alg, rng);
    EXPECT_EQ(omega_divergence(a, b, Divergence::I), omega_divergence(b, a, Divergence::rI));
    EXPECT_GE(pinsker_slack(a, b).value(), -1e-8);
  }
}

TEST(Entropy, Invariances) {
  std::mt19937_64 rng(14);
  const AlgebraSpec alg({3});
  for (int i = 0; i < 10; ++i) {
    const State a = random_state(alg, rng), b = random_state(alg, rng);
    const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(detail::gaussian_matrix(rng, 3, 3));
    const Eigen::MatrixXcd u = qr.householderQ();
    const State ua(HermElem(alg, {u * a.elem().block(0) * u.adjoint()}));
    const State ub(HermElem(alg, {u * b.elem().block(0) * u.adjoint()}));
    EXPECT_NEAR(relative_entropy(ua, ub).value(), relative_entropy(a, b).value(), 1e-10);

    // Joint convexity.
    const State c = random_state(alg, rng), d = random_state(alg, rng);
    const double l = 0.3;
    const State mix1(l * a.elem() + (1 - l) * c.elem()), mix2(l * b.elem() + (1 - l) * d.elem());
    EXPECT_LE(relative_entropy(mix1, mix2).value(),
              l * relative_entropy(a, b).value() + (1 - l) * relative_entropy(c, d).value() + 1e-12);
  }
}

// ---------------------------------------------------------------------------
// expfam

TEST(ExpFam, GibbsAndFreeEnergy) {
  const AlgebraSpec alg({2, 1});
  EXPECT_LT(dist(gibbs_state(HermElem::zero(alg)).elem(), State::maximally_mixed(alg).elem()), 1e-15);
  const double e = std::exp(1.0);
  EXPECT_LT(dist(gibbs_state(HermElem::diagonal(kC2, {1, 0})).elem(), HermElem::diagonal(kC2, {e / (e + 1), 1 / (e + 1)})),
            1e-15);
  EXPECT_NEAR(free_energy(HermElem::zero(alg)), std::log(3.0), 1e-15);
  EXPECT_NEAR(free_energy(HermElem::diagonal(kC2, {1, 0})), std::log(e + 1), 1e-15);

  std::mt19937_64 rng(15);
  for (int i = 0; i < 20; ++i) {
    const HermElem t = random_hermitian(alg, rng, 3.0);
    EXPECT_LT(dist(gibbs_state(t.shifted(4.5)).elem(), gibbs_state(t).elem()), 1e-14);
    EXPECT_NEAR(free_energy(t.shifted(4.5)), free_energy(t) + 4.5, 1e-12);
    EXPECT_NEAR(free_energy(t), oracle::dense_free_energy(t), 1e-12);
  }
  // No overflow at huge parameters.
  EXPECT_NEAR(free_energy(HermElem::diagonal(kC2, {2000, 0})), 2000.0, 1e-12);
}

TEST(ExpFam, Derivatives) {
  const AlgebraSpec alg({2, 1});
  const HermElem u0 = families::qubit_plus(pauli::z(), 5.0);
  EXPECT_NEAR(dF(HermElem::zero(alg), u0), u0.trace() / 3.0, 1e-15);

  std::mt19937_64 rng(16);
  for (int i = 0; i < 20; ++i) {
    const HermElem t = random_hermitian(alg, rng), u = random_hermitian(alg, rng), v = random_hermitian(alg, rng);
    EXPECT_NEAR(dF(t, HermElem::identity(alg)), 1.0, 1e-14);
    EXPECT_NEAR(bkm(t, HermElem::identity(alg), v), 0.0, 1e-13);
    const double h = 1e-5;
    const double fd = (free_energy(t + h * u) - free_energy(t - h * u)) / (2 * h);
    EXPECT_NEAR(dF(t, u), fd, 1e-6 * std::max(1.0, std::abs(fd)));
    const double k = 1e-3;
    const double fd2 = (free_energy(t + k * u + k * v) - free_energy(t + k * u - k * v) - free_energy(t - k * u + k * v) +
                        free_energy(t - k * u - k * v)) /
                       (4 * k * k);
    EXPECT_NEAR(bkm(t, u, v), fd2, 1e-5);
    EXPECT_NEAR(bkm(t, u, v), bkm(t, v, u), 1e-10);
  }
  const HermElem z = HermElem::diagonal(kC2, {1, -1});
  EXPECT_NEAR(bkm(HermElem::zero(kC2), z, z), 1.0, 1e-15);
}

TEST(ExpFam, MeanValues) {
  const AlgebraSpec alg({2, 1});
  const std::vector<HermElem> u{families::qubit_plus(pauli::x(), 2.0), families::qubit_plus(pauli::z(), -1.0)};
  const Eigen::VectorXd m = mean_value(State::maximally_mixed(alg).elem(), u);
  EXPECT_NEAR(m(0), 2.0 / 3, 1e-15);
  EXPECT_NEAR(m(1), -1.0 / 3, 1e-15);

  const ExpFamilySpec st = families::staffelberg();
  const Eigen::VectorXd ms = mean_value(State(families::qubit_plus(0.5 * pauli::one(), 0.0)), st);
  EXPECT_NEAR(ms.norm(), 0.0, 1e-15);
  // Adding something orthogonal to U leaves the mean values alone.
  const HermElem orth = families::qubit_plus(pauli::z(), 0.0);
  EXPECT_LT((mean_value(orth * 0.3 + State::maximally_mixed(alg).elem(), st.directions()) -
             mean_value(State::maximally_mixed(alg).elem(), st.directions()))
                .norm(),
            1e-15);
}

TEST(ExpFam, MeanChart) {
  const ExpFamilySpec st = families::staffelberg();
  const AlgebraSpec alg = st.algebra();
  const Eigen::VectorXd centre = mean_value(State::maximally_mixed(alg), st);
  const auto rep0 = invert_mean_chart(ExpFamilySpec(HermElem::zero(alg), st.directions()), centre);
  EXPECT_LT(trace_distance(rep0.state.elem(), State::maximally_mixed(alg).elem()), 1e-10);

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    Eigen::VectorXd lam(2);
    lam << 2.0 * ud(rng), 2.0 * ud(rng);
    const State r = gibbs_state(st.parameter(lam));
    const auto rep = invert_mean_chart(st, mean_value(r, st));
    ASSERT_FALSE(rep.diverged);
    EXPECT_LT(trace_distance(rep.state.elem(), r.elem()), 1e-8);
  }

  // On the circle the chart diverges and the escape direction exposes the limit.
  Eigen::VectorXd xi(2);
  xi << std::cos(0.7), std::sin(0.7);
  const auto rep = invert_mean_chart(st, xi);
  EXPECT_TRUE(rep.diverged);
  ASSERT_TRUE(rep.escape_direction.has_value());
  const FaceResult limit = face_of_mean_value(st, xi);
  const HermElem pure = families::qubit_plus(0.5 * (pauli::one() + std::cos(0.7) * pauli::x() + std::sin(0.7) * pauli::y()), 0.0);
  EXPECT_LT(dist(limit.face.elem(), pure), 1e-7);
  EXPECT_TRUE(projection_leq(support_projection(limit.state.elem()), max_projection(*rep.escape_direction).projection, 1e-6));

  xi << 1.2, 0.0;
  EXPECT_THROW(invert_mean_chart(st, xi), OutsideConvexSupport);
}

TEST(ExpFam, GeodesicLimits) {
  const ExpFamilySpec st = families::staffelberg();
  const AlgebraSpec alg = st.algebra();
  const State r = random_state(alg, 18);
  EXPECT_LT(dist(e_geodesic_limit(r.elem(), HermElem::zero(alg)).state.elem(), gibbs_state(r.elem()).elem()), 1e-14);

  const HermElem u = families::qubit_plus(pauli::y(), 1.0);
  const GeodesicLimit g = e_geodesic_limit(HermElem::zero(alg), u);
  EXPECT_LT(dist(g.state.elem(), families::qubit_plus(0.25 * (pauli::one() + pauli::y()), 0.5)), 1e-14);

  std::mt19937_64 rng(19);
  for (int i = 0; i < 5; ++i) {
    const HermElem th = random_hermitian(alg, rng);
    const double t = 1e6;
    const double asym = free_energy(th + t * u) - t * max_projection(u).value;
    EXPECT_NEAR(asym, free_energy(g.compression.apply(th)), 1e-6);
  }

  EXPECT_LT(dist(exp_limit_nonpositive(r.elem(), HermElem::zero(alg)), func_calc([](double x) { return std::exp(x); }, r.elem())),
            1e-12);
  EXPECT_LT(dist(exp_limit_nonpositive(HermElem::zero(kC2), HermElem::diagonal(kC2, {0, -1})), HermElem::diagonal(kC2, {1, 0})),
            1e-15);
  EXPECT_THROW(exp_limit_nonpositive(HermElem::zero(kC2), HermElem::diagonal(kC2, {1, 0})), DomainError);
  {
    const HermElem th = random_hermitian(alg, rng);
    const Projection p = support_projection(random_state(alg, rng, std::vector<int>{1, 1}).elem());
    const HermElem neg = -p.complement().elem();
    // Off-diagonal parts of theta leave an O(1/t) tail; extrapolate it away.
    const auto at = [&](double t) { return func_calc([](double x) { return std::exp(x); }, th + t * neg); };
    const double t = 1e5;
    EXPECT_LT(dist(exp_limit_nonpositive(th, neg), 2.0 * at(2 * t) - at(t)), 1e-8);
  }

  const std::vector<double> ts{0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
  const auto d = monotone_geodesic_divergence(g.state, HermElem::zero(alg), u, ts);
  for (std::size_t i = 1; i < d.size(); ++i) EXPECT_LT(d[i], d[i - 1]);
  EXPECT_LT(d.back(), 1e-6);
  EXPECT_THROW(monotone_geodesic_divergence(State::maximally_mixed(alg), HermElem::zero(alg), u, ts), DomainError);
}

}  // namespace
