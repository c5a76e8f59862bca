// Face lattices, projections onto the family closure, topology and input parsing.

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "entgeo/entgeo.hpp"
#include "entgeo/io.hpp"
#include "entgeo/verify/oracles.hpp"

namespace {

using namespace entgeo;

const AlgebraSpec kC2({1, 1});

double dist(const HermElem& a, const HermElem& b) { return norm(a - b, NormKind::two); }

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Indices of the diagonal entries a commutative projection keeps.
std::vector<int> diagonal_support(const Projection& p) {
  const Eigen::MatrixXcd d = p.elem().dense();
  std::vector<int> out;
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    if (d(i, i).real() > 0.5) out.push_back(static_cast<int>(i));
  return out;
}

// ---------------------------------------------------------------------------
// lattice

TEST(Lattice, ExposedProjections) {
  const ExpFamilySpec st = families::staffelberg();
  EXPECT_TRUE(exposed_projection(st, HermElem::zero(st.algebra())).is_identity());
  EXPECT_LT(dist(exposed_projection(st, st.directions()[1]).elem(),
                 families::qubit_plus(0.5 * (pauli::one() + pauli::y()), 1.0)),
            1e-12);
  EXPECT_LT(dist(exposed_projection(st, st.directions()[0]).elem(),
                 families::qubit_plus(0.5 * (pauli::one() + pauli::x()), 0.0)),
            1e-12);
  EXPECT_THROW(exposed_projection(st, families::qubit_plus(pauli::z(), 0.0)), DomainError);
}

TEST(Lattice, AccessSteps) {
  const ExpFamilySpec sw = families::swallow();
  const AlgebraSpec alg = sw.algebra();
  LatticeNode root{Projection::identity(alg), {}, true};
  const LatticeNode child = access_step(root, sw.directions()[0], sw);
  EXPECT_EQ(child.depth(), 1);
  EXPECT_TRUE(same_projection(child.projection, max_projection(sw.directions()[0]).projection));
  EXPECT_TRUE(validate_access_sequence(child));
  EXPECT_THROW(access_step(root, HermElem::identity(alg), sw), DomainError);

  // sigma_2 (+) 1 exposes the edge from (0, 1) to (1, 1). Inside it the first
  // direction compresses to diag(0, 1); its negative picks the qubit end, the
  // non-exposed point over (0, 1).
  const LatticeNode top = access_step(root, sw.directions()[1], sw);
  ASSERT_EQ(top.projection.rank(), 2);
  const Compression c(top.projection);
  const HermElem witness = -c.apply(sw.directions()[0]);
  const LatticeNode deep = access_step(top, witness, sw);
  EXPECT_EQ(deep.depth(), 2);
  EXPECT_EQ(deep.projection.rank(), 1);
  EXPECT_TRUE(validate_access_sequence(deep));
  EXPECT_FALSE(is_exposed(sw, deep.projection));
}

TEST(Lattice, TriangleMatchesPolytope) {
  const ExpFamilySpec tri = families::triangle();
  LatticeBudget b;
  b.max_depth = 2;
  const LatticeResult lat = enumerate_lattice(tri, b);
  std::set<std::vector<int>> found;
  for (const auto& n : lat.nodes) {
    EXPECT_TRUE(validate_access_sequence(n));
    found.insert(diagonal_support(n.projection));
  }
  const std::vector<Eigen::Vector2d> pts{{1, 0}, {0, 1}, {0, 0}};
  EXPECT_EQ(found, oracle::planar_faces(pts));
  EXPECT_EQ(found.size(), 8u);  // triangle, 3 edges, 3 vertices, empty face
}

TEST(Lattice, SwallowHasNonExposedNodes) {
  LatticeBudget b;
  b.max_depth = 3;
  const LatticeResult lat = enumerate_lattice(families::swallow(), b);
  int non_exposed = 0;
  for (const auto& n : lat.nodes) {
    EXPECT_TRUE(validate_access_sequence(n));
    if (!n.exposed) {
      ++non_exposed;
      EXPECT_GE(n.depth(), 2);
    }
  }
  EXPECT_GE(non_exposed, 2);
}

TEST(Lattice, StaffelbergAllExposed) {
  LatticeBudget b;
  b.max_depth = 3;
  b.grid_per_sphere = 32;
  const ExpFamilySpec st = families::staffelberg();
  const LatticeResult lat = enumerate_lattice(st, b);
  for (const auto& n : lat.nodes) {
    EXPECT_TRUE(n.exposed);
    EXPECT_TRUE(is_exposed(st, n.projection));
  }
}

TEST(Lattice, FaceOfMeanValue) {
  const ExpFamilySpec st = families::staffelberg();
  EXPECT_TRUE(face_of_mean_value(st, vec({0.1, -0.2})).face.is_identity());

  const ExpFamilySpec bit = ExpFamilySpec::linear(kC2, {HermElem::diagonal(kC2, {1, 0})});
  const FaceResult f = face_of_mean_value(bit, vec({1.0}));
  EXPECT_LT(dist(f.face.elem(), HermElem::diagonal(kC2, {1, 0})), 1e-12);
  EXPECT_EQ(f.access_sequence.size(), 1u);

  // The top of the Staffelberg disk is the face of the rank-2 projection.
  const FaceResult top = face_of_mean_value(st, vec({0.0, 1.0}));
  EXPECT_LT(dist(top.face.elem(), families::qubit_plus(0.5 * (pauli::one() + pauli::y()), 1.0)), 1e-7);
  EXPECT_THROW(face_of_mean_value(st, vec({0.0, 1.1})), OutsideConvexSupport);
}

// ---------------------------------------------------------------------------
// maxent

TEST(MaxEnt, SmallExamples) {
  const std::vector<HermElem> u{HermElem::diagonal(kC2, {1, 0})};
  const MaxEntResult half = max_entropy(kC2, u, vec({0.5}));
  EXPECT_NEAR(half.entropy, std::log(2.0), 1e-12);
  EXPECT_LT(dist(half.rho.elem(), HermElem::diagonal(kC2, {0.5, 0.5})), 1e-12);

  const MaxEntResult vertex = max_entropy(kC2, u, vec({1.0}));
  EXPECT_NEAR(vertex.entropy, 0.0, 1e-12);
  EXPECT_LT(dist(vertex.face.elem(), HermElem::diagonal(kC2, {1, 0})), 1e-12);

  const AlgebraSpec q({2});
  const MaxEntResult z = max_entropy(q, {HermElem(q, {pauli::z()})}, vec({0.0}));
  EXPECT_NEAR(z.entropy, std::log(2.0), 1e-12);
  EXPECT_LT(z.formula_residual, 1e-10);

  try {
    max_entropy(kC2, u, vec({1.5}));
    FAIL() << "expected OutsideConvexSupport";
  } catch (const OutsideConvexSupport& e) {
    EXPECT_GT(e.certificate().violation, 0.0);
    EXPECT_GT(e.certificate().coefficients(0), 0.0);
  }
}

TEST(MaxEnt, MatchesSimplexOracle) {
  const AlgebraSpec alg({1, 1, 1, 1});
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd a(2, 4);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 4; ++j) a(i, j) = nd(rng);
    Eigen::VectorXd p0(4);
    for (int j = 0; j < 4; ++j) p0(j) = 0.5 + std::abs(nd(rng));
    p0 /= p0.sum();
    const Eigen::VectorXd xi = a * p0;
    std::vector<HermElem> u;
    for (int i = 0; i < 2; ++i) u.push_back(HermElem::diagonal(alg, {a(i, 0), a(i, 1), a(i, 2), a(i, 3)}));
    const MaxEntResult r = max_entropy(alg, u, xi);
    const Eigen::VectorXd p = oracle::simplex_maxent(a, p0);
    EXPECT_NEAR(r.entropy, oracle::shannon(p), 1e-6);
    EXPECT_LT(r.residual, 1e-9);
  }
}

TEST(MaxEnt, DominatesFiber) {
  const ExpFamilySpec st = families::staffelberg();
  const AlgebraSpec alg = st.algebra();
  const Eigen::VectorXd xi = vec({0.2, 0.3});
  const MaxEntResult best = max_entropy(st, xi);
  std::mt19937_64 rng(22);
  int tried = 0;
  for (int i = 0; i < 300; ++i) {
    // Move a random state into the fiber over xi along U-orthogonal directions.
    const HermElem perp = random_hermitian(alg, rng, 0.2);
    Eigen::MatrixXd g(2, 2);
    Eigen::VectorXd rhs(2);
    const auto& u = st.directions();
    std::vector<HermElem> basis{u[0], u[1].shifted(-u[1].trace() / 3.0)};
    for (int a = 0; a < 2; ++a) {
      rhs(a) = hs_inner(perp, basis[a]);
      for (int b = 0; b < 2; ++b) g(a, b) = hs_inner(basis[a], basis[b]);
    }
    const Eigen::VectorXd c = g.ldlt().solve(rhs);
    HermElem shift = perp - c(0) * basis[0] - c(1) * basis[1];
    shift = shift.shifted(-shift.trace() / 3.0);
    const HermElem cand = best.rho.elem() + shift;
    if (eigenvalues(cand).minCoeff() < 0.0) continue;
    ++tried;
    const State s(cand);
    EXPECT_LT((mean_value(s, st) - xi).norm(), 1e-9);
    EXPECT_GE(best.entropy, von_neumann_entropy(s) - 1e-10);
  }
  EXPECT_GT(tried, 50);
}

TEST(MaxEnt, ProjectionBasics) {
  const ExpFamilySpec st = families::staffelberg();
  Eigen::VectorXd lam = vec({0.4, -0.7});
  const State member = gibbs_state(st.parameter(lam));
  const ProjectionResult self = rI_projection(st, member);
  EXPECT_LT(self.distance.value(), 1e-10);
  EXPECT_LT(trace_distance(self.pi.elem(), member.elem()), 1e-8);
  EXPECT_TRUE(in_rI_closure(st, member));

  // Same mean values, same projection.
  const State rho = random_state(st.algebra(), 23);
  const HermElem orth = families::qubit_plus(pauli::z(), 0.0) * 0.05;
  const State rho2(rho.elem() + orth * (eigenvalues(rho.elem()).minCoeff() / 0.06));
  EXPECT_LT(trace_distance(rI_projection(st, rho).pi.elem(), rI_projection(st, rho2).pi.elem()), 1e-8);
}

TEST(MaxEnt, StaffelbergProjectionIsMinimal) {
  const ExpFamilySpec st = families::staffelberg();
  const State rho(families::qubit_plus(0.5 * (pauli::one() + pauli::z()), 0.0));
  const ProjectionResult pr = rI_projection(st, rho);
  ASSERT_TRUE(pr.distance.is_finite());
  EXPECT_GT(pr.distance.value(), 0.0);
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> ud(-6.0, 6.0);
  for (int i = 0; i < 2000; ++i) {
    const State s = gibbs_state(st.parameter(vec({ud(rng), ud(rng)})));
    EXPECT_LE(pr.distance.value(), relative_entropy(rho, s).value() + 1e-10);
  }
  const PythagorasResult py = pythagoras_check(st, rho, gibbs_state(st.parameter(vec({1.0, 2.0}))));
  EXPECT_LT(py.gap, 1e-7);
}

TEST(MaxEnt, IndependenceDistance) {
  const ExpFamilySpec ind = families::two_bit_independence();
  const AlgebraSpec alg = ind.algebra();
  std::mt19937_64 rng(25);
  for (int i = 0; i < 5; ++i) {
    const State rho = random_state(alg, rng);
    const Eigen::MatrixXcd d = rho.elem().dense();
    const double p[4] = {d(0, 0).real(), d(1, 1).real(), d(2, 2).real(), d(3, 3).real()};
    const double a[2] = {p[0] + p[1], p[2] + p[3]}, b[2] = {p[0] + p[2], p[1] + p[3]};
    double mi = 0.0;
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y) mi += p[2 * x + y] * std::log(p[2 * x + y] / (a[x] * b[y]));
    EXPECT_NEAR(entropy_distance(ind, rho).value(), mi, 1e-9);

    // A larger family can only be closer.
    std::vector<HermElem> more = ind.directions();
    more.push_back(HermElem::diagonal(alg, {1, -1, -1, 1}));
    EXPECT_LE(entropy_distance(ExpFamilySpec::linear(alg, more), rho).value(), mi + 1e-10);
  }
}

TEST(MaxEnt, Pythagoras) {
  const ExpFamilySpec st = families::staffelberg();
  const AlgebraSpec alg = st.algebra();
  std::mt19937_64 rng(26);
  const GeodesicLimit lim = e_geodesic_limit(HermElem::zero(alg), st.directions()[1]);
  for (int i = 0; i < 5; ++i) {
    const State rho = random_state(alg, rng);
    const PythagorasResult on_limit = pythagoras_check(st, rho, lim.state);
    EXPECT_TRUE(on_limit.consistent);
    EXPECT_LT(on_limit.gap, 1e-7);

    const State pi = rI_projection(st, rho).pi;
    const PythagorasResult at_pi = pythagoras_check(st, rho, pi);
    EXPECT_LT(at_pi.pi_sigma.value(), 1e-10);
    EXPECT_LT(at_pi.gap, 1e-7);
  }
  EXPECT_THROW(pythagoras_check(st, random_state(alg, 1), random_state(alg, 2)), DomainError);

  const State s = random_state(alg, 27), r = random_state(alg, 28);
  EXPECT_NEAR(classic_pythagoras_check(r, s, s), 0.0, 1e-12);
  EXPECT_NEAR(classic_pythagoras_check(s, s, r), 0.0, 1e-12);
}

TEST(MaxEnt, LocalMaximizers) {
  const ExpFamilySpec ind = families::two_bit_independence();
  const AlgebraSpec alg = ind.algebra();
  const MaximizerCertificate member = maximizer_certificate(ind, State::maximally_mixed(alg));
  EXPECT_TRUE(member.cutoff_ok);
  EXPECT_NEAR(member.distance, 0.0, 1e-12);

  const State bell(HermElem::diagonal(alg, {0.5, 0, 0, 0.5}));
  const MaximizerCertificate c = maximizer_certificate(ind, bell);
  EXPECT_TRUE(c.rank_bound_ok);
  EXPECT_TRUE(c.cutoff_ok);
  EXPECT_NEAR(c.distance, std::log(2.0), 1e-9);

  const AscentResult a = ascend_entropy_distance(ind, 5);
  ASSERT_FALSE(a.trace.empty());
  EXPECT_NEAR(a.trace.back().distance, std::log(2.0), 1e-6);
  const AscentResult again = ascend_entropy_distance(ind, 5);
  ASSERT_EQ(again.trace.size(), a.trace.size());
  EXPECT_EQ(again.trace.back().distance, a.trace.back().distance);
}

// ---------------------------------------------------------------------------
// topology

TEST(Topology, CommutativeCounterexample) {
  const StateSequence seq{[](int i) { return State(HermElem::diagonal(kC2, {(i - 1.0) / i, 1.0 / i})); }, std::nullopt};
  const State rho(HermElem::diagonal(kC2, {1, 0}));
  EXPECT_EQ(omega_converges(seq, rho, Divergence::rI, 400).verdict, Verdict::converging);
  const ConvergenceReport i = omega_converges(seq, rho, Divergence::I, 400);
  EXPECT_EQ(i.verdict, Verdict::diverging);
  for (const auto& v : i.trace) EXPECT_TRUE(v.is_infinite());
  EXPECT_EQ(norm_converges(seq, rho, 400, 0.05).verdict, Verdict::converging);
  EXPECT_TRUE(implication_suite(seq, rho, 400).ok());

  const StateSequence constant{[&](int) { return rho; }, std::nullopt};
  EXPECT_EQ(omega_converges(constant, rho, Divergence::I).verdict, Verdict::converging);
}

TEST(Topology, NonCommutativeCounterexample) {
  const AlgebraSpec q({2});
  const auto bloch = [q](double a) {
    return State(HermElem(q, {0.5 * (pauli::one() + std::cos(a) * pauli::x() + std::sin(a) * pauli::y())}));
  };
  const StateSequence seq{[&](int i) { return bloch(1.0 / i); }, std::nullopt};
  const State rho = bloch(0.0);
  EXPECT_EQ(omega_converges(seq, rho, Divergence::rI).verdict, Verdict::diverging);
  EXPECT_EQ(norm_converges(seq, rho, 200, 0.05).verdict, Verdict::converging);
}

TEST(Topology, RandomInteriorSequences) {
  const AlgebraSpec alg({2, 1});
  std::mt19937_64 rng(29);
  for (int k = 0; k < 20; ++k) {
    const State rho = random_state(alg, rng);
    const State dir = random_state(alg, rng);
    const StateSequence seq{[&](int i) { return State(rho.elem() + (dir.elem() - rho.elem()) / (1.0 + i)); }, std::nullopt};
    const ImplicationReport r = implication_suite(seq, rho);
    EXPECT_TRUE(r.ok());
  }
  const StateSequence finite{[](int) { return State::maximally_mixed(AlgebraSpec({2})); }, 5};
  EXPECT_THROW(omega_converges(finite, State::maximally_mixed(AlgebraSpec({2})), Divergence::rI, 10), DomainError);
}

TEST(Topology, Disks) {
  const AlgebraSpec alg({2, 2});
  const State r = random_state(alg, 30);
  EXPECT_TRUE(disk_membership(r, r, 1e-3, Divergence::rI, DiskKind::open));
  EXPECT_THROW(disk_membership(r, r, 0.0, Divergence::rI, DiskKind::open), DomainError);

  std::mt19937_64 rng(31);
  for (int i = 0; i < 20; ++i) {
    const State a = random_state(alg, rng, std::vector<int>{1, i % 2});
    const State b = random_state(alg, rng, std::vector<int>{i % 3 ? 2 : 1, 1});
    const double inf = std::numeric_limits<double>::infinity();
    EXPECT_EQ(disk_membership(a, b, inf, Divergence::I, DiskKind::open),
              projection_leq(support_projection(b.elem()), support_projection(a.elem())));
  }
  const State p(HermElem::diagonal(AlgebraSpec({1, 1}), {1, 0})), q(HermElem::diagonal(AlgebraSpec({1, 1}), {0, 1}));
  EXPECT_FALSE(disk_membership(p, q, std::numeric_limits<double>::infinity(), Divergence::rI, DiskKind::open));
}

TEST(Topology, ClosureInfimum) {
  const ExpFamilySpec st = families::staffelberg();
  const AlgebraSpec alg = st.algebra();
  const State rho = e_geodesic_limit(HermElem::zero(alg), st.directions()[1]).state;
  const auto sampler = [&](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ud(-30.0, 30.0);
    return gibbs_state(st.parameter(vec({ud(rng), ud(rng)})));
  };
  const ClosureReport r = closure_infimum_experiment(rho, sampler, {rho}, Divergence::rI, 2000, 7, 1e-3);
  EXPECT_LT(r.inf_closure.value(), 1e-12);
  EXPECT_LT(r.inf_set.value(), 0.5);

  const State fixed = random_state(alg, 32);
  const auto finite = [&](std::mt19937_64&) { return fixed; };
  const ClosureReport f = closure_infimum_experiment(rho, finite, {}, Divergence::rI, 10, 7);
  EXPECT_TRUE(f.consistent);
  EXPECT_EQ(f.inf_set, f.inf_closure);
}

// ---------------------------------------------------------------------------
// io

TEST(Io, ParseElements) {
  const AlgebraSpec alg({2, 1});
  const HermElem d = io::parse_elem(io::json("diag(1, 0, 0.5)"), alg);
  EXPECT_EQ(dist(d, HermElem::diagonal(alg, {1, 0, 0.5})), 0.0);
  const io::json blocks = io::json::parse(R"([[[0, [0, -1]], [[0, 1], 0]], [[2]]])");
  EXPECT_LT(dist(io::parse_elem(blocks, alg), families::qubit_plus(pauli::y(), 2.0)), 1e-15);

  EXPECT_THROW(io::parse_elem(io::json("diag(1, 0)"), alg), io::InputError);
  EXPECT_THROW(io::parse_elem(io::json("eye(3)"), alg), io::InputError);
  EXPECT_THROW(io::parse_elem(io::json::parse(R"([[[0, 1], [2, 0]], [[2]]])"), alg), io::InputError);
  EXPECT_THROW(io::parse_state(io::json("diag(1, 1, 1)"), alg), io::InputError);
  EXPECT_THROW(io::parse_family(io::json::parse(R"({"family": "nope"})")), io::InputError);
}

TEST(Io, BareDiag) {
  const io::json j = io::parse_json_text(R"j({"u": [diag(1,0)], "note": "diag(2,3)"})j", "test");
  EXPECT_EQ(j["u"][0], "diag(1,0)");
  EXPECT_EQ(j["note"], "diag(2,3)");
  EXPECT_THROW(io::parse_json_text("{\"u\": [diag(1,0]}", "test"), io::InputError);
  EXPECT_THROW(io::parse_json_text("{\"u\": ", "test"), io::InputError);
}

TEST(Io, Formatting) {
  EXPECT_EQ(io::format_double(-0.0), "0");
  EXPECT_EQ(io::format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(io::format_double(std::numeric_limits<double>::infinity()), "\"inf\"");
  EXPECT_EQ(io::format_csv(-0.0), "0");
  EXPECT_EQ(io::format_csv(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(io::to_string(io::json{{"a", 1.5}, {"b", {1, 2}}}), R"({"a":1.5,"b":[1,2]})");
}

}  // namespace
