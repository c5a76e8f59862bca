#pragma once

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <vector>

#include "entgeo/algebra.hpp"
#include "entgeo/expfam.hpp"

namespace entgeo {

namespace pauli {

inline Eigen::MatrixXcd one() { return Eigen::MatrixXcd::Identity(2, 2); }

inline Eigen::MatrixXcd x() {
  Eigen::MatrixXcd m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

inline Eigen::MatrixXcd y() {
  using namespace std::complex_literals;
  Eigen::MatrixXcd m(2, 2);
  m << 0, -1i, 1i, 0;
  return m;
}

inline Eigen::MatrixXcd z() {
  Eigen::MatrixXcd m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

}  // namespace pauli

namespace families {

/// Mat(2, C) (+) C, the host algebra of the two planar examples.
inline AlgebraSpec qubit_plus_bit() { return AlgebraSpec({2, 1}); }

/// m (+) c in Mat(2, C) (+) C.
inline HermElem qubit_plus(const Eigen::MatrixXcd& m, double c) {
  Eigen::MatrixXcd s(1, 1);
  s(0, 0) = c;
  return HermElem(qubit_plus_bit(), {m, s});
}

/// span(sigma_1 (+) 0, sigma_2 (+) 1). The mean value set is the unit disk; the
/// closure gains the point over (0, 1) in a lower-dimensional face.
inline ExpFamilySpec staffelberg() {
  return ExpFamilySpec::linear(qubit_plus_bit(), {qubit_plus(pauli::x(), 0.0), qubit_plus(pauli::y(), 1.0)});
}

/// span(sigma_1 (+) 1, sigma_2 (+) 1). The mean value set has two non-exposed points.
inline ExpFamilySpec swallow() {
  return ExpFamilySpec::linear(qubit_plus_bit(), {qubit_plus(pauli::x(), 1.0), qubit_plus(pauli::y(), 1.0)});
}

/// C^3 with diag(1,0,0) and diag(0,1,0): the convex support is a triangle.
inline ExpFamilySpec triangle() {
  const AlgebraSpec alg({1, 1, 1});
  return ExpFamilySpec::linear(alg, {HermElem::diagonal(alg, {1, 0, 0}), HermElem::diagonal(alg, {0, 1, 0})});
}

/// Two independent bits on C^4, outcomes ordered 00, 01, 10, 11.
inline ExpFamilySpec two_bit_independence() {
  const AlgebraSpec alg({1, 1, 1, 1});
  return ExpFamilySpec::linear(alg, {HermElem::diagonal(alg, {1, 1, -1, -1}), HermElem::diagonal(alg, {1, -1, 1, -1})});
}

inline ExpFamilySpec by_name(const std::string& name) {
  if (name == "staffelberg") return staffelberg();
  if (name == "swallow") return swallow();
  if (name == "triangle") return triangle();
  if (name == "independence") return two_bit_independence();
  throw DomainError("unknown family '" + name + "'");
}

}  // namespace families

}  // namespace entgeo
