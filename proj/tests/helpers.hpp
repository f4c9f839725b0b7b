#pragma once

#include "likstab/tensors.hpp"

#include <random>

namespace testing {

using likstab::CumulantTensors;
using likstab::MatrixXd;
using likstab::Tensor3;

inline Tensor3 random_tensor(int d, std::mt19937_64& g) {
  std::normal_distribution<double> z;
  Tensor3 t(d);
  for (auto& v : t.data()) v = z(g);
  return t;
}

/// Random tensor set with negative-definite lam2 and the symmetries of the
/// cumulant arrays (lam3, lam111 fully symmetric, lam21 symmetric in its first
/// two indices). No Bartlett relations are imposed; coefficient algebra does
/// not need them.
inline CumulantTensors random_tensors(int d, std::mt19937_64& g, int n = 50) {
  std::normal_distribution<double> z;
  MatrixXd A(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) A(i, j) = z(g);
  CumulantTensors t = CumulantTensors::zeros(d, n);
  t.lam2 = -(A * A.transpose() + 0.5 * MatrixXd::Identity(d, d)) * n;
  t.lam11 = -t.lam2;
  t.lam3 = random_tensor(d, g).symmetrized() * n;
  t.lam21 = random_tensor(d, g).symmetrized_first_two() * n;
  t.lam111 = random_tensor(d, g).symmetrized() * n;
  return t;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace testing
