#include "likstab/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace likstab {

MatrixXd Tensor3::slice_last(int t) const {
  MatrixXd m(d_, d_);
  for (int r = 0; r < d_; ++r)
    for (int s = 0; s < d_; ++s) m(r, s) = (*this)(r, s, t);
  return m;
}

MatrixXd Tensor3::contract_first(const VectorXd& v) const {
  MatrixXd m = MatrixXd::Zero(d_, d_);
  for (int r = 0; r < d_; ++r) {
    if (v(r) == 0.0) continue;
    for (int s = 0; s < d_; ++s)
      for (int t = 0; t < d_; ++t) m(s, t) += v(r) * (*this)(r, s, t);
  }
  return m;
}

double Tensor3::max_abs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

Tensor3 Tensor3::symmetrized() const {
  // Average in a fixed order for the sorted tuple and copy to every permutation,
  // so the result is symmetric bit for bit.
  Tensor3 out(d_);
  const auto& a = *this;
  for (int r = 0; r < d_; ++r)
    for (int s = r; s < d_; ++s)
      for (int t = s; t < d_; ++t) {
        const double v = (a(r, s, t) + a(r, t, s) + a(s, r, t) + a(s, t, r) + a(t, r, s) + a(t, s, r)) / 6.0;
        out(r, s, t) = out(r, t, s) = out(s, r, t) = out(s, t, r) = out(t, r, s) = out(t, s, r) = v;
      }
  return out;
}

Tensor3 Tensor3::symmetrized_first_two() const {
  Tensor3 out(d_);
  for (int r = 0; r < d_; ++r)
    for (int s = 0; s < d_; ++s)
      for (int t = 0; t < d_; ++t) out(r, s, t) = out(s, r, t) = 0.5 * ((*this)(r, s, t) + (*this)(s, r, t));
  return out;
}

Tensor3& Tensor3::operator+=(const Tensor3& o) {
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Tensor3& Tensor3::operator-=(const Tensor3& o) {
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Tensor3& Tensor3::operator*=(double c) {
  for (double& x : data_) x *= c;
  return *this;
}

CumulantTensors CumulantTensors::zeros(int d, int n) {
  CumulantTensors t;
  t.lam2 = MatrixXd::Zero(d, d);
  t.lam11 = MatrixXd::Zero(d, d);
  t.lam3 = Tensor3(d);
  t.lam21 = Tensor3(d);
  t.lam111 = Tensor3(d);
  t.n = n;
  return t;
}

}  // namespace likstab
