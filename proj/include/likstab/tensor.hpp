#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace likstab {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Dense d x d x d array indexed (r, s, t), row-major in t.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int d) : d_(d), data_(static_cast<std::size_t>(d) * d * d, 0.0) {}

  int dim() const { return d_; }
  bool empty() const { return d_ == 0; }

  double& operator()(int r, int s, int t) { return data_[index(r, s, t)]; }
  double operator()(int r, int s, int t) const { return data_[index(r, s, t)]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  /// Slice with the last index fixed: M(r, s) = T(r, s, t).
  MatrixXd slice_last(int t) const;

  /// Contraction over the first index: M(s, t) = v_r T(r, s, t).
  MatrixXd contract_first(const VectorXd& v) const;

  double max_abs() const;

  /// Average over all 6 index permutations.
  Tensor3 symmetrized() const;
  /// Average over swapping the first two indices only.
  Tensor3 symmetrized_first_two() const;

  Tensor3& operator+=(const Tensor3& o);
  Tensor3& operator-=(const Tensor3& o);
  Tensor3& operator*=(double c);

  friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
  friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
  friend Tensor3 operator*(Tensor3 a, double c) { return a *= c; }
  friend Tensor3 operator*(double c, Tensor3 a) { return a *= c; }

 private:
  std::size_t index(int r, int s, int t) const {
    return (static_cast<std::size_t>(r) * d_ + s) * d_ + t;
  }

  int d_ = 0;
  std::vector<double> data_;
};

/// Monte Carlo standard errors matching the arrays of CumulantTensors.
struct TensorErrors {
  MatrixXd lam2;
  MatrixXd lam11;
  Tensor3 lam3;
  Tensor3 lam21;
  Tensor3 lam111;
};

/// Expected log-likelihood derivative arrays at one parameter value:
///   lam2(r,s)     = E L_rs
///   lam11(r,s)    = E(L_r L_s)
///   lam3(r,s,t)   = E L_rst
///   lam21(r,s,t)  = E(L_rs L_t)      (symmetric in r,s)
///   lam111(r,s,t) = E(L_r L_s L_t)
/// All of order n for a sample of size n.
struct CumulantTensors {
  MatrixXd lam2;
  MatrixXd lam11;
  Tensor3 lam3;
  Tensor3 lam21;
  Tensor3 lam111;
  int n = 0;
  std::optional<TensorErrors> mc_se;

  int dim() const { return static_cast<int>(lam2.rows()); }

  static CumulantTensors zeros(int d, int n = 0);
};

}  // namespace likstab
