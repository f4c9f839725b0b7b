#pragma once

#include "likstab/rng.hpp"
#include "likstab/tensor.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace likstab {

/// Parameter vector theta = (psi, phi); the first `interest_dim` entries are psi.
struct ParamPoint {
  VectorXd values;
  int interest_dim = 1;

  ParamPoint() = default;
  ParamPoint(VectorXd v, int q = 1) : values(std::move(v)), interest_dim(q) {}
  ParamPoint(std::initializer_list<double> v, int q = 1);

  int dim() const { return static_cast<int>(values.size()); }
  double operator[](int i) const { return values(i); }
  VectorXd psi() const { return values.head(interest_dim); }
  VectorXd phi() const { return values.tail(dim() - interest_dim); }
};

/// n x p matrix of observations, one row per observation.
struct Dataset {
  MatrixXd obs;

  Dataset() = default;
  explicit Dataset(MatrixXd m) : obs(std::move(m)) {}
  static Dataset from_vector(const std::vector<double>& y);

  int n() const { return static_cast<int>(obs.rows()); }
  int columns() const { return static_cast<int>(obs.cols()); }
};

struct LogLikDerivs {
  int order = 0;
  double value = 0.0;
  VectorXd grad;   // order >= 1
  MatrixXd hess;   // order >= 2
  Tensor3 third;   // order >= 3
};

enum class Family { exponential, normal_mv, gamma, location_scale, mvnormal_mean };
enum class BaseDensity { normal, logistic, student_t };

struct ModelSpec {
  Family family = Family::normal_mv;
  BaseDensity base = BaseDensity::normal;
  double df = 5.0;      // Student-t base only
  int q = 1;            // mvnormal_mean dimension
  MatrixXd covariance;  // mvnormal_mean; empty means identity
  bool analytic_tensors = true;

  /// Accepts exponential, normal-mv, gamma, location-scale:{normal,logistic,tN},
  /// mvnormal-mean:q and normal-mean (the q = 1 case).
  static ModelSpec parse(const std::string& name);
  std::string name() const;
};

class Model {
 public:
  virtual ~Model() = default;

  virtual int dim() const = 0;
  virtual int interest_dim() const { return 1; }
  virtual int columns() const { return 1; }
  virtual int min_n() const { return dim() + 1; }

  virtual bool in_domain(const VectorXd& theta) const = 0;
  /// Throws DomainError naming the offending row.
  virtual void check_observation(const MatrixXd& obs, int row) const;

  virtual void draw(const VectorXd& theta, int n, Philox4x32& gen, MatrixXd& out) const = 0;
  virtual LogLikDerivs derivs(const VectorXd& theta, const Dataset& data, int order) const = 0;
  virtual std::optional<CumulantTensors> exact_tensors(const VectorXd& theta, int n) const = 0;
  /// Expected information -lambda_rs for a sample of size n.
  virtual MatrixXd expected_information(const VectorXd& theta, int n) const = 0;
  virtual VectorXd initial_estimate(const Dataset& data) const = 0;

  const ModelSpec& spec() const { return spec_; }

  void check_param(const ParamPoint& theta) const;
  void check_data(const Dataset& data) const;

 protected:
  explicit Model(ModelSpec s) : spec_(std::move(s)) {}
  ModelSpec spec_;
};

std::shared_ptr<const Model> make_model(const ModelSpec& spec);

/// Natural parameter point for a model: theta with the model's interest split.
ParamPoint make_param(const Model& model, const VectorXd& values);

Dataset simulate(const Model& model, const ParamPoint& theta, int n, std::uint64_t seed);
Dataset simulate(const Model& model, const ParamPoint& theta, int n, Philox4x32& gen);

LogLikDerivs loglik_derivs(const Model& model, const ParamPoint& theta, const Dataset& data, int order);

std::optional<CumulantTensors> exact_tensors(const Model& model, const ParamPoint& theta, int n);

/// Location-scale tensors by one-dimensional quadrature of per-observation
/// derivative products against the base density.
CumulantTensors quadrature_tensors(const Model& model, const ParamPoint& theta, int n);

/// Finite-difference derivatives of the log-likelihood value, for checking.
VectorXd fd_gradient(const Model& model, const VectorXd& theta, const Dataset& data);
MatrixXd fd_hessian(const Model& model, const VectorXd& theta, const Dataset& data);
/// Third derivatives by central differences of the analytic Hessian.
Tensor3 fd_third(const Model& model, const VectorXd& theta, const Dataset& data);

/// Location-scale helpers, shared with conditional quadrature.
namespace loc_scale {

struct LogDensityDerivs {
  double g0, g1, g2, g3;  // log f and its first three derivatives at z
};

LogDensityDerivs log_density(BaseDensity base, double df, double z, int order);
/// Per-unit expected information (I_mumu, I_sigmasigma) at sigma = 1.
std::pair<double, double> unit_information(BaseDensity base, double df);
double sample_standard(BaseDensity base, double df, Philox4x32& gen);

}  // namespace loc_scale

Dataset read_csv(const std::string& path);
void write_csv(const std::string& path, const Dataset& data, const std::vector<std::string>& header = {});

}  // namespace likstab
