#pragma once

#include "likstab/pivots.hpp"

#include <string>

namespace likstab {

struct CumulantTriple {
  double k1 = 0.0;
  double k2 = 1.0;
  double k3 = 0.0;
};

/// kappa_1 = eta^{1/2}(xi^{rst} lam_{rs,t} + xi^{rs} lam_rs + varsigma), kappa_2 = 1,
/// kappa_3 = eta^{3/2}(a a a lam_rst + 3 a a a lam_{rs,t} - 6 xi^{rs1} a_t lam_{rs,t} - 6 xi^{11}).
CumulantTriple cumulants(const ExpansionCoefficients& c, const CumulantTensors& t, const DerivedTensors& d);

/// Analytic tensors where the family has them, quadrature for location-scale.
CumulantTensors model_tensors(const Model& model, const ParamPoint& theta, int n);

/// Centred log-likelihood derivatives at theta: l_r = L_r, l_rs = L_rs - lam_rs.
struct LArrays {
  VectorXd l1;
  MatrixXd l2;
};

LArrays l_arrays(const Model& model, const ParamPoint& theta, const Dataset& data, const CumulantTensors& t);

/// T_1 = -a_r l_r, so that eta^{1/2} T_1 is the standardized score for psi.
double expansion_T1(const LArrays& l, const DerivedTensors& d);
/// T_2 = xi^{rst} l_rs l_t - xi^{rs} l_r l_s.
double expansion_T2(const LArrays& l, const ExpansionCoefficients& c);

/// observed_pivot: the pivot's own value stands in for eta^{1/2}(T_1 + T_2 + varsigma).
/// reconstructed: that sum is rebuilt from the l-arrays and the coefficients.
enum class CfMode { observed_pivot, reconstructed };
enum class Tail { upper, lower };

std::string to_string(CfMode m);
CfMode parse_cf_mode(const std::string& s);
std::string to_string(Tail t);
Tail parse_tail(const std::string& s);

struct CfOptions {
  CfMode mode = CfMode::observed_pivot;
  Tail tail = Tail::upper;
};

struct CfResult {
  double p = 0.5;
  double T = 0.0;      // value entering the expansion
  double T1 = 0.0;
  double T2 = 0.0;
  double argument = 0.0;
  CumulantTriple k;
};

/// Cornish-Fisher corrected normal p-value,
///   p = 1 - Phi(T - (kappa_3/6)(min(eta T_1^2, 9) - 1) - kappa_1),
/// with the l-arrays and tensors taken at `theta` (normally theta_tilde(psi0)).
/// The quadratic term is frozen at |eta^{1/2} T_1| = 3 to keep p monotone.
CfResult cf_pvalue(const PivotValue& pivot, const ExpansionCoefficients& c, const CumulantTensors& t,
                   const DerivedTensors& d, const Model& model, const Dataset& data, const ParamPoint& theta,
                   const CfOptions& opts = {});

/// The same formula from precomputed pieces.
CfResult cf_pvalue(double T, double T1, const CumulantTriple& k, double eta, Tail tail = Tail::upper);

enum class ConditionId { stability, equiv1, equiv2 };
std::string to_string(ConditionId id);

struct ConditionReport {
  ConditionId id = ConditionId::stability;
  double residual = 0.0;   // max-abs difference
  double scale = 0.0;      // max-abs over both sides
  double threshold = 1e-8; // relative
  bool pass = false;
};

/// max_{r,s} |xi^{rs1} - a_r a_s / 2|.
ConditionReport stability_check(const ExpansionCoefficients& c, const DerivedTensors& d, double threshold = 1e-8);

/// Condition 1 compares xi^{rst}; condition 2 compares
/// sym(xi^{rs}) + (xi^{tu} lam_tu) tau^{rs}. varsigma does not enter.
std::pair<ConditionReport, ConditionReport> equivalence_check(const ExpansionCoefficients& a,
                                                              const ExpansionCoefficients& b,
                                                              const CumulantTensors& t, const DerivedTensors& d,
                                                              double threshold = 1e-8);

}  // namespace likstab
