#include "likstab/theory.hpp"

#include "likstab/errors.hpp"
#include "likstab/stats.hpp"

#include <algorithm>
#include <cmath>

namespace likstab {

CumulantTriple cumulants(const ExpansionCoefficients& c, const CumulantTensors& t, const DerivedTensors& d) {
  const int n = t.dim();
  const VectorXd a = d.a();
  const double se = std::sqrt(d.eta);

  double x3 = 0.0;
  for (int r = 0; r < n; ++r)
    for (int s = 0; s < n; ++s)
      for (int u = 0; u < n; ++u) x3 += c.xi3(r, s, u) * t.lam21(r, s, u);
  const double x2 = (c.xi2.array() * t.lam2.array()).sum();

  double aaa3 = 0.0, aaa21 = 0.0, xa21 = 0.0;
  for (int r = 0; r < n; ++r)
    for (int s = 0; s < n; ++s)
      for (int u = 0; u < n; ++u) {
        const double w = a(r) * a(s) * a(u);
        aaa3 += w * t.lam3(r, s, u);
        aaa21 += w * t.lam21(r, s, u);
        xa21 += c.xi3(r, s, 0) * a(u) * t.lam21(r, s, u);
      }

  CumulantTriple k;
  k.k1 = se * (x3 + x2) + se * c.sigma_const;
  k.k2 = 1.0;
  k.k3 = d.eta * se * (aaa3 + 3.0 * aaa21 - 6.0 * xa21 - 6.0 * c.xi2(0, 0));
  return k;
}

CumulantTensors model_tensors(const Model& model, const ParamPoint& theta, int n) {
  if (auto t = exact_tensors(model, theta, n)) return *t;
  if (model.spec().family == Family::location_scale) return quadrature_tensors(model, theta, n);
  throw DomainError("tensors unavailable for model " + model.spec().name());
}

LArrays l_arrays(const Model& model, const ParamPoint& theta, const Dataset& data, const CumulantTensors& t) {
  const auto ld = loglik_derivs(model, theta, data, 2);
  return {ld.grad, ld.hess - t.lam2};
}

double expansion_T1(const LArrays& l, const DerivedTensors& d) { return -d.a().dot(l.l1); }

double expansion_T2(const LArrays& l, const ExpansionCoefficients& c) {
  const int n = static_cast<int>(l.l1.size());
  double s3 = 0.0;
  for (int r = 0; r < n; ++r)
    for (int s = 0; s < n; ++s)
      for (int u = 0; u < n; ++u) s3 += c.xi3(r, s, u) * l.l2(r, s) * l.l1(u);
  return s3 - l.l1.dot(c.xi2 * l.l1);
}

std::string to_string(CfMode m) { return m == CfMode::observed_pivot ? "observed_pivot" : "reconstructed"; }

CfMode parse_cf_mode(const std::string& s) {
  if (s == "observed_pivot") return CfMode::observed_pivot;
  if (s == "reconstructed") return CfMode::reconstructed;
  throw ValidationError("unknown cf mode '" + s + "' (expected observed_pivot or reconstructed)");
}

std::string to_string(Tail t) { return t == Tail::upper ? "upper" : "lower"; }

Tail parse_tail(const std::string& s) {
  if (s == "upper") return Tail::upper;
  if (s == "lower") return Tail::lower;
  throw ValidationError("unknown tail '" + s + "' (expected upper or lower)");
}

CfResult cf_pvalue(double T, double T1, const CumulantTriple& k, double eta, Tail tail) {
  CfResult r;
  r.T = T;
  r.T1 = T1;
  r.k = k;
  const double q = std::min(eta * T1 * T1, 9.0);
  r.argument = T - k.k3 / 6.0 * (q - 1.0) - k.k1;
  const double p = tail == Tail::upper ? normal_sf(r.argument) : normal_cdf(r.argument);
  r.p = std::clamp(p, 0.0, 1.0);
  if (!std::isfinite(r.argument)) throw NumericalError("Cornish-Fisher argument is not finite");
  return r;
}

CfResult cf_pvalue(const PivotValue& pivot, const ExpansionCoefficients& c, const CumulantTensors& t,
                   const DerivedTensors& d, const Model& model, const Dataset& data, const ParamPoint& theta,
                   const CfOptions& opts) {
  if (model.interest_dim() != 1) throw ValidationError("cf_pvalue needs a scalar interest parameter");
  const LArrays l = l_arrays(model, theta, data, t);
  const double T1 = expansion_T1(l, d);
  const double T2 = expansion_T2(l, c);
  const double T = opts.mode == CfMode::observed_pivot ? pivot.value : std::sqrt(d.eta) * (T1 + T2 + c.sigma_const);
  CfResult r = cf_pvalue(T, T1, cumulants(c, t, d), d.eta, opts.tail);
  r.T2 = T2;
  return r;
}

std::string to_string(ConditionId id) {
  switch (id) {
    case ConditionId::stability: return "stability";
    case ConditionId::equiv1: return "equiv1";
    case ConditionId::equiv2: return "equiv2";
  }
  return "?";
}

namespace {

ConditionReport make_report(ConditionId id, const MatrixXd& lhs, const MatrixXd& rhs, double threshold) {
  ConditionReport r;
  r.id = id;
  r.threshold = threshold;
  r.residual = (lhs - rhs).cwiseAbs().maxCoeff();
  r.scale = std::max(lhs.cwiseAbs().maxCoeff(), rhs.cwiseAbs().maxCoeff());
  r.pass = r.residual <= r.scale * threshold;
  return r;
}

MatrixXd equiv2_side(const ExpansionCoefficients& c, const CumulantTensors& t, const DerivedTensors& d) {
  const MatrixXd sym = 0.5 * (c.xi2 + c.xi2.transpose());
  return sym + (c.xi2.array() * t.lam2.array()).sum() * d.tau;
}

}  // namespace

ConditionReport stability_check(const ExpansionCoefficients& c, const DerivedTensors& d, double threshold) {
  const VectorXd a = d.a();
  return make_report(ConditionId::stability, c.xi3.slice_last(0), 0.5 * a * a.transpose(), threshold);
}

std::pair<ConditionReport, ConditionReport> equivalence_check(const ExpansionCoefficients& a,
                                                              const ExpansionCoefficients& b,
                                                              const CumulantTensors& t, const DerivedTensors& d,
                                                              double threshold) {
  if (a.xi3.dim() != b.xi3.dim() || a.xi3.dim() != t.dim()) throw ValidationError("coefficient shapes differ");
  const int n = t.dim();
  Eigen::Map<const MatrixXd> xa(a.xi3.data().data(), n * n, n);
  Eigen::Map<const MatrixXd> xb(b.xi3.data().data(), n * n, n);
  return {make_report(ConditionId::equiv1, xa, xb, threshold),
          make_report(ConditionId::equiv2, equiv2_side(a, t, d), equiv2_side(b, t, d), threshold)};
}

}  // namespace likstab
