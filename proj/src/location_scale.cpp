#include "likstab/errors.hpp"
#include "likstab/models.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace likstab {

namespace loc_scale {

LogDensityDerivs log_density(BaseDensity base, double df, double z, int order) {
  LogDensityDerivs r{0.0, 0.0, 0.0, 0.0};
  switch (base) {
    case BaseDensity::normal:
      r.g0 = -0.5 * z * z - 0.5 * std::log(2.0 * M_PI);
      r.g1 = -z;
      r.g2 = -1.0;
      r.g3 = 0.0;
      break;
    case BaseDensity::logistic: {
      const double az = std::abs(z);
      r.g0 = -az - 2.0 * std::log1p(std::exp(-az));
      if (order >= 1) {
        const double s = 1.0 / (1.0 + std::exp(-z));
        r.g1 = 1.0 - 2.0 * s;
        r.g2 = -2.0 * s * (1.0 - s);
        r.g3 = r.g2 * (1.0 - 2.0 * s);
      }
      break;
    }
    case BaseDensity::student_t: {
      const double nu = df;
      const double w = nu + z * z;
      r.g0 = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * M_PI) -
             0.5 * (nu + 1.0) * std::log1p(z * z / nu);
      if (order >= 1) {
        r.g1 = -(nu + 1.0) * z / w;
        r.g2 = -(nu + 1.0) * (nu - z * z) / (w * w);
        r.g3 = 2.0 * (nu + 1.0) * z * (3.0 * nu - z * z) / (w * w * w);
      }
      break;
    }
  }
  return r;
}

std::pair<double, double> unit_information(BaseDensity base, double df) {
  switch (base) {
    case BaseDensity::normal: return {1.0, 2.0};
    case BaseDensity::logistic: return {1.0 / 3.0, (M_PI * M_PI + 3.0) / 9.0};
    case BaseDensity::student_t: return {(df + 1.0) / (df + 3.0), 2.0 * df / (df + 3.0)};
  }
  return {1.0, 2.0};
}

double sample_standard(BaseDensity base, double df, Philox4x32& gen) {
  switch (base) {
    case BaseDensity::normal: return std::normal_distribution<double>()(gen);
    case BaseDensity::logistic: {
      const double u = uniform_open(gen);
      return std::log(u / (1.0 - u));
    }
    case BaseDensity::student_t: return std::student_t_distribution<double>(df)(gen);
  }
  return 0.0;
}

namespace {
double upper_quartile(BaseDensity base, double df) {
  switch (base) {
    case BaseDensity::normal: return 0.6744897501960817;
    case BaseDensity::logistic: return std::log(3.0);
    case BaseDensity::student_t: return boost::math::quantile(boost::math::students_t_distribution<double>(df), 0.75);
  }
  return 1.0;
}
}  // namespace

}  // namespace loc_scale

namespace {

struct UnitDerivs {
  double value;
  double l1[2];
  double l2[2][2];
  double l3[2][2][2];
};

// Derivatives of log f((y - mu)/sigma) - log sigma for one observation.
UnitDerivs unit_derivs(BaseDensity base, double df, double z, double sigma, int order) {
  const auto g = loc_scale::log_density(base, df, z, order);
  UnitDerivs u{};
  u.value = g.g0 - std::log(sigma);
  if (order < 1) return u;
  const double s1 = 1.0 / sigma, s2 = s1 * s1, s3 = s2 * s1;
  u.l1[0] = -g.g1 * s1;
  u.l1[1] = -(z * g.g1 + 1.0) * s1;
  if (order < 2) return u;
  u.l2[0][0] = g.g2 * s2;
  u.l2[0][1] = u.l2[1][0] = (z * g.g2 + g.g1) * s2;
  u.l2[1][1] = (2.0 * z * g.g1 + z * z * g.g2 + 1.0) * s2;
  if (order < 3) return u;
  const double mmm = -g.g3 * s3;
  const double mms = -(z * g.g3 + 2.0 * g.g2) * s3;
  const double mss = -(4.0 * z * g.g2 + z * z * g.g3 + 2.0 * g.g1) * s3;
  const double sss = -(6.0 * z * g.g1 + 6.0 * z * z * g.g2 + z * z * z * g.g3 + 2.0) * s3;
  u.l3[0][0][0] = mmm;
  u.l3[0][0][1] = u.l3[0][1][0] = u.l3[1][0][0] = mms;
  u.l3[0][1][1] = u.l3[1][0][1] = u.l3[1][1][0] = mss;
  u.l3[1][1][1] = sss;
  return u;
}

class LocationScale final : public Model {
 public:
  explicit LocationScale(ModelSpec s) : Model(std::move(s)) {}
  int dim() const override { return 2; }
  bool in_domain(const VectorXd& t) const override { return t(1) > 0.0; }

  void draw(const VectorXd& t, int n, Philox4x32& gen, MatrixXd& out) const override {
    out.resize(n, 1);
    for (int i = 0; i < n; ++i) out(i, 0) = t(0) + t(1) * loc_scale::sample_standard(spec_.base, spec_.df, gen);
  }

  LogLikDerivs derivs(const VectorXd& t, const Dataset& data, int order) const override {
    if (t.size() != 2) throw ValidationError("location-scale parameter has length 2");
    if (!t.allFinite() || !(t(1) > 0.0)) throw DomainError("location-scale parameter outside the domain (sigma > 0)");
    const double mu = t(0), sigma = t(1);
    LogLikDerivs r;
    r.order = order;
    if (order >= 1) r.grad = VectorXd::Zero(2);
    if (order >= 2) r.hess = MatrixXd::Zero(2, 2);
    if (order >= 3) r.third = Tensor3(2);
    double g[2] = {0, 0}, h[2][2] = {{0, 0}, {0, 0}}, k[2][2][2] = {};
    for (int i = 0; i < data.n(); ++i) {
      check_observation(data.obs, i);
      const double z = (data.obs(i, 0) - mu) / sigma;
      const auto u = unit_derivs(spec_.base, spec_.df, z, sigma, order);
      r.value += u.value;
      if (order >= 1)
        for (int a = 0; a < 2; ++a) g[a] += u.l1[a];
      if (order >= 2)
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) h[a][b] += u.l2[a][b];
      if (order >= 3)
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c) k[a][b][c] += u.l3[a][b][c];
    }
    for (int a = 0; a < 2 && order >= 1; ++a) {
      r.grad(a) = g[a];
      for (int b = 0; b < 2 && order >= 2; ++b) {
        r.hess(a, b) = h[a][b];
        for (int c = 0; c < 2 && order >= 3; ++c) r.third(a, b, c) = k[a][b][c];
      }
    }
    return r;
  }

  std::optional<CumulantTensors> exact_tensors(const VectorXd&, int) const override { return std::nullopt; }

  MatrixXd expected_information(const VectorXd& t, int n) const override {
    const auto [imm, iss] = loc_scale::unit_information(spec_.base, spec_.df);
    MatrixXd m = MatrixXd::Zero(2, 2);
    m(0, 0) = n * imm / (t(1) * t(1));
    m(1, 1) = n * iss / (t(1) * t(1));
    return m;
  }

  VectorXd initial_estimate(const Dataset& data) const override {
    std::vector<double> y(data.obs.col(0).data(), data.obs.col(0).data() + data.n());
    auto median = [](std::vector<double> v) {
      const std::size_t m = v.size() / 2;
      std::nth_element(v.begin(), v.begin() + m, v.end());
      double med = v[m];
      if (v.size() % 2 == 0) med = 0.5 * (med + *std::max_element(v.begin(), v.begin() + m));
      return med;
    };
    const double med = median(y);
    for (double& v : y) v = std::abs(v - med);
    double mad = median(y) / loc_scale::upper_quartile(spec_.base, spec_.df);
    if (!(mad > 0.0)) mad = 1.0;
    return VectorXd{{med, mad}};
  }
};

}  // namespace

std::shared_ptr<const Model> make_location_scale(const ModelSpec& spec) {
  return std::make_shared<LocationScale>(spec);
}

CumulantTensors quadrature_tensors(const Model& model, const ParamPoint& theta, int n) {
  const auto& spec = model.spec();
  if (spec.family != Family::location_scale) throw ValidationError("quadrature tensors are implemented for location-scale models");
  model.check_param(theta);
  const double sigma = theta[1];
  const double inf = std::numeric_limits<double>::infinity();
  auto expect = [&](auto&& fn) {
    auto integrand = [&](double z) {
      const auto u = unit_derivs(spec.base, spec.df, z, sigma, 3);
      return std::exp(loc_scale::log_density(spec.base, spec.df, z, 0).g0) * fn(u);
    };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, -inf, inf, 15, 1e-13);
  };
  auto c = CumulantTensors::zeros(2, n);
  for (int r = 0; r < 2; ++r)
    for (int s = 0; s < 2; ++s) {
      c.lam2(r, s) = n * expect([&](const UnitDerivs& u) { return u.l2[r][s]; });
      c.lam11(r, s) = n * expect([&](const UnitDerivs& u) { return u.l1[r] * u.l1[s]; });
      for (int t = 0; t < 2; ++t) {
        c.lam3(r, s, t) = n * expect([&](const UnitDerivs& u) { return u.l3[r][s][t]; });
        c.lam21(r, s, t) = n * expect([&](const UnitDerivs& u) { return u.l2[r][s] * u.l1[t]; });
        c.lam111(r, s, t) = n * expect([&](const UnitDerivs& u) { return u.l1[r] * u.l1[s] * u.l1[t]; });
      }
    }
  return c;
}

}  // namespace likstab
