#include "likstab/models.hpp"

#include "likstab/errors.hpp"

#include <boost/math/special_functions/polygamma.hpp>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace likstab {

std::shared_ptr<const Model> make_location_scale(const ModelSpec& spec);

ParamPoint::ParamPoint(std::initializer_list<double> v, int q) : values(static_cast<int>(v.size())), interest_dim(q) {
  int i = 0;
  for (double x : v) values(i++) = x;
}

Dataset Dataset::from_vector(const std::vector<double>& y) {
  MatrixXd m(static_cast<int>(y.size()), 1);
  for (std::size_t i = 0; i < y.size(); ++i) m(static_cast<int>(i), 0) = y[i];
  return Dataset(std::move(m));
}

namespace {

void set_sym(Tensor3& t, int r, int s, int u, double v) {
  t(r, s, u) = v;
  t(r, u, s) = v;
  t(s, r, u) = v;
  t(s, u, r) = v;
  t(u, r, s) = v;
  t(u, s, r) = v;
}

void check_theta(const Model& m, const VectorXd& theta) {
  if (theta.size() != m.dim()) throw ValidationError("parameter has length " + std::to_string(theta.size()) + ", model needs " + std::to_string(m.dim()));
  if (!theta.allFinite() || !m.in_domain(theta)) {
    std::ostringstream os;
    os << "parameter outside the domain of " << m.spec().name() << ": (" << theta.transpose() << ")";
    throw DomainError(os.str());
  }
}

LogLikDerivs make_derivs(int d, int order) {
  LogLikDerivs r;
  r.order = order;
  if (order >= 1) r.grad = VectorXd::Zero(d);
  if (order >= 2) r.hess = MatrixXd::Zero(d, d);
  if (order >= 3) r.third = Tensor3(d);
  return r;
}

// L = n log(theta) - theta * sum(y)
class Exponential final : public Model {
 public:
  explicit Exponential(ModelSpec s) : Model(std::move(s)) {}
  int dim() const override { return 1; }
  bool in_domain(const VectorXd& t) const override { return t(0) > 0.0; }

  void check_observation(const MatrixXd& obs, int row) const override {
    Model::check_observation(obs, row);
    if (obs(row, 0) <= 0.0) throw DomainError("observation in row " + std::to_string(row) + " is outside the support (y > 0)");
  }

  void draw(const VectorXd& t, int n, Philox4x32& gen, MatrixXd& out) const override {
    std::exponential_distribution<double> dist(t(0));
    out.resize(n, 1);
    for (int i = 0; i < n; ++i) out(i, 0) = dist(gen);
  }

  LogLikDerivs derivs(const VectorXd& t, const Dataset& data, int order) const override {
    check_theta(*this, t);
    const double th = t(0);
    const double n = data.n();
    double sy = 0.0;
    for (int i = 0; i < data.n(); ++i) {
      check_observation(data.obs, i);
      sy += data.obs(i, 0);
    }
    auto r = make_derivs(1, order);
    r.value = n * std::log(th) - th * sy;
    if (order >= 1) r.grad(0) = n / th - sy;
    if (order >= 2) r.hess(0, 0) = -n / (th * th);
    if (order >= 3) r.third(0, 0, 0) = 2.0 * n / (th * th * th);
    return r;
  }

  std::optional<CumulantTensors> exact_tensors(const VectorXd& t, int n) const override {
    const double th = t(0);
    auto c = CumulantTensors::zeros(1, n);
    c.lam2(0, 0) = -n / (th * th);
    c.lam11(0, 0) = n / (th * th);  // var(sum y)
    c.lam3(0, 0, 0) = 2.0 * n / (th * th * th);
    c.lam111(0, 0, 0) = -2.0 * n / (th * th * th);
    return c;
  }

  MatrixXd expected_information(const VectorXd& t, int n) const override {
    return MatrixXd::Constant(1, 1, n / (t(0) * t(0)));
  }

  VectorXd initial_estimate(const Dataset& data) const override {
    return VectorXd::Constant(1, 1.0 / data.obs.col(0).mean());
  }
};

// theta = (mu, v) with v the variance.
class NormalMV final : public Model {
 public:
  explicit NormalMV(ModelSpec s) : Model(std::move(s)) {}
  int dim() const override { return 2; }
  bool in_domain(const VectorXd& t) const override { return t(1) > 0.0; }

  void draw(const VectorXd& t, int n, Philox4x32& gen, MatrixXd& out) const override {
    std::normal_distribution<double> dist(t(0), std::sqrt(t(1)));
    out.resize(n, 1);
    for (int i = 0; i < n; ++i) out(i, 0) = dist(gen);
  }

  LogLikDerivs derivs(const VectorXd& t, const Dataset& data, int order) const override {
    check_theta(*this, t);
    const double mu = t(0), v = t(1);
    const double n = data.n();
    double D = 0.0, S = 0.0;
    for (int i = 0; i < data.n(); ++i) {
      check_observation(data.obs, i);
      const double e = data.obs(i, 0) - mu;
      D += e;
      S += e * e;
    }
    auto r = make_derivs(2, order);
    r.value = -0.5 * n * std::log(2.0 * M_PI * v) - 0.5 * S / v;
    if (order >= 1) {
      r.grad(0) = D / v;
      r.grad(1) = -0.5 * n / v + 0.5 * S / (v * v);
    }
    if (order >= 2) {
      r.hess(0, 0) = -n / v;
      r.hess(0, 1) = r.hess(1, 0) = -D / (v * v);
      r.hess(1, 1) = 0.5 * n / (v * v) - S / (v * v * v);
    }
    if (order >= 3) {
      const double v2 = v * v, v3 = v2 * v, v4 = v3 * v;
      set_sym(r.third, 0, 0, 1, n / v2);
      set_sym(r.third, 0, 1, 1, 2.0 * D / v3);
      r.third(1, 1, 1) = -n / v3 + 3.0 * S / v4;
    }
    return r;
  }

  std::optional<CumulantTensors> exact_tensors(const VectorXd& t, int n) const override {
    const double v = t(1), v2 = v * v, v3 = v2 * v;
    auto c = CumulantTensors::zeros(2, n);
    c.lam2(0, 0) = -n / v;
    c.lam2(1, 1) = -0.5 * n / v2;
    c.lam11(0, 0) = n / v;          // var(D) / v^2
    c.lam11(1, 1) = 0.5 * n / v2;   // var(S) / (4 v^4)
    set_sym(c.lam3, 0, 0, 1, n / v2);
    c.lam3(1, 1, 1) = 2.0 * n / v3;
    c.lam21(0, 1, 0) = c.lam21(1, 0, 0) = -n / v2;
    c.lam21(1, 1, 1) = -n / v3;
    set_sym(c.lam111, 0, 0, 1, n / v2);
    c.lam111(1, 1, 1) = n / v3;
    return c;
  }

  MatrixXd expected_information(const VectorXd& t, int n) const override {
    MatrixXd m = MatrixXd::Zero(2, 2);
    m(0, 0) = n / t(1);
    m(1, 1) = 0.5 * n / (t(1) * t(1));
    return m;
  }

  VectorXd initial_estimate(const Dataset& data) const override {
    const double m = data.obs.col(0).mean();
    const double v = (data.obs.col(0).array() - m).square().mean();
    return VectorXd{{m, std::max(v, 1e-12)}};
  }
};

// theta = (alpha, beta): shape and rate.
class Gamma final : public Model {
 public:
  explicit Gamma(ModelSpec s) : Model(std::move(s)) {}
  int dim() const override { return 2; }
  bool in_domain(const VectorXd& t) const override { return t(0) > 0.0 && t(1) > 0.0; }

  void check_observation(const MatrixXd& obs, int row) const override {
    Model::check_observation(obs, row);
    if (obs(row, 0) <= 0.0) throw DomainError("observation in row " + std::to_string(row) + " is outside the support (y > 0)");
  }

  void draw(const VectorXd& t, int n, Philox4x32& gen, MatrixXd& out) const override {
    std::gamma_distribution<double> dist(t(0), 1.0 / t(1));
    out.resize(n, 1);
    for (int i = 0; i < n; ++i) out(i, 0) = dist(gen);
  }

  LogLikDerivs derivs(const VectorXd& t, const Dataset& data, int order) const override {
    check_theta(*this, t);
    const double a = t(0), b = t(1);
    const double n = data.n();
    double sy = 0.0, sly = 0.0;
    for (int i = 0; i < data.n(); ++i) {
      check_observation(data.obs, i);
      sy += data.obs(i, 0);
      sly += std::log(data.obs(i, 0));
    }
    auto r = make_derivs(2, order);
    r.value = n * a * std::log(b) - n * std::lgamma(a) + (a - 1.0) * sly - b * sy;
    if (order >= 1) {
      r.grad(0) = n * std::log(b) - n * boost::math::digamma(a) + sly;
      r.grad(1) = n * a / b - sy;
    }
    if (order >= 2) {
      r.hess(0, 0) = -n * boost::math::trigamma(a);
      r.hess(0, 1) = r.hess(1, 0) = n / b;
      r.hess(1, 1) = -n * a / (b * b);
    }
    if (order >= 3) {
      r.third(0, 0, 0) = -n * boost::math::polygamma(2, a);
      set_sym(r.third, 0, 1, 1, -n / (b * b));
      r.third(1, 1, 1) = 2.0 * n * a / (b * b * b);
    }
    return r;
  }

  std::optional<CumulantTensors> exact_tensors(const VectorXd& t, int n) const override {
    // The Hessian is non-random, so lam21 = 0 and lam111 = -lam3.
    const double a = t(0), b = t(1);
    auto c = CumulantTensors::zeros(2, n);
    c.lam2(0, 0) = -n * boost::math::trigamma(a);
    c.lam2(0, 1) = c.lam2(1, 0) = n / b;
    c.lam2(1, 1) = -n * a / (b * b);
    // Score covariance from var(log y) = trigamma(a), var(y) = a/b^2, cov(log y, y) = 1/b.
    c.lam11(0, 0) = n * boost::math::trigamma(a);
    c.lam11(0, 1) = c.lam11(1, 0) = -n / b;
    c.lam11(1, 1) = n * a / (b * b);
    c.lam3(0, 0, 0) = -n * boost::math::polygamma(2, a);
    set_sym(c.lam3, 0, 1, 1, -n / (b * b));
    c.lam3(1, 1, 1) = 2.0 * n * a / (b * b * b);
    c.lam111 = c.lam3 * -1.0;
    return c;
  }

  MatrixXd expected_information(const VectorXd& t, int n) const override {
    return -exact_tensors(t, n)->lam2;
  }

  VectorXd initial_estimate(const Dataset& data) const override {
    const double m = data.obs.col(0).mean();
    const double v = std::max((data.obs.col(0).array() - m).square().mean(), 1e-12 * m * m);
    return VectorXd{{m * m / v, m / v}};
  }
};

// q-variate normal mean with known covariance; every parameter is of interest.
class MvNormalMean final : public Model {
 public:
  explicit MvNormalMean(ModelSpec s) : Model(std::move(s)) {
    const int q = spec_.q;
    if (q < 1) throw ValidationError("mvnormal-mean needs q >= 1");
    if (spec_.covariance.size() == 0) spec_.covariance = MatrixXd::Identity(q, q);
    if (spec_.covariance.rows() != q || spec_.covariance.cols() != q) throw ValidationError("covariance must be q x q");
    Eigen::LLT<MatrixXd> llt(spec_.covariance);
    if (llt.info() != Eigen::Success) throw ValidationError("covariance must be positive definite");
    chol_ = llt.matrixL();
    prec_ = llt.solve(MatrixXd::Identity(q, q));
    logdet_ = 2.0 * chol_.diagonal().array().log().sum();
  }

  int dim() const override { return spec_.q; }
  int interest_dim() const override { return spec_.q; }
  int columns() const override { return spec_.q; }
  bool in_domain(const VectorXd&) const override { return true; }

  void draw(const VectorXd& t, int n, Philox4x32& gen, MatrixXd& out) const override {
    std::normal_distribution<double> z;
    const int q = spec_.q;
    out.resize(n, q);
    VectorXd e(q);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < q; ++j) e(j) = z(gen);
      out.row(i) = (t + chol_ * e).transpose();
    }
  }

  LogLikDerivs derivs(const VectorXd& t, const Dataset& data, int order) const override {
    check_theta(*this, t);
    const int q = spec_.q;
    const double n = data.n();
    VectorXd sum = VectorXd::Zero(q);
    double quad = 0.0;
    for (int i = 0; i < data.n(); ++i) {
      check_observation(data.obs, i);
      const VectorXd e = data.obs.row(i).transpose() - t;
      sum += e;
      quad += e.dot(prec_ * e);
    }
    auto r = make_derivs(q, order);
    r.value = -0.5 * quad - 0.5 * n * (q * std::log(2.0 * M_PI) + logdet_);
    if (order >= 1) r.grad = prec_ * sum;
    if (order >= 2) r.hess = -n * prec_;
    return r;
  }

  std::optional<CumulantTensors> exact_tensors(const VectorXd&, int n) const override {
    auto c = CumulantTensors::zeros(spec_.q, n);
    c.lam2 = -n * prec_;
    c.lam11 = n * prec_;  // cov(P sum e) = P (n Sigma) P
    return c;
  }

  MatrixXd expected_information(const VectorXd&, int n) const override { return n * prec_; }

  VectorXd initial_estimate(const Dataset& data) const override {
    return data.obs.colwise().mean().transpose();
  }

 private:
  MatrixXd chol_, prec_;
  double logdet_ = 0.0;
};

}  // namespace

void Model::check_observation(const MatrixXd& obs, int row) const {
  for (int j = 0; j < obs.cols(); ++j)
    if (!std::isfinite(obs(row, j))) throw DomainError("observation in row " + std::to_string(row) + " is not finite");
}

void Model::check_param(const ParamPoint& theta) const {
  if (theta.interest_dim != interest_dim())
    throw ValidationError("interest dimension " + std::to_string(theta.interest_dim) + " does not match the model's " + std::to_string(interest_dim()));
  check_theta(*this, theta.values);
}

void Model::check_data(const Dataset& data) const {
  if (data.columns() != columns())
    throw ValidationError("data has " + std::to_string(data.columns()) + " columns, model " + spec_.name() + " needs " + std::to_string(columns()));
  if (data.n() < min_n())
    throw ValidationError("sample size " + std::to_string(data.n()) + " is below the minimum " + std::to_string(min_n()));
  for (int i = 0; i < data.n(); ++i) check_observation(data.obs, i);
}

ModelSpec ModelSpec::parse(const std::string& name) {
  ModelSpec s;
  const auto colon = name.find(':');
  const std::string head = name.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : name.substr(colon + 1);
  auto need_no_arg = [&] {
    if (!arg.empty()) throw ValidationError("model '" + head + "' takes no argument");
  };
  if (head == "exponential") {
    need_no_arg();
    s.family = Family::exponential;
  } else if (head == "normal-mv") {
    need_no_arg();
    s.family = Family::normal_mv;
  } else if (head == "gamma") {
    need_no_arg();
    s.family = Family::gamma;
  } else if (head == "normal-mean") {
    need_no_arg();
    s.family = Family::mvnormal_mean;
    s.q = 1;
  } else if (head == "mvnormal-mean") {
    s.family = Family::mvnormal_mean;
    try {
      std::size_t pos = 0;
      s.q = std::stoi(arg, &pos);
      if (pos != arg.size()) throw std::invalid_argument(arg);
    } catch (const std::exception&) {
      throw ValidationError("mvnormal-mean needs an integer dimension, e.g. mvnormal-mean:3");
    }
    if (s.q < 1 || s.q > 10) throw ValidationError("mvnormal-mean dimension must be in 1..10");
  } else if (head == "location-scale") {
    s.family = Family::location_scale;
    s.analytic_tensors = false;
    if (arg == "normal") {
      s.base = BaseDensity::normal;
    } else if (arg == "logistic") {
      s.base = BaseDensity::logistic;
    } else if (arg.size() > 1 && arg[0] == 't') {
      s.base = BaseDensity::student_t;
      try {
        std::size_t pos = 0;
        s.df = std::stod(arg.substr(1), &pos);
        if (pos != arg.size() - 1) throw std::invalid_argument(arg);
      } catch (const std::exception&) {
        throw ValidationError("bad Student-t degrees of freedom in '" + name + "'");
      }
      if (!(s.df > 0.0) || !std::isfinite(s.df)) throw ValidationError("Student-t degrees of freedom must be positive");
    } else {
      throw ValidationError("location-scale base must be normal, logistic or tN (e.g. t5), got '" + arg + "'");
    }
  } else {
    throw ValidationError("unknown model '" + name + "'");
  }
  return s;
}

std::string ModelSpec::name() const {
  switch (family) {
    case Family::exponential: return "exponential";
    case Family::normal_mv: return "normal-mv";
    case Family::gamma: return "gamma";
    case Family::mvnormal_mean: return "mvnormal-mean:" + std::to_string(q);
    case Family::location_scale: {
      if (base == BaseDensity::normal) return "location-scale:normal";
      if (base == BaseDensity::logistic) return "location-scale:logistic";
      std::ostringstream os;
      os << "location-scale:t" << df;
      return os.str();
    }
  }
  return "unknown";
}

std::shared_ptr<const Model> make_model(const ModelSpec& spec) {
  switch (spec.family) {
    case Family::exponential: return std::make_shared<Exponential>(spec);
    case Family::normal_mv: return std::make_shared<NormalMV>(spec);
    case Family::gamma: return std::make_shared<Gamma>(spec);
    case Family::mvnormal_mean: return std::make_shared<MvNormalMean>(spec);
    case Family::location_scale: return make_location_scale(spec);
  }
  throw ValidationError("unsupported family");
}

ParamPoint make_param(const Model& model, const VectorXd& values) {
  ParamPoint p(values, model.interest_dim());
  model.check_param(p);
  return p;
}

Dataset simulate(const Model& model, const ParamPoint& theta, int n, Philox4x32& gen) {
  model.check_param(theta);
  if (n < model.min_n()) throw ValidationError("sample size " + std::to_string(n) + " is below the minimum " + std::to_string(model.min_n()));
  Dataset d;
  model.draw(theta.values, n, gen, d.obs);
  return d;
}

Dataset simulate(const Model& model, const ParamPoint& theta, int n, std::uint64_t seed) {
  Philox4x32 gen(seed);
  return simulate(model, theta, n, gen);
}

LogLikDerivs loglik_derivs(const Model& model, const ParamPoint& theta, const Dataset& data, int order) {
  if (order < 0 || order > 3) throw ValidationError("derivative order must be 0..3");
  if (data.columns() != model.columns()) throw ValidationError("data column count does not match the model");
  auto r = model.derivs(theta.values, data, order);
  if (!std::isfinite(r.value)) throw DomainError("log-likelihood is not finite");
  return r;
}

std::optional<CumulantTensors> exact_tensors(const Model& model, const ParamPoint& theta, int n) {
  model.check_param(theta);
  if (!model.spec().analytic_tensors) return std::nullopt;
  return model.exact_tensors(theta.values, n);
}

namespace {
double fd_step(double x, double power) {
  return std::pow(std::numeric_limits<double>::epsilon(), power) * std::max(1.0, std::abs(x));
}
}  // namespace

VectorXd fd_gradient(const Model& model, const VectorXd& theta, const Dataset& data) {
  const int d = static_cast<int>(theta.size());
  VectorXd g(d);
  for (int r = 0; r < d; ++r) {
    const double h = fd_step(theta(r), 1.0 / 3.0);
    VectorXd p = theta, m = theta;
    p(r) += h;
    m(r) -= h;
    g(r) = (model.derivs(p, data, 0).value - model.derivs(m, data, 0).value) / (2.0 * h);
  }
  return g;
}

MatrixXd fd_hessian(const Model& model, const VectorXd& theta, const Dataset& data) {
  const int d = static_cast<int>(theta.size());
  MatrixXd H(d, d);
  const double f0 = model.derivs(theta, data, 0).value;
  for (int r = 0; r < d; ++r) {
    for (int s = r; s < d; ++s) {
      const double hr = fd_step(theta(r), 0.25), hs = fd_step(theta(s), 0.25);
      auto f = [&](double a, double b) {
        VectorXd p = theta;
        p(r) += a;
        p(s) += b;
        return model.derivs(p, data, 0).value;
      };
      double v;
      if (r == s) {
        v = (f(hr, 0) - 2.0 * f0 + f(-hr, 0)) / (hr * hr);
      } else {
        v = (f(hr, hs) - f(hr, -hs) - f(-hr, hs) + f(-hr, -hs)) / (4.0 * hr * hs);
      }
      H(r, s) = H(s, r) = v;
    }
  }
  return H;
}

Tensor3 fd_third(const Model& model, const VectorXd& theta, const Dataset& data) {
  const int d = static_cast<int>(theta.size());
  Tensor3 T(d);
  for (int u = 0; u < d; ++u) {
    const double h = fd_step(theta(u), 0.2);
    VectorXd p = theta, m = theta;
    p(u) += h;
    m(u) -= h;
    const MatrixXd diff = (model.derivs(p, data, 2).hess - model.derivs(m, data, 2).hess) / (2.0 * h);
    for (int r = 0; r < d; ++r)
      for (int s = 0; s < d; ++s) T(r, s, u) = diff(r, s);
  }
  return T;
}

}  // namespace likstab
