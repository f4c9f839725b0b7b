#include "likstab/tensors.hpp"

#include "likstab/errors.hpp"
#include "likstab/parallel.hpp"
#include "likstab/stats.hpp"

#include <cmath>

namespace likstab {

DerivedTensors derive(const CumulantTensors& t) {
  const int d = t.dim();
  if (d == 0) throw ValidationError("empty tensors");
  Eigen::FullPivLU<MatrixXd> lu(t.lam2);
  if (!lu.isInvertible()) throw NumericalError("lam2 is singular");
  DerivedTensors r;
  r.lam_up = lu.inverse();
  r.lam_up = 0.5 * (r.lam_up + r.lam_up.transpose());
  const double l11 = r.lam_up(0, 0);
  if (!(l11 < 0.0)) throw NumericalError("lam2 is not negative definite in the interest direction");
  r.eta = -1.0 / l11;
  const VectorXd a = r.a();
  r.tau = r.eta * a * a.transpose();
  r.nu = r.lam_up + r.tau;
  return r;
}

namespace {

// Per-replicate log-likelihood derivatives at a fixed theta.
struct ReplicateDerivs {
  int d = 0;
  int reps = 0;
  std::vector<double> g, h, k;  // reps x d, reps x d^2, reps x d^3

  double L(int i, int r) const { return g[static_cast<std::size_t>(i) * d + r]; }
  double H(int i, int r, int s) const { return h[(static_cast<std::size_t>(i) * d + r) * d + s]; }
  double K(int i, int r, int s, int t) const { return k[((static_cast<std::size_t>(i) * d + r) * d + s) * d + t]; }
};

ReplicateDerivs simulate_derivs(const Model& model, const ParamPoint& theta, int n, int reps, std::uint64_t seed,
                                const char* label, int threads) {
  if (reps < 100) throw ValidationError("reps must be at least 100");
  model.check_param(theta);
  ReplicateDerivs R;
  R.d = model.dim();
  R.reps = reps;
  const std::size_t d = R.d;
  R.g.resize(reps * d);
  R.h.resize(reps * d * d);
  R.k.resize(reps * d * d * d);
  parallel_for(
      reps,
      [&](std::size_t i) {
        auto gen = make_stream(seed, label, i);
        const Dataset data = simulate(model, theta, n, gen);
        LogLikDerivs D;
        try {
          D = model.derivs(theta.values, data, 3);
        } catch (const std::exception& e) {
          throw NumericalError("derivative evaluation failed for replicate " + std::to_string(i) + " (stream seed " +
                               std::to_string(stream_seed(seed, label, i)) + "): " + e.what());
        }
        for (std::size_t r = 0; r < d; ++r) {
          R.g[i * d + r] = D.grad(r);
          for (std::size_t s = 0; s < d; ++s) {
            R.h[(i * d + r) * d + s] = D.hess(r, s);
            for (std::size_t t = 0; t < d; ++t) R.k[((i * d + r) * d + s) * d + t] = D.third(r, s, t);
          }
        }
      },
      threads);
  return R;
}

MatrixXd mean_hessian(const ReplicateDerivs& R) {
  MatrixXd m = MatrixXd::Zero(R.d, R.d);
  for (int i = 0; i < R.reps; ++i)
    for (int r = 0; r < R.d; ++r)
      for (int s = 0; s < R.d; ++s) m(r, s) += R.H(i, r, s);
  return m / R.reps;
}

// Mean and standard error of a per-replicate quantity.
template <class F>
MeanSe replicate_mean(const ReplicateDerivs& R, F&& f) {
  std::vector<double> x(R.reps);
  for (int i = 0; i < R.reps; ++i) x[i] = f(i);
  return mean_se(x);
}

bool within(double resid, double se, double mult) { return std::abs(resid) <= std::max(mult * se, 1e-10); }

// Records a (residual, se) pair into a check.
void record(IdentityCheck& c, double resid, double se, double mult, bool& all_ok) {
  c.max_residual = std::max(c.max_residual, std::abs(resid));
  if (se > 0.0) c.max_z = std::max(c.max_z, std::abs(resid) / se);
  if (!within(resid, se, mult)) all_ok = false;
}

}  // namespace

CumulantTensors estimate_tensors_mc(const Model& model, const ParamPoint& theta, int n, int reps, std::uint64_t seed,
                                    int threads) {
  const auto R = simulate_derivs(model, theta, n, reps, seed, "tensors", threads);
  const int d = R.d;
  auto c = CumulantTensors::zeros(d, n);
  TensorErrors se;
  se.lam2 = MatrixXd::Zero(d, d);
  se.lam11 = MatrixXd::Zero(d, d);
  se.lam3 = Tensor3(d);
  se.lam21 = Tensor3(d);
  se.lam111 = Tensor3(d);
  const MatrixXd hbar = mean_hessian(R);
  for (int r = 0; r < d; ++r)
    for (int s = 0; s < d; ++s) {
      auto m2 = replicate_mean(R, [&](int i) { return R.H(i, r, s); });
      c.lam2(r, s) = m2.mean;
      se.lam2(r, s) = m2.se;
      auto m11 = replicate_mean(R, [&](int i) { return R.L(i, r) * R.L(i, s); });
      c.lam11(r, s) = m11.mean;
      se.lam11(r, s) = m11.se;
      for (int t = 0; t < d; ++t) {
        auto m3 = replicate_mean(R, [&](int i) { return R.K(i, r, s, t); });
        c.lam3(r, s, t) = m3.mean;
        se.lam3(r, s, t) = m3.se;
        auto m21 = replicate_mean(R, [&](int i) { return (R.H(i, r, s) - hbar(r, s)) * R.L(i, t); });
        c.lam21(r, s, t) = m21.mean;
        se.lam21(r, s, t) = m21.se;
        auto m111 = replicate_mean(R, [&](int i) { return R.L(i, r) * R.L(i, s) * R.L(i, t); });
        c.lam111(r, s, t) = m111.mean;
        se.lam111(r, s, t) = m111.se;
      }
    }
  c.lam2 = 0.5 * (c.lam2 + c.lam2.transpose());
  c.lam11 = 0.5 * (c.lam11 + c.lam11.transpose());
  c.lam3 = c.lam3.symmetrized();
  c.lam21 = c.lam21.symmetrized_first_two();
  c.lam111 = c.lam111.symmetrized();
  c.mc_se = std::move(se);
  return c;
}

static IdentityCheck named_check(std::string name) {
  IdentityCheck c;
  c.name = std::move(name);
  return c;
}

bool IdentityReport::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

IdentityReport check_bartlett_identities(const CumulantTensors& t, double abs_tol) {
  const int d = t.dim();
  IdentityReport rep;
  IdentityCheck c1 = named_check("lam_rs + lam_r,s = 0");
  IdentityCheck c2 = named_check("lam_rst + lam_rs,t + lam_rt,s + lam_st,r + lam_r,s,t = 0");
  c1.rule = c2.rule = "analytic: |residual| <= " + std::to_string(abs_tol);
  for (int r = 0; r < d; ++r)
    for (int s = 0; s < d; ++s) {
      c1.max_residual = std::max(c1.max_residual, std::abs(t.lam2(r, s) + t.lam11(r, s)));
      for (int u = 0; u < d; ++u) {
        const double res = t.lam3(r, s, u) + t.lam21(r, s, u) + t.lam21(r, u, s) + t.lam21(s, u, r) + t.lam111(r, s, u);
        c2.max_residual = std::max(c2.max_residual, std::abs(res));
      }
    }
  c1.pass = c1.max_residual <= abs_tol;
  c2.pass = c2.max_residual <= abs_tol;
  rep.checks = {c1, c2};
  return rep;
}

IdentityCheck check_third_moment_identity(const CumulantTensors& t, double abs_tol) {
  // -E(l_r l_s l_t) = lam_rs,t + lam_rt,s + lam_st,r + lam_rst, with E(l_r l_s l_t) = lam_r,s,t.
  const int d = t.dim();
  IdentityCheck c = named_check("-E(l_r l_s l_t) = lam_rs,t + lam_rt,s + lam_st,r + lam_rst");
  c.rule = "analytic: |residual| <= " + std::to_string(abs_tol);
  for (int r = 0; r < d; ++r)
    for (int s = 0; s < d; ++s)
      for (int u = 0; u < d; ++u) {
        const double rhs = t.lam21(r, s, u) + t.lam21(r, u, s) + t.lam21(s, u, r) + t.lam3(r, s, u);
        c.max_residual = std::max(c.max_residual, std::abs(-t.lam111(r, s, u) - rhs));
      }
  c.pass = c.max_residual <= abs_tol;
  return c;
}

namespace {

// Residual of the second Bartlett identity for replicate i, with l_rs centered.
double bartlett2_term(const ReplicateDerivs& R, const MatrixXd& hbar, int i, int r, int s, int t) {
  auto l2 = [&](int a, int b) { return R.H(i, a, b) - hbar(a, b); };
  return R.K(i, r, s, t) + l2(r, s) * R.L(i, t) + l2(r, t) * R.L(i, s) + l2(s, t) * R.L(i, r) +
         R.L(i, r) * R.L(i, s) * R.L(i, t);
}

}  // namespace

IdentityReport check_bartlett_identities(const Model& model, const ParamPoint& theta, int n, int reps,
                                         std::uint64_t seed, int threads) {
  const auto R = simulate_derivs(model, theta, n, reps, seed, "bartlett-identities", threads);
  const int d = R.d;
  const MatrixXd hbar = mean_hessian(R);
  IdentityReport rep;
  IdentityCheck c1 = named_check("lam_rs + lam_r,s = 0");
  IdentityCheck c2 = named_check("lam_rst + lam_rs,t + lam_rt,s + lam_st,r + lam_r,s,t = 0");
  c1.threshold = c2.threshold = 4.0;
  c1.rule = c2.rule = "every index tuple within max(4 SE, 1e-10) of zero";
  bool ok1 = true, ok2 = true;
  for (int r = 0; r < d; ++r)
    for (int s = r; s < d; ++s) {
      auto m = replicate_mean(R, [&](int i) { return R.H(i, r, s) + R.L(i, r) * R.L(i, s); });
      record(c1, m.mean, m.se, 4.0, ok1);
      for (int t = s; t < d; ++t) {
        auto m2 = replicate_mean(R, [&](int i) { return bartlett2_term(R, hbar, i, r, s, t); });
        record(c2, m2.mean, m2.se, 4.0, ok2);
      }
    }
  c1.pass = ok1;
  c2.pass = ok2;
  rep.checks = {c1, c2};
  return rep;
}

IdentityReport check_moment_identities_mc(const Model& model, const ParamPoint& theta, const std::vector<int>& n_grid,
                                          int reps, std::uint64_t seed, int threads) {
  if (n_grid.empty()) throw ValidationError("n-grid is empty");
  constexpr int kBatches = 50;
  IdentityCheck c3 = named_check("-E(l_r l_s l_t) = lam_rs,t + lam_rt,s + lam_st,r + lam_rst");
  IdentityCheck c4a = named_check("E(l_r l_s l_tu l_v) = -lam_rs lam_tu,v - lam_rv lam_tu,s - lam_sv lam_tu,r + O(n^{3/2})");
  IdentityCheck c4b = named_check("E(l_r l_s l_t l_u) = lam_rs lam_tu + lam_rt lam_su + lam_ru lam_st + O(n^{3/2})");
  c3.threshold = c4a.threshold = c4b.threshold = 4.0;
  c3.rule = "every index tuple within max(4 SE, 1e-10) of zero at every n";
  c4a.rule = c4b.rule =
      "statistically zero (4 batch-means SE) at every n, or log-log slope of max|residual|/n^2 over the n-grid <= -0.2";
  bool ok3 = true;

  for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
    const int n = n_grid[gi];
    const auto R = simulate_derivs(model, theta, n, reps, seed + gi, "moment-identities", threads);
    const int d = R.d;
    const MatrixXd hbar = mean_hessian(R);
    const double n2 = static_cast<double>(n) * n;

    double max3 = 0.0, se3 = 0.0;
    bool zero3 = true;
    for (int r = 0; r < d; ++r)
      for (int s = r; s < d; ++s)
        for (int t = s; t < d; ++t) {
          auto m = replicate_mean(R, [&](int i) { return bartlett2_term(R, hbar, i, r, s, t); });
          record(c3, m.mean, m.se, 4.0, ok3);
          if (!within(m.mean, m.se, 4.0)) zero3 = false;
          if (std::abs(m.mean) >= max3) {
            max3 = std::abs(m.mean);
            se3 = m.se;
          }
        }
    c3.n_grid.push_back(n);
    c3.scaled_residual.push_back(max3 / n2);
    c3.scaled_se.push_back(se3 / n2);
    c3.zero_at_n.push_back(zero3);

    // Fourth-moment identities: statistic per batch, SE from batch spread.
    const int per = R.reps / kBatches;
    auto batch_stats = [&](auto&& stat, int ntuple) {
      // Returns full-sample statistic and batch-means SE for each tuple.
      std::vector<double> full(ntuple), se(ntuple);
      std::vector<std::vector<double>> by_batch(ntuple, std::vector<double>(kBatches));
      for (int b = 0; b < kBatches; ++b) {
        auto v = stat(b * per, (b + 1) * per);
        for (int j = 0; j < ntuple; ++j) by_batch[j][b] = v[j];
      }
      auto v = stat(0, kBatches * per);
      for (int j = 0; j < ntuple; ++j) {
        full[j] = v[j];
        se[j] = mean_se(by_batch[j]).se;
      }
      return std::make_pair(full, se);
    };

    const int d4 = d * d * d * d, d5 = d4 * d;
    auto stat4b = [&](int lo, int hi) {
      std::vector<double> out(d4, 0.0);
      MatrixXd lam2 = MatrixXd::Zero(d, d);
      for (int i = lo; i < hi; ++i)
        for (int r = 0; r < d; ++r)
          for (int s = 0; s < d; ++s) lam2(r, s) += R.H(i, r, s);
      lam2 /= (hi - lo);
      std::vector<double> m4(d4, 0.0);
      for (int i = lo; i < hi; ++i)
        for (int j = 0; j < d4; ++j) {
          const int r = j / (d * d * d), s = (j / (d * d)) % d, t = (j / d) % d, u = j % d;
          m4[j] += R.L(i, r) * R.L(i, s) * R.L(i, t) * R.L(i, u);
        }
      for (int j = 0; j < d4; ++j) {
        const int r = j / (d * d * d), s = (j / (d * d)) % d, t = (j / d) % d, u = j % d;
        out[j] = m4[j] / (hi - lo) - (lam2(r, s) * lam2(t, u) + lam2(r, t) * lam2(s, u) + lam2(r, u) * lam2(s, t));
      }
      return out;
    };
    auto stat4a = [&](int lo, int hi) {
      std::vector<double> out(d5, 0.0);
      MatrixXd lam2 = MatrixXd::Zero(d, d);
      for (int i = lo; i < hi; ++i)
        for (int r = 0; r < d; ++r)
          for (int s = 0; s < d; ++s) lam2(r, s) += R.H(i, r, s);
      lam2 /= (hi - lo);
      Tensor3 lam21(d);
      std::vector<double> m5(d5, 0.0);
      for (int i = lo; i < hi; ++i) {
        for (int t = 0; t < d; ++t)
          for (int u = 0; u < d; ++u)
            for (int v = 0; v < d; ++v) lam21(t, u, v) += (R.H(i, t, u) - hbar(t, u)) * R.L(i, v);
        for (int j = 0; j < d5; ++j) {
          const int r = j / (d4), s = (j / (d * d * d)) % d, t = (j / (d * d)) % d, u = (j / d) % d, v = j % d;
          m5[j] += R.L(i, r) * R.L(i, s) * (R.H(i, t, u) - hbar(t, u)) * R.L(i, v);
        }
      }
      lam21 *= 1.0 / (hi - lo);
      for (int j = 0; j < d5; ++j) {
        const int r = j / (d4), s = (j / (d * d * d)) % d, t = (j / (d * d)) % d, u = (j / d) % d, v = j % d;
        out[j] = m5[j] / (hi - lo) + lam2(r, s) * lam21(t, u, v) + lam2(r, v) * lam21(t, u, s) + lam2(s, v) * lam21(t, u, r);
      }
      return out;
    };

    auto fold = [&](IdentityCheck& c, const std::pair<std::vector<double>, std::vector<double>>& fs) {
      double mx = 0.0, mse = 0.0;
      bool zero = true;
      for (std::size_t j = 0; j < fs.first.size(); ++j) {
        const double res = fs.first[j], se = fs.second[j];
        c.max_residual = std::max(c.max_residual, std::abs(res));
        if (se > 0.0) c.max_z = std::max(c.max_z, std::abs(res) / se);
        if (!within(res, se, 4.0)) zero = false;
        if (std::abs(res) >= mx) {
          mx = std::abs(res);
          mse = se;
        }
      }
      c.n_grid.push_back(n);
      c.scaled_residual.push_back(mx / n2);
      c.scaled_se.push_back(mse / n2);
      c.zero_at_n.push_back(zero);
    };
    fold(c4a, batch_stats(stat4a, d5));
    fold(c4b, batch_stats(stat4b, d4));
  }

  c3.pass = ok3;
  for (IdentityCheck* c : {&c3, &c4a, &c4b}) {
    bool all_zero = true, positive = true;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < c->n_grid.size(); ++i) {
      all_zero = all_zero && c->zero_at_n[i];
      positive = positive && c->scaled_residual[i] > 0.0;
      x.push_back(std::log(static_cast<double>(c->n_grid[i])));
      y.push_back(std::log(std::max(c->scaled_residual[i], 1e-300)));
    }
    if (positive && x.size() >= 2) {
      const auto f = ols(x, y);
      c->slope = f.slope;
      c->slope_se = f.slope_se;
    }
    if (c != &c3) c->pass = all_zero || (positive && x.size() >= 2 && c->slope <= -0.2);
  }
  IdentityReport rep;
  rep.checks = {c3, c4a, c4b};
  return rep;
}

double rho(const CumulantTensors& t, const DerivedTensors& d) {
  // K_uv = a_r (lam_ruv / 2 + lam_{ru,v}), then contract with nu.
  const VectorXd a = d.a();
  const MatrixXd K = 0.5 * t.lam3.contract_first(a) + t.lam21.contract_first(a);
  return -d.eta * (d.nu.array() * K.array()).sum();
}

}  // namespace likstab
