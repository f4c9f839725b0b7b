#include "helpers.hpp"

#include "likstab/errors.hpp"
#include "likstab/fit.hpp"
#include "likstab/stats.hpp"
#include "likstab/tensors.hpp"

#include <doctest.h>

#include <cmath>

using namespace likstab;

namespace {

double naive_rho(const CumulantTensors& t, const DerivedTensors& d) {
  const int n = t.dim();
  double s = 0.0;
  for (int r = 0; r < n; ++r)
    for (int u = 0; u < n; ++u)
      for (int v = 0; v < n; ++v)
        s += d.lam_up(0, r) * d.nu(u, v) * (0.5 * t.lam3(r, u, v) + t.lam21(r, u, v));
  return -d.eta * s;
}

std::shared_ptr<const Model> model(const std::string& name) { return make_model(ModelSpec::parse(name)); }

}  // namespace

TEST_SUITE("tensors") {
  TEST_CASE("derived quantities, scalar case") {
    auto t = CumulantTensors::zeros(1, 10);
    t.lam2(0, 0) = -10.0;
    const auto d = derive(t);
    CHECK(d.lam_up(0, 0) == doctest::Approx(-0.1));
    CHECK(d.eta == doctest::Approx(10.0));
    CHECK(d.tau(0, 0) == doctest::Approx(0.1));
    CHECK(std::abs(d.nu(0, 0)) < 1e-15);
  }

  TEST_CASE("derived quantities, normal model") {
    const auto t = *exact_tensors(*model("normal-mv"), ParamPoint{0.0, 1.0}, 8);
    CHECK(t.lam2(0, 0) == doctest::Approx(-8.0));
    CHECK(t.lam2(1, 1) == doctest::Approx(-4.0));
    CHECK(t.lam2(0, 1) == 0.0);
    const auto d = derive(t);
    CHECK(d.lam_up(0, 0) == doctest::Approx(-1.0 / 8.0));
    CHECK(d.eta == doctest::Approx(8.0));
    CHECK(d.tau(0, 0) == doctest::Approx(1.0 / 8.0));
    CHECK(d.tau(1, 1) == 0.0);
    CHECK(std::abs(d.nu(0, 0)) < 1e-15);
    CHECK(d.nu(1, 1) == doctest::Approx(-0.25));
  }

  TEST_CASE("tau_11 equals 1/eta and nu has a zero interest entry") {
    std::mt19937_64 g(5);
    for (int i = 0; i < 20; ++i) {
      const auto t = testing::random_tensors(2 + i % 3, g);
      const auto d = derive(t);
      CHECK(std::abs(d.tau(0, 0) - 1.0 / d.eta) <= 1e-12 * std::abs(d.lam_up(0, 0)));
      CHECK(std::abs(d.tau(0, 0) + d.lam_up(0, 0)) <= 1e-12 * std::abs(d.lam_up(0, 0)));
      CHECK(std::abs(d.nu(0, 0)) <= 1e-12 * std::abs(d.lam_up(0, 0)));
      CHECK((d.lam_up * t.lam2 - MatrixXd::Identity(t.dim(), t.dim())).cwiseAbs().maxCoeff() < 1e-10);
    }
  }

  TEST_CASE("derive rejects a singular lam2") {
    auto t = CumulantTensors::zeros(2, 5);
    t.lam2 << -1.0, -1.0, -1.0, -1.0;
    CHECK_THROWS_AS(derive(t), NumericalError);
  }

  TEST_CASE("eta rescales under a change of units and the standardized score does not") {
    // Exponential rate theta versus theta' = c theta: L'_1 = L_1 / c, lam'_11 = lam_11 / c^2.
    const auto m = model("exponential");
    const Dataset data = simulate(*m, ParamPoint{2.0}, 15, 1);
    const double c = 3.0;
    const auto t = *exact_tensors(*m, ParamPoint{2.0}, 15);
    auto tc = t;
    tc.lam2 /= c * c;
    const auto d = derive(t), dc = derive(tc);
    CHECK(dc.eta == doctest::Approx(d.eta / (c * c)));
    const double l1 = loglik_derivs(*m, ParamPoint{2.0}, data, 1).grad(0);
    CHECK(std::sqrt(dc.eta) * (-dc.a()(0) * l1 / c) == doctest::Approx(std::sqrt(d.eta) * (-d.a()(0) * l1)));
  }

  TEST_CASE("simulated tensors agree with the analytic ones") {
    const auto e = estimate_tensors_mc(*model("exponential"), ParamPoint{2.0}, 10, 100000, 7);
    CHECK(std::abs(e.lam2(0, 0) + 2.5) <= 4 * e.mc_se->lam2(0, 0) + 1e-12);

    const auto nm = model("normal-mv");
    const auto t1 = estimate_tensors_mc(*nm, ParamPoint{0.0, 1.0}, 8, 100000, 7);
    CHECK(std::abs(t1.lam2(0, 1)) <= 4 * t1.mc_se->lam2(0, 1));

    const auto small = estimate_tensors_mc(*nm, ParamPoint{0.0, 1.0}, 8, 25000, 8);
    const double ratio = small.mc_se->lam111(1, 1, 1) / t1.mc_se->lam111(1, 1, 1);
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.2));
    const double ratio2 = small.mc_se->lam21(0, 1, 1) / t1.mc_se->lam21(0, 1, 1);
    CHECK(ratio2 == doctest::Approx(2.0).epsilon(0.2));

    // Declared symmetries hold exactly after estimation.
    for (int r = 0; r < 2; ++r)
      for (int s = 0; s < 2; ++s)
        for (int u = 0; u < 2; ++u) {
          CHECK(t1.lam21(r, s, u) == t1.lam21(s, r, u));
          CHECK(t1.lam3(r, s, u) == t1.lam3(u, r, s));
          CHECK(t1.lam111(r, s, u) == t1.lam111(s, u, r));
        }
  }

  TEST_CASE("simulation rejects too few replicates") {
    CHECK_THROWS_AS(estimate_tensors_mc(*model("exponential"), ParamPoint{2.0}, 10, 50, 1), ValidationError);
  }

  TEST_CASE("Bartlett identities") {
    const auto t = *exact_tensors(*model("exponential"), ParamPoint{2.0}, 10);
    // lam_111 + 3 lam_11,1 + lam_1,1,1 = 2.5 + 0 - 2.5.
    CHECK(t.lam3(0, 0, 0) == doctest::Approx(2.5));
    CHECK(t.lam21(0, 0, 0) == 0.0);
    CHECK(t.lam111(0, 0, 0) == doctest::Approx(-2.5));
    CHECK(check_bartlett_identities(t).all_pass());

    const auto mc = check_bartlett_identities(*model("normal-mv"), ParamPoint{0.0, 1.0}, 10, 100000, 3);
    CHECK(mc.all_pass());

    const auto z = check_bartlett_identities(CumulantTensors::zeros(3, 5));
    for (const auto& c : z.checks) CHECK(c.max_residual == 0.0);

    // A tensor set violating the first identity is caught.
    auto bad = t;
    bad.lam11(0, 0) += 1e-6;
    CHECK_FALSE(check_bartlett_identities(bad).all_pass());
  }

  TEST_CASE("moment identities") {
    CHECK(check_third_moment_identity(*exact_tensors(*model("exponential"), ParamPoint{2.0}, 10)).pass);

    const auto r = check_moment_identities_mc(*model("normal-mv"), ParamPoint{0.0, 1.0}, {20, 40, 80}, 100000, 9);
    REQUIRE(r.checks.size() == 3);
    for (const auto& c : r.checks) {
      CAPTURE(c.name);
      CHECK(c.pass);
    }
    // Fourth-moment residual scaled by n^2 decreases along the grid.
    const auto& c4 = r.checks[2];
    CHECK(c4.scaled_residual[2] < c4.scaled_residual[0]);

    // Known-variance normal mean: l_11 = 0 and the score is Gaussian, so both
    // sides of the third-moment identity vanish.
    const auto t = *exact_tensors(*model("normal-mean"), ParamPoint{0.0}, 10);
    CHECK(t.lam21(0, 0, 0) == 0.0);
    CHECK(t.lam111(0, 0, 0) == 0.0);
    CHECK(check_third_moment_identity(t).max_residual == 0.0);
  }

  TEST_CASE("rho") {
    auto t1 = *exact_tensors(*model("exponential"), ParamPoint{2.0}, 10);
    CHECK(std::abs(rho(t1, derive(t1))) < 1e-15);

    const auto tn = *exact_tensors(*model("normal-mv"), ParamPoint{0.3, 1.7}, 12);
    const auto dn = derive(tn);
    CHECK(std::abs(rho(tn, dn) - naive_rho(tn, dn)) < 1e-12);

    std::mt19937_64 g(1);
    for (int i = 0; i < 20; ++i) {
      const auto t = testing::random_tensors(2 + i % 3, g, 1);
      const auto d = derive(t);
      CHECK(std::abs(rho(t, d) - naive_rho(t, d)) < 1e-12 * std::max(1.0, std::abs(naive_rho(t, d))));
    }
  }

  TEST_CASE("rho predicts the bias of the profile score") {
    const auto m = model("gamma");
    const ParamPoint th{3.0, 1.5};
    const int n = 50, reps = 100000;
    const auto t = *exact_tensors(*m, th, n);
    const double r = rho(t, derive(t));
    std::vector<double> m1(reps);
    for (int i = 0; i < reps; ++i) {
      auto gen = make_stream(11, "rho-check", i);
      const Dataset data = simulate(*m, th, n, gen);
      const auto p = fit_constrained(*m, data, th[0]);
      m1[i] = p.M1(0);
    }
    const auto ms = mean_se(m1);
    CAPTURE(r);
    CAPTURE(ms.mean);
    CAPTURE(ms.se);
    CHECK(std::abs(r + ms.mean) <= 4 * ms.se);
  }
}
