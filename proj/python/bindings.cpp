#include "likstab/cli.hpp"
#include "likstab/errors.hpp"
#include "likstab/pivots.hpp"
#include "likstab/theory.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace likstab;

namespace {

std::shared_ptr<const Model> model_named(const std::string& name) { return make_model(ModelSpec::parse(name)); }

Dataset dataset(const std::shared_ptr<const Model>& m, const MatrixXd& y) {
  // A flat array arrives as a column vector.
  Dataset d(y);
  m->check_data(d);
  return d;
}

ParamPoint point(const std::shared_ptr<const Model>& m, const VectorXd& theta) { return make_param(*m, theta); }

std::optional<AdjustmentSpec> adjustment(const std::string& kind, const std::string& prior) {
  if (kind == "none") return std::nullopt;
  if (kind != "tierney-kadane") throw ValidationError("adjustment must be none or tierney-kadane");
  return AdjustmentSpec::tierney_kadane(prior_by_name(prior));
}

py::dict fit_dict(const FitResult& f) {
  py::dict d;
  d["theta_hat"] = f.theta_hat.values;
  d["loglik"] = f.loglik;
  d["observed_info"] = f.observed_info;
  d["converged"] = f.converged;
  d["iterations"] = f.iterations;
  return d;
}

py::dict condition_dict(const ConditionReport& c) {
  py::dict d;
  d["id"] = to_string(c.id);
  d["residual"] = c.residual;
  d["scale"] = c.scale;
  d["threshold"] = c.threshold;
  d["passed"] = c.pass;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<Model, std::shared_ptr<Model>>(m, "Model")
      .def_property_readonly("name", [](const Model& self) { return self.spec().name(); })
      .def_property_readonly("dim", &Model::dim);
  m.def("model", [](const std::string& name) { return std::const_pointer_cast<Model>(model_named(name)); },
        py::arg("name"));

  m.def(
      "simulate",
      [](const std::string& name, const VectorXd& theta, int n, std::uint64_t seed) {
        const auto mod = model_named(name);
        return simulate(*mod, point(mod, theta), n, seed).obs;
      },
      py::arg("model"), py::arg("theta"), py::arg("n"), py::arg("seed"));

  m.def(
      "fit",
      [](const std::string& name, const MatrixXd& y) {
        const auto mod = model_named(name);
        return fit_dict(fit_global(*mod, dataset(mod, y)));
      },
      py::arg("model"), py::arg("y"));

  m.def(
      "pivots",
      [](const std::string& name, const MatrixXd& y, double psi0, const std::vector<std::string>& kinds,
         const std::string& adj, const std::string& prior) {
        const auto mod = model_named(name);
        std::vector<PivotKind> ks;
        for (const auto& k : kinds) ks.push_back(parse_pivot_kind(k));
        py::dict out;
        for (const auto& p : evaluate_pivots(ks, *mod, dataset(mod, y), psi0, adjustment(adj, prior)))
          out[py::str(to_string(p.kind))] = p.value;
        return out;
      },
      py::arg("model"), py::arg("y"), py::arg("psi0"), py::arg("kinds") = std::vector<std::string>{"r"},
      py::arg("adjustment") = "none", py::arg("prior") = "flat");

  m.def(
      "equivalence_check",
      [](const std::string& name, const VectorXd& theta, int n, const std::string& a, const std::string& b,
         const std::string& wec) {
        const auto mod = model_named(name);
        const auto t = model_tensors(*mod, point(mod, theta), n);
        const auto d = derive(t);
        const auto w = parse_wec_variant(wec);
        const auto [c1, c2] = equivalence_check(expansion_coefficients(parse_pivot_kind(a), t, d, std::nullopt, w),
                                                expansion_coefficients(parse_pivot_kind(b), t, d, std::nullopt, w), t, d);
        return py::make_tuple(condition_dict(c1), condition_dict(c2));
      },
      py::arg("model"), py::arg("theta"), py::arg("n"), py::arg("a"), py::arg("b"), py::arg("wec") = "derived");

  m.def(
      "stability_check",
      [](const std::string& name, const VectorXd& theta, int n, const std::string& kind) {
        const auto mod = model_named(name);
        const auto t = model_tensors(*mod, point(mod, theta), n);
        const auto d = derive(t);
        return condition_dict(stability_check(expansion_coefficients(parse_pivot_kind(kind), t, d), d));
      },
      py::arg("model"), py::arg("theta"), py::arg("n"), py::arg("kind"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));

  m.attr("REPORT_VERSION") = cli::kReportVersion;
}
