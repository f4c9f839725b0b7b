#include "likstab/cli.hpp"

#include "likstab/errors.hpp"
#include "likstab/parallel.hpp"
#include "likstab/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace likstab::cli {

namespace {

using nlohmann::json;

enum class FieldType { string, integer, seed, number, numbers, integers, strings };

struct Field {
  std::string name;
  FieldType type;
  json fallback;  // null means required
  std::string help;
};

const json kRequired = nullptr;

Field f_model{"model", FieldType::string, kRequired, "model name, e.g. normal-mv, exponential, location-scale:t5"};
Field f_seed{"seed", FieldType::seed, kRequired, "master seed (mandatory)"};
Field f_out{"out", FieldType::string, "", "report path (default: stdout)"};
Field f_csv{"csv", FieldType::string, "", "CSV table path"};
Field f_data{"data", FieldType::string, "", "CSV data file (header row, one observation per line)"};
Field f_theta{"theta", FieldType::numbers, json::array(), "parameter point, interest first"};
Field f_n{"n", FieldType::integer, 0, "sample size"};
Field f_psi0{"psi0", FieldType::number, kRequired, "null value of the interest parameter"};
Field f_pivots{"pivot", FieldType::strings, json::array({"r"}), "pivot kinds"};
Field f_pivot_one{"pivot", FieldType::string, "r", "pivot kind"};
Field f_all_pivots{"pivot", FieldType::strings, json::array(), "pivot kinds (default: all)"};
Field f_B{"B", FieldType::integer, 2000, "bootstrap replicates (0 disables)"};
Field f_adjustment{"adjustment", FieldType::string, "none", "none or tierney-kadane"};
Field f_prior{"prior", FieldType::string, "flat", "flat or inverse-scale"};
Field f_beta1{"beta1", FieldType::string, "analytic", "analytic, rho or mc"};
Field f_cf_mode{"cf_mode", FieldType::string, "observed_pivot", "observed_pivot or reconstructed"};
Field f_tail{"tail", FieldType::string, "upper", "upper or lower"};
Field f_wec{"wec", FieldType::string, "derived", "derived, printed or printed_without_duplicate"};
Field f_pair{"pair", FieldType::strings, kRequired, "two pivot kinds"};
Field f_threshold{"threshold", FieldType::number, 1e-8, "relative tolerance"};
Field f_reps{"reps", FieldType::integer, 5000, "replicates"};
Field f_factor_reps{"factor_reps", FieldType::integer, 0, "replicates for the factor (0: same as reps)"};
Field f_n_grid{"n_grid", FieldType::integers, kRequired, "sample sizes"};
Field f_outer{"outer", FieldType::integer, 1000, "outer replicates per n"};
Field f_mode{"mode", FieldType::string, "cf", "cf or bootstrap"};
Field f_configs{"configs", FieldType::integer, 200, "ancillary configurations per n"};
Field f_nodes{"nodes", FieldType::integer, 201, "quadrature nodes per axis"};
Field f_half_width{"half_width", FieldType::number, 6.0, "grid half width in standard errors"};
Field f_statistic{"statistic", FieldType::string, "bootstrap_pivot", "bootstrap_pivot or unscaled_t1"};
Field f_claim{"claim", FieldType::number, nullptr, "claimed slope (default: from the equivalence conditions)"};

struct Command {
  std::string name;
  std::string help;
  std::vector<Field> fields;
};

std::vector<Command> commands() {
  const std::vector<Field> common{f_model, f_seed, f_out, f_csv};
  auto with = [&](std::vector<Field> extra) {
    auto v = common;
    v.insert(v.end(), extra.begin(), extra.end());
    return v;
  };
  return {
      {"fit", "maximum likelihood fit", with({f_data, f_theta, f_n})},
      {"pivot", "pivot values with Cornish-Fisher and bootstrap p-values",
       with({f_data, f_theta, f_n, f_psi0, f_pivots, f_B, f_adjustment, f_prior, f_beta1, f_cf_mode, f_tail, f_wec})},
      {"equiv-check", "equivalence conditions for a pivot pair", with({f_theta, f_n, f_pair, f_wec, f_threshold})},
      {"stability-check", "stability condition per pivot kind", with({f_theta, f_n, f_all_pivots, f_wec, f_threshold})},
      {"bartlett", "simulated Bartlett correction of W", with({f_theta, f_n, f_reps, f_factor_reps, f_adjustment, f_prior})},
      {"verify-order", "order of agreement of two pivots' p-values",
       with({f_theta, f_n_grid, f_outer, f_pair, f_mode, f_B, f_adjustment, f_prior, f_cf_mode, f_tail, f_wec, f_claim})},
      {"verify-stability", "conditional versus unconditional behaviour in location-scale models",
       with({f_theta, f_n_grid, f_configs, f_pivots, f_adjustment, f_prior, f_nodes, f_half_width})},
      {"verify-uniformity", "uniformity of bootstrap p-values under the null",
       with({f_theta, f_n, f_outer, f_B, f_pivot_one, f_statistic})},
  };
}

std::string flag_name(const std::string& field) {
  std::string s = field;
  std::replace(s.begin(), s.end(), '_', '-');
  return s;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
  }
  return out;
}

double parse_number(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(where + ": expected a number, got '" + s + "'");
  }
}

long long parse_integer(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(where + ": expected an integer, got '" + s + "'");
  }
}

json from_flag(const Field& f, const std::string& text) {
  const std::string where = "--" + flag_name(f.name);
  switch (f.type) {
    case FieldType::string: return text;
    case FieldType::integer: return parse_integer(text, where);
    case FieldType::seed: {
      if (text.empty() || text[0] == '-') throw ValidationError(where + ": expected a non-negative integer");
      try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return v;
      } catch (const std::exception&) {
        throw ValidationError(where + ": expected a non-negative integer, got '" + text + "'");
      }
    }
    case FieldType::number: return parse_number(text, where);
    case FieldType::numbers: {
      json a = json::array();
      for (const auto& s : split_list(text)) a.push_back(parse_number(s, where));
      return a;
    }
    case FieldType::integers: {
      json a = json::array();
      for (const auto& s : split_list(text)) a.push_back(parse_integer(s, where));
      return a;
    }
    case FieldType::strings: {
      json a = json::array();
      for (const auto& s : split_list(text)) a.push_back(s);
      return a;
    }
  }
  return nullptr;
}

void check_type(const Field& f, const json& v, const std::string& path) {
  auto fail = [&](const std::string& what) { throw ValidationError(path + ": expected " + what); };
  switch (f.type) {
    case FieldType::string:
      if (!v.is_string()) fail("a string");
      break;
    case FieldType::integer:
      if (!v.is_number_integer()) fail("an integer");
      break;
    case FieldType::seed:
      if (!v.is_number_unsigned()) fail("a non-negative integer");
      break;
    case FieldType::number:
      if (!v.is_number() && !(v.is_null() && f.fallback.is_null())) fail("a number");
      break;
    case FieldType::numbers:
    case FieldType::integers:
    case FieldType::strings: {
      if (!v.is_array()) fail("an array");
      for (std::size_t i = 0; i < v.size(); ++i) {
        const auto p = path + "[" + std::to_string(i) + "]";
        if (f.type == FieldType::numbers && !v[i].is_number()) throw ValidationError(p + ": expected a number");
        if (f.type == FieldType::integers && !v[i].is_number_integer()) throw ValidationError(p + ": expected an integer");
        if (f.type == FieldType::strings && !v[i].is_string()) throw ValidationError(p + ": expected a string");
      }
      break;
    }
  }
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

// Field accessors on the resolved config.
std::string get_s(const json& c, const char* k) { return c.at(k).get<std::string>(); }
int get_i(const json& c, const char* k) { return c.at(k).get<int>(); }
double get_d(const json& c, const char* k) { return c.at(k).get<double>(); }

int positive(const json& c, const char* k) {
  const int v = get_i(c, k);
  if (v <= 0) throw ValidationError(std::string("config.") + k + ": must be positive");
  return v;
}

ParamPoint theta_from(const json& c, const Model& model) {
  const auto& t = c.at("theta");
  if (t.empty()) throw ValidationError("config.theta: required for this subcommand");
  if (static_cast<int>(t.size()) != model.dim())
    throw ValidationError("config.theta: model " + model.spec().name() + " has " + std::to_string(model.dim()) +
                          " parameters, got " + std::to_string(t.size()));
  VectorXd v(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) v(i) = t[i].get<double>();
  auto p = make_param(model, v);
  model.check_param(p);
  return p;
}

std::vector<PivotKind> kinds_from(const json& c, const char* key) {
  std::vector<PivotKind> out;
  for (std::size_t i = 0; i < c.at(key).size(); ++i) {
    try {
      out.push_back(parse_pivot_kind(c.at(key)[i].get<std::string>()));
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("config.") + key + "[" + std::to_string(i) + "]: " + e.what());
    }
  }
  return out;
}

std::optional<AdjustmentSpec> adjustment_from(const json& c) {
  const auto a = get_s(c, "adjustment");
  if (a == "none") return std::nullopt;
  if (a != "tierney-kadane") throw ValidationError("config.adjustment: expected none or tierney-kadane, got '" + a + "'");
  try {
    return AdjustmentSpec::tierney_kadane(prior_by_name(get_s(c, "prior")));
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("config.prior: ") + e.what());
  }
}

json vec_json(const VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json mat_json(const MatrixXd& m) {
  json a = json::array();
  for (int i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
  return a;
}

json fit_json(const FitResult& f) {
  return {{"theta_hat", vec_json(f.theta_hat.values)}, {"loglik", f.loglik},         {"observed_info", mat_json(f.observed_info)},
          {"converged", f.converged},                  {"iterations", f.iterations}, {"grad_norm", f.grad_norm}};
}

json condition_json(const ConditionReport& r) {
  return {{"condition", to_string(r.id)}, {"residual", r.residual}, {"scale", r.scale}, {"threshold", r.threshold}, {"pass", r.pass}};
}

json slope_json(const SlopeReport& r) {
  json j = {{"name", r.name},
            {"n_grid", r.n_grid},
            {"metric", r.metric},
            {"metric_se", r.metric_se},
            {"failures", r.failures},
            {"dropped", r.dropped},
            {"slope", r.slope_defined ? json(r.slope) : json(nullptr)},
            {"slope_se", r.slope_defined ? json(r.slope_se) : json(nullptr)},
            {"intercept", r.slope_defined ? json(r.intercept) : json(nullptr)},
            {"rule", r.rule.describe()},
            {"verdict", to_string(r.verdict)},
            {"note", r.note}};
  if (!r.quad_error.empty()) j["quad_error"] = r.quad_error;
  return j;
}

void write_slope_csv(const std::string& path, const std::vector<SlopeReport>& reports) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot write '" + path + "'");
  os << std::setprecision(17) << "name,n,metric,metric_se,quad_error,failures,dropped\n";
  for (const auto& r : reports)
    for (std::size_t k = 0; k < r.n_grid.size(); ++k)
      os << '"' << r.name << "\"," << r.n_grid[k] << ',' << r.metric[k] << ',' << r.metric_se[k] << ','
         << (k < r.quad_error.size() ? r.quad_error[k] : 0.0) << ',' << r.failures[k] << ',' << (r.dropped[k] ? 1 : 0)
         << '\n';
}

struct Outcome {
  json results;
  json diagnostics = json::object();
  json streams = json::array();
};

Dataset data_from(const json& c, const Model& model, Outcome& o) {
  const bool has_data = !get_s(c, "data").empty();
  const bool has_sim = get_i(c, "n") > 0 || !c.at("theta").empty();
  if (has_data == has_sim) throw ValidationError("config: give exactly one of data or a simulation spec (n and theta)");
  if (has_data) {
    Dataset d = read_csv(get_s(c, "data"));
    model.check_data(d);
    return d;
  }
  const int n = positive(c, "n");
  const auto theta = theta_from(c, model);
  o.streams.push_back("cli-data");
  auto gen = make_stream(c.at("seed").get<std::uint64_t>(), "cli-data", 0);
  Dataset d = simulate(model, theta, n, gen);
  return d;
}

Outcome cmd_fit(const json& c) {
  Outcome o;
  const auto model = make_model(ModelSpec::parse(get_s(c, "model")));
  const Dataset data = data_from(c, *model, o);
  const auto fit = fit_global(*model, data);
  require_converged(fit);
  o.results = fit_json(fit);
  o.results["n"] = data.n();
  return o;
}

Outcome cmd_pivot(const json& c) {
  Outcome o;
  const auto model = make_model(ModelSpec::parse(get_s(c, "model")));
  const Dataset data = data_from(c, *model, o);
  const double psi0 = get_d(c, "psi0");
  const auto kinds = kinds_from(c, "pivot");
  const auto adj = adjustment_from(c);
  const int B = get_i(c, "B");
  if (B != 0 && B < 500) throw ValidationError("config.B: must be 0 or at least 500");
  CfOptions cf;
  cf.mode = parse_cf_mode(get_s(c, "cf_mode"));
  cf.tail = parse_tail(get_s(c, "tail"));
  const auto wec = parse_wec_variant(get_s(c, "wec"));
  const auto seed = c.at("seed").get<std::uint64_t>();

  const auto pv = evaluate_pivots(kinds, *model, data, psi0, adj);
  const ParamPoint& th = pv.front().profile.theta_tilde;
  const int n = data.n();
  const auto t = model_tensors(*model, th, n);
  const auto d = derive(t);
  std::optional<AdjustmentInfo> info;
  if (adj) {
    const auto mode = get_s(c, "beta1");
    if (mode == "analytic")
      info = beta1(*adj, t, d, *model, th, n, Beta1Mode::analytic);
    else if (mode == "rho")
      info = beta1_from_rho(t, d);
    else if (mode == "mc") {
      o.streams.push_back("beta1");
      info = beta1(*adj, t, d, *model, th, n, Beta1Mode::mc, {std::max(B, 100), seed, 0});
    } else
      throw ValidationError("config.beta1: expected analytic, rho or mc, got '" + mode + "'");
  }

  json rows = json::array();
  for (const auto& p : pv) {
    const auto coeff = expansion_coefficients(p.kind, t, d, info, wec);
    const auto r = cf_pvalue(p, coeff, t, d, *model, data, th, cf);
    json row = {{"kind", to_string(p.kind)},
                {"value", p.value},
                {"cf_p", r.p},
                {"cf", {{"T", r.T}, {"T1", r.T1}, {"T2", r.T2}, {"k1", r.k.k1}, {"k3", r.k.k3}, {"argument", r.argument}}}};
    if (B > 0) {
      BootstrapOptions bo;
      bo.B = B;
      bo.seed = seed;
      bo.tail = cf.tail;
      bo.adjustment = adj;
      const auto b = bootstrap_pvalue(p.kind, *model, data, psi0, bo);
      row["bootstrap_p"] = b.p;
      row["bootstrap_mc_se"] = b.mc_se;
      o.diagnostics["bootstrap_failed_" + to_string(p.kind)] = b.failed;
    }
    if (p.adjusted)
      row["adjusted"] = {{"psi_bar", p.adjusted->psi_bar},
                         {"adjusted_profile_max", p.adjusted->adjusted_profile_max},
                         {"Mbar11", p.adjusted->Mbar11_at_max}};
    rows.push_back(row);
  }
  if (B > 0) o.streams.push_back("bootstrap");
  o.results = {{"psi0", psi0},
               {"n", n},
               {"fit", fit_json(pv.front().fit)},
               {"profile",
                {{"theta_tilde", vec_json(th.values)},
                 {"profile_loglik", pv.front().profile.profile_loglik},
                 {"M1", pv.front().profile.M1(0)}}},
               {"pivots", rows}};
  if (info) o.results["beta1"] = {{"value", info->beta1}, {"source", to_string(info->source)}, {"mc_se", info->mc_se}};
  return o;
}

Outcome cmd_equiv(const json& c) {
  Outcome o;
  const auto model = make_model(ModelSpec::parse(get_s(c, "model")));
  const auto theta = theta_from(c, *model);
  const int n = positive(c, "n");
  const auto pair = kinds_from(c, "pair");
  if (pair.size() != 2) throw ValidationError("config.pair: expected exactly two pivot kinds");
  const auto wec = parse_wec_variant(get_s(c, "wec"));
  const auto t = model_tensors(*model, theta, n);
  const auto d = derive(t);
  const AdjustmentInfo zero{};
  const auto [c1, c2] = equivalence_check(expansion_coefficients(pair[0], t, d, zero, wec),
                                          expansion_coefficients(pair[1], t, d, zero, wec), t, d, get_d(c, "threshold"));
  o.results = {{"pair", {to_string(pair[0]), to_string(pair[1])}},
               {"conditions", {condition_json(c1), condition_json(c2)}},
               {"pass", c1.pass && c2.pass}};
  return o;
}

Outcome cmd_stability_check(const json& c) {
  Outcome o;
  const auto model = make_model(ModelSpec::parse(get_s(c, "model")));
  const auto theta = theta_from(c, *model);
  const int n = positive(c, "n");
  auto kinds = kinds_from(c, "pivot");
  if (kinds.empty()) kinds = all_pivot_kinds();
  const auto wec = parse_wec_variant(get_s(c, "wec"));
  const auto t = model_tensors(*model, theta, n);
  const auto d = derive(t);
  json rows = json::array();
  for (auto k : kinds) {
    auto r = condition_json(stability_check(expansion_coefficients(k, t, d, AdjustmentInfo{}, wec), d, get_d(c, "threshold")));
    r["kind"] = to_string(k);
    rows.push_back(r);
  }
  o.results = {{"checks", rows}};
  return o;
}

json bartlett_json(const BartlettReport& r) {
  return {{"q", r.q},
          {"n", r.n},
          {"reps", r.reps},
          {"adjusted", r.adjusted},
          {"mean_before", r.mean_before},
          {"se_before", r.se_before},
          {"factor", r.factor.factor},
          {"omega_hat", r.factor.omega_hat},
          {"factor_mc_se", r.factor.mc_se},
          {"mean_after", r.mean_after},
          {"se_after", r.se_after},
          {"ks_before", r.ks_before},
          {"ks_p_before", r.ks_p_before},
          {"ks_after", r.ks_after},
          {"ks_p_after", r.ks_p_after},
          {"pass", r.pass}};
}

Outcome cmd_bartlett(const json& c, int threads) {
  Outcome o;
  const auto model = make_model(ModelSpec::parse(get_s(c, "model")));
  const auto theta = theta_from(c, *model);
  const auto r = bartlett_experiment(*model, theta, positive(c, "n"), positive(c, "reps"), c.at("seed").get<std::uint64_t>(),
                                     adjustment_from(c), threads, get_i(c, "factor_reps"));
  o.results = bartlett_json(r);
  o.streams = {"bartlett-w", "bartlett-factor"};
  return o;
}

std::vector<int> grid_from(const json& c) {
  std::vector<int> g = c.at("n_grid").get<std::vector<int>>();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i] <= 0) throw ValidationError("config.n_grid[" + std::to_string(i) + "]: must be positive");
  return g;
}

Outcome cmd_verify_order(const json& c, int threads) {
  Outcome o;
  ExperimentConfig cfg;
  cfg.model = ModelSpec::parse(get_s(c, "model"));
  const auto model = make_model(cfg.model);
  cfg.theta0 = theta_from(c, *model);
  cfg.n_grid = grid_from(c);
  cfg.outer = positive(c, "outer");
  const auto pair = kinds_from(c, "pair");
  if (pair.size() != 2) throw ValidationError("config.pair: expected exactly two pivot kinds");
  cfg.kind_a = pair[0];
  cfg.kind_b = pair[1];
  cfg.mode = parse_agreement_mode(get_s(c, "mode"));
  cfg.seed = c.at("seed").get<std::uint64_t>();
  cfg.threads = threads;
  cfg.B = get_i(c, "B");
  cfg.adjustment = adjustment_from(c);
  cfg.cf.mode = parse_cf_mode(get_s(c, "cf_mode"));
  cfg.cf.tail = parse_tail(get_s(c, "tail"));
  cfg.wec = parse_wec_variant(get_s(c, "wec"));
  if (!c.at("claim").is_null()) cfg.rule = SlopeRule::within(get_d(c, "claim"));
  const auto r = order_of_agreement(cfg);
  o.results = slope_json(r);
  for (int n : cfg.n_grid) {
    o.streams.push_back("order-outer-" + std::to_string(n));
    if (cfg.mode == AgreementMode::bootstrap) o.streams.push_back("order-boot-" + std::to_string(n));
  }
  if (!get_s(c, "csv").empty()) write_slope_csv(get_s(c, "csv"), {r});
  return o;
}

Outcome cmd_verify_stability(const json& c, int threads) {
  Outcome o;
  StabilityConfig cfg;
  cfg.model = ModelSpec::parse(get_s(c, "model"));
  const auto model = make_model(cfg.model);
  cfg.theta0 = theta_from(c, *model);
  cfg.n_grid = grid_from(c);
  cfg.configs = positive(c, "configs");
  cfg.kinds = kinds_from(c, "pivot");
  cfg.seed = c.at("seed").get<std::uint64_t>();
  cfg.threads = threads;
  cfg.adjustment = adjustment_from(c);
  cfg.quadrature.nodes_u = cfg.quadrature.nodes_log_sigma = positive(c, "nodes");
  cfg.quadrature.half_width_se = get_d(c, "half_width");
  const auto r = stability_experiment(cfg);
  json reps = json::array();
  for (const auto& s : r.reports) reps.push_back(slope_json(s));
  json pooled = json::object();
  for (std::size_t k = 0; k < cfg.kinds.size(); ++k) pooled[to_string(cfg.kinds[k])] = r.pooled_mean[k];
  o.results = {{"reports", reps}, {"pooled_mean", pooled}};
  for (int n : cfg.n_grid) o.streams.push_back("stability-" + std::to_string(n));
  if (!get_s(c, "csv").empty()) write_slope_csv(get_s(c, "csv"), r.reports);
  return o;
}

Outcome cmd_verify_uniformity(const json& c, int threads) {
  Outcome o;
  const auto model = make_model(ModelSpec::parse(get_s(c, "model")));
  const auto theta = theta_from(c, *model);
  const auto kind = parse_pivot_kind(get_s(c, "pivot"));
  const auto stat_name = get_s(c, "statistic");
  UniformityStatistic stat;
  if (stat_name == "bootstrap_pivot")
    stat = UniformityStatistic::bootstrap_pivot;
  else if (stat_name == "unscaled_t1")
    stat = UniformityStatistic::unscaled_t1;
  else
    throw ValidationError("config.statistic: expected bootstrap_pivot or unscaled_t1, got '" + stat_name + "'");
  const auto r = uniformity_experiment(kind, *model, theta, positive(c, "n"), positive(c, "outer"), get_i(c, "B"),
                                       c.at("seed").get<std::uint64_t>(), stat, threads);
  o.results = {{"kind", to_string(r.kind)}, {"statistic", to_string(r.statistic)}, {"n", r.n},
               {"outer", r.outer},          {"B", r.B},                           {"ks", r.ks},
               {"ks_p", r.ks_p},            {"level", r.level},                   {"failures", r.failures},
               {"pass", r.pass}};
  o.streams = {"uniformity-outer", "uniformity-boot"};
  if (!get_s(c, "csv").empty()) {
    std::ofstream os(get_s(c, "csv"));
    if (!os) throw ValidationError("cannot write '" + get_s(c, "csv") + "'");
    os << std::setprecision(17) << "index,p\n";
    for (std::size_t i = 0; i < r.pvalues.size(); ++i) os << i << ',' << r.pvalues[i] << '\n';
  }
  return o;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto cmds = commands();
  CLI::App app{"likstab: higher-order likelihood pivots, p-values and their verification"};
  app.require_subcommand(1);
  int threads_flag = 0;
  std::map<std::string, std::map<std::string, std::string>> raw;
  std::map<std::string, std::map<std::string, CLI::Option*>> opts;
  std::map<std::string, std::string> config_path;
  std::map<std::string, CLI::App*> subs;
  for (const auto& cmd : cmds) {
    auto* sc = app.add_subcommand(cmd.name, cmd.help);
    subs[cmd.name] = sc;
    sc->add_option("--config", config_path[cmd.name], "JSON config file; flags override its fields");
    sc->add_option("--threads", threads_flag, "worker threads (default: LIKSTAB_THREADS or 1)");
    for (const auto& f : cmd.fields) opts[cmd.name][f.name] = sc->add_option("--" + flag_name(f.name), raw[cmd.name][f.name], f.help);
  }

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return validation_error;
  }

  const Command* cmd = nullptr;
  for (const auto& c : cmds)
    if (subs[c.name]->parsed()) cmd = &c;

  json cfg = json::object();
  if (!config_path[cmd->name].empty()) {
    cfg = load_config_file(config_path[cmd->name]);
    if (!cfg.is_object()) throw ValidationError("config: expected a JSON object");
  }
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    const auto f = std::find_if(cmd->fields.begin(), cmd->fields.end(), [&](const Field& x) { return x.name == it.key(); });
    if (f == cmd->fields.end()) {
      if (it.key() == "threads") throw ValidationError("config.threads: the thread cap is a flag or LIKSTAB_THREADS, not a config field");
      throw ValidationError("config." + it.key() + ": unknown field for " + cmd->name);
    }
    check_type(*f, it.value(), "config." + it.key());
  }
  for (const auto& f : cmd->fields)
    if (opts[cmd->name][f.name]->count() > 0) cfg[f.name] = from_flag(f, raw[cmd->name][f.name]);
  for (const auto& f : cmd->fields) {
    if (cfg.contains(f.name)) continue;
    if (f.fallback.is_null() && f.name != "claim")
      throw ValidationError("config." + f.name + ": required (flag --" + flag_name(f.name) + ")");
    cfg[f.name] = f.fallback;
  }

  const int threads = resolve_threads(threads_flag);
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  if (cmd->name == "fit") o = cmd_fit(cfg);
  else if (cmd->name == "pivot") o = cmd_pivot(cfg);
  else if (cmd->name == "equiv-check") o = cmd_equiv(cfg);
  else if (cmd->name == "stability-check") o = cmd_stability_check(cfg);
  else if (cmd->name == "bartlett") o = cmd_bartlett(cfg, threads);
  else if (cmd->name == "verify-order") o = cmd_verify_order(cfg, threads);
  else if (cmd->name == "verify-stability") o = cmd_verify_stability(cfg, threads);
  else o = cmd_verify_uniformity(cfg, threads);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  // Reports are a pure function of the resolved config: paths, the thread cap
  // and timing live in the sidecar.
  json resolved = cfg;
  resolved.erase("out");
  resolved.erase("csv");
  json report = {{"version", kReportVersion},
                 {"command", cmd->name},
                 {"config", resolved},
                 {"results", o.results},
                 {"diagnostics", o.diagnostics},
                 {"seeds", {{"master", cfg.at("seed")}, {"streams", o.streams}}}};
  const std::string text = report.dump(2) + "\n";
  const auto out_path = get_s(cfg, "out");
  if (out_path.empty()) {
    out << text;
  } else {
    std::ofstream os(out_path);
    if (!os) throw ValidationError("cannot write '" + out_path + "'");
    os << text;
    std::ofstream meta(out_path + ".meta.json");
    meta << json{{"timestamp", utc_timestamp()}, {"elapsed_seconds", elapsed}, {"threads", threads}}.dump(2) << "\n";
  }
  return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return validation_error;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return numerical_error;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return validation_error;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return numerical_error;
  }
}

}  // namespace likstab::cli
