#include "gvi/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "gvi/io.hpp"

namespace gvi {

namespace {

using nlohmann::json;

struct Issues {
  std::vector<std::string> list;

  void add(const std::string& where, const std::string& what) {
    list.push_back(where + ": " + what);
  }
  bool any() const { return !list.empty(); }
};

const json* member(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

// Every object is checked against the exact key set its context allows;
// anything else is a config error, so a typo can never silently disable a
// setting.
void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed, Issues& issues) {
  if (!obj.is_object()) return;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        known = true;
        break;
      }
    if (!known) issues.add(where, "unknown key '" + it.key() + "'");
  }
}

bool require_object(const json& j, const std::string& where, Issues& issues) {
  if (j.is_object()) return true;
  issues.add(where, "must be an object");
  return false;
}

std::optional<double> get_number(const json& obj, const char* key,
                                 const std::string& where, Issues& issues) {
  const json* v = member(obj, key);
  if (v == nullptr) return std::nullopt;
  if (!v->is_number()) {
    issues.add(where + "." + key, "must be a number");
    return std::nullopt;
  }
  return v->get<double>();
}

std::optional<std::int64_t> get_integer(const json& obj, const char* key,
                                        const std::string& where, Issues& issues) {
  const json* v = member(obj, key);
  if (v == nullptr) return std::nullopt;
  if (!v->is_number_integer() && !v->is_number_unsigned()) {
    issues.add(where + "." + key, "must be an integer");
    return std::nullopt;
  }
  return v->get<std::int64_t>();
}

std::optional<std::uint64_t> get_seed_value(const json& v, const std::string& where,
                                            Issues& issues) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    const std::int64_t s = v.get<std::int64_t>();
    if (s >= 0) return static_cast<std::uint64_t>(s);
  }
  issues.add(where, "must be a non-negative integer");
  return std::nullopt;
}

std::optional<std::string> get_string(const json& obj, const char* key,
                                      const std::string& where, Issues& issues) {
  const json* v = member(obj, key);
  if (v == nullptr) return std::nullopt;
  if (!v->is_string()) {
    issues.add(where + "." + key, "must be a string");
    return std::nullopt;
  }
  return v->get<std::string>();
}

std::optional<bool> get_bool(const json& obj, const char* key,
                             const std::string& where, Issues& issues) {
  const json* v = member(obj, key);
  if (v == nullptr) return std::nullopt;
  if (!v->is_boolean()) {
    issues.add(where + "." + key, "must be true or false");
    return std::nullopt;
  }
  return v->get<bool>();
}

std::optional<std::vector<double>> get_number_array(const json& obj, const char* key,
                                                    const std::string& where,
                                                    Issues& issues) {
  const json* v = member(obj, key);
  if (v == nullptr) return std::nullopt;
  if (!v->is_array()) {
    issues.add(where + "." + key, "must be an array of numbers");
    return std::nullopt;
  }
  std::vector<double> out;
  out.reserve(v->size());
  for (const json& e : *v) {
    if (!e.is_number()) {
      issues.add(where + "." + key, "must be an array of numbers");
      return std::nullopt;
    }
    out.push_back(e.get<double>());
  }
  return out;
}

Eigen::ArrayXd to_array(const std::vector<double>& xs) {
  Eigen::ArrayXd out(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = xs[i];
  return out;
}

double positive_number(const json& obj, const char* key, double fallback,
                       const std::string& where, Issues& issues) {
  const auto v = get_number(obj, key, where, issues);
  if (!v) return fallback;
  if (!(*v > 0.0) || !std::isfinite(*v)) {
    issues.add(where + "." + key, "must be positive and finite");
    return fallback;
  }
  return *v;
}

// ---- piecewise parsers; each returns the parsed value plus its normalized
// ---- (fully defaulted) echo.

DataGeneratingProcess parse_dgp(const json& obj, const std::string& where,
                                Issues& issues, json& norm) {
  DataGeneratingProcess dgp;
  if (require_object(obj, where, issues)) {
    check_keys(obj, where, {"theta0", "sigma0"}, issues);
    if (const auto v = get_number(obj, "theta0", where, issues)) {
      if (std::isfinite(*v))
        dgp.theta0 = *v;
      else
        issues.add(where + ".theta0", "must be finite");
    }
    dgp.sigma0 = positive_number(obj, "sigma0", dgp.sigma0, where, issues);
  }
  norm = json{{"theta0", dgp.theta0}, {"sigma0", dgp.sigma0}};
  return dgp;
}

Measure parse_measure(const json& obj, const std::string& where, Issues& issues,
                      json& norm) {
  Measure fallback = GaussianMeasure(0.0, 1.0);
  norm = json{{"mean", 0.0}, {"variance", 1.0}};
  if (!require_object(obj, where, issues)) return fallback;
  const bool discrete = member(obj, "grid") != nullptr || member(obj, "weights") != nullptr;
  if (discrete) {
    check_keys(obj, where, {"grid", "weights"}, issues);
    const auto grid = get_number_array(obj, "grid", where, issues);
    const auto weights = get_number_array(obj, "weights", where, issues);
    if (!grid || !weights) {
      if (!grid) issues.add(where, "discrete measure needs 'grid'");
      if (!weights) issues.add(where, "discrete measure needs 'weights'");
      return fallback;
    }
    try {
      DiscreteMeasure m(to_array(*grid), to_array(*weights));
      norm = json{{"grid", *grid}, {"weights", *weights}};
      return Measure(std::move(m));
    } catch (const std::exception& e) {
      issues.add(where, e.what());
      return fallback;
    }
  }
  check_keys(obj, where, {"mean", "variance"}, issues);
  double mean = 0.0;
  double variance = 1.0;
  if (const auto v = get_number(obj, "mean", where, issues)) mean = *v;
  if (const auto v = get_number(obj, "variance", where, issues)) variance = *v;
  try {
    GaussianMeasure m(mean, variance);
    norm = json{{"mean", mean}, {"variance", variance}};
    return Measure(m);
  } catch (const std::exception& e) {
    issues.add(where, e.what());
    return fallback;
  }
}

DivergenceSpec parse_divergence(const json* obj, const std::string& where,
                                Issues& issues, json& norm) {
  std::string kind = "tv";
  double exponent = 0.5;
  DivergenceSpec spec = DivergenceSpec::tv();
  QuadratureSettings qs;
  if (obj != nullptr && require_object(*obj, where, issues)) {
    check_keys(*obj, where, {"kind", "exponent", "abs_tol", "support_padding"}, issues);
    if (const auto v = get_string(*obj, "kind", where, issues)) kind = *v;
    qs.abs_tol = positive_number(*obj, "abs_tol", qs.abs_tol, where, issues);
    qs.support_padding =
        positive_number(*obj, "support_padding", qs.support_padding, where, issues);
    if (const auto v = get_number(*obj, "exponent", where, issues)) {
      if (kind != "tv-sqrt-n")
        issues.add(where + ".exponent", "applies to the tv-sqrt-n kind only");
      else if (!(*v > 0.0) || !std::isfinite(*v))
        issues.add(where + ".exponent", "must be positive and finite");
      else
        exponent = *v;
    }
  }
  if (kind == "tv")
    spec = DivergenceSpec::tv();
  else if (kind == "kl")
    spec = DivergenceSpec::kl();
  else if (kind == "hellinger")
    spec = DivergenceSpec::hellinger_sq();
  else if (kind == "lecam")
    spec = DivergenceSpec::le_cam();
  else if (kind == "tv-sqrt-n")
    spec = DivergenceSpec::scaled_tv(exponent);
  else
    issues.add(where + ".kind",
               "unknown divergence '" + kind +
                   "' (expected kl, tv, hellinger, lecam, or tv-sqrt-n)");
  spec.quadrature = qs;
  norm = json{{"kind", kind},
              {"abs_tol", qs.abs_tol},
              {"support_padding", qs.support_padding}};
  if (kind == "tv-sqrt-n") norm["exponent"] = exponent;
  return spec;
}

FamilyDescriptor parse_family(const json* obj, const std::string& where,
                              Issues& issues, json& norm) {
  std::string kind = "gaussian";
  FamilyDescriptor family = FamilyDescriptor::gaussian();
  norm = json{{"kind", kind}};
  if (obj == nullptr) return family;
  if (!require_object(*obj, where, issues)) return family;
  check_keys(*obj, where, {"kind", "grid"}, issues);
  if (const auto v = get_string(*obj, "kind", where, issues)) kind = *v;
  if (kind == "gaussian") {
    if (member(*obj, "grid") != nullptr)
      issues.add(where + ".grid", "applies to the discrete kind only");
    norm = json{{"kind", "gaussian"}};
    return FamilyDescriptor::gaussian();
  }
  if (kind != "discrete") {
    issues.add(where + ".kind",
               "unknown family '" + kind + "' (expected gaussian or discrete)");
    return family;
  }
  const auto grid = get_number_array(*obj, "grid", where, issues);
  if (!grid || grid->empty()) {
    issues.add(where, "discrete family needs a non-empty 'grid'");
    return family;
  }
  for (std::size_t i = 0; i < grid->size(); ++i) {
    if (!std::isfinite((*grid)[i])) {
      issues.add(where + ".grid", "entries must be finite");
      return family;
    }
    if (i > 0 && (*grid)[i] <= (*grid)[i - 1]) {
      issues.add(where + ".grid", "entries must be strictly increasing");
      return family;
    }
  }
  norm = json{{"kind", "discrete"}, {"grid", *grid}};
  return FamilyDescriptor::discrete(to_array(*grid));
}

std::optional<Schedule> parse_schedule(const json* obj, const std::string& where,
                                       Issues& issues, json& norm) {
  norm = nullptr;
  if (obj == nullptr) return std::nullopt;
  if (!require_object(*obj, where, issues)) return std::nullopt;
  check_keys(*obj, where, {"kind", "coeff", "exponent"}, issues);
  const auto kind = get_string(*obj, "kind", where, issues);
  if (!kind) {
    issues.add(where, "schedule needs a 'kind' (const, pow, or log)");
    return std::nullopt;
  }
  Schedule s;
  if (*kind == "const")
    s.kind = Schedule::Kind::Constant;
  else if (*kind == "pow")
    s.kind = Schedule::Kind::Power;
  else if (*kind == "log")
    s.kind = Schedule::Kind::Log;
  else {
    issues.add(where + ".kind",
               "unknown schedule '" + *kind + "' (expected const, pow, or log)");
    return std::nullopt;
  }
  s.coeff = positive_number(*obj, "coeff", 1.0, where, issues);
  if (const auto v = get_number(*obj, "exponent", where, issues)) {
    if (s.kind != Schedule::Kind::Power)
      issues.add(where + ".exponent", "applies to the pow kind only");
    else if (!std::isfinite(*v))
      issues.add(where + ".exponent", "must be finite");
    else
      s.exponent = *v;
  }
  norm = json{{"kind", *kind}, {"coeff", s.coeff}};
  if (s.kind == Schedule::Kind::Power) norm["exponent"] = s.exponent;
  return s;
}

GviSchedules parse_schedules(const json* obj, const std::string& where,
                             Issues& issues, json& norm) {
  GviSchedules out;
  norm = json::object();
  if (obj == nullptr) return out;
  if (!require_object(*obj, where, issues)) return out;
  check_keys(*obj, where, {"m_of_n", "beta_of_n"}, issues);
  json m_norm;
  json b_norm;
  out.m_of_n = parse_schedule(member(*obj, "m_of_n"), where + ".m_of_n", issues, m_norm);
  out.beta_of_n =
      parse_schedule(member(*obj, "beta_of_n"), where + ".beta_of_n", issues, b_norm);
  if (!m_norm.is_null()) norm["m_of_n"] = m_norm;
  if (!b_norm.is_null()) norm["beta_of_n"] = b_norm;
  return out;
}

EpsSchedule parse_eps(const json* obj, const std::string& where, Issues& issues,
                      json& norm) {
  EpsSchedule eps;
  if (obj != nullptr && require_object(*obj, where, issues)) {
    check_keys(*obj, where, {"c", "a"}, issues);
    eps.c = positive_number(*obj, "c", eps.c, where, issues);
    if (const auto v = get_number(*obj, "a", where, issues)) {
      if (!(*v > 0.0 && *v < 1.0))
        issues.add(where + ".a",
                   "must lie strictly inside (0, 1) so the neighbourhoods shrink "
                   "while n*eps grows");
      else
        eps.a = *v;
    }
  }
  norm = json{{"c", eps.c}, {"a", eps.a}};
  return eps;
}

Interval parse_interval(const json* obj, const std::string& where, Issues& issues,
                        json& norm) {
  Interval a{0.0, 0.0};
  norm = nullptr;
  if (obj == nullptr) {
    issues.add(where, "required");
    return a;
  }
  if (!require_object(*obj, where, issues)) return a;
  check_keys(*obj, where, {"lo", "hi"}, issues);
  const auto lo = get_number(*obj, "lo", where, issues);
  const auto hi = get_number(*obj, "hi", where, issues);
  if (!lo || !hi) {
    issues.add(where, "needs numeric 'lo' and 'hi'");
    return a;
  }
  if (!(*lo <= *hi)) {
    issues.add(where, "needs lo <= hi");
    return a;
  }
  a.lo = *lo;
  a.hi = *hi;
  norm = json{{"lo", a.lo}, {"hi", a.hi}};
  return a;
}

LossModel parse_loss(const json* obj, const std::string& where, std::uint64_t seed,
                     Issues& issues, json& norm) {
  LossModel fallback = LossModel::gaussian_nll(Dataset(Eigen::ArrayXd::Zero(1)));
  norm = json{{"kind", "gaussian-nll"},
              {"sigma_p", 1.0},
              {"data", json{{"values", json::array({0.0})}}}};
  if (obj == nullptr) {
    issues.add(where, "required");
    return fallback;
  }
  if (!require_object(*obj, where, issues)) return fallback;
  check_keys(*obj, where, {"kind", "sigma_p", "data", "grid", "values", "csv"}, issues);
  std::string kind = "gaussian-nll";
  if (const auto v = get_string(*obj, "kind", where, issues)) kind = *v;
  if (kind != "gaussian-nll" && kind != "table") {
    issues.add(where + ".kind",
               "unknown loss '" + kind + "' (expected gaussian-nll or table)");
    return fallback;
  }

  // data: explicit observations, or a count with an optional sampling law.
  const json* data_obj = member(*obj, "data");
  std::optional<Eigen::ArrayXd> values;
  std::optional<DataGeneratingProcess> dgp;
  std::int64_t count = 0;
  json data_norm;
  if (data_obj == nullptr) {
    issues.add(where + ".data", "required");
  } else if (require_object(*data_obj, where + ".data", issues)) {
    check_keys(*data_obj, where + ".data", {"values", "n", "dgp"}, issues);
    const bool has_values = member(*data_obj, "values") != nullptr;
    const bool has_n = member(*data_obj, "n") != nullptr;
    if (has_values == has_n) {
      issues.add(where + ".data", "provide exactly one of 'values' or 'n'");
    } else if (has_values) {
      if (member(*data_obj, "dgp") != nullptr)
        issues.add(where + ".data.dgp", "applies to the 'n' form only");
      if (const auto v = get_number_array(*data_obj, "values", where + ".data", issues)) {
        if (v->empty())
          issues.add(where + ".data.values", "must be non-empty");
        else {
          values = to_array(*v);
          data_norm = json{{"values", *v}};
        }
      }
    } else {
      const auto n = get_integer(*data_obj, "n", where + ".data", issues);
      if (!n || *n < 1) {
        issues.add(where + ".data.n", "must be an integer >= 1");
      } else {
        count = *n;
        data_norm = json{{"n", count}};
        if (const json* d = member(*data_obj, "dgp")) {
          json dgp_norm;
          dgp = parse_dgp(*d, where + ".data.dgp", issues, dgp_norm);
          data_norm["dgp"] = dgp_norm;
        }
      }
    }
  }

  if (kind == "gaussian-nll") {
    for (const char* k : {"grid", "values", "csv"})
      if (member(*obj, k) != nullptr)
        issues.add(where + "." + k, "applies to the table kind only");
    const double sigma_p = positive_number(*obj, "sigma_p", 1.0, where, issues);
    Dataset data;
    if (values) {
      data = Dataset(*values, dgp);
    } else if (count >= 1) {
      if (dgp)
        data = simulate_dataset(*dgp, count, experiment_stream(seed, 0, count));
      else
        data = Dataset(Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(count)));
    } else {
      return fallback;
    }
    norm = json{{"kind", "gaussian-nll"}, {"sigma_p", sigma_p}, {"data", data_norm}};
    try {
      return LossModel::gaussian_nll(std::move(data), sigma_p);
    } catch (const std::exception& e) {
      issues.add(where, e.what());
      return fallback;
    }
  }

  // table loss
  if (member(*obj, "sigma_p") != nullptr)
    issues.add(where + ".sigma_p", "applies to the gaussian_nll kind only");
  const bool inline_table =
      member(*obj, "grid") != nullptr || member(*obj, "values") != nullptr;
  const auto csv = get_string(*obj, "csv", where, issues);
  Eigen::ArrayXd grid;
  Eigen::ArrayXd table_values;
  if (inline_table == csv.has_value()) {
    issues.add(where, "table loss needs either inline 'grid'+'values' or 'csv'");
    return fallback;
  }
  if (inline_table) {
    const auto g = get_number_array(*obj, "grid", where, issues);
    const auto v = get_number_array(*obj, "values", where, issues);
    if (!g || !v) {
      issues.add(where, "table loss needs both 'grid' and 'values'");
      return fallback;
    }
    grid = to_array(*g);
    table_values = to_array(*v);
  } else {
    try {
      load_table_csv(*csv, &grid, &table_values);
    } catch (const Error& e) {
      issues.add(where + ".csv", e.what());
      return fallback;
    }
  }
  for (Eigen::Index i = 0; i < table_values.size(); ++i)
    if (!std::isfinite(table_values[i])) {
      issues.add(where + ".values",
                 "table losses must be finite (a finite lower bound is required)");
      return fallback;
    }
  Dataset data;
  if (values)
    data = Dataset(*values, dgp);
  else if (count >= 1)
    data = Dataset(Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(count)));
  else
    return fallback;
  std::vector<double> grid_echo(grid.data(), grid.data() + grid.size());
  std::vector<double> values_echo(table_values.data(),
                                  table_values.data() + table_values.size());
  norm = json{{"kind", "table"},
              {"grid", grid_echo},
              {"values", values_echo},
              {"data", data_norm}};
  try {
    return LossModel::table(std::move(grid), std::move(table_values), std::move(data));
  } catch (const std::exception& e) {
    issues.add(where, e.what());
    return fallback;
  }
}

bool bounded_kind(const DivergenceSpec& spec) {
  return spec.bound_at(1).has_value();
}

// ---- per-subcommand schemas ------------------------------------------------

LoadedConfig parse_problem_config(const json& j, Subcommand sub,
                                  std::optional<std::uint64_t> seed_override,
                                  Issues& issues) {
  LoadedConfig out;
  out.subcommand = sub;
  check_keys(j, "$", {"loss", "divergence", "prior", "beta", "family", "schedules", "seed"},
             issues);

  std::uint64_t seed = 0;
  if (seed_override) {
    seed = *seed_override;
  } else if (const json* s = member(j, "seed")) {
    if (const auto v = get_seed_value(*s, "$.seed", issues)) seed = *v;
  }

  json loss_norm, div_norm, prior_norm, family_norm, sched_norm;
  out.problem.loss = parse_loss(member(j, "loss"), "$.loss", seed, issues, loss_norm);
  out.problem.divergence =
      parse_divergence(member(j, "divergence"), "$.divergence", issues, div_norm);
  if (const json* p = member(j, "prior"))
    out.problem.prior = parse_measure(*p, "$.prior", issues, prior_norm);
  else
    prior_norm = json{{"mean", 0.0}, {"variance", 1.0}};
  out.problem.beta = positive_number(j, "beta", 1.0, "$", issues);
  out.problem.family = parse_family(member(j, "family"), "$.family", issues, family_norm);
  out.problem.schedules =
      parse_schedules(member(j, "schedules"), "$.schedules", issues, sched_norm);

  if (sub == Subcommand::Region && !bounded_kind(out.problem.divergence) &&
      !out.problem.schedules.m_of_n.has_value())
    issues.add("$.divergence.kind",
               "the region subcommand needs a finite divergence bound, either "
               "intrinsic or an explicit m_of_n schedule; kl alone carries none");

  if (!issues.any()) {
    try {
      out.problem.validate();
    } catch (const std::exception& e) {
      issues.add("$", e.what());
    }
  }

  json norm;
  norm["loss"] = loss_norm;
  norm["divergence"] = div_norm;
  norm["prior"] = prior_norm;
  norm["beta"] = out.problem.beta;
  norm["family"] = family_norm;
  norm["schedules"] = sched_norm;
  norm["seed"] = seed;
  out.normalized = norm.dump(2);
  out.fingerprint = fingerprint_hex(norm.dump());
  return out;
}

LoadedConfig parse_experiment_config(const json& j, Subcommand sub,
                                     std::optional<std::uint64_t> seed_override,
                                     Issues& issues) {
  LoadedConfig out;
  out.subcommand = sub;
  ExperimentConfig& cfg = out.experiment;

  std::vector<const char*> allowed = {"dgp",       "sigma_p",   "priors",
                                      "divergence", "beta",      "family",
                                      "schedules", "seeds",     "replicates",
                                      "nested_prefix", "contract"};
  const bool wants_eps = sub == Subcommand::Rates || sub == Subcommand::Schedule;
  const bool wants_interval =
      sub == Subcommand::Concentrate || sub == Subcommand::Unbounded;
  const bool wants_sweep = sub == Subcommand::Compare;
  if (wants_eps || wants_interval) allowed.push_back("n_schedule");
  if (wants_eps) allowed.push_back("eps_schedule");
  if (wants_interval) allowed.push_back("interval");
  if (wants_sweep) {
    allowed.push_back("mu_pi_offsets");
    allowed.push_back("n");
  }
  {
    std::string unknown_check_scope = "$";
    if (j.is_object()) {
      for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* a : allowed)
          if (it.key() == a) {
            known = true;
            break;
          }
        if (!known) issues.add(unknown_check_scope, "unknown key '" + it.key() + "'");
      }
    }
  }

  json dgp_norm, div_norm, family_norm, sched_norm, eps_norm, interval_norm;
  if (const json* d = member(j, "dgp"))
    cfg.dgp = parse_dgp(*d, "$.dgp", issues, dgp_norm);
  else
    dgp_norm = json{{"theta0", cfg.dgp.theta0}, {"sigma0", cfg.dgp.sigma0}};
  cfg.sigma_p = positive_number(j, "sigma_p", 1.0, "$", issues);
  cfg.divergence = parse_divergence(member(j, "divergence"), "$.divergence", issues, div_norm);
  cfg.beta = positive_number(j, "beta", 1.0, "$", issues);
  cfg.family = parse_family(member(j, "family"), "$.family", issues, family_norm);
  cfg.schedules = parse_schedules(member(j, "schedules"), "$.schedules", issues, sched_norm);

  json priors_norm = json::array();
  if (const json* p = member(j, "priors")) {
    if (!p->is_array() || p->empty()) {
      issues.add("$.priors", "must be a non-empty array of measures");
    } else {
      cfg.priors.clear();
      for (std::size_t i = 0; i < p->size(); ++i) {
        json m_norm;
        std::ostringstream os;
        os << "$.priors[" << i << "]";
        cfg.priors.push_back(parse_measure((*p)[i], os.str(), issues, m_norm));
        priors_norm.push_back(m_norm);
      }
    }
  } else {
    priors_norm.push_back(json{{"mean", 0.0}, {"variance", 1.0}});
  }

  if (const json* s = member(j, "seeds")) {
    if (!s->is_array() || s->empty()) {
      issues.add("$.seeds", "must be a non-empty array of non-negative integers");
    } else {
      cfg.seeds.clear();
      for (std::size_t i = 0; i < s->size(); ++i) {
        std::ostringstream os;
        os << "$.seeds[" << i << "]";
        if (const auto v = get_seed_value((*s)[i], os.str(), issues))
          cfg.seeds.push_back(*v);
      }
      if (cfg.seeds.empty()) cfg.seeds.push_back(0);
    }
  }
  if (seed_override) cfg.seeds = {*seed_override};

  if (const auto v = get_integer(j, "replicates", "$", issues)) {
    if (*v < 1)
      issues.add("$.replicates", "must be >= 1");
    else
      cfg.replicates = *v;
  }
  if (const auto v = get_bool(j, "nested_prefix", "$", issues)) cfg.nested_prefix = *v;
  if (const auto v = get_string(j, "contract", "$", issues)) {
    if (*v == "enforce")
      cfg.enforce_contracts = true;
    else if (*v == "report")
      cfg.enforce_contracts = false;
    else
      issues.add("$.contract", "must be 'enforce' or 'report'");
  }

  if (wants_eps || wants_interval) {
    if (const json* ns = member(j, "n_schedule")) {
      if (!ns->is_array() || ns->empty()) {
        issues.add("$.n_schedule", "must be a non-empty integer array");
      } else {
        cfg.n_schedule.clear();
        for (std::size_t i = 0; i < ns->size(); ++i) {
          std::ostringstream os;
          os << "$.n_schedule[" << i << "]";
          const json& e = (*ns)[i];
          if (!e.is_number_integer() && !e.is_number_unsigned())
            issues.add(os.str(), "must be an integer");
          else
            cfg.n_schedule.push_back(e.get<std::int64_t>());
        }
      }
    }
  }
  if (wants_eps)
    cfg.eps_schedule = parse_eps(member(j, "eps_schedule"), "$.eps_schedule", issues, eps_norm);
  if (wants_interval)
    out.interval = parse_interval(member(j, "interval"), "$.interval", issues, interval_norm);
  if (wants_sweep) {
    if (const auto v = get_number_array(j, "mu_pi_offsets", "$", issues)) {
      if (v->empty())
        issues.add("$.mu_pi_offsets", "must be non-empty");
      else
        out.mu_pi_offsets = *v;
    } else {
      issues.add("$.mu_pi_offsets", "required");
    }
    if (const auto v = get_integer(j, "n", "$", issues)) {
      if (*v < 1)
        issues.add("$.n", "must be >= 1");
      else
        out.compare_n = *v;
    }
  }

  // Subcommand-specific semantic checks. An explicit m_of_n schedule counts
  // as a finite bound, mirroring how the solver resolves the bound itself.
  const bool bounded =
      bounded_kind(cfg.divergence) || cfg.schedules.m_of_n.has_value();
  if (sub == Subcommand::Unbounded) {
    if (cfg.divergence.kind != DivergenceKind::Kl)
      issues.add("$.divergence.kind",
                 "the unbounded subcommand studies kl; bounded divergences "
                 "belong to concentrate");
  } else if (!bounded) {
    issues.add("$.divergence.kind",
               "this subcommand needs a finite divergence bound, either "
               "intrinsic or an explicit m_of_n schedule; kl alone carries "
               "none");
  }
  if ((sub == Subcommand::Concentrate || sub == Subcommand::Unbounded ||
       sub == Subcommand::Compare) &&
      cfg.priors.size() != 1)
    issues.add("$.priors", "this subcommand takes exactly one prior");
  if (sub == Subcommand::Compare || sub == Subcommand::Unbounded) {
    if (!cfg.priors.empty()) {
      const auto* g = std::get_if<GaussianMeasure>(&cfg.priors.front());
      if (cfg.family.kind == FamilyKind::Gaussian && (g == nullptr || g->is_dirac()))
        issues.add("$.priors[0]",
                   "this subcommand needs a non-degenerate Gaussian prior");
    }
  }
  if (wants_interval && !issues.any()) {
    const LimitLoss limit{cfg.dgp, cfg.sigma_p};
    const double best = limit_loss(limit, cfg.dgp.theta0);
    const double proj = std::clamp(cfg.dgp.theta0, out.interval.lo, out.interval.hi);
    if (!(limit_loss(limit, proj) > best + 1e-9))
      issues.add("$.interval",
                 "the interval's limiting loss must strictly exceed the minimum "
                 "(it contains or touches the optimum)");
  }

  if (!issues.any()) {
    try {
      cfg.validate();
    } catch (const std::exception& e) {
      issues.add("$", e.what());
    }
  }
  if (!issues.any() && wants_eps) {
    try {
      for (std::int64_t n : cfg.n_schedule) cfg.eps_schedule.eps(n);
    } catch (const std::exception& e) {
      issues.add("$.eps_schedule", e.what());
    }
  }

  json norm;
  norm["dgp"] = dgp_norm;
  norm["sigma_p"] = cfg.sigma_p;
  norm["priors"] = priors_norm;
  norm["divergence"] = div_norm;
  norm["beta"] = cfg.beta;
  norm["family"] = family_norm;
  norm["schedules"] = sched_norm;
  norm["seeds"] = cfg.seeds;
  norm["replicates"] = cfg.replicates;
  norm["nested_prefix"] = cfg.nested_prefix;
  norm["contract"] = cfg.enforce_contracts ? "enforce" : "report";
  if (wants_eps || wants_interval) norm["n_schedule"] = cfg.n_schedule;
  if (wants_eps) norm["eps_schedule"] = eps_norm;
  if (wants_interval) norm["interval"] = interval_norm;
  if (wants_sweep) {
    norm["mu_pi_offsets"] = out.mu_pi_offsets;
    norm["n"] = out.compare_n;
  }
  out.normalized = norm.dump(2);
  out.fingerprint = fingerprint_hex(norm.dump());
  return out;
}

}  // namespace

std::string subcommand_name(Subcommand s) {
  switch (s) {
    case Subcommand::Solve:
      return "solve";
    case Subcommand::Region:
      return "region";
    case Subcommand::Rates:
      return "rates";
    case Subcommand::Concentrate:
      return "concentrate";
    case Subcommand::Compare:
      return "compare";
    case Subcommand::Schedule:
      return "schedule";
    case Subcommand::Divergence:
      return "divergence";
    case Subcommand::Unbounded:
      return "unbounded";
  }
  return "unknown";
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::string fingerprint_hex(const std::string& text) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

LoadedConfig parse_config_text(const std::string& text, Subcommand sub,
                               std::optional<std::uint64_t> seed_override) {
  if (sub == Subcommand::Divergence)
    throw std::invalid_argument(
        "parse_config_text: the divergence subcommand takes flags, not a config");
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("configuration is not valid JSON",
                      {std::string("$: ") + e.what()});
  }
  Issues issues;
  if (!j.is_object()) {
    throw ConfigError("configuration must be a JSON object",
                      {"$: expected an object"});
  }
  LoadedConfig out;
  if (sub == Subcommand::Solve || sub == Subcommand::Region)
    out = parse_problem_config(j, sub, seed_override, issues);
  else
    out = parse_experiment_config(j, sub, seed_override, issues);
  if (issues.any()) {
    std::ostringstream os;
    os << "invalid configuration for '" << subcommand_name(sub) << "' ("
       << issues.list.size() << (issues.list.size() == 1 ? " issue" : " issues")
       << ")";
    throw ConfigError(os.str(), issues.list);
  }
  return out;
}

LoadedConfig load_config_file(const std::string& path, Subcommand sub,
                              std::optional<std::uint64_t> seed_override) {
  return parse_config_text(read_text_file(path), sub, seed_override);
}

void load_table_csv(const std::string& path, Eigen::ArrayXd* grid,
                    Eigen::ArrayXd* values) {
  const std::string text = read_text_file(path);
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  if (lines.empty() || lines.front() != "theta,value")
    throw IoError("'" + path + "': expected header 'theta,value'");
  std::vector<double> g;
  std::vector<double> v;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::size_t comma = lines[i].find(',');
    if (comma == std::string::npos || lines[i].find(',', comma + 1) != std::string::npos)
      throw IoError("'" + path + "': line " + std::to_string(i + 1) +
                    " must have exactly two fields");
    char* end = nullptr;
    const std::string a = lines[i].substr(0, comma);
    const std::string b = lines[i].substr(comma + 1);
    const double theta = std::strtod(a.c_str(), &end);
    if (end == a.c_str() || *end != '\0')
      throw IoError("'" + path + "': malformed theta '" + a + "'");
    const double value = std::strtod(b.c_str(), &end);
    if (end == b.c_str() || *end != '\0')
      throw IoError("'" + path + "': malformed value '" + b + "'");
    g.push_back(theta);
    v.push_back(value);
  }
  if (g.empty()) throw IoError("'" + path + "': no rows");
  *grid = to_array(g);
  *values = to_array(v);
}

}  // namespace gvi
