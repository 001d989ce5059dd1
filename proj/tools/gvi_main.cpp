// Command-line front end: solve single problems, inspect the near-minimiser
// region, run the experiment suites, and query divergence bounds.
//
// Exit codes: 0 success, 1 solver non-convergence or violated contract,
// 2 configuration problems (aggregated, never first-error-only).

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gvi/config.hpp"
#include "gvi/core.hpp"
#include "gvi/divergences.hpp"
#include "gvi/errors.hpp"
#include "gvi/experiments.hpp"
#include "gvi/io.hpp"
#include "gvi/losses.hpp"
#include "gvi/measures.hpp"

namespace {

using namespace gvi;

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::string format;  // per-subcommand default set at wiring time
  bool check = false;
};

std::string number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

std::string artifact_path(const CommonOpts& opt, const std::string& stem) {
  const std::string ext = opt.format == "json" ? ".json" : ".csv";
  return (std::filesystem::path(opt.out_dir) / (stem + ext)).string();
}

PersistFormat persist_format(const CommonOpts& opt) {
  return opt.format == "json" ? PersistFormat::Json : PersistFormat::Csv;
}

void ensure_out_dir(const CommonOpts& opt) {
  std::error_code ec;
  std::filesystem::create_directories(opt.out_dir, ec);
  if (ec)
    throw IoError("'" + opt.out_dir + "': cannot create output directory (" +
                  ec.message() + ")");
}

// Returns exit 1 when an enforced contract failed, 0 otherwise; prints the
// verdict either way so report-only runs still surface it.
int report_contract(const ContractReport& report) {
  if (report.rate_constant_estimate)
    std::cout << "rate constant estimate: " << number(*report.rate_constant_estimate)
              << "\n";
  if (report.robustness_spread)
    std::cout << "robustness spread (max - min final mass): "
              << number(*report.robustness_spread) << "\n";
  if (report.satisfied) {
    std::cout << "contract satisfied: " << report.detail << "\n";
    return 0;
  }
  if (report.enforced) {
    std::cerr << "contract violated: " << report.detail << "\n";
    return 1;
  }
  std::cout << "[report-only] contract violated: " << report.detail << "\n";
  return 0;
}

int do_solve(const CommonOpts& opt) {
  const LoadedConfig lc = load_config_file(opt.config_path, Subcommand::Solve, opt.seed);
  if (opt.check) {
    std::cout << lc.normalized << "\n";
    return 0;
  }
  const SolveResult res = solve(lc.problem);
  if (!res.converged) {
    std::cerr << "solve: solver failed to converge (iterations = " << res.iterations
              << ", objective = " << number(res.objective) << ")\n";
    return 1;
  }
  const std::string payload = solve_result_to_json(res, lc.fingerprint);
  if (opt.format == "json") {
    ensure_out_dir(opt);
    const std::string path =
        (std::filesystem::path(opt.out_dir) / "solve.json").string();
    write_text_file(path, payload);
    std::cout << payload;
    return 0;
  }
  std::cout << "posterior    " << measure_label(res.posterior) << "\n"
            << "objective    " << number(res.objective) << "  (loss part "
            << number(res.loss_part) << ", divergence part " << number(res.div_part)
            << ")\n"
            << "iterations   " << res.iterations << "\n";
  if (res.in_rstar)
    std::cout << "in R*_n      " << (*res.in_rstar ? "yes" : "no") << "\n";
  else
    std::cout << "in R*_n      not checkable (divergence carries no finite bound)\n";
  std::cout << "fingerprint  " << lc.fingerprint << "\n";
  return 0;
}

int do_region(const CommonOpts& opt) {
  const LoadedConfig lc = load_config_file(opt.config_path, Subcommand::Region, opt.seed);
  if (opt.check) {
    std::cout << lc.normalized << "\n";
    return 0;
  }
  const GviProblem& p = lc.problem;
  const RStarRegion region = rstar_region(p);
  const std::int64_t n = p.n();
  const double beta = p.beta_at(n);
  const double m_bound = p.bound_at(n).value();  // bounded kind enforced at load

  nlohmann::json j;
  j["schema"] = 1;
  j["fingerprint"] = lc.fingerprint;
  j["n"] = n;
  j["beta"] = beta;
  j["bound"] = m_bound;
  j["j_star"] = region.j_star;
  j["slack"] = region.slack;
  const bool gaussian_family = p.family.kind == FamilyKind::Gaussian;
  RStarGaussianBounds bounds;
  if (gaussian_family) {
    bounds = rstar_gaussian_bounds(p.loss.data(), m_bound, beta, n, p.loss.sigma_p());
    j["disc"] = {{"center", bounds.center},
                 {"radius_sq", bounds.radius_sq},
                 {"max_mean_offset", bounds.mean_radius(0.0)},
                 {"max_variance", bounds.var_cap(bounds.center)}};
  }
  if (opt.format == "json") {
    ensure_out_dir(opt);
    const std::string payload = j.dump(2) + "\n";
    write_text_file((std::filesystem::path(opt.out_dir) / "region.json").string(),
                    payload);
    std::cout << payload;
    return 0;
  }
  std::cout << "sample size       " << n << "\n"
            << "beta(n)           " << number(beta) << "\n"
            << "bound M(n)        " << number(m_bound) << "\n"
            << "best loss J*      " << number(region.j_star) << "\n"
            << "slack M/(n beta)  " << number(region.slack) << "\n";
  if (gaussian_family) {
    std::cout << "disc centre       " << number(bounds.center) << "\n"
              << "disc radius^2     " << number(bounds.radius_sq) << "\n"
              << "mean half-width   " << number(bounds.mean_radius(0.0))
              << "  (at sigma = 0)\n"
              << "variance cap      " << number(bounds.var_cap(bounds.center))
              << "  (at the centre)\n";
  }
  std::cout << "fingerprint       " << lc.fingerprint << "\n";
  return 0;
}

int run_rate_like(const CommonOpts& opt, Subcommand sub, const std::string& stem) {
  const LoadedConfig lc = load_config_file(opt.config_path, sub, opt.seed);
  if (opt.check) {
    std::cout << lc.normalized << "\n";
    return 0;
  }
  const RatesOutput out = sub == Subcommand::Rates ? run_rates(lc.experiment)
                                                   : run_schedule(lc.experiment);
  ensure_out_dir(opt);
  for (std::size_t i = 0; i < out.curves.size(); ++i) {
    std::string name = stem;
    if (out.curves.size() > 1) name += "_" + std::to_string(i + 1);
    const std::string path = artifact_path(opt, name);
    persist_rates(out.curves[i].rows, path, persist_format(opt), lc.fingerprint);
    std::cout << "wrote " << path << "  (prior " << out.curves[i].prior_label << ", "
              << out.curves[i].rows.size() << " rows)\n";
  }
  return report_contract(out.contract);
}

int do_concentrate(const CommonOpts& opt) {
  const LoadedConfig lc =
      load_config_file(opt.config_path, Subcommand::Concentrate, opt.seed);
  if (opt.check) {
    std::cout << lc.normalized << "\n";
    return 0;
  }
  const ConcentrationOutput out = run_concentration(lc.experiment, lc.interval);
  ensure_out_dir(opt);
  const std::string path = artifact_path(opt, "concentration");
  persist_concentration(out.rows, path, persist_format(opt), lc.fingerprint);
  std::cout << "wrote " << path << "  (" << out.rows.size() << " rows)\n";
  return report_contract(out.contract);
}

int do_compare(const CommonOpts& opt) {
  const LoadedConfig lc =
      load_config_file(opt.config_path, Subcommand::Compare, opt.seed);
  if (opt.check) {
    std::cout << lc.normalized << "\n";
    return 0;
  }
  const BayesOutput out =
      run_bayes_comparison(lc.experiment, lc.mu_pi_offsets, lc.compare_n);
  ensure_out_dir(opt);
  const std::string path = artifact_path(opt, "compare");
  persist_bayes(out.rows, path, persist_format(opt), lc.fingerprint);
  std::cout << "wrote " << path << "  (" << out.rows.size() << " rows)\n";
  if (opt.format == "pretty") {
    std::cout << "mu_pi          bayes_mean     gvi_mean       bayes_in gvi_in ball_ok\n";
    for (const BayesRow& r : out.rows) {
      char line[160];
      std::snprintf(line, sizeof(line), "%-14.8g %-14.8g %-14.8g %-8s %-6s %s\n",
                    r.mu_pi, r.bayes_mean, r.gvi_mean, r.bayes_in_rstar ? "yes" : "no",
                    r.gvi_in_rstar ? "yes" : "no", r.prior_ball_ok ? "yes" : "no");
      std::cout << line;
    }
  }
  return report_contract(out.contract);
}

int do_unbounded(const CommonOpts& opt) {
  const LoadedConfig lc =
      load_config_file(opt.config_path, Subcommand::Unbounded, opt.seed);
  if (opt.check) {
    std::cout << lc.normalized << "\n";
    return 0;
  }
  const UnboundedOutput out = run_unbounded_kl(lc.experiment, lc.interval);
  ensure_out_dir(opt);
  const std::string path = artifact_path(opt, "unbounded");
  persist_unbounded(out.rows, path, persist_format(opt), lc.fingerprint);
  std::cout << "wrote " << path << "  (" << out.rows.size() << " rows)\n";
  return report_contract(out.contract);
}

int do_divergence(const std::string& kind, double exponent, bool check_bound) {
  DivergenceSpec spec = DivergenceSpec::tv();
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
  else {
    std::cerr << "divergence: unknown kind '" << kind
              << "' (expected tv, kl, hellinger, lecam, or tv-sqrt-n)\n";
    return 2;
  }
  const bool scaled = spec.kind == DivergenceKind::ScaledTv;
  if (check_bound) {
    if (spec.bound)
      std::cout << number(*spec.bound) << "\n";
    else if (scaled)
      std::cout << "n^" << number(spec.scale_exponent) << "\n";
    else
      std::cout << "unbounded\n";
    return 0;
  }
  std::cout << "kind          " << kind << "\n";
  if (spec.bound)
    std::cout << "bound         " << number(*spec.bound) << "\n";
  else if (scaled)
    std::cout << "bound         n^" << number(spec.scale_exponent)
              << "  (the bound itself grows with n)\n";
  else
    std::cout << "bound         none\n";
  std::cout << "point masses  "
            << (spec.tolerates_point_mass() ? "tolerated" : "infinite divergence")
            << "\n";
  if (scaled)
    std::cout << "scaling       c(n) = n^" << number(spec.scale_exponent) << "\n";
  return 0;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    for (const std::string& issue : e.issues()) std::cerr << "  - " << issue << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

const char* kProblemKeys =
    "Config keys (defaults in parentheses):\n"
    "  loss.kind            gaussian-nll | table (gaussian-nll)\n"
    "  loss.sigma_p         observation std dev, gaussian-nll only (1)\n"
    "  loss.data.values     explicit observations, or\n"
    "  loss.data.n          observation count (with optional loss.data.dgp)\n"
    "  loss.data.dgp        {theta0 (0), sigma0 (1)} sampling law for data.n\n"
    "  loss.grid/.values    table loss nodes, or loss.csv with 'theta,value' rows\n"
    "  divergence.kind      tv | kl | hellinger | lecam | tv-sqrt-n (tv)\n"
    "  divergence.exponent  tv-sqrt-n growth exponent (0.5)\n"
    "  divergence.abs_tol   quadrature tolerance (1e-10)\n"
    "  divergence.support_padding  integration range in std devs (10)\n"
    "  prior                {mean (0), variance (1)} or {grid, weights}\n"
    "  beta                 learning rate (1)\n"
    "  family.kind          gaussian | discrete (gaussian); discrete needs family.grid\n"
    "  schedules.m_of_n     {kind: const|pow|log, coeff (1), exponent (1)}\n"
    "  schedules.beta_of_n  same shape as m_of_n\n"
    "  seed                 data-synthesis seed (0)\n";

const char* kExperimentCommonKeys =
    "  dgp                  {theta0 (0), sigma0 (1)}\n"
    "  sigma_p              model std dev (1)\n"
    "  priors               array of {mean, variance} or {grid, weights} ([N(0,1)])\n"
    "  divergence           as for solve (tv)\n"
    "  beta                 learning rate (1)\n"
    "  family               as for solve (gaussian)\n"
    "  schedules            as for solve (none)\n"
    "  seeds                array of seeds ([0])\n"
    "  replicates           replicates per seed (1)\n"
    "  nested_prefix        reuse one long draw's prefixes across n (false)\n"
    "  contract             enforce | report (enforce)\n";

std::string experiment_footer(const std::string& extra) {
  return "Config keys (defaults in parentheses):\n" + std::string(kExperimentCommonKeys) +
         extra;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Generalised variational posteriors: direct minimisation of\n"
      "n*E_q[loss] + D(q : prior)/beta over simple variational families,\n"
      "with region diagnostics and concentration/robustness experiments."};
  app.require_subcommand(1);

  int exit_code = 0;

  const auto wire = [&](const std::string& name, const std::string& desc,
                        const std::string& default_format, const std::string& footer,
                        std::function<int(const CommonOpts&)> fn) {
    CLI::App* sub = app.add_subcommand(name, desc);
    auto opt = std::make_shared<CommonOpts>();
    opt->format = default_format;
    sub->add_option("--config", opt->config_path, "Path to the JSON config")
        ->required();
    sub->add_option("--out", opt->out_dir, "Directory for output artifacts")
        ->capture_default_str();
    sub->add_option("--seed", opt->seed,
                    "Override the config's seed(s) with this single seed");
    sub->add_option("--format", opt->format, "Output format")
        ->check(CLI::IsMember({"csv", "json", "pretty"}))
        ->capture_default_str();
    sub->add_flag("--check", opt->check,
                  "Validate only: print the normalized config and exit");
    sub->footer(footer);
    sub->callback([&, opt, fn] { exit_code = guarded([&] { return fn(*opt); }); });
  };

  wire("solve", "Minimise the objective for one problem and print the posterior",
       "pretty", kProblemKeys, do_solve);
  wire("region", "Report the near-minimiser region: best loss, slack, and the "
       "Gaussian mean/variance disc", "pretty", kProblemKeys, do_region);
  wire("rates", "Posterior mass of shrinking neighbourhoods of the truth across n",
       "csv",
       experiment_footer("  n_schedule           sample sizes ([100, 1000, 10000])\n"
                         "  eps_schedule         {c (1), a (0.5)}: eps_n = c * n^-a\n"),
       [](const CommonOpts& o) { return run_rate_like(o, Subcommand::Rates, "rates"); });
  wire("concentrate", "Posterior mass of a fixed interval separated from the truth",
       "csv",
       experiment_footer("  n_schedule           sample sizes ([100, 1000, 10000])\n"
                         "  interval             {lo, hi}, required\n"),
       do_concentrate);
  wire("compare", "Exact Bayes posterior vs the variational posterior under "
       "prior-mean misspecification", "csv",
       experiment_footer("  mu_pi_offsets        prior-mean offsets from the sample "
                         "mean, required\n"
                         "  n                    sample size (10)\n"),
       do_compare);
  wire("schedule", "Rates run under explicit M(n)/beta(n) schedules (validated "
       "for divergence of n*eps_n*beta_n/M_n)", "csv",
       experiment_footer("  n_schedule           sample sizes ([100, 1000, 10000])\n"
                         "  eps_schedule         {c (1), a (0.5)}: eps_n = c * n^-a\n"),
       [](const CommonOpts& o) {
         return run_rate_like(o, Subcommand::Schedule, "schedule");
       });

  {
    CLI::App* sub = app.add_subcommand(
        "divergence", "Inspect a divergence kind: upper bound and point-mass behaviour");
    auto kind = std::make_shared<std::string>();
    auto exponent = std::make_shared<double>(0.5);
    auto check_bound = std::make_shared<bool>(false);
    sub->add_option("--kind", *kind,
                    "tv | kl | hellinger | lecam | tv-sqrt-n")
        ->required();
    sub->add_option("--exponent", *exponent,
                    "tv-sqrt-n growth exponent (default 0.5)");
    sub->add_flag("--check-bound", *check_bound,
                  "Print only the divergence's uniform upper bound");
    sub->callback([&, kind, exponent, check_bound] {
      exit_code =
          guarded([&] { return do_divergence(*kind, *exponent, *check_bound); });
    });
  }

  wire("unbounded", "Concentration under the unbounded kl divergence, tracking "
       "D(q : prior)/n", "csv",
       experiment_footer("  n_schedule           sample sizes ([100, 1000, 10000])\n"
                         "  interval             {lo, hi}, required\n"),
       do_unbounded);

  CLI11_PARSE(app, argc, argv);
  return exit_code;
}
