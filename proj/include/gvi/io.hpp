#pragma once

#include <string>
#include <vector>

#include "gvi/experiments.hpp"

namespace gvi {

enum class PersistFormat { Csv, Json };

// Writers emit a fixed documented column order:
//   rates          n,eps_n,mass,slack,objective,seed
//   concentration  n,mass,seed
//   comparison     mu_pi,bayes_mean,gvi_mean,bayes_in_rstar,gvi_in_rstar,prior_ball_ok
//   unbounded      n,mass,div_over_n,seed
// CSV prints doubles with %.17g and booleans as 0/1; JSON wraps rows in the
// envelope {"schema": 1, "fingerprint": ..., "rows": [...]}. Both formats
// round-trip through the matching loader bit-exactly. The loaders detect the
// format from the file content. All failures surface as IoError naming the
// path.
void persist_rates(const std::vector<RateRow>& rows, const std::string& path,
                   PersistFormat format, const std::string& fingerprint);
std::vector<RateRow> load_rates(const std::string& path);

void persist_concentration(const std::vector<ConcentrationRow>& rows,
                           const std::string& path, PersistFormat format,
                           const std::string& fingerprint);
std::vector<ConcentrationRow> load_concentration(const std::string& path);

void persist_bayes(const std::vector<BayesRow>& rows, const std::string& path,
                   PersistFormat format, const std::string& fingerprint);
std::vector<BayesRow> load_bayes(const std::string& path);

void persist_unbounded(const std::vector<UnboundedRow>& rows, const std::string& path,
                       PersistFormat format, const std::string& fingerprint);
std::vector<UnboundedRow> load_unbounded(const std::string& path);

// Round-trip-exact decimal form used by every CSV writer (%.17g).
std::string format_double(double v);

// JSON record of a solve, with the posterior spelled out by track. Pretty
// multi-line text; ends with a newline.
std::string solve_result_to_json(const SolveResult& res, const std::string& fingerprint);

// Whole-file helpers; IoError with path context on failure.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace gvi
