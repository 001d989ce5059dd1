#include "gvi/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gvi {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw IoError("'" + path + "': " + what);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& path) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    fail(path, "malformed numeric field '" + s + "'");
  return v;
}

std::int64_t parse_int(const std::string& s, const std::string& path) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    fail(path, "malformed integer field '" + s + "'");
  return static_cast<std::int64_t>(v);
}

std::uint64_t parse_uint(const std::string& s, const std::string& path) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE || s.find('-') != std::string::npos)
    fail(path, "malformed unsigned field '" + s + "'");
  return static_cast<std::uint64_t>(v);
}

bool parse_bool(const std::string& s, const std::string& path) {
  if (s == "0") return false;
  if (s == "1") return true;
  fail(path, "malformed boolean field '" + s + "' (expected 0 or 1)");
}

// Reads the file and decides which on-disk format it holds: a JSON envelope
// starts with '{', anything else is treated as CSV.
struct RawFile {
  std::string text;
  bool is_json = false;
};

RawFile read_raw(const std::string& path) {
  RawFile raw;
  raw.text = read_text_file(path);
  for (char c : raw.text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') continue;
    raw.is_json = c == '{';
    break;
  }
  return raw;
}

std::vector<std::string> csv_lines(const std::string& text) {
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
  return lines;
}

json parse_envelope(const RawFile& raw, const std::string& path) {
  json j;
  try {
    j = json::parse(raw.text);
  } catch (const json::exception& e) {
    fail(path, std::string("JSON parse failure: ") + e.what());
  }
  if (!j.is_object() || !j.contains("schema") || !j.contains("rows"))
    fail(path, "missing JSON envelope fields (schema, rows)");
  if (j["schema"] != 1) fail(path, "unsupported schema version");
  if (!j["rows"].is_array()) fail(path, "rows must be an array");
  return j;
}

void write_envelope(json rows, const std::string& path, const std::string& fingerprint) {
  json envelope;
  envelope["schema"] = 1;
  envelope["fingerprint"] = fingerprint;
  envelope["rows"] = std::move(rows);
  write_text_file(path, envelope.dump(2) + "\n");
}

template <typename Row, typename ToCsv, typename ToJson>
void persist_rows(const std::vector<Row>& rows, const std::string& path,
                  PersistFormat format, const std::string& fingerprint,
                  const char* header, ToCsv to_csv, ToJson to_json) {
  if (format == PersistFormat::Csv) {
    std::string out(header);
    out += '\n';
    for (const Row& r : rows) {
      out += to_csv(r);
      out += '\n';
    }
    write_text_file(path, out);
    return;
  }
  json arr = json::array();
  for (const Row& r : rows) arr.push_back(to_json(r));
  write_envelope(std::move(arr), path, fingerprint);
}

template <typename Row, typename FromCsv, typename FromJson>
std::vector<Row> load_rows(const std::string& path, const char* header,
                           std::size_t n_fields, FromCsv from_csv, FromJson from_json) {
  const RawFile raw = read_raw(path);
  std::vector<Row> rows;
  if (raw.is_json) {
    const json envelope = parse_envelope(raw, path);
    for (const json& j : envelope["rows"]) {
      try {
        rows.push_back(from_json(j));
      } catch (const json::exception& e) {
        fail(path, std::string("malformed row: ") + e.what());
      }
    }
    return rows;
  }
  const std::vector<std::string> lines = csv_lines(raw.text);
  if (lines.empty() || lines.front() != header)
    fail(path, std::string("expected header '") + header + "'");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::vector<std::string> f = split_fields(lines[i]);
    if (f.size() != n_fields) {
      std::ostringstream os;
      os << "line " << (i + 1) << ": expected " << n_fields << " fields, got "
         << f.size();
      fail(path, os.str());
    }
    rows.push_back(from_csv(f, path));
  }
  return rows;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open for reading");
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) fail(path, "read failure");
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");
  out << content;
  out.flush();
  if (!out) fail(path, "write failure");
}

void persist_rates(const std::vector<RateRow>& rows, const std::string& path,
                   PersistFormat format, const std::string& fingerprint) {
  persist_rows(
      rows, path, format, fingerprint, "n,eps_n,mass,slack,objective,seed",
      [](const RateRow& r) {
        std::ostringstream os;
        os << r.n << ',' << format_double(r.eps_n) << ',' << format_double(r.mass)
           << ',' << format_double(r.slack) << ',' << format_double(r.objective)
           << ',' << r.seed;
        return os.str();
      },
      [](const RateRow& r) {
        return json{{"n", r.n},           {"eps_n", r.eps_n}, {"mass", r.mass},
                    {"slack", r.slack},   {"objective", r.objective},
                    {"seed", r.seed}};
      });
}

std::vector<RateRow> load_rates(const std::string& path) {
  return load_rows<RateRow>(
      path, "n,eps_n,mass,slack,objective,seed", 6,
      [](const std::vector<std::string>& f, const std::string& p) {
        RateRow r;
        r.n = parse_int(f[0], p);
        r.eps_n = parse_double(f[1], p);
        r.mass = parse_double(f[2], p);
        r.slack = parse_double(f[3], p);
        r.objective = parse_double(f[4], p);
        r.seed = parse_uint(f[5], p);
        return r;
      },
      [](const json& j) {
        RateRow r;
        r.n = j.at("n").get<std::int64_t>();
        r.eps_n = j.at("eps_n").get<double>();
        r.mass = j.at("mass").get<double>();
        r.slack = j.at("slack").get<double>();
        r.objective = j.at("objective").get<double>();
        r.seed = j.at("seed").get<std::uint64_t>();
        return r;
      });
}

void persist_concentration(const std::vector<ConcentrationRow>& rows,
                           const std::string& path, PersistFormat format,
                           const std::string& fingerprint) {
  persist_rows(
      rows, path, format, fingerprint, "n,mass,seed",
      [](const ConcentrationRow& r) {
        std::ostringstream os;
        os << r.n << ',' << format_double(r.mass) << ',' << r.seed;
        return os.str();
      },
      [](const ConcentrationRow& r) {
        return json{{"n", r.n}, {"mass", r.mass}, {"seed", r.seed}};
      });
}

std::vector<ConcentrationRow> load_concentration(const std::string& path) {
  return load_rows<ConcentrationRow>(
      path, "n,mass,seed", 3,
      [](const std::vector<std::string>& f, const std::string& p) {
        ConcentrationRow r;
        r.n = parse_int(f[0], p);
        r.mass = parse_double(f[1], p);
        r.seed = parse_uint(f[2], p);
        return r;
      },
      [](const json& j) {
        ConcentrationRow r;
        r.n = j.at("n").get<std::int64_t>();
        r.mass = j.at("mass").get<double>();
        r.seed = j.at("seed").get<std::uint64_t>();
        return r;
      });
}

void persist_bayes(const std::vector<BayesRow>& rows, const std::string& path,
                   PersistFormat format, const std::string& fingerprint) {
  persist_rows(
      rows, path, format, fingerprint,
      "mu_pi,bayes_mean,gvi_mean,bayes_in_rstar,gvi_in_rstar,prior_ball_ok",
      [](const BayesRow& r) {
        std::ostringstream os;
        os << format_double(r.mu_pi) << ',' << format_double(r.bayes_mean) << ','
           << format_double(r.gvi_mean) << ',' << (r.bayes_in_rstar ? 1 : 0) << ','
           << (r.gvi_in_rstar ? 1 : 0) << ',' << (r.prior_ball_ok ? 1 : 0);
        return os.str();
      },
      [](const BayesRow& r) {
        return json{{"mu_pi", r.mu_pi},
                    {"bayes_mean", r.bayes_mean},
                    {"gvi_mean", r.gvi_mean},
                    {"bayes_in_rstar", r.bayes_in_rstar},
                    {"gvi_in_rstar", r.gvi_in_rstar},
                    {"prior_ball_ok", r.prior_ball_ok}};
      });
}

std::vector<BayesRow> load_bayes(const std::string& path) {
  return load_rows<BayesRow>(
      path, "mu_pi,bayes_mean,gvi_mean,bayes_in_rstar,gvi_in_rstar,prior_ball_ok", 6,
      [](const std::vector<std::string>& f, const std::string& p) {
        BayesRow r;
        r.mu_pi = parse_double(f[0], p);
        r.bayes_mean = parse_double(f[1], p);
        r.gvi_mean = parse_double(f[2], p);
        r.bayes_in_rstar = parse_bool(f[3], p);
        r.gvi_in_rstar = parse_bool(f[4], p);
        r.prior_ball_ok = parse_bool(f[5], p);
        return r;
      },
      [](const json& j) {
        BayesRow r;
        r.mu_pi = j.at("mu_pi").get<double>();
        r.bayes_mean = j.at("bayes_mean").get<double>();
        r.gvi_mean = j.at("gvi_mean").get<double>();
        r.bayes_in_rstar = j.at("bayes_in_rstar").get<bool>();
        r.gvi_in_rstar = j.at("gvi_in_rstar").get<bool>();
        r.prior_ball_ok = j.at("prior_ball_ok").get<bool>();
        return r;
      });
}

void persist_unbounded(const std::vector<UnboundedRow>& rows, const std::string& path,
                       PersistFormat format, const std::string& fingerprint) {
  persist_rows(
      rows, path, format, fingerprint, "n,mass,div_over_n,seed",
      [](const UnboundedRow& r) {
        std::ostringstream os;
        os << r.n << ',' << format_double(r.mass) << ',' << format_double(r.div_over_n)
           << ',' << r.seed;
        return os.str();
      },
      [](const UnboundedRow& r) {
        return json{{"n", r.n},
                    {"mass", r.mass},
                    {"div_over_n", r.div_over_n},
                    {"seed", r.seed}};
      });
}

std::vector<UnboundedRow> load_unbounded(const std::string& path) {
  return load_rows<UnboundedRow>(
      path, "n,mass,div_over_n,seed", 4,
      [](const std::vector<std::string>& f, const std::string& p) {
        UnboundedRow r;
        r.n = parse_int(f[0], p);
        r.mass = parse_double(f[1], p);
        r.div_over_n = parse_double(f[2], p);
        r.seed = parse_uint(f[3], p);
        return r;
      },
      [](const json& j) {
        UnboundedRow r;
        r.n = j.at("n").get<std::int64_t>();
        r.mass = j.at("mass").get<double>();
        r.div_over_n = j.at("div_over_n").get<double>();
        r.seed = j.at("seed").get<std::uint64_t>();
        return r;
      });
}

std::string solve_result_to_json(const SolveResult& res, const std::string& fingerprint) {
  json posterior;
  if (const auto* g = std::get_if<GaussianMeasure>(&res.posterior)) {
    posterior["kind"] = g->is_dirac() ? "dirac" : "gaussian";
    posterior["mean"] = g->mean;
    posterior["variance"] = g->variance;
  } else {
    const auto& d = std::get<DiscreteMeasure>(res.posterior);
    posterior["kind"] = "discrete";
    posterior["grid"] = std::vector<double>(d.grid.data(), d.grid.data() + d.size());
    posterior["weights"] =
        std::vector<double>(d.weights.data(), d.weights.data() + d.size());
  }
  json result;
  result["posterior"] = std::move(posterior);
  result["objective"] = res.objective;
  result["loss_part"] = res.loss_part;
  result["div_part"] = res.div_part;
  result["iterations"] = res.iterations;
  result["converged"] = res.converged;
  if (res.in_rstar)
    result["in_rstar"] = *res.in_rstar;
  else
    result["in_rstar"] = nullptr;
  json envelope;
  envelope["schema"] = 1;
  envelope["fingerprint"] = fingerprint;
  envelope["result"] = std::move(result);
  return envelope.dump(2) + "\n";
}

}  // namespace gvi
