#ifndef CHFOCK_RECORD_HPP
#define CHFOCK_RECORD_HPP

// Run records and their two serializations.
//
// records.jsonl: one JSON object per line, the first of type "header".
// CSV files (checks.csv, solves.csv, sectors.csv, sweep.csv): a
// "# config_hash <hex>" line, a column header, then rows with every float at
// 17 significant digits. Column orders are fixed by the *_columns() lists.

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace chfock {

inline constexpr const char* artifact_name = "chfock";
inline constexpr const char* artifact_version = "0.1.0";

struct RecordHeader {
  std::string mode;
  std::string config_hash;
  nlohmann::ordered_json config;
};

struct SolveRow {
  double mu = 0.0;
  double lambda = 0.0;
  double mass = 0.0;
  double E0 = 0.0;
  double gap = 0.0;
  std::optional<int> sector;
  std::size_t degeneracy = 1;
  double N_expect = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool dense = false;
  std::size_t dim = 0;
};

struct SectorRow {
  double mu = 0.0;
  double lambda = 0.0;
  double mass = 0.0;
  int z = 0;
  double E0 = 0.0;
  double gap = 0.0;
  double N_expect = 0.0;
  std::size_t dim = 0;
};

struct SweepRow {
  double mass = 0.0;
  double E0 = 0.0;
  double E0_minus_E0_massless = 0.0;
  double N_expect = 0.0;
  std::optional<int> sector;
  double gap = 0.0;
  double mu = 0.0;
  double lambda = 0.0;
};

struct CheckRow {
  std::string check_id;
  double residual = 0.0;
  double threshold = 0.0;
  bool passed = false;
  /// Empty for checks that do not depend on the coupling point.
  std::optional<double> mu;
  std::optional<double> lambda;
  nlohmann::ordered_json context = nlohmann::ordered_json::object();
};

struct TimingRow {
  std::string stage;
  double seconds = 0.0;
};

struct ErrorRow {
  std::string stage;
  std::string message;
  std::optional<double> mu;
  std::optional<double> lambda;
};

struct RunRecord {
  RecordHeader header;
  std::vector<SolveRow> solves;
  std::vector<SectorRow> sectors;
  std::vector<SweepRow> sweep;
  std::vector<CheckRow> checks;
  std::vector<TimingRow> timings;
  std::vector<ErrorRow> errors;

  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

inline const std::vector<std::string>& check_columns() {
  static const std::vector<std::string> c = {"check_id", "residual", "threshold", "passed",
                                             "mu",       "lambda",   "context"};
  return c;
}
inline const std::vector<std::string>& solve_columns() {
  static const std::vector<std::string> c = {"mu",       "lambda",    "mass",       "E0",
                                             "gap",      "sector",    "degeneracy", "N_expect",
                                             "residual", "iterations", "solver",    "dim"};
  return c;
}
inline const std::vector<std::string>& sector_columns() {
  static const std::vector<std::string> c = {"mu", "lambda", "mass", "z",
                                             "E0", "gap",    "N_expect", "dim"};
  return c;
}
inline const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> c = {"mass",   "E0",  "E0_minus_E0_massless",
                                             "N_expect", "sector", "gap", "mu", "lambda"};
  return c;
}

// ---------------------------------------------------------------------------
// JSON lines

namespace detail {

using J = nlohmann::ordered_json;

/// Non-finite doubles become strings so that they survive the round trip.
inline J num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double get_num(const J& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw std::runtime_error("record: bad number '" + s + "'");
  }
  return j.get<double>();
}

template <class T>
J opt(const std::optional<T>& v) {
  return v ? J(*v) : J(nullptr);
}

template <class T>
std::optional<T> get_opt(const J& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

}  // namespace detail

inline std::vector<nlohmann::ordered_json> to_json_lines(const RunRecord& r) {
  using detail::J;
  using detail::num;
  using detail::opt;
  std::vector<J> out;
  out.push_back({{"type", "header"},
                 {"artifact", artifact_name},
                 {"version", artifact_version},
                 {"mode", r.header.mode},
                 {"config_hash", r.header.config_hash},
                 {"config", r.header.config}});
  for (const auto& s : r.solves)
    out.push_back({{"type", "solve"},        {"mu", num(s.mu)},
                   {"lambda", num(s.lambda)}, {"mass", num(s.mass)},
                   {"E0", num(s.E0)},         {"gap", num(s.gap)},
                   {"sector", opt(s.sector)}, {"degeneracy", s.degeneracy},
                   {"N_expect", num(s.N_expect)}, {"residual", num(s.residual)},
                   {"iterations", s.iterations}, {"solver", s.dense ? "dense" : "lanczos"},
                   {"dim", s.dim}});
  for (const auto& s : r.sectors)
    out.push_back({{"type", "sector"},
                   {"mu", num(s.mu)},
                   {"lambda", num(s.lambda)},
                   {"mass", num(s.mass)},
                   {"z", s.z},
                   {"E0", num(s.E0)},
                   {"gap", num(s.gap)},
                   {"N_expect", num(s.N_expect)},
                   {"dim", s.dim}});
  for (const auto& s : r.sweep)
    out.push_back({{"type", "sweep"},
                   {"mass", num(s.mass)},
                   {"E0", num(s.E0)},
                   {"E0_minus_E0_massless", num(s.E0_minus_E0_massless)},
                   {"N_expect", num(s.N_expect)},
                   {"sector", opt(s.sector)},
                   {"gap", num(s.gap)},
                   {"mu", num(s.mu)},
                   {"lambda", num(s.lambda)}});
  for (const auto& c : r.checks)
    out.push_back({{"type", "check"},
                   {"check_id", c.check_id},
                   {"residual", num(c.residual)},
                   {"threshold", num(c.threshold)},
                   {"passed", c.passed},
                   {"mu", opt(c.mu)},
                   {"lambda", opt(c.lambda)},
                   {"context", c.context}});
  for (const auto& t : r.timings)
    out.push_back({{"type", "timing"}, {"stage", t.stage}, {"seconds", num(t.seconds)}});
  for (const auto& e : r.errors)
    out.push_back({{"type", "error"},
                   {"stage", e.stage},
                   {"message", e.message},
                   {"mu", opt(e.mu)},
                   {"lambda", opt(e.lambda)}});
  return out;
}

inline std::string to_jsonl(const RunRecord& r) {
  std::string s;
  for (const auto& j : to_json_lines(r)) s += j.dump() + "\n";
  return s;
}

inline RunRecord parse_jsonl(std::istream& in) {
  using detail::get_num;
  using detail::get_opt;
  RunRecord r;
  std::string line;
  bool have_header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    detail::J j;
    try {
      j = detail::J::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("records.jsonl:" + std::to_string(lineno) + ": " + e.what());
    }
    const auto type = j.at("type").get<std::string>();
    if (type == "header") {
      r.header.mode = j.at("mode").get<std::string>();
      r.header.config_hash = j.at("config_hash").get<std::string>();
      r.header.config = j.at("config");
      have_header = true;
    } else if (type == "solve") {
      SolveRow s;
      s.mu = get_num(j.at("mu"));
      s.lambda = get_num(j.at("lambda"));
      s.mass = get_num(j.at("mass"));
      s.E0 = get_num(j.at("E0"));
      s.gap = get_num(j.at("gap"));
      s.sector = get_opt<int>(j.at("sector"));
      s.degeneracy = j.at("degeneracy").get<std::size_t>();
      s.N_expect = get_num(j.at("N_expect"));
      s.residual = get_num(j.at("residual"));
      s.iterations = j.at("iterations").get<int>();
      s.dense = j.at("solver").get<std::string>() == "dense";
      s.dim = j.at("dim").get<std::size_t>();
      r.solves.push_back(s);
    } else if (type == "sector") {
      SectorRow s;
      s.mu = get_num(j.at("mu"));
      s.lambda = get_num(j.at("lambda"));
      s.mass = get_num(j.at("mass"));
      s.z = j.at("z").get<int>();
      s.E0 = get_num(j.at("E0"));
      s.gap = get_num(j.at("gap"));
      s.N_expect = get_num(j.at("N_expect"));
      s.dim = j.at("dim").get<std::size_t>();
      r.sectors.push_back(s);
    } else if (type == "sweep") {
      SweepRow s;
      s.mass = get_num(j.at("mass"));
      s.E0 = get_num(j.at("E0"));
      s.E0_minus_E0_massless = get_num(j.at("E0_minus_E0_massless"));
      s.N_expect = get_num(j.at("N_expect"));
      s.sector = get_opt<int>(j.at("sector"));
      s.gap = get_num(j.at("gap"));
      s.mu = get_num(j.at("mu"));
      s.lambda = get_num(j.at("lambda"));
      r.sweep.push_back(s);
    } else if (type == "check") {
      CheckRow c;
      c.check_id = j.at("check_id").get<std::string>();
      c.residual = get_num(j.at("residual"));
      c.threshold = get_num(j.at("threshold"));
      c.passed = j.at("passed").get<bool>();
      c.mu = get_opt<double>(j.at("mu"));
      c.lambda = get_opt<double>(j.at("lambda"));
      c.context = j.at("context");
      r.checks.push_back(c);
    } else if (type == "timing") {
      r.timings.push_back({j.at("stage").get<std::string>(), get_num(j.at("seconds"))});
    } else if (type == "error") {
      r.errors.push_back({j.at("stage").get<std::string>(), j.at("message").get<std::string>(),
                          get_opt<double>(j.at("mu")), get_opt<double>(j.at("lambda"))});
    } else {
      throw std::runtime_error("records.jsonl:" + std::to_string(lineno) + ": unknown type '" +
                               type + "'");
    }
  }
  if (!have_header) throw std::runtime_error("records.jsonl: missing header record");
  return r;
}

inline RunRecord load_record(const std::filesystem::path& jsonl) {
  std::ifstream in(jsonl);
  if (!in) throw std::runtime_error("cannot open " + jsonl.string());
  return parse_jsonl(in);
}

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

namespace detail {

inline void csv_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) os << (i ? "," : "") << csv_field(fields[i]);
  os << "\n";
}

inline void csv_preamble(std::ostream& os, const RunRecord& r,
                         const std::vector<std::string>& columns) {
  os << "# config_hash " << r.header.config_hash << "\n";
  csv_row(os, columns);
}

inline std::string opt_num(const std::optional<double>& v) { return v ? csv_number(*v) : ""; }
inline std::string opt_int(const std::optional<int>& v) {
  return v ? std::to_string(*v) : "";
}

}  // namespace detail

inline std::string checks_csv(const RunRecord& r) {
  std::ostringstream os;
  detail::csv_preamble(os, r, check_columns());
  for (const auto& c : r.checks)
    detail::csv_row(os, {c.check_id, csv_number(c.residual), csv_number(c.threshold),
                         c.passed ? "true" : "false", detail::opt_num(c.mu),
                         detail::opt_num(c.lambda), c.context.dump()});
  return os.str();
}

inline std::string solves_csv(const RunRecord& r) {
  std::ostringstream os;
  detail::csv_preamble(os, r, solve_columns());
  for (const auto& s : r.solves)
    detail::csv_row(os, {csv_number(s.mu), csv_number(s.lambda), csv_number(s.mass),
                         csv_number(s.E0), csv_number(s.gap), detail::opt_int(s.sector),
                         std::to_string(s.degeneracy), csv_number(s.N_expect),
                         csv_number(s.residual), std::to_string(s.iterations),
                         s.dense ? "dense" : "lanczos", std::to_string(s.dim)});
  return os.str();
}

inline std::string sectors_csv(const RunRecord& r) {
  std::ostringstream os;
  detail::csv_preamble(os, r, sector_columns());
  for (const auto& s : r.sectors)
    detail::csv_row(os, {csv_number(s.mu), csv_number(s.lambda), csv_number(s.mass),
                         std::to_string(s.z), csv_number(s.E0), csv_number(s.gap),
                         csv_number(s.N_expect), std::to_string(s.dim)});
  return os.str();
}

inline std::string sweep_csv(const RunRecord& r) {
  std::ostringstream os;
  detail::csv_preamble(os, r, sweep_columns());
  for (const auto& s : r.sweep)
    detail::csv_row(os, {csv_number(s.mass), csv_number(s.E0),
                         csv_number(s.E0_minus_E0_massless), csv_number(s.N_expect),
                         detail::opt_int(s.sector), csv_number(s.gap), csv_number(s.mu),
                         csv_number(s.lambda)});
  return os.str();
}

/// Parsed CSV: the config hash line, the column header and the rows.
struct CsvTable {
  std::string config_hash;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  std::size_t i = 0;
  if (text.rfind("# config_hash ", 0) == 0) {
    const std::size_t eol = text.find('\n');
    t.config_hash = text.substr(14, eol - 14);
    i = eol == std::string::npos ? text.size() : eol + 1;
  }
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      fields.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(fields));
      fields.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw std::runtime_error("csv: unterminated quoted field");
  if (!field.empty() || !fields.empty()) {
    fields.push_back(std::move(field));
    records.push_back(std::move(fields));
  }
  if (records.empty()) throw std::runtime_error("csv: missing column header");
  t.columns = std::move(records.front());
  t.rows.assign(std::make_move_iterator(records.begin() + 1),
                std::make_move_iterator(records.end()));
  return t;
}

enum class OutputFormat { tabular, records };

/// Writes the requested formats into `dir` and returns the written paths.
inline std::vector<std::filesystem::path> emit_report(const RunRecord& r,
                                                      const std::filesystem::path& dir,
                                                      const std::vector<OutputFormat>& formats) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const auto put = [&](const std::string& name, const std::string& body) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << body;
    if (!out) throw std::runtime_error("write failed: " + path.string());
    written.push_back(path);
  };
  for (OutputFormat f : formats) {
    if (f == OutputFormat::records) {
      put("records.jsonl", to_jsonl(r));
    } else {
      put("checks.csv", checks_csv(r));
      put("solves.csv", solves_csv(r));
      put("sectors.csv", sectors_csv(r));
      put("sweep.csv", sweep_csv(r));
    }
  }
  return written;
}

}  // namespace chfock

#endif  // CHFOCK_RECORD_HPP
