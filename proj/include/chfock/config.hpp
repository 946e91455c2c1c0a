#ifndef CHFOCK_CONFIG_HPP
#define CHFOCK_CONFIG_HPP

// Run configuration: a YAML document with the blocks model, solver, checks
// and output. Unknown keys are rejected. Every error names the field path
// and, when the text came from YAML, its line and column.

#include <yaml-cpp/yaml.h>

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chfock/operators.hpp"
#include "chfock/spectral.hpp"
#include "chfock/verify.hpp"

namespace chfock {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& message, int line = -1, int column = -1)
      : std::runtime_error(format(path, message, line, column)),
        path_(path),
        line_(line),
        column_(column) {}
  const std::string& path() const { return path_; }
  /// 1-based; -1 when unknown.
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  static std::string format(const std::string& path, const std::string& message, int line,
                            int column) {
    std::ostringstream os;
    os << "config";
    if (line >= 0) os << ':' << line << ':' << column;
    os << ": " << (path.empty() ? "<root>" : path) << ": " << message;
    return os.str();
  }
  std::string path_;
  int line_;
  int column_;
};

struct ModelConfig {
  int d = 1;
  double K = 1.0;
  std::size_t n_half = 1;
  std::string profile = "tent";
  double L = 2.0;
  std::size_t P = 9;
  std::string chi = "gaussian";
  double chi_width = 1.0;
  double chi_value = 1.0;
  bool chi_normalize = true;
  std::vector<double> mu{-1.0, 0.0, 1.0};
  std::vector<double> lambda{0.1, 1.0};
  double q = 1.0;
  /// Mass of H_m for `solve` and `sectors`; 0 selects H.
  double mass = 0.0;
  /// Positive, strictly descending; the massless point is always appended.
  std::vector<double> masses{1.0, 0.5, 0.1, 0.01};
  int n_max = 8;
  Truncation truncation = Truncation::compressed;
};

struct CheckOptions {
  std::optional<int> trials;
  std::optional<double> threshold;
  std::optional<double> overlap_threshold;
  std::optional<double> epsilon;
  std::optional<double> eta;
  std::optional<std::vector<double>> thetas;
  std::optional<double> mass;
  std::optional<double> shell_factor;
  std::optional<double> ratio_bound;
  std::optional<std::vector<std::pair<double, double>>> couplings;
};

struct OutputConfig {
  std::optional<std::string> directory;
  std::vector<std::string> formats{"tabular", "records"};
};

struct RunConfig {
  ModelConfig model;
  SolverOptions solver;
  std::size_t dimension_cap = default_dimension_cap;
  /// Ordered as in check_registry().
  std::map<std::string, CheckOptions> checks;
  OutputConfig output;

  std::vector<std::pair<double, double>> coupling_points() const {
    std::vector<std::pair<double, double>> out;
    for (double mu : model.mu)
      for (double lambda : model.lambda) out.emplace_back(mu, lambda);
    return out;
  }

  std::vector<std::string> enabled_checks() const {
    std::vector<std::string> out;
    for (const auto& id : check_registry())
      if (checks.count(id)) out.push_back(id);
    return out;
  }
};

/// Options each check accepts in the `checks` block.
inline const std::map<std::string, std::set<std::string>>& check_option_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {check_id::ccr, {"trials", "threshold"}},
      {check_id::field_commutators, {"trials", "threshold", "overlap_threshold"}},
      {check_id::double_commutator, {"threshold"}},
      {check_id::creator_commutator, {"trials", "threshold"}},
      {check_id::lower_bound, {"threshold", "couplings"}},
      {check_id::relative_bounds, {"trials", "threshold", "epsilon", "eta", "thetas"}},
      {check_id::pull_through, {"mass", "shell_factor"}},
      {check_id::charge_commutation, {"threshold"}},
      {check_id::charge_number_relation, {}},
      {check_id::number_bound_uniform, {"ratio_bound"}},
      {check_id::mass_limit, {"threshold"}},
      {check_id::solver_oracle, {}},
  };
  return keys;
}

/// Default coupling sweep of the lower-bound check.
inline std::vector<std::pair<double, double>> default_lower_bound_couplings() {
  std::vector<std::pair<double, double>> out;
  for (double mu : {-2.0, -1.0, 0.0, 1.0})
    for (double lambda : {0.1, 0.5, 1.0}) out.emplace_back(mu, lambda);
  return out;
}

namespace detail {

class YamlReader {
 public:
  [[noreturn]] static void fail(const YAML::Node& node, const std::string& path,
                                const std::string& message) {
    const YAML::Mark m = node.Mark();
    if (m.is_null()) throw ConfigError(path, message);
    throw ConfigError(path, message, m.line + 1, m.column + 1);
  }

  static void require_map(const YAML::Node& node, const std::string& path,
                          const std::set<std::string>& allowed) {
    if (!node.IsMap()) fail(node, path, "expected a mapping");
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) {
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        fail(kv.first, join(path, key),
             "unknown key" + (list.empty() ? std::string() : " (expected one of: " + list + ")"));
      }
    }
  }

  template <class T>
  static T scalar(const YAML::Node& node, const std::string& path, const char* what) {
    if (!node.IsScalar()) fail(node, path, std::string("expected ") + what);
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, path, std::string("expected ") + what + ", got '" + node.Scalar() + "'");
    }
  }

  static double number(const YAML::Node& node, const std::string& path) {
    const double v = scalar<double>(node, path, "a number");
    if (!std::isfinite(v)) fail(node, path, "must be finite");
    return v;
  }

  static int integer(const YAML::Node& node, const std::string& path) {
    return scalar<int>(node, path, "an integer");
  }

  /// A scalar or a non-empty sequence of numbers.
  static std::vector<double> numbers(const YAML::Node& node, const std::string& path) {
    if (node.IsScalar()) return {number(node, path)};
    if (!node.IsSequence() || node.size() == 0)
      fail(node, path, "expected a number or a non-empty list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < node.size(); ++i)
      out.push_back(number(node[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }

  static std::string join(const std::string& a, const std::string& b) {
    return a.empty() ? b : a + "." + b;
  }
};

}  // namespace detail

namespace detail {

inline void read_model(const YAML::Node& n, ModelConfig& m) {
  using R = YamlReader;
  const std::string p = "model";
  R::require_map(n, p,
                 {"d", "K", "n_half", "profile", "L", "P", "chi", "mu", "lambda", "q", "mass",
                  "masses", "N_max", "truncation"});
  if (n["d"]) {
    m.d = R::integer(n["d"], p + ".d");
    if (m.d < 1 || m.d > 3) R::fail(n["d"], p + ".d", "must be 1, 2 or 3");
  }
  if (n["K"]) {
    m.K = R::number(n["K"], p + ".K");
    if (!(m.K > 0)) R::fail(n["K"], p + ".K", "momentum cutoff must be > 0");
  }
  if (n["n_half"]) {
    const int v = R::integer(n["n_half"], p + ".n_half");
    if (v < 1) R::fail(n["n_half"], p + ".n_half", "must be >= 1");
    m.n_half = static_cast<std::size_t>(v);
  }
  if (const YAML::Node pr = n["profile"]) {
    const YAML::Node name = pr.IsMap() ? pr["name"] : pr;
    if (pr.IsMap()) R::require_map(pr, p + ".profile", {"name"});
    if (!name) R::fail(pr, p + ".profile.name", "missing profile name");
    m.profile = R::scalar<std::string>(name, p + ".profile.name", "a profile name");
    if (m.profile != "tent" && m.profile != "indicator")
      R::fail(name, p + ".profile.name", "unknown profile '" + m.profile + "' (tent | indicator)");
  }
  if (n["L"]) {
    m.L = R::number(n["L"], p + ".L");
    if (!(m.L > 0)) R::fail(n["L"], p + ".L", "spatial extent must be > 0");
  }
  if (n["P"]) {
    const int v = R::integer(n["P"], p + ".P");
    if (v < 1) R::fail(n["P"], p + ".P", "must be >= 1");
    m.P = static_cast<std::size_t>(v);
  }
  if (const YAML::Node c = n["chi"]) {
    const std::string cp = p + ".chi";
    R::require_map(c, cp, {"name", "width", "value", "normalize"});
    if (c["name"]) m.chi = R::scalar<std::string>(c["name"], cp + ".name", "a cutoff name");
    if (m.chi != "gaussian" && m.chi != "constant")
      R::fail(c["name"], cp + ".name", "unknown cutoff '" + m.chi + "' (gaussian | constant)");
    if (c["width"]) {
      if (m.chi != "gaussian") R::fail(c["width"], cp + ".width", "only used by gaussian");
      m.chi_width = R::number(c["width"], cp + ".width");
      if (!(m.chi_width > 0)) R::fail(c["width"], cp + ".width", "must be > 0");
    }
    if (c["value"]) {
      if (m.chi != "constant") R::fail(c["value"], cp + ".value", "only used by constant");
      m.chi_value = R::number(c["value"], cp + ".value");
      if (!(m.chi_value > 0)) R::fail(c["value"], cp + ".value", "must be > 0");
    }
    if (c["normalize"])
      m.chi_normalize = R::scalar<bool>(c["normalize"], cp + ".normalize", "true or false");
  }
  if (n["mu"]) m.mu = R::numbers(n["mu"], p + ".mu");
  if (n["lambda"]) {
    m.lambda = R::numbers(n["lambda"], p + ".lambda");
    for (std::size_t i = 0; i < m.lambda.size(); ++i)
      if (!(m.lambda[i] > 0)) {
        const YAML::Node at = n["lambda"].IsSequence() ? n["lambda"][i] : n["lambda"];
        std::ostringstream os;
        os << "λ>0 is a coupling constant (got " << m.lambda[i] << ")";
        R::fail(at, p + ".lambda", os.str());
      }
  }
  if (n["q"]) {
    m.q = R::number(n["q"], p + ".q");
    if (m.q == 0.0) R::fail(n["q"], p + ".q", "the charge must satisfy q∈ℝ∖{0}");
  }
  if (n["mass"]) {
    m.mass = R::number(n["mass"], p + ".mass");
    if (m.mass < 0) R::fail(n["mass"], p + ".mass", "must be >= 0");
  }
  if (const YAML::Node ms = n["masses"]) {
    std::vector<double> v = R::numbers(ms, p + ".masses");
    if (!v.empty() && v.back() == 0.0) v.pop_back();  // the massless point is implicit
    for (std::size_t i = 0; i < v.size(); ++i) {
      const YAML::Node at = ms.IsSequence() ? ms[i] : ms;
      if (!(v[i] > 0)) R::fail(at, p + ".masses", "masses must be > 0 (0 may only come last)");
      if (i > 0 && !(v[i] < v[i - 1])) R::fail(at, p + ".masses", "must be strictly descending");
    }
    m.masses = v;
  }
  if (n["N_max"]) {
    m.n_max = R::integer(n["N_max"], p + ".N_max");
    if (m.n_max < 0) R::fail(n["N_max"], p + ".N_max", "must be >= 0");
  }
  if (n["truncation"]) {
    const auto t = R::scalar<std::string>(n["truncation"], p + ".truncation", "a name");
    try {
      m.truncation = truncation_from_string(t);
    } catch (const std::invalid_argument& e) {
      R::fail(n["truncation"], p + ".truncation", e.what());
    }
  }
}

inline void read_solver(const YAML::Node& n, RunConfig& c) {
  using R = YamlReader;
  const std::string p = "solver";
  R::require_map(n, p, {"tol", "max_iter", "seed", "dense_threshold", "krylov_dim", "dimension_cap"});
  if (n["tol"]) {
    c.solver.tol = R::number(n["tol"], p + ".tol");
    if (!(c.solver.tol > 0)) R::fail(n["tol"], p + ".tol", "must be > 0");
  }
  if (n["max_iter"]) {
    c.solver.max_iter = R::integer(n["max_iter"], p + ".max_iter");
    if (c.solver.max_iter < 1) R::fail(n["max_iter"], p + ".max_iter", "must be >= 1");
  }
  if (n["seed"]) c.solver.seed = R::scalar<std::uint64_t>(n["seed"], p + ".seed", "an unsigned integer");
  if (n["dense_threshold"]) {
    const int v = R::integer(n["dense_threshold"], p + ".dense_threshold");
    if (v < 0) R::fail(n["dense_threshold"], p + ".dense_threshold", "must be >= 0");
    c.solver.dense_threshold = static_cast<std::size_t>(v);
  }
  if (n["krylov_dim"]) {
    c.solver.krylov_dim = R::integer(n["krylov_dim"], p + ".krylov_dim");
    if (c.solver.krylov_dim < 4) R::fail(n["krylov_dim"], p + ".krylov_dim", "must be >= 4");
  }
  if (n["dimension_cap"]) {
    const auto v = R::scalar<std::uint64_t>(n["dimension_cap"], p + ".dimension_cap",
                                            "an unsigned integer");
    if (v < 1) R::fail(n["dimension_cap"], p + ".dimension_cap", "must be >= 1");
    c.dimension_cap = static_cast<std::size_t>(v);
  }
}

inline void read_checks(const YAML::Node& n, RunConfig& c) {
  using R = YamlReader;
  const std::string p = "checks";
  c.checks.clear();
  if (n.IsNull()) return;
  std::set<std::string> ids(check_registry().begin(), check_registry().end());
  R::require_map(n, p, ids);
  for (const auto& kv : n) {
    const auto id = kv.first.as<std::string>();
    const std::string cp = p + "." + id;
    const YAML::Node o = kv.second;
    CheckOptions opt;
    if (!o.IsNull()) {
      R::require_map(o, cp, check_option_keys().at(id));
      if (o["trials"]) {
        opt.trials = R::integer(o["trials"], cp + ".trials");
        if (*opt.trials < 1) R::fail(o["trials"], cp + ".trials", "must be >= 1");
      }
      for (const char* key : {"threshold", "overlap_threshold"})
        if (o[key]) {
          const double v = R::number(o[key], cp + "." + key);
          if (id != check_id::lower_bound && id != check_id::mass_limit && !(v > 0))
            R::fail(o[key], cp + "." + key, "must be > 0");
          (std::string(key) == "threshold" ? opt.threshold : opt.overlap_threshold) = v;
        }
      if (o["epsilon"]) opt.epsilon = R::number(o["epsilon"], cp + ".epsilon");
      if (o["eta"]) opt.eta = R::number(o["eta"], cp + ".eta");
      if (opt.epsilon.has_value() != opt.eta.has_value())
        R::fail(o, cp, "epsilon and eta must be given together");
      if (o["thetas"]) {
        opt.thetas = R::numbers(o["thetas"], cp + ".thetas");
        for (double t : *opt.thetas)
          if (!(t > 0)) R::fail(o["thetas"], cp + ".thetas", "must be > 0");
      }
      if (o["mass"]) {
        opt.mass = R::number(o["mass"], cp + ".mass");
        if (!(*opt.mass > 0)) R::fail(o["mass"], cp + ".mass", "pull-through needs mass > 0");
      }
      if (o["shell_factor"]) {
        opt.shell_factor = R::number(o["shell_factor"], cp + ".shell_factor");
        if (!(*opt.shell_factor > 0)) R::fail(o["shell_factor"], cp + ".shell_factor", "must be > 0");
      }
      if (o["ratio_bound"]) {
        opt.ratio_bound = R::number(o["ratio_bound"], cp + ".ratio_bound");
        if (!(*opt.ratio_bound >= 1)) R::fail(o["ratio_bound"], cp + ".ratio_bound", "must be >= 1");
      }
      if (const YAML::Node cs = o["couplings"]) {
        if (!cs.IsSequence() || cs.size() == 0)
          R::fail(cs, cp + ".couplings", "expected a list of [mu, lambda] pairs");
        std::vector<std::pair<double, double>> pairs;
        for (std::size_t i = 0; i < cs.size(); ++i) {
          const std::string ip = cp + ".couplings[" + std::to_string(i) + "]";
          if (!cs[i].IsSequence() || cs[i].size() != 2) R::fail(cs[i], ip, "expected [mu, lambda]");
          const double mu = R::number(cs[i][0], ip);
          const double lambda = R::number(cs[i][1], ip);
          if (!(lambda > 0)) R::fail(cs[i][1], ip, "λ>0 is a coupling constant");
          pairs.emplace_back(mu, lambda);
        }
        opt.couplings = pairs;
      }
    }
    c.checks[id] = opt;
  }
}

inline void read_output(const YAML::Node& n, OutputConfig& o) {
  using R = YamlReader;
  R::require_map(n, "output", {"directory", "formats"});
  if (n["directory"])
    o.directory = R::scalar<std::string>(n["directory"], "output.directory", "a path");
  if (const YAML::Node f = n["formats"]) {
    std::vector<std::string> v;
    if (f.IsScalar()) v.push_back(f.as<std::string>());
    else if (f.IsSequence())
      for (std::size_t i = 0; i < f.size(); ++i)
        v.push_back(R::scalar<std::string>(f[i], "output.formats", "a format name"));
    else R::fail(f, "output.formats", "expected a format name or list");
    for (const auto& s : v)
      if (s != "tabular" && s != "records")
        R::fail(f, "output.formats", "unknown format '" + s + "' (tabular | records)");
    o.formats = v;
  }
}

}  // namespace detail

/// Model parameters at one coupling point.
inline ModelParams model_params(const ModelConfig& m, double mu, double lambda) {
  ModelParams p;
  p.mu = mu;
  p.lambda = lambda;
  p.q = m.q;
  p.mass = m.mass;
  p.n_max = m.n_max;
  p.truncation = m.truncation;
  p.grid = build_mode_grid(m.d, m.K, m.n_half,
                           m.profile == "tent" ? tent_profile(m.K) : indicator_profile(m.K));
  const SpatialCutoff chi =
      m.chi == "gaussian" ? gaussian_cutoff(m.chi_width) : constant_cutoff(m.chi_value);
  p.quad = build_spatial_quadrature(m.d, m.L, m.P, chi);
  if (m.chi_normalize) p.quad = normalized(p.quad);
  return p;
}

/// Cross-field preconditions that the per-field readers cannot see.
inline void validate(const RunConfig& c) {
  const ModelConfig& m = c.model;
  ModelParams p;
  try {
    p = model_params(m, m.mu.front(), m.lambda.front());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("model", e.what());
  }
  const std::size_t dim = truncated_dimension(p.grid.size(), m.n_max);
  if (dim > c.dimension_cap)
    throw ConfigError("model.N_max", "basis dimension " + std::to_string(dim) +
                                         " exceeds the cap " + std::to_string(c.dimension_cap));
  const auto need = [&](const char* id, int n_min) {
    if (c.checks.count(id) && m.n_max < n_min)
      throw ConfigError(std::string("checks.") + id,
                        "needs N_max >= " + std::to_string(n_min) + " (got " +
                            std::to_string(m.n_max) + ")");
  };
  need(check_id::double_commutator, 5);
  need(check_id::creator_commutator, 6);
  if (c.checks.count(check_id::solver_oracle) && dim > 2000)
    throw ConfigError("checks.solver_oracle", "the dense oracle needs dimension <= 2000 (got " +
                                                  std::to_string(dim) + ")");
  if (c.checks.count(check_id::number_bound_uniform))
    for (double mass : m.masses)
      if (mass > 1.0)
        throw ConfigError("model.masses", "number_bound_uniform needs masses in (0, 1]");
  if (auto it = c.checks.find(check_id::relative_bounds);
      it != c.checks.end() && it->second.epsilon) {
    for (const auto& [mu, lambda] : c.coupling_points()) {
      try {
        bound_constant(mu, lambda, 1.0, 1.0, *it->second.epsilon, *it->second.eta);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("checks.relative_bounds", e.what());
      }
    }
  }
}

/// Parses YAML text (JSON is accepted as a YAML subset).
inline RunConfig parse_config_text(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("", e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  RunConfig c;
  for (const auto& id : check_registry()) c.checks[id] = CheckOptions{};
  if (root.IsNull()) {
    validate(c);
    return c;
  }
  detail::YamlReader::require_map(root, "", {"model", "solver", "checks", "output"});
  if (root["model"]) detail::read_model(root["model"], c.model);
  if (root["solver"]) detail::read_solver(root["solver"], c);
  if (root["checks"]) detail::read_checks(root["checks"], c);
  if (root["output"]) detail::read_output(root["output"], c.output);
  validate(c);
  return c;
}

inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

/// Normalized, fully explicit form. Parsing its dump yields the same config.
inline nlohmann::ordered_json to_json(const RunConfig& c) {
  using J = nlohmann::ordered_json;
  const ModelConfig& m = c.model;
  J model;
  model["d"] = m.d;
  model["K"] = m.K;
  model["n_half"] = m.n_half;
  model["profile"] = {{"name", m.profile}};
  model["L"] = m.L;
  model["P"] = m.P;
  J chi = {{"name", m.chi}};
  if (m.chi == "gaussian") chi["width"] = m.chi_width;
  else chi["value"] = m.chi_value;
  chi["normalize"] = m.chi_normalize;
  model["chi"] = chi;
  model["mu"] = m.mu;
  model["lambda"] = m.lambda;
  model["q"] = m.q;
  model["mass"] = m.mass;
  model["masses"] = m.masses;
  model["N_max"] = m.n_max;
  model["truncation"] = to_string(m.truncation);

  J solver;
  solver["tol"] = c.solver.tol;
  solver["max_iter"] = c.solver.max_iter;
  solver["seed"] = c.solver.seed;
  solver["dense_threshold"] = c.solver.dense_threshold;
  solver["krylov_dim"] = c.solver.krylov_dim;
  solver["dimension_cap"] = c.dimension_cap;

  J checks = J::object();
  for (const auto& id : c.enabled_checks()) {
    const CheckOptions& o = c.checks.at(id);
    J j = J::object();
    if (o.trials) j["trials"] = *o.trials;
    if (o.threshold) j["threshold"] = *o.threshold;
    if (o.overlap_threshold) j["overlap_threshold"] = *o.overlap_threshold;
    if (o.epsilon) j["epsilon"] = *o.epsilon;
    if (o.eta) j["eta"] = *o.eta;
    if (o.thetas) j["thetas"] = *o.thetas;
    if (o.mass) j["mass"] = *o.mass;
    if (o.shell_factor) j["shell_factor"] = *o.shell_factor;
    if (o.ratio_bound) j["ratio_bound"] = *o.ratio_bound;
    if (o.couplings) {
      J pairs = J::array();
      for (const auto& [mu, lambda] : *o.couplings) pairs.push_back({mu, lambda});
      j["couplings"] = pairs;
    }
    checks[id] = j;
  }

  J output;
  if (c.output.directory) output["directory"] = *c.output.directory;
  output["formats"] = c.output.formats;
  return J{{"model", model}, {"solver", solver}, {"checks", checks}, {"output", output}};
}

/// 64-bit FNV-1a of the normalized config dump, as 16 hex digits.
inline std::string config_hash(const RunConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json(c).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

}  // namespace chfock

#endif  // CHFOCK_CONFIG_HPP
