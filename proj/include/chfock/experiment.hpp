#ifndef CHFOCK_EXPERIMENT_HPP
#define CHFOCK_EXPERIMENT_HPP

// Pipelines behind the command-line verbs. Work runs serially in a fixed
// order, so identical configs give identical records apart from timings.

#include <algorithm>
#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "chfock/config.hpp"
#include "chfock/record.hpp"
#include "chfock/spectral.hpp"
#include "chfock/verify.hpp"

namespace chfock {

enum class RunMode { solve, sectors, sweep, verify, all };

inline std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::solve: return "solve";
    case RunMode::sectors: return "sectors";
    case RunMode::sweep: return "sweep";
    case RunMode::verify: return "verify";
    case RunMode::all: return "all";
  }
  return "?";
}

inline RunMode run_mode_from_string(const std::string& s) {
  for (RunMode m : {RunMode::solve, RunMode::sectors, RunMode::sweep, RunMode::verify,
                    RunMode::all})
    if (to_string(m) == s) return m;
  throw std::invalid_argument("unknown mode '" + s + "' (solve | sectors | sweep | verify | all)");
}

/// Process exit codes.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int check_failed = 1;
inline constexpr int solve_error = 2;
inline constexpr int usage = 64;
}  // namespace exit_code

/// Added to solver.seed to seed each randomized check.
namespace seed_offset {
inline constexpr std::uint64_t ccr = 1;
inline constexpr std::uint64_t field_commutators = 2;
inline constexpr std::uint64_t creator_commutator = 3;
inline constexpr std::uint64_t relative_bounds = 4;
}  // namespace seed_offset

inline int exit_status(const RunRecord& r) {
  if (!r.errors.empty()) return exit_code::solve_error;
  if (!r.all_passed()) return exit_code::check_failed;
  return exit_code::ok;
}

namespace detail {

class Runner {
 public:
  Runner(const RunConfig& config, RunMode mode) : c_(config), mode_(mode) {
    rec_.header.mode = to_string(mode);
    rec_.header.config = to_json(config);
    rec_.header.config_hash = config_hash(config);
  }

  RunRecord run() {
    const bool solves = mode_ == RunMode::solve || mode_ == RunMode::all;
    const bool sectors = mode_ == RunMode::sectors || mode_ == RunMode::all;
    const bool sweep = mode_ == RunMode::sweep || mode_ == RunMode::all;
    const bool verify = mode_ == RunMode::verify || mode_ == RunMode::all;
    const bool sweep_checks = sweep || verify;

    if (verify) global_checks();
    for (const auto& [mu, lambda] : c_.coupling_points()) {
      std::optional<Model> model;
      guarded("model", mu, lambda, [&] {
        model.emplace(model_params(c_.model, mu, lambda), c_.dimension_cap);
      });
      if (!model) continue;
      if (solves || sectors) solve_point(*model, solves, sectors);
      std::vector<SweepPoint> points;
      if (sweep || (verify && (enabled(check_id::mass_limit) ||
                               enabled(check_id::number_bound_uniform)))) {
        guarded("sweep", mu, lambda, [&] {
          points = mass_limit_sweep(*model, c_.model.masses, c_.solver);
        });
        if (sweep && !points.empty()) sweep_rows(points, mu, lambda);
      }
      if (sweep_checks && !points.empty()) sweep_point_checks(*model, points);
      if (verify) point_checks(*model);
    }
    return std::move(rec_);
  }

 private:
  bool enabled(const char* id) const { return c_.checks.count(id) > 0; }
  const CheckOptions& options(const char* id) const { return c_.checks.at(id); }

  template <class F>
  void timed(const std::string& stage, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    rec_.timings.push_back({stage, dt.count()});
  }

  template <class F>
  void guarded(const std::string& stage, std::optional<double> mu, std::optional<double> lambda,
               F&& f) {
    try {
      timed(stage + point_suffix(mu, lambda), std::forward<F>(f));
    } catch (const std::exception& e) {
      rec_.errors.push_back({stage, e.what(), mu, lambda});
    }
  }

  static std::string point_suffix(std::optional<double> mu, std::optional<double> lambda) {
    if (!mu) return "";
    return "@mu=" + csv_number(*mu) + ",lambda=" + csv_number(*lambda);
  }

  void add_check(CheckReport r, std::optional<double> mu, std::optional<double> lambda) {
    rec_.checks.push_back({r.check_id, r.residual, r.threshold, r.passed, mu, lambda,
                           std::move(r.context)});
  }

  /// Runs a check when enabled; exceptions become error rows.
  void run_check(const char* id, std::optional<double> mu, std::optional<double> lambda,
                 const std::function<CheckReport()>& f) {
    if (!enabled(id)) return;
    guarded(std::string("check:") + id, mu, lambda, [&] { add_check(f(), mu, lambda); });
  }

  std::uint64_t seed(std::uint64_t offset) const { return c_.solver.seed + offset; }

  /// Checks whose content does not depend on (mu, lambda): built once at the
  /// first coupling point and recorded without a coupling.
  void global_checks() {
    const auto [mu0, lambda0] = c_.coupling_points().front();
    std::optional<Model> model;
    const bool need_model = enabled(check_id::ccr) || enabled(check_id::field_commutators) ||
                            enabled(check_id::double_commutator);
    if (need_model)
      guarded("model", std::nullopt, std::nullopt, [&] {
        model.emplace(model_params(c_.model, mu0, lambda0), c_.dimension_cap);
      });
    if (model) {
      run_check(check_id::ccr, std::nullopt, std::nullopt, [&] {
        const auto& o = options(check_id::ccr);
        return check_ccr(*model, o.trials.value_or(20), seed(seed_offset::ccr),
                         o.threshold.value_or(1e-12));
      });
      run_check(check_id::field_commutators, std::nullopt, std::nullopt, [&] {
        const auto& o = options(check_id::field_commutators);
        return check_field_commutators(*model, o.trials.value_or(20),
                                       seed(seed_offset::field_commutators),
                                       o.threshold.value_or(1e-12),
                                       o.overlap_threshold.value_or(1e-13));
      });
      run_check(check_id::double_commutator, std::nullopt, std::nullopt, [&] {
        return check_double_commutator(*model,
                                       options(check_id::double_commutator).threshold.value_or(1e-11));
      });
    }
    run_check(check_id::lower_bound, std::nullopt, std::nullopt, [&] {
      const auto& o = options(check_id::lower_bound);
      const ModelParams base = model_params(c_.model, mu0, lambda0);
      return check_lower_bound(base, o.couplings.value_or(default_lower_bound_couplings()),
                               c_.solver, o.threshold.value_or(1e-10));
    });
  }

  void point_checks(const Model& model) {
    const double mu = model.params().mu;
    const double lambda = model.params().lambda;
    run_check(check_id::creator_commutator, mu, lambda, [&] {
      const auto& o = options(check_id::creator_commutator);
      return check_creator_commutator(model, o.trials.value_or(20),
                                      seed(seed_offset::creator_commutator),
                                      o.threshold.value_or(1e-10));
    });
    run_check(check_id::relative_bounds, mu, lambda, [&] {
      const auto& o = options(check_id::relative_bounds);
      auto [eps, eta] = default_bound_constants(mu, lambda);
      if (o.epsilon) {
        eps = *o.epsilon;
        eta = *o.eta;
      }
      return check_relative_bounds(model, eps, eta, o.thetas.value_or(std::vector{0.5, 1.0, 2.0}),
                                   o.trials.value_or(100), seed(seed_offset::relative_bounds),
                                   o.threshold.value_or(1e-12));
    });
    run_check(check_id::pull_through, mu, lambda, [&] {
      const auto& o = options(check_id::pull_through);
      return check_pull_through(model, o.mass.value_or(0.5), c_.solver,
                                o.shell_factor.value_or(10.0));
    });
    run_check(check_id::charge_commutation, mu, lambda, [&] {
      return check_charge_commutation(model,
                                       options(check_id::charge_commutation).threshold.value_or(1e-13));
    });
    run_check(check_id::charge_number_relation, mu, lambda,
              [&] { return check_charge_number_relation(model, c_.solver); });
    run_check(check_id::solver_oracle, mu, lambda,
              [&] { return check_solver_oracle(model, c_.solver); });
  }

  void sweep_point_checks(const Model& model, const std::vector<SweepPoint>& points) {
    const double mu = model.params().mu;
    const double lambda = model.params().lambda;
    run_check(check_id::mass_limit, mu, lambda, [&] {
      return check_mass_limit(model, points, options(check_id::mass_limit).threshold.value_or(1e-10));
    });
    run_check(check_id::number_bound_uniform, mu, lambda, [&] {
      return check_number_bound_uniform(
          model, points, options(check_id::number_bound_uniform).ratio_bound.value_or(10.0));
    });
  }

  void solve_point(const Model& model, bool solves, bool sectors) {
    const double mu = model.params().mu;
    const double lambda = model.params().lambda;
    const double mass = c_.model.mass;
    guarded("solve", mu, lambda, [&] {
      const SparseMatrix h = assemble_Hm(model, mass).matrix;
      const SectorScan scan = scan_sectors(h, model.basis(), c_.solver);
      if (solves) {
        const SpectralResult& g = scan.ground;
        rec_.solves.push_back({mu, lambda, mass, g.energy, g.gap, g.sector, g.degeneracy,
                               g.number_expectation, g.residual, g.iterations, g.dense,
                               model.basis().dim()});
      }
      if (sectors)
        for (const auto& [z, r] : scan.sectors)
          rec_.sectors.push_back({mu, lambda, mass, z, r.energy, r.gap, r.number_expectation,
                                  model.basis().sectors().at(z).size()});
    });
  }

  void sweep_rows(const std::vector<SweepPoint>& points, double mu, double lambda) {
    const double massless = points.back().result.energy;
    std::vector<SweepRow> rows;
    for (const auto& pt : points)
      rows.push_back({pt.mass, pt.result.energy, pt.result.energy - massless,
                      pt.result.number_expectation, pt.result.sector, pt.result.gap, mu, lambda});
    std::stable_sort(rows.begin(), rows.end(),
                     [](const SweepRow& a, const SweepRow& b) { return a.mass > b.mass; });
    rec_.sweep.insert(rec_.sweep.end(), rows.begin(), rows.end());
  }

  const RunConfig& c_;
  RunMode mode_;
  RunRecord rec_;
};

}  // namespace detail

/// Executes one pipeline. Check failures and solve errors are recorded, not
/// thrown; see exit_status().
inline RunRecord run_experiment(const RunConfig& config, RunMode mode) {
  return detail::Runner(config, mode).run();
}

/// Drops the timing rows, which are the only nondeterministic content.
inline RunRecord without_timings(RunRecord r) {
  r.timings.clear();
  return r;
}

}  // namespace chfock

#endif  // CHFOCK_EXPERIMENT_HPP
