#ifndef CHFOCK_VERIFY_HPP
#define CHFOCK_VERIFY_HPP

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chfock/discretization.hpp"
#include "chfock/fock.hpp"
#include "chfock/operators.hpp"
#include "chfock/spectral.hpp"

namespace chfock {

/// Outcome of one identity or inequality check.
///
/// `residual` is dimensionless; each check documents its normalization in
/// `context["normalization"]`. `passed` holds exactly when residual <= threshold.
struct CheckReport {
  std::string check_id;
  double residual = 0.0;
  double threshold = 0.0;
  bool passed = false;
  nlohmann::ordered_json context = nlohmann::ordered_json::object();
};

inline CheckReport make_report(std::string id, double residual, double threshold,
                               nlohmann::ordered_json context) {
  CheckReport r;
  r.check_id = std::move(id);
  r.residual = residual;
  r.threshold = threshold;
  r.passed = residual <= threshold;  // NaN fails
  r.context = std::move(context);
  return r;
}

namespace check_id {
inline constexpr const char* ccr = "ccr";
inline constexpr const char* field_commutators = "field_commutators";
inline constexpr const char* double_commutator = "double_commutator";
inline constexpr const char* creator_commutator = "creator_commutator";
inline constexpr const char* lower_bound = "lower_bound";
inline constexpr const char* relative_bounds = "relative_bounds";
inline constexpr const char* pull_through = "pull_through";
inline constexpr const char* charge_commutation = "charge_commutation";
inline constexpr const char* charge_number_relation = "charge_number_relation";
inline constexpr const char* number_bound_uniform = "number_bound_uniform";
inline constexpr const char* mass_limit = "mass_limit";
inline constexpr const char* solver_oracle = "solver_oracle";
}  // namespace check_id

/// Every check id, in the order `verify` runs them.
inline const std::vector<std::string>& check_registry() {
  static const std::vector<std::string> ids = {
      check_id::ccr,
      check_id::field_commutators,
      check_id::double_commutator,
      check_id::creator_commutator,
      check_id::lower_bound,
      check_id::relative_bounds,
      check_id::pull_through,
      check_id::charge_commutation,
      check_id::charge_number_relation,
      check_id::number_bound_uniform,
      check_id::mass_limit,
      check_id::solver_oracle,
  };
  return ids;
}

inline bool is_registered_check(const std::string& id) {
  const auto& ids = check_registry();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

inline nlohmann::ordered_json snapshot(const ModelParams& p) {
  nlohmann::ordered_json j;
  j["mu"] = p.mu;
  j["lambda"] = p.lambda;
  j["q"] = p.q;
  j["mass"] = p.mass;
  j["N_max"] = p.n_max;
  j["truncation"] = to_string(p.truncation);
  j["modes"] = p.grid.size();
  j["quad_points"] = p.quad.size();
  j["chi_mass"] = p.quad.chi_mass();
  return j;
}

// ---------------------------------------------------------------------------
// helpers

namespace detail {

inline ModeVector random_mode_vector(std::size_t m, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ModeVector u;
  u.components.resize(m);
  for (auto& c : u.components) c = complex(normal(rng), normal(rng));
  return u;
}

/// max over the given columns of || D e_c ||_2.
inline double max_column_norm(const SparseMatrix& d, const std::vector<std::size_t>& cols) {
  std::vector<double> sq(static_cast<std::size_t>(d.cols()), 0.0);
  for (Eigen::Index r = 0; r < d.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(d, r); it; ++it)
      sq[static_cast<std::size_t>(it.col())] += std::norm(it.value());
  double worst = 0.0;
  for (std::size_t c : cols) worst = std::max(worst, std::sqrt(sq[c]));
  return worst;
}

/// Random unit vector supported on the given indices.
inline Vector random_supported_vector(std::size_t dim, const std::vector<std::size_t>& support,
                                      std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v = Vector::Zero(static_cast<Eigen::Index>(dim));
  for (std::size_t i : support) v[static_cast<Eigen::Index>(i)] = complex(normal(rng), normal(rng));
  return v / v.norm();
}

inline const char* species_name(Species s) { return s == Species::plus ? "+" : "-"; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Canonical commutation relations

/// Residual: max over trials and identities of the largest interior
/// (margin 2) column norm of (commutator - expected), divided by ||u|| ||v||.
inline CheckReport check_ccr(const Model& model, int trials = 20, std::uint64_t seed = 1,
                             double threshold = 1e-12) {
  const FockBasis& basis = model.basis();
  const int margin = 2;
  nlohmann::ordered_json ctx;
  ctx["params"] = snapshot(model.params());
  ctx["normalization"] = "max interior column norm / (||u|| ||v||), interior margin 2";
  ctx["margin"] = margin;
  ctx["trials"] = trials;
  const auto interior = interior_indices(basis, margin);
  if (interior.empty()) {
    ctx["vacuous"] = true;
    return make_report(check_id::ccr, 0.0, threshold, ctx);
  }
  ctx["vacuous"] = false;
  ctx["interior_states"] = interior.size();

  std::mt19937_64 rng(seed);
  const SparseMatrix id = identity_matrix(basis.dim());
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const ModeVector u = detail::random_mode_vector(basis.modes(), rng);
    const ModeVector v = detail::random_mode_vector(basis.modes(), rng);
    const double scale = u.norm() * v.norm();
    const complex uv = inner(u, v);
    for (Species s : {Species::plus, Species::minus}) {
      const Species o = s == Species::plus ? Species::minus : Species::plus;
      const SparseMatrix au = smeared_annihilator(basis, s, u).matrix;
      const SparseMatrix aud = SparseMatrix(au.adjoint());
      const SparseMatrix av = smeared_annihilator(basis, s, v).matrix;
      const SparseMatrix avd = SparseMatrix(av.adjoint());
      const SparseMatrix bv = smeared_annihilator(basis, o, v).matrix;
      const SparseMatrix bvd = SparseMatrix(bv.adjoint());

      const SparseMatrix same_ann = commutator(au, av);
      const SparseMatrix cross_ann = commutator(au, bv);
      const SparseMatrix cross_mixed = commutator(au, bvd);
      const SparseMatrix same_mixed = commutator(au, avd) - uv * id;
      const SparseMatrix same_cre = commutator(aud, avd);
      for (const SparseMatrix* d : {&same_ann, &cross_ann, &cross_mixed, &same_mixed, &same_cre})
        worst = std::max(worst, detail::max_column_norm(*d, interior) / scale);
    }
  }
  return make_report(check_id::ccr, worst, threshold, ctx);
}

/// Im <f_x, f_y> over all quadrature pairs, relative to ||f_0||^2.
inline double smeared_imaginary_overlap(const Model& model) {
  const double ref = smeared_vector(model.params().grid, Point{0.0, 0.0, 0.0}).norm_sq();
  double worst = 0.0;
  for (std::size_t i = 0; i < model.quad_size(); ++i)
    for (std::size_t k = 0; k < model.quad_size(); ++k)
      worst = std::max(worst, std::abs(inner(model.smeared(i), model.smeared(k)).imag()));
  return ref > 0.0 ? worst / ref : worst;
}

/// Residual: the larger of (field commutator residual / operator_threshold)
/// and (max |Im <f_x, f_y>| / ||f_0||^2 / overlap_threshold); passes at <= 1.
inline CheckReport check_field_commutators(const Model& model, int trials = 20,
                                           std::uint64_t seed = 2,
                                           double operator_threshold = 1e-12,
                                           double overlap_threshold = 1e-13) {
  const FockBasis& basis = model.basis();
  const int margin = 2;
  nlohmann::ordered_json ctx;
  ctx["params"] = snapshot(model.params());
  ctx["normalization"] =
      "max(operator residual / operator_threshold, Im overlap / overlap_threshold)";
  ctx["margin"] = margin;
  ctx["trials"] = trials;
  ctx["operator_threshold"] = operator_threshold;
  ctx["overlap_threshold"] = overlap_threshold;

  const auto interior = interior_indices(basis, margin);
  double worst_op = 0.0;
  if (!interior.empty()) {
    std::mt19937_64 rng(seed);
    const SparseMatrix id = identity_matrix(basis.dim());
    for (int t = 0; t < trials; ++t) {
      const ModeVector u = detail::random_mode_vector(basis.modes(), rng);
      const ModeVector v = detail::random_mode_vector(basis.modes(), rng);
      const double scale = u.norm() * v.norm();
      const SparseMatrix pu = field_operator(basis, u).matrix;
      const SparseMatrix pv = field_operator(basis, v).matrix;
      const SparseMatrix pud = SparseMatrix(pu.adjoint());
      const SparseMatrix pvd = SparseMatrix(pv.adjoint());
      const SparseMatrix c1 = commutator(pu, pv);
      const SparseMatrix c2 = commutator(pud, pvd);
      const SparseMatrix c3 = commutator(pu, pvd) - complex(0.0, inner(u, v).imag()) * id;
      for (const SparseMatrix* d : {&c1, &c2, &c3})
        worst_op = std::max(worst_op, detail::max_column_norm(*d, interior) / scale);
    }
  }
  const double worst_overlap = smeared_imaginary_overlap(model);
  ctx["vacuous"] = interior.empty();
  ctx["operator_residual"] = worst_op;
  ctx["overlap_residual"] = worst_overlap;
  const double residual =
      std::max(worst_op / operator_threshold, worst_overlap / overlap_threshold);
  return make_report(check_id::field_commutators, residual, 1.0, ctx);
}

// ---------------------------------------------------------------------------
// Double commutator [X, [X, dGamma(h)]] = -2 <f_x, h f_x> X with X = phi(f_x)^* phi(f_x)

/// `one_particle` is the diagonal of h; pass grid.omega for H0 or ones for N_b.
/// Residual: max over quadrature points of the interior (margin 4) column
/// norm of the difference, divided by <f_x, h f_x>.
inline CheckReport check_double_commutator(const Model& model,
                                           const std::vector<double>& one_particle,
                                           double threshold = 1e-11) {
  const FockBasis& basis = model.basis();
  if (basis.n_max() < 5)
    throw std::invalid_argument("check_double_commutator: needs N_max >= 5");
  const int margin = 4;
  const auto interior = interior_indices(basis, margin);
  const SparseMatrix h = dgamma_diag(basis, one_particle).matrix;

  nlohmann::ordered_json ctx;
  ctx["params"] = snapshot(model.params());
  ctx["normalization"] = "max interior column norm / <f_x, h f_x>, interior margin 4";
  ctx["margin"] = margin;
  double worst = 0.0;
  double coefficient = 0.0;
  for (std::size_t i = 0; i < model.quad_size(); ++i) {
    const ModeVector& f = model.smeared(i);
    double c = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) c += std::norm(f[j]) * one_particle[j];
    coefficient = c;
    const SparseMatrix& x = model.density(i);
    const SparseMatrix inner_comm = commutator(x, h);
    SparseMatrix diff = commutator(x, inner_comm) + complex(2.0 * c, 0.0) * x;
    worst = std::max(worst, detail::max_column_norm(diff, interior) / c);
  }
  ctx["coefficient"] = coefficient;
  ctx["phi_norm_sq"] = model.params().grid.phi_norm_sq();
  return make_report(check_id::double_commutator, worst, threshold, ctx);
}

inline CheckReport check_double_commutator(const Model& model, double threshold = 1e-11) {
  return check_double_commutator(model, model.params().grid.omega, threshold);
}

// ---------------------------------------------------------------------------
// [mu H1 + lambda H2, A((u,v))^dagger] = (mu T1 + mu T2 + 2 lambda T3 + 2 lambda T4) / sqrt(2)

inline double creator_commutator_residual(const Model& model, const ModeVector& u,
                                          const ModeVector& v,
                                          const std::vector<std::size_t>& interior) {
  const auto& p = model.params();
  const SparseMatrix interaction = p.mu * model.h1() + p.lambda * model.h2();
  const SparseMatrix adag = pair_creator(model.basis(), u, v).matrix;
  const TOperators t = assemble_T(model, u, v);
  SparseMatrix rhs = p.mu * t.t1.matrix + p.mu * t.t2.matrix + 2.0 * p.lambda * t.t3.matrix +
                     2.0 * p.lambda * t.t4.matrix;
  rhs *= complex(1.0 / std::sqrt(2.0), 0.0);
  const SparseMatrix diff = commutator(interaction, adag) - rhs;
  const double scale = u.norm() + v.norm();
  const double res = detail::max_column_norm(diff, interior);
  return scale > 0.0 ? res / scale : res;
}

/// Residual: max over trials of the interior (margin 5) column norm of the
/// difference, divided by ||u|| + ||v||.
inline CheckReport check_creator_commutator(const Model& model, int trials = 20,
                                            std::uint64_t seed = 3, double threshold = 1e-10) {
  if (model.basis().n_max() < 6)
    throw std::invalid_argument("check_creator_commutator: needs N_max >= 6");
  const int margin = 5;
  const auto interior = interior_indices(model.basis(), margin);
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const ModeVector u = detail::random_mode_vector(model.basis().modes(), rng);
    const ModeVector v = detail::random_mode_vector(model.basis().modes(), rng);
    worst = std::max(worst, creator_commutator_residual(model, u, v, interior));
  }
  nlohmann::ordered_json ctx;
  ctx["params"] = snapshot(model.params());
  ctx["normalization"] = "max interior column norm / (||u|| + ||v||), interior margin 5";
  ctx["margin"] = margin;
  ctx["trials"] = trials;
  return make_report(check_id::creator_commutator, worst, threshold, ctx);
}

// ---------------------------------------------------------------------------
// Lower bound E0(H) >= -(mu^2 / 4 lambda) ||chi||_1

/// Residual: max over coupling points of (bound - E0) / max(1, |bound|).
/// Negative values are slack.
inline CheckReport check_lower_bound(const ModelParams& base,
                                     const std::vector<std::pair<double, double>>& couplings,
                                     const SolverOptions& opts = {}, double threshold = 1e-10) {
  nlohmann::ordered_json ctx;
  ctx["params"] = snapshot(base);
  ctx["normalization"] = "max (bound - E0) / max(1, |bound|) over the sweep";
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& [mu, lambda] : couplings) {
    if (!(lambda > 0.0)) throw std::invalid_argument("check_lower_bound: lambda must be > 0");
    ModelParams p = base;
    p.mu = mu;
    p.lambda = lambda;
    Model model(p);
    const SparseOperator h = assemble_H(model);
    const double e0 = scan_sectors(h.matrix, model.basis(), opts).ground.energy;
    const double bound = -(mu * mu) / (4.0 * lambda) * p.quad.chi_mass();
    const double violation = (bound - e0) / std::max(1.0, std::abs(bound));
    worst = std::max(worst, violation);
    rows.push_back({{"mu", mu}, {"lambda", lambda}, {"E0", e0}, {"bound", bound}});
  }
  ctx["points"] = rows;
  if (couplings.empty()) worst = 0.0;
  return make_report(check_id::lower_bound, worst, threshold, ctx);
}

// ---------------------------------------------------------------------------
// Relative bounds

/// An admissible (epsilon, eta): epsilon = lambda^2 / 8 and
/// eta = epsilon / (2 (mu^2 + 1)), so that
/// lambda^2 - 2 epsilon - lambda^2 mu^2 eta / epsilon >= lambda^2 / 4.
inline std::pair<double, double> default_bound_constants(double mu, double lambda) {
  const double eps = lambda * lambda / 8.0;
  return {eps, eps / (2.0 * (mu * mu + 1.0))};
}

/// Three families on random interior (margin 4) unit vectors:
///   ||H2 psi|| <= C (||H psi|| + 1)
///   ||H1 psi|| <= theta C ||H psi|| + theta C + 1 / (4 theta)
///   ||H1 psi||^2 <= e ||H2 psi||^2 + ||chi||_1^2 / (4 e),  e in {0.1, 1, 10}
/// Residual: max (lhs - rhs) / rhs; negative values are slack.
inline CheckReport check_relative_bounds(const Model& model, double epsilon, double eta,
                                         const std::vector<double>& thetas = {0.5, 1.0, 2.0},
                                         int trials = 100, std::uint64_t seed = 4,
                                         double threshold = 1e-12) {
  const auto& p = model.params();
  const BoundConstant c = bound_constant(p, epsilon, eta);
  const int margin = 4;
  const auto interior = interior_indices(model.basis(), margin);
  nlohmann::ordered_json ctx;
  ctx["params"] = snapshot(p);
  ctx["normalization"] = "max (lhs - rhs) / rhs over vectors and inequalities";
  ctx["epsilon"] = epsilon;
  ctx["eta"] = eta;
  ctx["C"] = c.value;
  ctx["thetas"] = thetas;
  ctx["trials"] = trials;
  ctx["margin"] = margin;
  if (interior.empty()) {
    ctx["vacuous"] = true;
    return make_report(check_id::relative_bounds, 0.0, threshold, ctx);
  }
  ctx["vacuous"] = false;

  const SparseMatrix h = assemble_H(model).matrix;
  const double chi = p.quad.chi_mass();
  std::mt19937_64 rng(seed);
  double worst = -std::numeric_limits<double>::infinity();
  int violations = 0;
  double worst_h2 = worst, worst_h1 = worst, worst_inf = worst;
  for (int t = 0; t < trials; ++t) {
    const Vector psi = detail::random_supported_vector(model.basis().dim(), interior, rng);
    const double hn = (h * psi).norm();
    const double h1n = (model.h1() * psi).norm();
    const double h2n = (model.h2() * psi).norm();

    auto record = [&](double lhs, double rhs, double& family) {
      const double v = (lhs - rhs) / rhs;
      family = std::max(family, v);
      worst = std::max(worst, v);
      if (v > threshold) ++violations;
    };
    record(h2n, c.value * (hn + 1.0), worst_h2);
    for (double theta : thetas)
      record(h1n, theta * c.value * hn + theta * c.value + 1.0 / (4.0 * theta), worst_h1);
    for (double e : {0.1, 1.0, 10.0})
      record(h1n * h1n, e * h2n * h2n + chi * chi / (4.0 * e), worst_inf);
  }
  ctx["violations"] = violations;
  ctx["worst_h2_bound"] = worst_h2;
  ctx["worst_h1_bound"] = worst_h1;
  ctx["worst_h1_by_h2"] = worst_inf;
  return make_report(check_id::relative_bounds, worst, threshold, ctx);
}

// ---------------------------------------------------------------------------
// Pull-through formula

/// Mass on states with total > N_max - 6.
inline double boundary_shell_mass(const Vector& v, const FockBasis& basis, int depth = 6) {
  double s = 0.0;
  for (std::size_t i = 0; i < basis.dim(); ++i)
    if (basis.state(i).total() > basis.n_max() - depth)
      s += std::norm(v[static_cast<Eigen::Index>(i)]);
  return s / v.squaredNorm();
}

struct PullThroughMeasurement {
  double residual = 0.0;
  double shell_mass = 0.0;
  double energy = 0.0;
  nlohmann::ordered_json per_mode = nlohmann::ordered_json::array();
};

/// a_+(k_j) Phi_m  vs  phi(k_j)/sqrt(2 omega(k_j)) (E0 - H_m - omega_m(k_j))^{-1} (mu S1 + 2 lambda S2) Phi_m
/// and the a_- / L1, L2 companion, for every grid mode. The point
/// annihilator is the mode annihilator divided by sqrt(w_j).
inline PullThroughMeasurement measure_pull_through(const Model& model, double mass,
                                                   const SolverOptions& opts = {}) {
  if (!(mass > 0.0)) throw std::invalid_argument("pull-through: mass must be > 0");
  const auto& p = model.params();
  const FockBasis& basis = model.basis();
  const SparseMatrix hm = assemble_Hm(model, mass).matrix;
  const SpectralResult g = scan_sectors(hm, basis, opts).ground;
  const Vector& phi = g.vector;
  const double e0 = phi.dot(hm * phi).real();
  const std::vector<double> wm = dispersion_massive(p.grid, mass);

  PullThroughMeasurement out;
  out.energy = e0;
  out.shell_mass = boundary_shell_mass(phi, basis);
  const SparseMatrix id = identity_matrix(basis.dim());
  for (std::size_t j = 0; j < p.grid.size(); ++j) {
    if (!(wm[j] > 0.0)) throw std::logic_error("pull-through: singular resolvent");
    // H_m - E0 + omega_m >= omega_m > 0
    SparseMatrix shifted = hm + complex(wm[j] - e0, 0.0) * id;
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-14);
    cg.setMaxIterations(10 * static_cast<int>(basis.dim()));
    cg.compute(shifted);
    const SLOperators sl = assemble_S_L(model, j);
    const complex prefactor = p.grid.phi[j] / std::sqrt(2.0 * p.grid.omega[j]);
    for (Species s : {Species::plus, Species::minus}) {
      const Vector lhs =
          annihilator(basis, s, j).matrix * phi / std::sqrt(p.grid.weights[j]);
      const Vector source =
          s == Species::plus
              ? Vector(p.mu * (sl.s1.matrix * phi) + 2.0 * p.lambda * (sl.s2.matrix * phi))
              : Vector(p.mu * (sl.l1.matrix * phi) + 2.0 * p.lambda * (sl.l2.matrix * phi));
      const Vector solved = cg.solve(source);
      const Vector rhs = -prefactor * solved;
      const double r = (lhs - rhs).norm();
      out.residual = std::max(out.residual, r);
      out.per_mode.push_back({{"mode", j},
                              {"species", detail::species_name(s)},
                              {"lhs_norm", lhs.norm()},
                              {"residual", r}});
    }
  }
  return out;
}

/// Passes when residual <= shell_factor * (boundary-shell mass of Phi_m).
inline CheckReport check_pull_through(const Model& model, double mass,
                                      const SolverOptions& opts = {},
                                      double shell_factor = 10.0) {
  const PullThroughMeasurement m = measure_pull_through(model, mass, opts);
  double min_wm = std::numeric_limits<double>::infinity();
  for (double w : dispersion_massive(model.params().grid, mass)) min_wm = std::min(min_wm, w);
  nlohmann::ordered_json ctx;
  ctx["params"] = snapshot(model.params());
  ctx["normalization"] =
      "max_j,species ||a(k_j) Phi_m - rhs||; threshold = shell_factor * shell mass";
  ctx["mass"] = mass;
  ctx["E0"] = m.energy;
  ctx["shell_mass"] = m.shell_mass;
  ctx["shell_factor"] = shell_factor;
  ctx["resolvent_norm_bound"] = 1.0 / min_wm;
  ctx["per_mode"] = m.per_mode;
  return make_report(check_id::pull_through, m.residual, shell_factor * m.shell_mass, ctx);
}

// ---------------------------------------------------------------------------
// Charge conservation

/// Residual: the larger of max|[H, Q]| and max|e^{-itQ} H e^{itQ} - H| over
/// t in {0.37, 1.0}, divided by ||H|| |q| max(N_max, 1). The conjugation
/// part runs densely when dim <= 2000.
inline CheckReport check_charge_commutation(const SparseMatrix& h, const FockBasis& basis,
                                            double q, double threshold = 1e-13) {
  const SparseMatrix qop = charge_operator(basis, q).matrix;
  const double comm = max_abs(commutator(h, qop));
  const double hnorm = std::max(norm_estimate(h), std::numeric_limits<double>::min());
  const double scale = hnorm * std::abs(q) * std::max(basis.n_max(), 1);

  double conj = 0.0;
  const bool dense = basis.dim() <= 2000;
  if (dense) {
    const Eigen::MatrixXcd hd = Eigen::MatrixXcd(h);
    for (double t : {0.37, 1.0}) {
      Eigen::VectorXcd phase(static_cast<Eigen::Index>(basis.dim()));
      for (Eigen::Index i = 0; i < phase.size(); ++i)
        phase[i] = std::polar(1.0, t * qop.coeff(i, i).real());
      const Eigen::MatrixXcd rotated = phase.conjugate().asDiagonal() * hd * phase.asDiagonal();
      conj = std::max(conj, (rotated - hd).cwiseAbs().maxCoeff());
    }
  }
  nlohmann::ordered_json ctx;
  ctx["normalization"] = "max entry / (||H||_rowsum |q| max(N_max,1))";
  ctx["commutator_max"] = comm;
  ctx["conjugation_max"] = conj;
  ctx["conjugation_checked"] = dense;
  ctx["H_norm"] = hnorm;
  return make_report(check_id::charge_commutation, std::max(comm, conj) / scale, threshold, ctx);
}

inline CheckReport check_charge_commutation(const Model& model, double threshold = 1e-13) {
  CheckReport r = check_charge_commutation(assemble_H(model).matrix, model.basis(),
                                           model.params().q, threshold);
  r.context["params"] = snapshot(model.params());
  return r;
}

// ---------------------------------------------------------------------------
// Charge / number relation: occupied sectors satisfy |z| < n0 = floor(<N_b>) + 1

struct ChargeNumberEntry {
  double number_expectation = 0.0;
  int n0 = 1;
  std::map<int, double> sector_mass;
  /// max over occupied sectors of |z| - (n0 - 1); the relation holds iff <= 0
  int excess = 0;
};

inline ChargeNumberEntry charge_number_entry(const Vector& v, const FockBasis& basis,
                                             double mass_floor = 1e-10) {
  const NumberMoment nm = number_moment(v, basis);
  ChargeNumberEntry e;
  e.number_expectation = nm.expectation;
  e.n0 = nm.n0;
  e.sector_mass = nm.sector_mass;
  e.excess = std::numeric_limits<int>::min();
  for (const auto& [z, mass] : nm.sector_mass)
    if (mass > mass_floor) e.excess = std::max(e.excess, std::abs(z) - (nm.n0 - 1));
  return e;
}

/// Residual: max over the checked vectors of (|z| - n0 + 1) for sectors with
/// mass above 1e-10. Passes at <= 0.
inline CheckReport check_charge_number_relation(const std::vector<Vector>& vectors,
                                                const FockBasis& basis) {
  nlohmann::ordered_json ctx;
  ctx["normalization"] = "max (|z| - n0 + 1) over occupied sectors (integer)";
  nlohmann::ordered_json table = nlohmann::ordered_json::array();
  int worst = std::numeric_limits<int>::min();
  for (const Vector& v : vectors) {
    const ChargeNumberEntry e = charge_number_entry(v, basis);
    worst = std::max(worst, e.excess);
    nlohmann::ordered_json sectors = nlohmann::ordered_json::array();
    for (const auto& [z, mass] : e.sector_mass) sectors.push_back({{"z", z}, {"mass", mass}});
    table.push_back({{"N_expect", e.number_expectation}, {"n0", e.n0}, {"sectors", sectors}});
  }
  ctx["vectors"] = table;
  return make_report(check_id::charge_number_relation, static_cast<double>(worst), 0.0, ctx);
}

/// Applies the relation to every resolved ground vector of H (one per
/// degenerate sector).
inline CheckReport check_charge_number_relation(const Model& model,
                                                const SolverOptions& opts = {}) {
  const SparseMatrix h = assemble_H(model).matrix;
  const SectorScan scan = scan_sectors(h, model.basis(), opts);
  std::vector<Vector> vectors;
  for (int z : scan.degenerate_sectors) vectors.push_back(scan.sectors.at(z).vector);
  CheckReport r = check_charge_number_relation(vectors, model.basis());
  r.context["params"] = snapshot(model.params());
  r.context["E0"] = scan.ground.energy;
  r.context["degenerate_sectors"] = scan.degenerate_sectors;
  return r;
}

// ---------------------------------------------------------------------------
// Mass sweep checks

/// E0(H_m) >= E0(H), E0(H_m) - E0(H) <= m N_max and E0 nonincreasing as
/// m decreases. Residual: worst absolute violation (energy units).
inline CheckReport check_mass_limit(const Model& model, const std::vector<SweepPoint>& sweep,
                                    double threshold = 1e-10) {
  if (sweep.empty() || sweep.back().mass != 0.0)
    throw std::invalid_argument("check_mass_limit: sweep must end with the massless point");
  const double e_massless = sweep.back().result.energy;
  const int n_max = model.basis().n_max();
  double worst = -std::numeric_limits<double>::infinity();
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const double m = sweep[i].mass;
    const double e = sweep[i].result.energy;
    worst = std::max(worst, e_massless - e);
    worst = std::max(worst, (e - e_massless) - m * n_max);
    if (i > 0) worst = std::max(worst, e - sweep[i - 1].result.energy);
    rows.push_back({{"mass", m}, {"E0", e}, {"E0_minus_E0_massless", e - e_massless}});
  }
  nlohmann::ordered_json ctx;
  ctx["params"] = snapshot(model.params());
  ctx["normalization"] = "worst absolute energy violation";
  ctx["table"] = rows;
  return make_report(check_id::mass_limit, worst, threshold, ctx);
}

/// max / min of <N_b> over the massive points of the sweep must not exceed
/// `ratio_bound`. All-zero tables (decoupled model) count as ratio 1.
inline CheckReport check_number_bound_uniform(const Model& model,
                                              const std::vector<SweepPoint>& sweep,
                                              double ratio_bound = 10.0) {
  const auto& p = model.params();
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  double bound_form_max = 0.0;
  const double phi_m32 = p.grid.weighted_phi_norm_sq(-1.5);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  double max_jump = 0.0;
  const SweepPoint* prev = nullptr;
  for (const auto& pt : sweep) {
    if (pt.mass <= 0.0) continue;
    if (pt.mass > 1.0) throw std::invalid_argument("check_number_bound_uniform: masses in (0, 1]");
    const double n = pt.result.number_expectation;
    lo = std::min(lo, n);
    hi = std::max(hi, n);
    const double e = pt.result.energy;
    const double shape = (p.mu * p.mu + 4.0 * p.lambda * p.lambda) * (e * e + 1.0) * phi_m32;
    if (shape > 0.0) bound_form_max = std::max(bound_form_max, n / shape);
    if (prev) max_jump = std::max(max_jump, std::abs(n - prev->result.number_expectation));
    rows.push_back({{"mass", pt.mass}, {"E0", e}, {"N_expect", n}, {"gap", pt.result.gap}});
    prev = &pt;
  }
  double ratio = 1.0;
  if (hi > 0.0) ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  nlohmann::ordered_json ctx;
  ctx["params"] = snapshot(p);
  ctx["normalization"] = "max <N_b> / min <N_b> over 0 < m <= 1";
  ctx["table"] = rows;
  ctx["sup_N_expect"] = hi;
  ctx["omega_m32_phi_norm_sq"] = phi_m32;
  // smallest C with <N> <= C (mu^2 + 4 lambda^2)(E0^2 + 1) ||omega^{-3/2} phi||^2 on the sweep
  ctx["empirical_C"] = bound_form_max;
  ctx["max_adjacent_jump"] = max_jump;
  return make_report(check_id::number_bound_uniform, ratio, ratio_bound, ctx);
}

// ---------------------------------------------------------------------------
// Solver cross-checks

/// Dense eigensystem, restricted to dim <= 2000.
inline DenseSpectrum oracle_dense_diag(const SparseOperator& op) {
  if (op.dim() > 2000) throw std::invalid_argument("oracle_dense_diag: dimension above 2000");
  return dense_spectrum(op.matrix);
}

/// Iterative vs dense ground energy (1e-8) and overlap (1 - 1e-8 when the
/// gap exceeds 1e-6), plus E0(N_max + 2) <= E0(N_max) + 1e-12.
/// Residual: worst ratio of measured deviation to its tolerance.
inline CheckReport check_solver_oracle(const Model& model, const SolverOptions& opts = {}) {
  const SparseOperator h = assemble_H(model);
  if (h.dim() > 2000) throw std::invalid_argument("check_solver_oracle: dimension above 2000");
  SolverOptions iterative = opts;
  iterative.dense_threshold = 0;
  const SpectralResult it = ground_state(h, iterative);
  const DenseSpectrum ds = oracle_dense_diag(h);
  const double de = std::abs(it.energy - ds.values[0]);
  const double dense_gap =
      ds.values.size() > 1 ? ds.values[1] - ds.values[0] : std::numeric_limits<double>::infinity();
  double overlap_defect = 0.0;
  if (dense_gap > 1e-6) overlap_defect = 1.0 - std::abs(ds.vectors.col(0).dot(it.vector));

  ModelParams bigger = model.params();
  bigger.n_max += 2;
  const Model larger(bigger);
  const double e_big = scan_sectors(assemble_H(larger).matrix, larger.basis(), opts).ground.energy;
  const double e_small = scan_sectors(h.matrix, model.basis(), opts).ground.energy;
  const double growth = e_big - e_small;

  const double residual = std::max({de / 1e-8, overlap_defect / 1e-8, growth / 1e-12});
  nlohmann::ordered_json ctx;
  ctx["params"] = snapshot(model.params());
  ctx["normalization"] = "max(|dE|/1e-8, (1-overlap)/1e-8, (E0(N+2)-E0(N))/1e-12)";
  ctx["E_iterative"] = it.energy;
  ctx["E_dense"] = ds.values[0];
  ctx["overlap_defect"] = overlap_defect;
  ctx["E0_N_plus_2"] = e_big;
  ctx["E0_N"] = e_small;
  ctx["dim"] = h.dim();
  return make_report(check_id::solver_oracle, residual, 1.0, ctx);
}

}  // namespace chfock

#endif  // CHFOCK_VERIFY_HPP
