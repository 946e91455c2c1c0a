#ifndef CHFOCK_OPERATORS_HPP
#define CHFOCK_OPERATORS_HPP

#include <Eigen/Sparse>

#include <cmath>
#include <complex>
#include <cstddef>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "chfock/discretization.hpp"
#include "chfock/fock.hpp"

namespace chfock {

using SparseMatrix = Eigen::SparseMatrix<complex, Eigen::RowMajor>;
using Vector = Eigen::VectorXcd;

enum class Hermiticity { hermitian, anti_hermitian, general };

inline std::string to_string(Hermiticity h) {
  switch (h) {
    case Hermiticity::hermitian: return "hermitian";
    case Hermiticity::anti_hermitian: return "anti_hermitian";
    case Hermiticity::general: return "general";
  }
  return "general";
}

inline Hermiticity hermiticity_from_string(const std::string& s) {
  if (s == "hermitian") return Hermiticity::hermitian;
  if (s == "anti_hermitian") return Hermiticity::anti_hermitian;
  if (s == "general") return Hermiticity::general;
  throw std::invalid_argument("unknown hermiticity flag '" + s + "'");
}

/// A quantized operator realized on a truncated basis. The full matrix is
/// stored even when it is hermitian.
struct SparseOperator {
  SparseMatrix matrix;
  Hermiticity kind = Hermiticity::general;

  SparseOperator() = default;
  SparseOperator(SparseMatrix m, Hermiticity h = Hermiticity::general)
      : matrix(std::move(m)), kind(h) {
    matrix.makeCompressed();
  }

  Eigen::Index dim() const { return matrix.rows(); }
  bool is_hermitian() const { return kind == Hermiticity::hermitian; }

  Vector apply(const Vector& v) const { return matrix * v; }

  SparseOperator adjoint() const {
    Hermiticity h = kind;
    SparseMatrix a = matrix.adjoint();
    return {std::move(a), h};
  }
};

inline double max_abs(const SparseMatrix& m) {
  double r = 0.0;
  for (Eigen::Index k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) r = std::max(r, std::abs(it.value()));
  return r;
}

/// max |A - A^dagger| entry-wise.
inline double hermiticity_defect(const SparseMatrix& m) {
  SparseMatrix d = m - SparseMatrix(m.adjoint());
  return max_abs(d);
}

inline SparseMatrix commutator(const SparseMatrix& a, const SparseMatrix& b) {
  SparseMatrix ab = a * b;
  SparseMatrix ba = b * a;
  return ab - ba;
}

inline SparseMatrix identity_matrix(std::size_t dim) {
  SparseMatrix id(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  id.setIdentity();
  return id;
}

inline SparseMatrix diagonal_matrix(const std::vector<double>& diag) {
  const auto n = static_cast<Eigen::Index>(diag.size());
  SparseMatrix m(n, n);
  m.reserve(Eigen::VectorXi::Constant(n, 1));
  for (Eigen::Index i = 0; i < n; ++i) m.insert(i, i) = diag[static_cast<std::size_t>(i)];
  m.makeCompressed();
  return m;
}

// ---------------------------------------------------------------------------
// Mode operators

/// Annihilator of `species` in mode j: |..n_j..> -> sqrt(n_j) |..n_j-1..>.
inline SparseOperator annihilator(const FockBasis& basis, Species species, std::size_t mode) {
  if (mode >= basis.modes()) throw std::out_of_range("annihilator: mode out of range");
  std::vector<Eigen::Triplet<complex>> trips;
  for (std::size_t col = 0; col < basis.dim(); ++col) {
    const FockState& s = basis.state(col);
    const int n = s.occ(species)[mode];
    if (n == 0) continue;
    FockState lowered = s;
    lowered.occ(species)[mode] -= 1;
    const std::size_t row = basis.index_of(lowered);
    trips.emplace_back(static_cast<int>(row), static_cast<int>(col), std::sqrt(double(n)));
  }
  const auto d = static_cast<Eigen::Index>(basis.dim());
  SparseMatrix m(d, d);
  m.setFromTriplets(trips.begin(), trips.end());
  return {std::move(m), Hermiticity::general};
}

/// Adjoint of the annihilator. Raising out of the truncation is dropped.
inline SparseOperator creator(const FockBasis& basis, Species species, std::size_t mode) {
  return annihilator(basis, species, mode).adjoint();
}

/// a(u) = sum_j conj(u_j) a_j
inline SparseOperator smeared_annihilator(const FockBasis& basis, Species species,
                                          const ModeVector& u) {
  if (u.size() != basis.modes())
    throw std::invalid_argument("smeared_annihilator: vector length does not match mode count");
  const auto d = static_cast<Eigen::Index>(basis.dim());
  SparseMatrix acc(d, d);
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (u[j] == complex{}) continue;
    acc += std::conj(u[j]) * annihilator(basis, species, j).matrix;
  }
  return {std::move(acc), Hermiticity::general};
}

inline SparseOperator smeared_creator(const FockBasis& basis, Species species,
                                      const ModeVector& u) {
  return smeared_annihilator(basis, species, u).adjoint();
}

/// phi(u) = (a_+(u) + a_-(u)^dagger) / sqrt(2)
inline SparseOperator field_operator(const FockBasis& basis, const ModeVector& u) {
  SparseMatrix m = smeared_annihilator(basis, Species::plus, u).matrix +
                   SparseMatrix(smeared_annihilator(basis, Species::minus, u).matrix.adjoint());
  m *= complex(1.0 / std::sqrt(2.0), 0.0);
  return {std::move(m), Hermiticity::general};
}

/// A((u, v))^dagger = a_+(u)^dagger + a_-(v)^dagger
inline SparseOperator pair_creator(const FockBasis& basis, const ModeVector& u,
                                   const ModeVector& v) {
  SparseMatrix m = smeared_creator(basis, Species::plus, u).matrix +
                   smeared_creator(basis, Species::minus, v).matrix;
  return {std::move(m), Hermiticity::general};
}

/// Second quantization of the diagonal one-particle operator (plus_values, minus_values).
inline SparseOperator dgamma_diag(const FockBasis& basis, const std::vector<double>& plus_values,
                                  const std::vector<double>& minus_values) {
  if (plus_values.size() != basis.modes() || minus_values.size() != basis.modes())
    throw std::invalid_argument("dgamma_diag: value count does not match mode count");
  std::vector<double> diag(basis.dim(), 0.0);
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    const FockState& s = basis.state(i);
    double e = 0.0;
    for (std::size_t j = 0; j < basis.modes(); ++j)
      e += s.occ_plus[j] * plus_values[j] + s.occ_minus[j] * minus_values[j];
    diag[i] = e;
  }
  return {diagonal_matrix(diag), Hermiticity::hermitian};
}

inline SparseOperator dgamma_diag(const FockBasis& basis, const std::vector<double>& values) {
  return dgamma_diag(basis, values, values);
}

inline SparseOperator number_operator(const FockBasis& basis) {
  return dgamma_diag(basis, std::vector<double>(basis.modes(), 1.0));
}

/// Q = dGamma(q (+) -q) = q (N_+ - N_-)
inline SparseOperator charge_operator(const FockBasis& basis, double q) {
  return dgamma_diag(basis, std::vector<double>(basis.modes(), q),
                     std::vector<double>(basis.modes(), -q));
}

// ---------------------------------------------------------------------------
// Model

/// How the interaction terms are restricted to the truncated space.
///   composed:   H1, H2 built from products of truncated phi matrices.
///   compressed: H1, H2 built at N_max + 2 and restricted, so that the
///               truncated H is P H P (every word in H2 stays inside N_max + 2).
enum class Truncation { composed, compressed };

inline std::string to_string(Truncation t) {
  return t == Truncation::composed ? "composed" : "compressed";
}

inline Truncation truncation_from_string(const std::string& s) {
  if (s == "composed") return Truncation::composed;
  if (s == "compressed") return Truncation::compressed;
  throw std::invalid_argument("unknown truncation '" + s + "' (composed | compressed)");
}

struct ModelParams {
  double mu = 0.0;
  double lambda = 1.0;
  double q = 1.0;
  double mass = 0.0;
  ModeGrid grid;
  SpatialQuadrature quad;
  int n_max = 0;
  Truncation truncation = Truncation::compressed;

  /// Structural checks only; lambda = 0 is accepted here so that the
  /// decoupled limits can be built. See validate_physical().
  void validate() const {
    if (!(lambda >= 0.0)) throw std::invalid_argument("model: lambda must be >= 0");
    if (q == 0.0) throw std::invalid_argument("model: q must be nonzero");
    if (!(mass >= 0.0)) throw std::invalid_argument("model: mass must be >= 0");
    if (n_max < 0) throw std::invalid_argument("model: N_max must be >= 0");
    if (grid.size() == 0) throw std::invalid_argument("model: empty mode grid");
    if (quad.size() == 0) throw std::invalid_argument("model: empty spatial quadrature");
    if (grid.dim_d != quad.dim_d)
      throw std::invalid_argument("model: grid and quadrature dimensions differ");
  }

  /// The coupling regime in which the Hamiltonian is defined: lambda > 0.
  void validate_physical() const {
    validate();
    if (!(lambda > 0.0))
      throw std::invalid_argument("model: lambda must be > 0 (coupling constant)");
  }
};

/// d = 1, K = 1, n_half = 1 (two modes), tent profile, L = 2, P = 9,
/// unit-width Gaussian chi normalized to discrete mass one, q = 1.
inline ModelParams default_model_params(double mu, double lambda, int n_max) {
  ModelParams p;
  p.mu = mu;
  p.lambda = lambda;
  p.n_max = n_max;
  p.grid = build_mode_grid(1, 1.0, 1, tent_profile(1.0));
  p.quad = normalized(build_spatial_quadrature(1, 2.0, 9, gaussian_cutoff(1.0)));
  return p;
}

/// Basis plus the per-quadrature-point field operators phi(f_{x_i}) and the
/// interaction terms H1, H2. Immutable after construction.
class Model {
 public:
  explicit Model(ModelParams params, std::size_t dimension_cap = default_dimension_cap)
      : params_(checked(std::move(params))),
        basis_(params_.grid.size(), params_.n_max, dimension_cap) {
    for (std::size_t i = 0; i < params_.quad.size(); ++i) {
      smeared_.push_back(smeared_vector(params_.grid, params_.quad.points[i]));
      fields_.push_back(field_operator(basis_, smeared_.back()).matrix);
      fields_adj_.push_back(SparseMatrix(fields_.back().adjoint()));
      SparseMatrix density = fields_adj_.back() * fields_.back();
      density.prune(complex{}, 0.0);
      densities_.push_back(std::move(density));
    }
    if (params_.truncation == Truncation::composed) {
      interaction_terms(basis_, densities_, h1_, h2_);
    } else {
      // States with total <= N_max lead the enlarged basis in the same order.
      const FockBasis big(params_.grid.size(), params_.n_max + 2,
                          std::max(dimension_cap, truncated_dimension(params_.grid.size(),
                                                                      params_.n_max + 2)));
      std::vector<SparseMatrix> big_densities;
      for (const auto& f : smeared_) {
        const SparseMatrix phi = field_operator(big, f).matrix;
        big_densities.push_back(SparseMatrix(phi.adjoint()) * phi);
      }
      SparseMatrix b1, b2;
      interaction_terms(big, big_densities, b1, b2);
      const auto d = static_cast<Eigen::Index>(basis_.dim());
      h1_ = b1.topLeftCorner(d, d);
      h2_ = b2.topLeftCorner(d, d);
    }
    h1_.makeCompressed();
    h2_.makeCompressed();
  }

  const ModelParams& params() const { return params_; }
  const FockBasis& basis() const { return basis_; }
  std::size_t quad_size() const { return params_.quad.size(); }
  double weight(std::size_t i) const { return params_.quad.weights[i] * params_.quad.chi[i]; }

  const ModeVector& smeared(std::size_t i) const { return smeared_[i]; }
  /// phi(f_{x_i})
  const SparseMatrix& field(std::size_t i) const { return fields_[i]; }
  /// phi(f_{x_i})^*
  const SparseMatrix& field_adj(std::size_t i) const { return fields_adj_[i]; }
  /// phi(f_{x_i})^* phi(f_{x_i})
  const SparseMatrix& density(std::size_t i) const { return densities_[i]; }

  const SparseMatrix& h1() const { return h1_; }
  const SparseMatrix& h2() const { return h2_; }

 private:
  static ModelParams checked(ModelParams p) {
    p.validate();
    return p;
  }

  void interaction_terms(const FockBasis& basis, const std::vector<SparseMatrix>& densities,
                         SparseMatrix& h1, SparseMatrix& h2) const {
    const auto d = static_cast<Eigen::Index>(basis.dim());
    h1 = SparseMatrix(d, d);
    h2 = SparseMatrix(d, d);
    for (std::size_t i = 0; i < densities.size(); ++i) {
      const double w = weight(i);
      if (w == 0.0) continue;
      h1 += w * densities[i];
      SparseMatrix sq = densities[i] * densities[i];
      h2 += w * sq;
    }
  }

  ModelParams params_;
  FockBasis basis_;
  std::vector<ModeVector> smeared_;
  std::vector<SparseMatrix> fields_;
  std::vector<SparseMatrix> fields_adj_;
  std::vector<SparseMatrix> densities_;
  SparseMatrix h1_;
  SparseMatrix h2_;
};

/// H0 = dGamma([omega])
inline SparseOperator assemble_H0(const Model& model) {
  return dgamma_diag(model.basis(), model.params().grid.omega);
}

/// dGamma([omega_m])
inline SparseOperator assemble_H0m(const Model& model, double mass) {
  return dgamma_diag(model.basis(), dispersion_massive(model.params().grid, mass));
}

inline SparseOperator assemble_H1(const Model& model) {
  return {model.h1(), Hermiticity::hermitian};
}

inline SparseOperator assemble_H2(const Model& model) {
  return {model.h2(), Hermiticity::hermitian};
}

/// mu H1 + lambda H2
inline SparseOperator assemble_interaction(const Model& model) {
  const auto& p = model.params();
  SparseMatrix v = p.mu * model.h1() + p.lambda * model.h2();
  return {std::move(v), Hermiticity::hermitian};
}

/// H_m = dGamma([omega_m]) + mu H1 + lambda H2
inline SparseOperator assemble_Hm(const Model& model, double mass) {
  SparseMatrix h = assemble_H0m(model, mass).matrix + assemble_interaction(model).matrix;
  return {std::move(h), Hermiticity::hermitian};
}

/// H_m at the model's own mass.
inline SparseOperator assemble_Hm(const Model& model) {
  return assemble_Hm(model, model.params().mass);
}

/// H = H0 + mu H1 + lambda H2
inline SparseOperator assemble_H(const Model& model) { return assemble_Hm(model, 0.0); }

inline SparseOperator charge_operator(const Model& model) {
  return charge_operator(model.basis(), model.params().q);
}

inline SparseOperator number_operator(const Model& model) {
  return number_operator(model.basis());
}

struct SLOperators {
  SparseOperator s1, s2, l1, l2;
};

/// S1, S2, L1, L2 at grid momentum k_j.
inline SLOperators assemble_S_L(const Model& model, std::size_t mode) {
  const auto& grid = model.params().grid;
  if (mode >= grid.size()) throw std::out_of_range("assemble_S_L: mode out of range");
  const auto d = static_cast<Eigen::Index>(model.basis().dim());
  SparseMatrix s1(d, d), s2(d, d), l1(d, d), l2(d, d);
  for (std::size_t i = 0; i < model.quad_size(); ++i) {
    const double w = model.weight(i);
    if (w == 0.0) continue;
    const complex c =
        w * std::polar(1.0, -dot(grid.points[mode], model.params().quad.points[i], grid.dim_d));
    const SparseMatrix& f = model.field(i);
    const SparseMatrix& fa = model.field_adj(i);
    s1 += c * f;
    l1 += c * fa;
    SparseMatrix ffa = f * fa;
    SparseMatrix ffaf = ffa * f;
    s2 += c * ffaf;
    SparseMatrix faf = fa * f;
    SparseMatrix fafa = faf * fa;
    l2 += c * fafa;
  }
  return {{s1}, {s2}, {l1}, {l2}};
}

struct TOperators {
  SparseOperator t1, t2, t3, t4;
};

/// T1..T4 for the pair creator A((u, v))^dagger.
inline TOperators assemble_T(const Model& model, const ModeVector& u, const ModeVector& v) {
  if (u.size() != model.basis().modes() || v.size() != model.basis().modes())
    throw std::invalid_argument("assemble_T: vector length does not match mode count");
  const auto d = static_cast<Eigen::Index>(model.basis().dim());
  SparseMatrix t1(d, d), t2(d, d), t3(d, d), t4(d, d);
  for (std::size_t i = 0; i < model.quad_size(); ++i) {
    const double w = model.weight(i);
    if (w == 0.0) continue;
    const complex cv = w * inner(model.smeared(i), v);
    const complex cu = w * inner(model.smeared(i), u);
    const SparseMatrix& f = model.field(i);
    const SparseMatrix& fa = model.field_adj(i);
    if (cv != complex{}) {
      t1 += cv * f;
      SparseMatrix ffa = f * fa;
      SparseMatrix ffaf = ffa * f;
      t3 += cv * ffaf;
    }
    if (cu != complex{}) {
      t2 += cu * fa;
      SparseMatrix faf = fa * f;
      SparseMatrix fafa = faf * fa;
      t4 += cu * fafa;
    }
  }
  return {{t1}, {t2}, {t3}, {t4}};
}

// ---------------------------------------------------------------------------
// Relative-bound constant

class InadmissibleConstants : public std::invalid_argument {
 public:
  InadmissibleConstants(double margin, double epsilon, double eta)
      : std::invalid_argument(message(margin, epsilon, eta)), margin_(margin) {}
  /// lambda^2 - 2 eps - lambda^2 mu^2 eta / eps, which must be > 0.
  double margin() const { return margin_; }

 private:
  static std::string message(double margin, double epsilon, double eta) {
    std::ostringstream os;
    os << std::setprecision(17) << "bound constant: (epsilon=" << epsilon << ", eta=" << eta
       << ") violates lambda^2 - 2 epsilon - lambda^2 mu^2 eta / epsilon > 0 (got " << margin
       << ")";
    return os.str();
  }
  double margin_;
};

struct BoundConstant {
  double epsilon = 0.0;
  double eta = 0.0;
  double theta = 1.0;
  double value = 0.0;
};

/// C(mu, lambda, eps, eta) with discrete ||chi||_{L^1} and ||phi||_{L^2}^2.
inline BoundConstant bound_constant(double mu, double lambda, double chi_mass, double phi_norm_sq,
                                    double epsilon, double eta, double theta = 1.0) {
  if (!(epsilon > 0.0) || !(eta > 0.0) || !(theta > 0.0))
    throw std::invalid_argument("bound constant: epsilon, eta and theta must be positive");
  const double l2 = lambda * lambda;
  const double margin = l2 - 2.0 * epsilon - l2 * mu * mu * eta / epsilon;
  if (!(margin > 0.0)) throw InadmissibleConstants(margin, epsilon, eta);
  const double chi2 = chi_mass * chi_mass;
  const double inner_sum = l2 * mu * mu / (4.0 * epsilon * eta) * chi2 + chi2 / (4.0 * epsilon) +
                           l2 * phi_norm_sq * phi_norm_sq + 1.0;
  return {epsilon, eta, theta, std::sqrt(inner_sum / margin)};
}

inline BoundConstant bound_constant(const ModelParams& p, double epsilon, double eta,
                                    double theta = 1.0) {
  return bound_constant(p.mu, p.lambda, p.quad.chi_mass(), p.grid.phi_norm_sq(), epsilon, eta,
                        theta);
}

// ---------------------------------------------------------------------------
// Sparse-triplet dump
//
//   # chfock sparse-triplet v1
//   <dim> <nnz> <hermitian|anti_hermitian|general>
//   <row> <col> <re> <im>      (one line per stored entry, row-major order)

inline void write_triplets(std::ostream& os, const SparseOperator& op) {
  os << "# chfock sparse-triplet v1\n";
  os << op.dim() << ' ' << op.matrix.nonZeros() << ' ' << to_string(op.kind) << '\n';
  os << std::setprecision(17);
  for (Eigen::Index r = 0; r < op.matrix.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(op.matrix, r); it; ++it)
      os << it.row() << ' ' << it.col() << ' ' << it.value().real() << ' ' << it.value().imag()
         << '\n';
}

inline SparseOperator read_triplets(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# chfock sparse-triplet", 0) != 0)
    throw std::runtime_error("sparse-triplet: missing header line");
  Eigen::Index dim = 0, nnz = 0;
  std::string flag;
  if (!(is >> dim >> nnz >> flag)) throw std::runtime_error("sparse-triplet: bad size line");
  std::vector<Eigen::Triplet<complex>> trips;
  trips.reserve(static_cast<std::size_t>(nnz));
  for (Eigen::Index k = 0; k < nnz; ++k) {
    Eigen::Index r = 0, c = 0;
    double re = 0.0, im = 0.0;
    if (!(is >> r >> c >> re >> im)) throw std::runtime_error("sparse-triplet: truncated entries");
    trips.emplace_back(static_cast<int>(r), static_cast<int>(c), complex(re, im));
  }
  SparseMatrix m(dim, dim);
  m.setFromTriplets(trips.begin(), trips.end());
  return {std::move(m), hermiticity_from_string(flag)};
}

}  // namespace chfock

#endif  // CHFOCK_OPERATORS_HPP
