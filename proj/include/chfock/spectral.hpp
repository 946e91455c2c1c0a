#ifndef CHFOCK_SPECTRAL_HPP
#define CHFOCK_SPECTRAL_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "chfock/fock.hpp"
#include "chfock/operators.hpp"

namespace chfock {

struct SolverOptions {
  /// Accept when ||H x - E x|| <= tol * (|E| + ||H||_est).
  double tol = 1e-10;
  /// Maximum number of restarts.
  int max_iter = 500;
  std::uint64_t seed = 20240611;
  /// Problems with dim <= dense_threshold go to the dense solver.
  std::size_t dense_threshold = 200;
  int krylov_dim = 40;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}
  double best_residual() const { return best_residual_; }

 private:
  double best_residual_;
};

struct SpectralResult {
  double energy = 0.0;
  Vector vector;
  /// Charge index of the sector holding the vector; empty when mixed.
  std::optional<int> sector;
  /// <Phi, N_b Phi> = ||N_b^{1/2} Phi||^2
  double number_expectation = 0.0;
  /// E1 - E0; infinite for a one-dimensional problem.
  double gap = std::numeric_limits<double>::infinity();
  /// Dimension of the ground eigenspace as far as it was resolved.
  std::size_t degeneracy = 1;
  double residual = 0.0;
  int iterations = 0;
  bool dense = false;
};

/// Row-sum bound on the operator norm.
inline double norm_estimate(const SparseMatrix& h) {
  double best = 0.0;
  for (Eigen::Index r = 0; r < h.outerSize(); ++r) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(h, r); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

struct DenseSpectrum {
  Eigen::VectorXd values;
  Eigen::MatrixXcd vectors;
};

/// Full dense hermitian eigendecomposition, ascending eigenvalues.
inline DenseSpectrum dense_spectrum(const SparseMatrix& h) {
  Eigen::MatrixXcd dense = Eigen::MatrixXcd(h);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense);
  if (es.info() != Eigen::Success) throw SolverError("dense eigensolver failed", 0.0);
  return {es.eigenvalues(), es.eigenvectors()};
}

namespace detail {

inline Vector random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = complex(normal(rng), normal(rng));
  return v / v.norm();
}

// Appends v to the orthonormal set `basis` (two Gram-Schmidt passes).
// Returns false when v is numerically inside span(basis).
inline bool orthonormal_append(std::vector<Vector>& basis, Vector v) {
  const double start = v.norm();
  if (start == 0.0) return false;
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& b : basis) v -= b.dot(v) * b;
  const double n = v.norm();
  if (n <= 1e-10 * start) return false;
  basis.push_back(v / n);
  return true;
}

inline SpectralResult from_dense(const SparseMatrix& h) {
  DenseSpectrum ds = dense_spectrum(h);
  SpectralResult r;
  r.energy = ds.values[0];
  r.vector = ds.vectors.col(0);
  r.gap = ds.values.size() > 1 ? ds.values[1] - ds.values[0]
                               : std::numeric_limits<double>::infinity();
  const double scale = std::max(1.0, std::abs(ds.values[0]));
  std::size_t deg = 1;
  while (deg < static_cast<std::size_t>(ds.values.size()) &&
         ds.values[static_cast<Eigen::Index>(deg)] - ds.values[0] < 1e-9 * scale)
    ++deg;
  r.degeneracy = deg;
  r.residual = (h * r.vector - r.energy * r.vector).norm();
  r.dense = true;
  return r;
}

}  // namespace detail

/// Lowest eigenpair of a hermitian matrix.
///
/// Restarted Lanczos with full reorthogonalization: the Krylov basis is
/// grown to `krylov_dim` vectors, the Rayleigh-Ritz problem V^H A V is
/// solved densely, and the basis is restarted from the lowest Ritz vectors
/// plus the residual of the lowest one. The start vector is pseudo-random
/// from `opts.seed`.
inline SpectralResult ground_state(const SparseMatrix& h, const SolverOptions& opts = {}) {
  const Eigen::Index n = h.rows();
  if (n == 0) throw std::invalid_argument("ground_state: empty operator");
  if (static_cast<std::size_t>(n) <= opts.dense_threshold) return detail::from_dense(h);

  const double hnorm = norm_estimate(h);
  const int m = static_cast<int>(std::min<Eigen::Index>(std::max(opts.krylov_dim, 4), n));
  const int keep = std::max(2, m / 2);
  std::mt19937_64 rng(opts.seed);

  std::vector<Vector> basis;
  std::vector<Vector> images;
  auto extend = [&](Vector candidate) {
    while (!detail::orthonormal_append(basis, std::move(candidate))) {
      if (static_cast<Eigen::Index>(basis.size()) >= n) return false;
      candidate = detail::random_vector(n, rng);
    }
    images.push_back(h * basis.back());
    return true;
  };

  extend(detail::random_vector(n, rng));
  double best_residual = std::numeric_limits<double>::infinity();

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    while (static_cast<int>(basis.size()) < m)
      if (!extend(images.back())) break;

    const auto k = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXcd vmat(n, k), amat(n, k);
    for (Eigen::Index c = 0; c < k; ++c) {
      vmat.col(c) = basis[static_cast<std::size_t>(c)];
      amat.col(c) = images[static_cast<std::size_t>(c)];
    }
    Eigen::MatrixXcd projected = vmat.adjoint() * amat;
    projected = 0.5 * (projected + projected.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(projected);

    const Eigen::Index nkeep = std::min<Eigen::Index>(keep, k);
    Eigen::MatrixXcd ritz = vmat * es.eigenvectors().leftCols(nkeep);
    Eigen::MatrixXcd ritz_images = amat * es.eigenvectors().leftCols(nkeep);

    const double e0 = es.eigenvalues()[0];
    Vector resid = ritz_images.col(0) - e0 * ritz.col(0);
    const double rnorm = resid.norm();
    best_residual = std::min(best_residual, rnorm);

    if (rnorm <= opts.tol * (std::abs(e0) + hnorm) || k == n) {
      SpectralResult r;
      r.energy = e0;
      r.vector = ritz.col(0).normalized();
      r.residual = rnorm;
      r.iterations = iter;
      if (k > 1) {
        r.gap = es.eigenvalues()[1] - e0;
        const double scale = std::max(1.0, std::abs(e0));
        std::size_t deg = 1;
        while (deg < static_cast<std::size_t>(k) &&
               es.eigenvalues()[static_cast<Eigen::Index>(deg)] - e0 < 1e-9 * scale)
          ++deg;
        r.degeneracy = deg;
      }
      return r;
    }

    basis.clear();
    images.clear();
    for (Eigen::Index c = 0; c < nkeep; ++c) {
      basis.push_back(ritz.col(c));
      images.push_back(ritz_images.col(c));
    }
    // Re-orthonormalize the kept block against accumulated rounding.
    std::vector<Vector> clean;
    std::vector<Vector> clean_images;
    for (std::size_t c = 0; c < basis.size(); ++c) {
      if (detail::orthonormal_append(clean, basis[c])) clean_images.push_back(h * clean.back());
    }
    basis = std::move(clean);
    images = std::move(clean_images);
    extend(resid);
  }
  throw SolverError("ground_state: no convergence after " + std::to_string(opts.max_iter) +
                        " restarts (best residual " + std::to_string(best_residual) + ")",
                    best_residual);
}

inline SpectralResult ground_state(const SparseOperator& op, const SolverOptions& opts = {}) {
  if (op.kind != Hermiticity::hermitian)
    throw std::invalid_argument("ground_state: operator is not flagged hermitian");
  return ground_state(op.matrix, opts);
}

/// Principal submatrix on the given (ascending) indices.
inline SparseMatrix principal_submatrix(const SparseMatrix& h,
                                        const std::vector<std::size_t>& indices) {
  std::vector<Eigen::Index> local(static_cast<std::size_t>(h.rows()), -1);
  for (std::size_t i = 0; i < indices.size(); ++i)
    local[indices[i]] = static_cast<Eigen::Index>(i);
  std::vector<Eigen::Triplet<complex>> trips;
  for (std::size_t i = 0; i < indices.size(); ++i)
    for (SparseMatrix::InnerIterator it(h, static_cast<Eigen::Index>(indices[i])); it; ++it) {
      const Eigen::Index c = local[static_cast<std::size_t>(it.col())];
      if (c >= 0) trips.emplace_back(static_cast<int>(i), static_cast<int>(c), it.value());
    }
  const auto d = static_cast<Eigen::Index>(indices.size());
  SparseMatrix sub(d, d);
  sub.setFromTriplets(trips.begin(), trips.end());
  return sub;
}

/// max |H_ij| over pairs (i, j) lying in different charge sectors. Zero
/// exactly when H commutes with Q.
inline double charge_leakage(const SparseMatrix& h, const FockBasis& basis) {
  double worst = 0.0;
  for (Eigen::Index r = 0; r < h.outerSize(); ++r) {
    const int zr = basis.state(static_cast<std::size_t>(r)).charge_index();
    for (SparseMatrix::InnerIterator it(h, r); it; ++it)
      if (basis.state(static_cast<std::size_t>(it.col())).charge_index() != zr)
        worst = std::max(worst, std::abs(it.value()));
  }
  return worst;
}

struct NumberMoment {
  double expectation = 0.0;
  /// min{n in N : <N_b> < n} = floor(<N_b>) + 1
  int n0 = 1;
  std::map<int, double> sector_mass;
};

inline NumberMoment number_moment(const Vector& v, const FockBasis& basis) {
  if (v.size() != static_cast<Eigen::Index>(basis.dim()))
    throw std::invalid_argument("number_moment: vector length does not match basis");
  NumberMoment nm;
  const double norm_sq = v.squaredNorm();
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    const double p = std::norm(v[static_cast<Eigen::Index>(i)]) / norm_sq;
    nm.expectation += p * basis.state(i).total();
    nm.sector_mass[basis.state(i).charge_index()] += p;
  }
  nm.n0 = static_cast<int>(std::floor(nm.expectation)) + 1;
  return nm;
}

/// Fills `sector` and `number_expectation` from the vector's content.
inline void label(SpectralResult& r, const FockBasis& basis) {
  const NumberMoment nm = number_moment(r.vector, basis);
  r.number_expectation = nm.expectation;
  r.sector.reset();
  for (const auto& [z, mass] : nm.sector_mass)
    if (mass >= 1.0 - 1e-8) r.sector = z;
}

/// Ground pair of the principal block of sector z, embedded in the full basis.
inline SpectralResult sector_ground_state(const SparseMatrix& h, const FockBasis& basis, int z,
                                          const SolverOptions& opts = {}) {
  const auto it = basis.sectors().find(z);
  if (it == basis.sectors().end() || it->second.empty())
    throw std::invalid_argument("sector_ground_state: sector " + std::to_string(z) + " is empty");
  const double leak = charge_leakage(h, basis);
  if (leak > 1e-13 * std::max(1.0, max_abs(h)))
    throw std::invalid_argument("sector_ground_state: operator does not commute with Q (leak " +
                                std::to_string(leak) + ")");
  const auto& idx = it->second;
  SpectralResult r = ground_state(principal_submatrix(h, idx), opts);
  Vector full = Vector::Zero(static_cast<Eigen::Index>(basis.dim()));
  for (std::size_t i = 0; i < idx.size(); ++i)
    full[static_cast<Eigen::Index>(idx[i])] = r.vector[static_cast<Eigen::Index>(i)];
  r.vector = std::move(full);
  label(r, basis);
  r.sector = z;
  return r;
}

struct SectorScan {
  /// Global ground pair: the lowest sector ground state. `degeneracy`
  /// counts every resolved eigenvector at the global minimum.
  SpectralResult ground;
  std::map<int, SpectralResult> sectors;
  /// Charge indices whose ground energy is within the degeneracy window.
  std::vector<int> degenerate_sectors;
};

/// Solves every charge sector and assembles the global ground state.
inline SectorScan scan_sectors(const SparseMatrix& h, const FockBasis& basis,
                               const SolverOptions& opts = {}) {
  SectorScan scan;
  for (const auto& [z, idx] : basis.sectors()) {
    (void)idx;
    scan.sectors.emplace(z, sector_ground_state(h, basis, z, opts));
  }
  // Smallest |z| wins ties, then positive z.
  const SpectralResult* best = nullptr;
  int best_z = 0;
  for (const auto& [z, r] : scan.sectors) {
    if (!best || r.energy < best->energy - 1e-12 * std::max(1.0, std::abs(r.energy)) ||
        (std::abs(r.energy - best->energy) <= 1e-12 * std::max(1.0, std::abs(r.energy)) &&
         (std::abs(z) < std::abs(best_z) || (std::abs(z) == std::abs(best_z) && z > best_z)))) {
      best = &r;
      best_z = z;
    }
  }
  scan.ground = *best;
  const double e0 = best->energy;
  const double window = 1e-9 * std::max(1.0, std::abs(e0));
  double next = std::numeric_limits<double>::infinity();
  std::size_t deg = 0;
  for (const auto& [z, r] : scan.sectors) {
    if (r.energy - e0 < window) {
      scan.degenerate_sectors.push_back(z);
      deg += r.degeneracy;
      if (std::isfinite(r.gap)) next = std::min(next, r.energy + r.gap);
    } else {
      next = std::min(next, r.energy);
    }
  }
  scan.ground.degeneracy = deg;
  scan.ground.gap = next - e0;
  if (deg > 1) scan.ground.gap = 0.0;
  return scan;
}

struct SweepPoint {
  double mass = 0.0;
  SpectralResult result;
};

/// Ground states of H_m for each mass (positive, strictly descending)
/// followed by the massless H. The interaction is assembled once.
inline std::vector<SweepPoint> mass_limit_sweep(const Model& model,
                                                const std::vector<double>& masses,
                                                const SolverOptions& opts = {}) {
  for (std::size_t i = 0; i < masses.size(); ++i) {
    if (!(masses[i] > 0.0))
      throw std::invalid_argument("mass_limit_sweep: masses must be positive");
    if (i > 0 && !(masses[i] < masses[i - 1]))
      throw std::invalid_argument("mass_limit_sweep: masses must be strictly descending");
  }
  std::vector<double> all(masses);
  all.push_back(0.0);
  std::vector<SweepPoint> out;
  out.reserve(all.size());
  for (double m : all) {
    SparseOperator hm = assemble_Hm(model, m);
    out.push_back({m, scan_sectors(hm.matrix, model.basis(), opts).ground});
  }
  return out;
}

}  // namespace chfock

#endif  // CHFOCK_SPECTRAL_HPP
