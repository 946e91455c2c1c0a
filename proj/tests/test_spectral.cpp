#include <gtest/gtest.h>

#include "chfock/spectral.hpp"

using namespace chfock;

namespace {

SolverOptions iterative_only() {
  SolverOptions o;
  o.dense_threshold = 0;
  return o;
}

}  // namespace

TEST(GroundState, FreeFieldIsVacuum) {
  const Model model(default_model_params(0.0, 1.0, 6));
  const SpectralResult r = ground_state(assemble_H0(model), iterative_only());
  EXPECT_NEAR(r.energy, 0.0, 1e-10);
  EXPECT_NEAR(std::abs(r.vector[0]), 1.0, 1e-8);
  const SectorScan scan = scan_sectors(assemble_H0(model).matrix, model.basis());
  EXPECT_EQ(scan.ground.sector, 0);
  EXPECT_EQ(scan.ground.energy, 0.0);
  EXPECT_EQ(scan.sectors.at(0).energy, 0.0);
}

TEST(GroundState, VacuumOnlyBasis) {
  const Model model(default_model_params(1.0, 1.0, 0));
  const SparseOperator h = assemble_H(model);
  const SpectralResult r = ground_state(h);
  EXPECT_EQ(r.energy, h.matrix.coeff(0, 0).real());
  EXPECT_TRUE(std::isinf(r.gap));
}

class LanczosVsDense : public ::testing::TestWithParam<std::tuple<double, double, int>> {};

TEST_P(LanczosVsDense, EnergiesAndVectorsAgree) {
  const auto [mu, lambda, n_max] = GetParam();
  const Model model(default_model_params(mu, lambda, n_max));
  const SparseOperator h = assemble_H(model);
  const SpectralResult it = ground_state(h, iterative_only());
  const DenseSpectrum ds = dense_spectrum(h.matrix);
  EXPECT_NEAR(it.energy, ds.values[0], 1e-8);
  EXPECT_FALSE(it.dense);
  if (ds.values[1] - ds.values[0] > 1e-6)
    EXPECT_GE(std::abs(ds.vectors.col(0).dot(it.vector)), 1.0 - 1e-8);
  EXPECT_LE((h.matrix * it.vector - it.energy * it.vector).norm(),
            1e-8 * (std::abs(it.energy) + norm_estimate(h.matrix)));
}

INSTANTIATE_TEST_SUITE_P(DefaultMatrix, LanczosVsDense,
                         ::testing::Combine(::testing::Values(-1.0, 0.0, 1.0),
                                            ::testing::Values(0.1, 1.0),
                                            ::testing::Values(6, 8)));

TEST(GroundState, DeterministicForFixedSeed) {
  const Model model(default_model_params(-1.0, 0.1, 8));
  const SparseOperator h = assemble_H(model);
  const SpectralResult a = ground_state(h, iterative_only());
  const SpectralResult b = ground_state(h, iterative_only());
  EXPECT_EQ(a.energy, b.energy);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_TRUE((a.vector - b.vector).norm() == 0.0);
}

TEST(GroundState, NonConvergenceReportsBestResidual) {
  const Model model(default_model_params(1.0, 1.0, 8));
  SolverOptions o = iterative_only();
  o.max_iter = 1;
  o.krylov_dim = 4;
  o.tol = 1e-16;
  try {
    ground_state(assemble_H(model), o);
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_GT(e.best_residual(), 0.0);
  }
}

TEST(GroundState, RejectsNonHermitianFlag) {
  const FockBasis b(1, 2);
  EXPECT_THROW(ground_state(annihilator(b, Species::plus, 0)), std::invalid_argument);
}

TEST(Sectors, ScanMatchesGlobalDenseMinimum) {
  for (double mu : {-1.0, 0.0, 1.0}) {
    const Model model(default_model_params(mu, 0.1, 6));
    const SparseMatrix h = assemble_H(model).matrix;
    const SectorScan scan = scan_sectors(h, model.basis());
    EXPECT_EQ(scan.sectors.size(), 13u);
    const DenseSpectrum ds = dense_spectrum(h);
    EXPECT_NEAR(scan.ground.energy, ds.values[0], 1e-10);
    EXPECT_NEAR(scan.ground.gap, ds.values[1] - ds.values[0], 1e-8);
    EXPECT_EQ(scan.ground.sector, 0);
    EXPECT_EQ(scan.ground.degeneracy, 1u);
    for (const auto& [z, r] : scan.sectors) {
      EXPECT_EQ(r.sector, z);
      const NumberMoment nm = number_moment(r.vector, model.basis());
      EXPECT_NEAR(nm.sector_mass.at(z), 1.0, 1e-12);
    }
  }
}

TEST(Sectors, CrossSectorDegeneracy) {
  const FockBasis b(2, 1);
  const SparseMatrix h = dgamma_diag(b, {-1.0, 1.0}, {-1.0, 1.0}).matrix;
  const SectorScan scan = scan_sectors(h, b);
  EXPECT_EQ(scan.degenerate_sectors, (std::vector<int>{-1, 1}));
  EXPECT_EQ(scan.ground.degeneracy, 2u);
  EXPECT_EQ(scan.ground.gap, 0.0);
  EXPECT_EQ(scan.ground.sector, 1);
}

TEST(Sectors, LeakageIsRejected) {
  const FockBasis b(2, 3);
  SparseMatrix h = number_operator(b).matrix;
  const SparseMatrix a = annihilator(b, Species::plus, 0).matrix;
  h += 0.1 * (a + SparseMatrix(a.adjoint()));
  EXPECT_GT(charge_leakage(h, b), 0.0);
  EXPECT_THROW(sector_ground_state(h, b, 0), std::invalid_argument);
  EXPECT_THROW(sector_ground_state(number_operator(b).matrix, b, 7), std::invalid_argument);
}

TEST(Sectors, PrincipalSubmatrix) {
  const FockBasis b(2, 2);
  const SparseMatrix n = number_operator(b).matrix;
  const auto& idx = b.sectors().at(0);
  const SparseMatrix sub = principal_submatrix(n, idx);
  ASSERT_EQ(sub.rows(), 5);
  EXPECT_EQ(sub.coeff(0, 0).real(), 0.0);
  for (Eigen::Index i = 1; i < 5; ++i) EXPECT_EQ(sub.coeff(i, i).real(), 2.0);
}

TEST(NumberMoment, VacuumAndMixture) {
  const FockBasis b(1, 3);
  Vector v = Vector::Zero(static_cast<Eigen::Index>(b.dim()));
  v[0] = 1.0;
  NumberMoment nm = number_moment(v, b);
  EXPECT_EQ(nm.expectation, 0.0);
  EXPECT_EQ(nm.n0, 1);
  EXPECT_EQ(nm.sector_mass.at(0), 1.0);

  const std::size_t two_plus = b.index_of(FockState{{2}, {0}});
  v.setZero();
  v[static_cast<Eigen::Index>(two_plus)] = 2.0;
  nm = number_moment(v, b);
  EXPECT_EQ(nm.expectation, 2.0);
  EXPECT_EQ(nm.n0, 3);
  EXPECT_EQ(nm.sector_mass.at(2), 1.0);
  EXPECT_THROW(number_moment(Vector::Zero(2), b), std::invalid_argument);
}

TEST(MassSweep, MonotoneAndOrdered) {
  const Model model(default_model_params(-1.0, 0.1, 6));
  const auto sweep = mass_limit_sweep(model, {1.0, 0.5, 0.1, 0.01});
  ASSERT_EQ(sweep.size(), 5u);
  EXPECT_EQ(sweep.back().mass, 0.0);
  for (std::size_t i = 1; i < sweep.size(); ++i)
    EXPECT_LE(sweep[i].result.energy, sweep[i - 1].result.energy + 1e-10);
  EXPECT_THROW(mass_limit_sweep(model, {0.5, 1.0}), std::invalid_argument);
  EXPECT_THROW(mass_limit_sweep(model, {1.0, 0.0}), std::invalid_argument);
}
