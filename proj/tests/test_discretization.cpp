#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "chfock/discretization.hpp"

using namespace chfock;

TEST(ModeGrid, TwoModeDefault) {
  const ModeGrid g = build_mode_grid(1, 1.0, 1, tent_profile(1.0));
  ASSERT_EQ(g.size(), 2u);
  EXPECT_DOUBLE_EQ(g.points[0][0], -0.5);
  EXPECT_DOUBLE_EQ(g.points[1][0], 0.5);
  for (std::size_t j = 0; j < 2; ++j) {
    EXPECT_DOUBLE_EQ(g.weights[j], 1.0);
    EXPECT_DOUBLE_EQ(g.omega[j], 0.5);
    EXPECT_DOUBLE_EQ(g.phi[j].real(), 0.5);
  }
  EXPECT_EQ(g.mirror[0], 1u);
  EXPECT_EQ(g.mirror[1], 0u);
  EXPECT_DOUBLE_EQ(g.phi_norm_sq(), 0.5);
}

TEST(ModeGrid, FourModeAxis) {
  const ModeGrid g = build_mode_grid(1, 1.0, 2, tent_profile(1.0));
  ASSERT_EQ(g.size(), 4u);
  const double expected[] = {-0.75, -0.25, 0.25, 0.75};
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_DOUBLE_EQ(g.points[j][0], expected[j]);
    EXPECT_DOUBLE_EQ(g.weights[j], 0.5);
  }
}

class GridShapes : public ::testing::TestWithParam<std::tuple<int, std::size_t>> {};

TEST_P(GridShapes, MirrorNegatesAndOriginExcluded) {
  const auto [d, n_half] = GetParam();
  for (const auto& profile : {tent_profile(1.3), indicator_profile(1.3)}) {
    const ModeGrid g = build_mode_grid(d, 1.3, n_half, profile);
    std::size_t expected = 1;
    for (int i = 0; i < d; ++i) expected *= 2 * n_half;
    ASSERT_EQ(g.size(), expected);
    double total_weight = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      EXPECT_GT(g.omega[j], 0.0);
      const std::size_t mj = g.mirror[j];
      EXPECT_EQ(g.mirror[mj], j);
      for (int a = 0; a < d; ++a) EXPECT_DOUBLE_EQ(g.points[mj][a], -g.points[j][a]);
      EXPECT_EQ(g.phi[j], g.phi[mj]);
      total_weight += g.weights[j];
    }
    EXPECT_NEAR(total_weight, std::pow(2.0 * 1.3, d), 1e-12);
  }
}

INSTANTIATE_TEST_SUITE_P(Shapes, GridShapes,
                         ::testing::Combine(::testing::Values(1, 2, 3),
                                            ::testing::Values(std::size_t{1}, std::size_t{2},
                                                              std::size_t{3})));

TEST(ModeGrid, RejectsOddProfile) {
  CutoffProfile lopsided{"lopsided", [](const Point& k, int) {
                           return complex(k[0] > 0 ? 1.0 : 0.5, 0.0);
                         }};
  EXPECT_THROW(build_mode_grid(1, 1.0, 1, lopsided), std::invalid_argument);
}

TEST(ModeGrid, AcceptsComplexEvenProfile) {
  CutoffProfile phased{"phased", [](const Point& k, int) {
                         return std::polar(1.0, k[0]);
                       }};
  EXPECT_NO_THROW(build_mode_grid(1, 1.0, 2, phased));
}

TEST(ModeGrid, RejectsBadArguments) {
  EXPECT_THROW(build_mode_grid(0, 1.0, 1, tent_profile(1.0)), std::invalid_argument);
  EXPECT_THROW(build_mode_grid(4, 1.0, 1, tent_profile(1.0)), std::invalid_argument);
  EXPECT_THROW(build_mode_grid(1, 0.0, 1, tent_profile(1.0)), std::invalid_argument);
  EXPECT_THROW(build_mode_grid(1, 1.0, 0, tent_profile(1.0)), std::invalid_argument);
}

TEST(SpatialQuadrature, MidpointLayout) {
  const SpatialQuadrature q = build_spatial_quadrature(1, 2.0, 9, gaussian_cutoff());
  ASSERT_EQ(q.size(), 9u);
  EXPECT_NEAR(q.points[4][0], 0.0, 1e-15);
  EXPECT_NEAR(q.points[0][0], -2.0 + 2.0 / 9.0, 1e-15);
  EXPECT_NEAR(q.weights[0], 4.0 / 9.0, 1e-15);
}

TEST(SpatialQuadrature, NormalizedMassIsOne) {
  for (int d = 1; d <= 3; ++d) {
    const auto q = normalized(build_spatial_quadrature(d, 2.0, 5, gaussian_cutoff(0.7)));
    EXPECT_NEAR(q.chi_mass(), 1.0, 1e-14);
  }
}

TEST(SpatialQuadrature, ConstantCutoffMassIsVolume) {
  const auto q = build_spatial_quadrature(2, 1.5, 4, constant_cutoff(2.0));
  EXPECT_NEAR(q.chi_mass(), 2.0 * 9.0, 1e-12);
}

// Midpoint error against the closed form sqrt(pi) erf(L); quartering per doubling of P.
TEST(SpatialQuadrature, SecondOrderConvergence) {
  const double exact = std::sqrt(M_PI) * std::erf(2.0);
  double previous = 0.0;
  for (std::size_t p : {9u, 18u, 36u, 72u}) {
    const double err =
        std::abs(build_spatial_quadrature(1, 2.0, p, gaussian_cutoff()).chi_mass() - exact);
    if (previous > 0.0) EXPECT_NEAR(previous / err, 4.0, 0.25);
    previous = err;
  }
}

TEST(SpatialQuadrature, RejectsNegativeCutoff) {
  SpatialCutoff bad{"bad", [](const Point& x, int) { return x[0]; }};
  EXPECT_THROW(build_spatial_quadrature(1, 1.0, 4, bad), std::invalid_argument);
  EXPECT_THROW(build_spatial_quadrature(1, 1.0, 4, constant_cutoff(0.0)), std::invalid_argument);
}

TEST(SmearedVector, NormIndependentOfPosition) {
  const ModeGrid g = build_mode_grid(2, 1.0, 2, tent_profile(1.0));
  double ref = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j)
    ref += g.weights[j] * std::norm(g.phi[j]) / g.omega[j];
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int t = 0; t < 20; ++t) {
    const Point x{u(rng), u(rng), 0.0};
    EXPECT_NEAR(smeared_vector(g, x).norm_sq(), ref, 1e-13);
  }
}

TEST(SmearedVector, EvenProfileGivesRealOverlaps) {
  const ModeGrid g = build_mode_grid(1, 1.0, 3, tent_profile(1.0));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int t = 0; t < 50; ++t) {
    const auto a = smeared_vector(g, {u(rng), 0.0, 0.0});
    const auto b = smeared_vector(g, {u(rng), 0.0, 0.0});
    EXPECT_LE(std::abs(inner(a, b).imag()), 1e-14);
  }
}

TEST(ModeVector, InnerIsAntilinearInFirstArgument) {
  ModeVector u{{complex(1, 2), complex(0, -1)}};
  ModeVector v{{complex(3, 0), complex(1, 1)}};
  const complex s(0.3, -1.1);
  ModeVector su = u;
  for (auto& c : su.components) c *= s;
  EXPECT_NEAR(std::abs(inner(su, v) - std::conj(s) * inner(u, v)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(inner(u, v) - std::conj(inner(v, u))), 0.0, 1e-14);
  EXPECT_THROW(inner(u, ModeVector{{complex(1, 0)}}), std::invalid_argument);
}

TEST(Dispersion, MassiveDominatesMassless) {
  const ModeGrid g = build_mode_grid(1, 1.0, 2, tent_profile(1.0));
  EXPECT_EQ(dispersion_massive(g, 0.0), g.omega);
  const auto wm = dispersion_massive(g, 0.3);
  for (std::size_t j = 0; j < g.size(); ++j) {
    EXPECT_GT(wm[j], g.omega[j]);
    EXPECT_NEAR(wm[j] * wm[j], g.omega[j] * g.omega[j] + 0.09, 1e-14);
  }
  EXPECT_THROW(dispersion_massive(g, -0.1), std::invalid_argument);
}
