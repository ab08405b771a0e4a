#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "srs/params.hpp"

using namespace srs;

TEST(Params, DerivedQuantitiesFromDefinitions) {
  auto p = make_params(14.14, 19.95, 0.0955, 1.0);
  double L = std::sqrt(2 * std::numbers::pi) * 19.95;
  EXPECT_NEAR(p.length(), L, 1e-12);
  EXPECT_NEAR(p.length(), 50.0, 0.05);
  EXPECT_NEAR(p.fresnel(), 14.14 * 14.14 / L, 1e-12);
  EXPECT_NEAR(p.fresnel(), 4.0, 0.01);
  EXPECT_NEAR(p.depth(), 90.0, 0.1);
  EXPECT_DOUBLE_EQ(p.lambda0(), 1.5 * std::numbers::pi * 0.0955);
}

TEST(Params, GainTimesLengthEqualsQuarterDepthTimesTime) {
  auto p = make_params(20, 200, 0.01, 1.0);
  for (double t : {0.0, 0.1, 1.0, 7.5})
    EXPECT_NEAR(p.lambda0() * t * p.length(), p.depth() * p.gamma * t / 4, 1e-12 * (1 + t));
}

TEST(Params, RegimeWarnings) {
  auto bad = make_params(1, 1, 1, 1);
  EXPECT_EQ(bad.regime_warnings().size(), 3u);
  auto good = make_params(30, 300, 0.01, 1);
  EXPECT_TRUE(good.regime_warnings().empty());
}

TEST(Params, NonPositiveInputsRejected) {
  EXPECT_THROW(make_params(0, 1, 1, 1), InvalidParameter);
  EXPECT_THROW(make_params(1, -1, 1, 1), InvalidParameter);
  EXPECT_THROW(make_params(1, 1, 0, 1), InvalidParameter);
  EXPECT_THROW(make_params(1, 1, 1, 0), InvalidParameter);
  EXPECT_THROW(make_params(std::nan(""), 1, 1, 1), InvalidParameter);
  EXPECT_THROW(solve_geometry(4, 0, 10), InvalidParameter);
}

TEST(Params, SolveGeometryPaperCloud) {
  auto p = solve_geometry(4, 90, 6000);
  EXPECT_NEAR(p.length(), 50.0, 1e-12);
  EXPECT_NEAR(p.sigma_par, 19.947114, 1e-6);
  EXPECT_NEAR(p.sigma_perp, 14.142136, 1e-6);
  EXPECT_NEAR(p.rho0, 0.0954930, 1e-7);
  EXPECT_EQ(p.gamma, 1.0);
}

TEST(Params, HalvingAtomsDoublesDensity) {
  auto a = solve_geometry(4, 90, 6000);
  auto b = solve_geometry(4, 90, 3000);
  EXPECT_NEAR(b.length(), 25.0, 1e-12);
  EXPECT_NEAR(b.rho0 / a.rho0, 2.0, 1e-12);
}

TEST(Params, SolveGeometryIsRightInverse) {
  for (double F : {0.25, 1.0, 4.0, 8.0})
    for (double d : {10.0, 90.0, 160.0})
      for (double N : {50.0, 1500.0, 6000.0}) {
        auto p = solve_geometry(F, d, N);
        auto q = make_params(p.sigma_perp, p.sigma_par, p.rho0, p.gamma);
        EXPECT_NEAR(q.fresnel() / F, 1, 1e-12);
        EXPECT_NEAR(q.depth() / d, 1, 1e-12);
        EXPECT_NEAR(q.atoms() / N, 1, 1e-12);
      }
}

TEST(Params, TruncationValidation) {
  Truncation t;
  EXPECT_NO_THROW(t.validate());
  t.quad_nodes = 1;
  EXPECT_THROW(t.validate(), InvalidParameter);
  t = Truncation{};
  t.rel_tol = 0;
  EXPECT_THROW(t.validate(), InvalidParameter);
  t = Truncation{};
  t.k_max = -1;
  EXPECT_THROW(t.validate(), InvalidParameter);
  auto g = Truncation{}.grown();
  EXPECT_GT(g.k_max, Truncation{}.k_max);
  EXPECT_GT(g.q_max, Truncation{}.q_max);
}
