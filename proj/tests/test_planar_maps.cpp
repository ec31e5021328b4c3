#include <gtest/gtest.h>

#include <hypcoord/planar_maps.hpp>

using namespace hypcoord;

namespace {

const Vec2 kPoints[] = {{0.3, -0.2}, {-0.7, 0.4}, {0.9, 0.8}, {-0.15, -0.6}};

}  // namespace

// Analytic derivatives against central differences of the map itself.
TEST(PlanarMapsOracle, DerivativesMatchFiniteDifferences) {
  std::vector<MapSpec> maps = {henon_map(), standard_map(0.9), lorenz2d_map(),
                               linear_map({2.0, 1.0, -0.5, 0.3})};
  std::vector<double> c1(10), c2(10);
  for (int n = 0; n < 10; ++n) {
    c1[n] = 0.1 * (n + 1) * (n % 2 ? -1 : 1);
    c2[n] = 0.05 * (10 - n);
  }
  maps.push_back(cubic_map(c1, c2));
  for (const auto& m : maps)
    for (Vec2 p : kPoints) {
      FdValidation v = fd_validate(m, p);
      EXPECT_LT(v.jacobian_error, 1e-7) << m.name;
      EXPECT_LT(v.second_error, 1e-6) << m.name;
    }
}

TEST(PlanarMapsOracle, HenonClosedForm) {
  MapSpec m = henon_map(1.4, 0.3);
  Vec2 q = eval_map(m, {0.5, 0.2});
  EXPECT_DOUBLE_EQ(q.x, 1.0 - 1.4 * 0.25 + 0.2);
  EXPECT_DOUBLE_EQ(q.y, 0.15);
  EXPECT_DOUBLE_EQ(eval_jacobian(m, {0.5, 0.2}).det(), -0.3);
}

TEST(PlanarMaps, StandardMapJacobianIsAreaPreserving) {
  MapSpec m = standard_map(1.7);
  for (Vec2 p : kPoints) EXPECT_NEAR(eval_jacobian(m, p).det(), 1.0, 1e-14);
}

TEST(PlanarMaps, LorenzSingularLine) {
  MapSpec m = lorenz2d_map();
  EXPECT_THROW(eval_map(m, {0.0, 0.3}), Error);
  try {
    eval_jacobian(m, {0.0, 0.3});
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OnSingularSet);
  }
  EXPECT_DOUBLE_EQ(m.singular_set_distance({-0.25, 0.9}), 0.25);
  // |d_x Phi1| grows without bound towards x = 0.
  EXPECT_GT(std::fabs(eval_jacobian(m, {1e-6, 0.0}).a),
            100.0 * std::fabs(eval_jacobian(m, {0.5, 0.0}).a));
}

TEST(PlanarMaps, LorenzDefaultsKeepTheSquare) {
  MapSpec m = lorenz2d_map();
  for (double x = -1.0; x <= 1.0; x += 0.05)
    for (double y = -1.0; y <= 1.0; y += 0.05) {
      if (std::fabs(x) < 1e-12) continue;
      Vec2 q = eval_map(m, {x, y});
      EXPECT_LE(std::fabs(q.x), 1.0 + 1e-12);
      EXPECT_LE(std::fabs(q.y), 1.0 + 1e-12);
    }
}

TEST(PlanarMaps, RegistryOverridesAndRejections) {
  MapSpec m = make_map("henon", {{"a", 1.2}});
  EXPECT_DOUBLE_EQ(m.param("a"), 1.2);
  EXPECT_DOUBLE_EQ(m.param("b"), 0.3);
  EXPECT_THROW(make_map("tent"), Error);
  EXPECT_THROW(make_map("standard", {{"a", 1.0}}), Error);
  MapSpec lin = make_map("linear", {{"m12", 1.0}, {"m21", -1.0}, {"m11", 0.0}, {"m22", 0.0}});
  Vec2 q = eval_map(lin, {1.0, 0.0});
  EXPECT_DOUBLE_EQ(q.x, 0.0);
  EXPECT_DOUBLE_EQ(q.y, -1.0);
}

TEST(PlanarMaps, CubicNeedsTenCoefficients) {
  EXPECT_THROW(cubic_map(std::vector<double>(9), std::vector<double>(10)), Error);
}

TEST(PlanarMaps, FdValidateRefusesTheSingularSet) {
  EXPECT_THROW(fd_validate(lorenz2d_map(), {1e-7, 0.0}), Error);
}
