#include <gtest/gtest.h>

#include <hypcoord/foliation.hpp>
#include <hypcoord/suites.hpp>

using namespace hypcoord;

// For a diagonal map the e-field is the constant vertical direction, so the
// integral curve is an exact segment.
TEST(FoliationOracle, LinearMapGivesStraightLines) {
  MapSpec m = linear_map({2.0, 0.0, 0.0, 0.5});
  FoliationCurve c = integrate_curve(m, {0.0, 0.0}, 3, FieldTag::Stable, 1.0, 0.05);
  EXPECT_EQ(c.reason, Termination::LengthReached);
  EXPECT_NEAR(c.points.back().x, 0.0, 1e-14);
  EXPECT_NEAR(c.points.back().y, 1.0, 1e-12);
  EXPECT_NEAR(c.s.back(), 1.0, 1e-12);
  FoliationCurve f = integrate_curve(m, {0.0, 0.0}, 3, FieldTag::Unstable, 0.5, 0.05);
  EXPECT_NEAR(std::fabs(f.points.back().x), 0.5, 1e-12);
}

TEST(FoliationOracle, FourthOrderConvergence) {
  double r = integrator_order_ratio(henon_map(), {0.1, 0.1}, 3, FieldTag::Stable, 0.4, 0.1);
  EXPECT_GE(r, 8.0);
  EXPECT_LE(r, 32.0);
}

TEST(FoliationOracle, ImageTangentToPushedField) {
  MapSpec m = henon_map();
  FoliationCurve c = integrate_through(m, {0.2, 0.1}, 3, FieldTag::Stable, 0.05, 1e-3);
  for (int i : {1, 3}) {
    BoundReport r = pushforward_consistency(m, c, i);
    EXPECT_EQ(r.violations(), 0u) << "i=" << i;
  }
}

TEST(Foliation, OrthogonalityOnlyAtMatchingOrder) {
  MapSpec m = henon_map();
  SeedOrthogonality at_k = image_orthogonality(m, {0.3, 0.0}, 2, 2);
  EXPECT_LT(at_k.deviation, 1e-3);
  double worst = 0.0;
  for (double x = -1.0; x <= 1.0; x += 0.1)
    worst = std::max(worst, image_orthogonality(m, {x, 0.0}, 2, 1).deviation);
  EXPECT_GT(worst, 1e-2);
}

TEST(Foliation, GridChecksOnHenon) {
  FoliationChecks fc = foliation_checks(henon_map(), {-1, 1, -1, 1}, 2, 0.25, 0.3, 1e-2,
                                        {FieldTag::Stable, FieldTag::Unstable});
  EXPECT_TRUE(fc.grid.failures.empty());
  EXPECT_EQ(fc.grid.curves.size(), 2 * fc.grid.seeds.size());
  EXPECT_EQ(fc.report.violations(), 0u);
  EXPECT_GT(fc.witness_deviation, 1e-2);
  EXPECT_GE(fc.order_ratio, 8.0);
}

TEST(Foliation, RotationHasNoFrameAtStart) {
  try {
    integrate_curve(linear_map({0.0, -1.0, 1.0, 0.0}), {0.1, 0.1}, 2, FieldTag::Stable, 0.1, 0.01);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoFrameAtStart);
  }
}

TEST(Foliation, LorenzCurvesStopAtTheSingularLine) {
  FoliationGrid g = foliation_grid(lorenz2d_map(), {-0.5, 0.5, -0.5, 0.5}, 3, 0.1,
                                   {FieldTag::Unstable}, 1.0, 1e-2);
  int singular = 0;
  for (const auto& c : g.curves) {
    for (Vec2 p : c.points) EXPECT_GT(std::fabs(p.x), 0.0);
    singular += c.reason == Termination::SingularSet || c.start_reason == Termination::SingularSet;
  }
  EXPECT_GT(singular, 0);
}

TEST(Foliation, ClipStopsAtTheRectangle) {
  CurveOptions opt;
  opt.clip = Rect{-0.2, 0.2, -0.2, 0.2};
  FoliationCurve c =
      integrate_curve(linear_map({2.0, 0.0, 0.0, 0.5}), {0.0, 0.0}, 2, FieldTag::Stable, 1.0, 0.01, 1, opt);
  EXPECT_EQ(c.reason, Termination::DomainExit);
  EXPECT_LE(c.points.back().y, 0.2 + 1e-12);
}

TEST(Foliation, Export) {
  MapSpec m = linear_map({2.0, 0.0, 0.0, 0.5});
  std::vector<FoliationCurve> cs = {integrate_curve(m, {0.0, 0.0}, 1, FieldTag::Stable, 0.1, 0.05)};
  std::string csv = curves_csv(cs);
  EXPECT_EQ(csv.rfind("curve_id,s,x,y\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + static_cast<long>(cs[0].points.size()));
  std::string svg = curves_svg(cs, {-1, 1, -1, 1});
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
}

TEST(Foliation, SeedsOnTheMidline) {
  auto seeds = transversal_seeds({-1, 1, 0, 2}, 0.5);
  ASSERT_EQ(seeds.size(), 5u);
  EXPECT_DOUBLE_EQ(seeds.front().x, -1.0);
  EXPECT_DOUBLE_EQ(seeds.back().x, 1.0);
  for (Vec2 s : seeds) EXPECT_DOUBLE_EQ(s.y, 1.0);
  EXPECT_THROW(transversal_seeds({-1, 1, 0, 2}, 0.0), Error);
}
