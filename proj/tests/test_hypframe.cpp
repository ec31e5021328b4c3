#include <gtest/gtest.h>

#include <hypcoord/hypframe.hpp>
#include <hypcoord/planar_maps.hpp>
#include <hypcoord/suites.hpp>

using namespace hypcoord;

TEST(HypframeOracle, ClosedFormAngleFormulaAndGridAgree) {
  OracleOptions opt;
  opt.trials = 200;
  opt.grid_n = 100000;
  opt.seed = 3;
  BoundReport r = frame_oracle_sweep(opt);
  ASSERT_EQ(r.rows.size(), 200u * 13u);
  auto f = r.first_failure();
  EXPECT_FALSE(f) << f->name << " at trial " << f->i;
}

TEST(HypframeOracle, CoeccentricityExpressionsAgree) {
  OracleOptions opt;
  opt.trials = 500;
  BoundReport r = coeccentricity_sweep(opt);
  EXPECT_EQ(r.violations(), 0u);
}

TEST(HypframeOracle, GridRefinementMeetsNormTolerance) {
  // Nearly conformal matrix: the bare grid value is off by O((pi/N)^2 / C^2).
  ScaledMatrix m = ScaledMatrix::from({1.0, 0.05, -0.02, 0.97});
  Svd2 s = svd2(m);
  OracleResult g = oracle_extremal_directions(m, 1000);
  EXPECT_NEAR(g.norm_max, s.sigma_max, 1e-12);
  EXPECT_NEAR(g.norm_min, s.sigma_min, 1e-12);
}

TEST(Hypframe, NonMultiplicativity) {
  Mat2 A{2.0, 0.0, 0.0, 0.5};
  Mat2 B = Mat2{0.0, -1.0, 1.0, 0.0} * A;
  double cab = coecc_value(ScaledMatrix::from(A * B));
  EXPECT_NEAR(cab, 1.0, 1e-15);
  EXPECT_NEAR(coecc_value(ScaledMatrix::from(A)) * coecc_value(ScaledMatrix::from(B)), 1.0 / 16,
              1e-15);
}

TEST(Hypframe, SignConvention) {
  OrbitSegment o = compute_orbit(henon_map(), {0.1, 0.2}, 12);
  for (int k = 1; k <= 12; ++k) {
    HyperbolicFrame h = hyperbolic_coordinates(o, k);
    EXPECT_TRUE(h.e.y > 0.0 || (h.e.y == 0.0 && h.e.x > 0.0));
    EXPECT_DOUBLE_EQ(h.f.x, h.e.y);
    EXPECT_DOUBLE_EQ(h.f.y, -h.e.x);
    EXPECT_NEAR(norm(h.e), 1.0, 1e-15);
  }
}

TEST(Hypframe, DiagonalCocycleFrameIsTheAxes) {
  OrbitSegment o = orbit_from_matrices(std::vector<Mat2>(5, Mat2{3.0, 0.0, 0.0, 0.5}));
  HyperbolicFrame h = hyperbolic_coordinates(o, 5);
  EXPECT_NEAR(h.e.x, 0.0, 1e-15);
  EXPECT_NEAR(h.e.y, 1.0, 1e-15);
  EXPECT_NEAR(h.coecc, std::pow(0.5 / 3.0, 5), 1e-18);
}

TEST(Hypframe, ConformalCasesAreRejected) {
  OrbitSegment rot = orbit_from_matrices({Mat2{0.0, -1.0, 1.0, 0.0}});
  try {
    hyperbolic_coordinates(rot, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoHyperbolicCoordinates);
  }
  try {
    angle_theta(Mat2{2.0, 0.0, 0.0, 2.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConformalDegenerate);
  }
  EXPECT_THROW(svd2(ScaledMatrix::from({})), Error);
}

TEST(Hypframe, PushforwardOfTheFrame) {
  OrbitSegment o = compute_orbit(henon_map(), {0.0, 0.0}, 20);
  for (int k : {3, 10, 20}) {
    HyperbolicFrame h = hyperbolic_coordinates(o, k);
    PushedFrame p = pushforward_frames(o, k, k);
    EXPECT_NEAR(p.e.log_norm(), h.sigma_min, 1e-9);
    EXPECT_NEAR(p.f.log_norm(), h.sigma_max, 1e-12);
    EXPECT_NEAR(dot(p.e.direction(), p.f.direction()), 0.0, 1e-9);
    // Direct product for moderate k.
    if (k <= 10) {
      Mat2 M = o.prefix(k).value();
      Vec2 me = M * h.e;
      EXPECT_NEAR(std::log(norm(me)), h.sigma_min, 1e-7);
    }
  }
}

TEST(Hypframe, FrameDistanceMatchesDirectDifference) {
  OrbitSegment o = compute_orbit(henon_map(), {0.1, 0.0}, 8);
  for (int i = 1; i < 8; ++i) {
    HyperbolicFrame a = hyperbolic_coordinates(o, i), b = hyperbolic_coordinates(o, 8);
    double direct = std::min(norm(a.e - b.e), norm(a.e + b.e));
    EXPECT_NEAR(frame_distance(o, i, 8), direct, 1e-12);
  }
}

TEST(Hypframe, ThreeCoeccentricityFormsOnLongOrbit) {
  OrbitSegment o = compute_orbit(henon_map(), {0.0, 0.0}, 200);
  Coeccentricity c = coeccentricity(o, 200);
  EXPECT_GT(c.conorm_over_norm, 0.0);
  EXPECT_NEAR(c.det_over_norm2 / c.conorm_over_norm, 1.0, 1e-10);
  EXPECT_NEAR(c.conorm2_over_det / c.conorm_over_norm, 1.0, 1e-10);
}
