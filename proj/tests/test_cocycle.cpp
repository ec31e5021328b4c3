#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include <hypcoord/cocycle.hpp>
#include <hypcoord/planar_maps.hpp>

using namespace hypcoord;

namespace {

Eigen::Matrix<long double, 2, 2> to_ld(const Mat2& m) {
  Eigen::Matrix<long double, 2, 2> r;
  r << m.a, m.b, m.c, m.d;
  return r;
}

}  // namespace

// Prefix products against a long double product of the raw Jacobians, and
// the chain's singular values against Eigen's SVD of that product.
TEST(CocycleOracle, PrefixProductsAndSingularValues) {
  MapSpec m = henon_map();
  OrbitSegment o = compute_orbit(m, {0.1, 0.05}, 14);
  Eigen::Matrix<long double, 2, 2> P = Eigen::Matrix<long double, 2, 2>::Identity();
  for (int i = 1; i <= o.k; ++i) {
    P = to_ld(o.step_jacobians[i - 1]) * P;
    Mat2 got = o.prefix(i).value();
    double scale = static_cast<double>(P.cwiseAbs().maxCoeff());
    EXPECT_NEAR(got.a, static_cast<double>(P(0, 0)), 1e-12 * scale);
    EXPECT_NEAR(got.b, static_cast<double>(P(0, 1)), 1e-12 * scale);
    EXPECT_NEAR(got.c, static_cast<double>(P(1, 0)), 1e-12 * scale);
    EXPECT_NEAR(got.d, static_cast<double>(P(1, 1)), 1e-12 * scale);

    Eigen::Matrix2d Pd = P.cast<double>();
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(Pd);
    EXPECT_NEAR(o.chain[i].log_smax, std::log(svd.singularValues()(0)), 1e-12);
    // The Eigen co-norm loses relative accuracy as the product gets eccentric.
    double tol = 1e-15 * svd.singularValues()(0) / svd.singularValues()(1) + 1e-12;
    EXPECT_NEAR(o.chain[i].log_smin, std::log(svd.singularValues()(1)), tol);
  }
}

TEST(CocycleOracle, RandomCocyclesAgainstEigen) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<Mat2> steps(1 + t % 6);
    Eigen::Matrix2d P = Eigen::Matrix2d::Identity();
    for (auto& s : steps) {
      s = {u(rng), u(rng), u(rng), u(rng)};
      Eigen::Matrix2d S;
      S << s.a, s.b, s.c, s.d;
      P = S * P;
    }
    OrbitSegment o = orbit_from_matrices(steps);
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(P);
    EXPECT_NEAR(o.chain[o.k].log_smax, std::log(svd.singularValues()(0)), 1e-11);
    EXPECT_NEAR(o.prefix(o.k).log_abs_det, std::log(std::fabs(P.determinant())), 1e-11);
  }
}

TEST(Cocycle, LongOrbitsStayFinite) {
  MapSpec m = henon_map();
  OrbitSegment o = compute_orbit(m, {0.0, 0.0}, 600);
  EXPECT_NEAR(o.prefix(600).log_abs_det, 600 * std::log(0.3), 1e-9);
  EXPECT_TRUE(std::isfinite(o.chain[600].log_smax));
  EXPECT_GT(o.chain[600].log_smax, 100.0);
  // Gram determinant identity: log smax + log smin = log |det|.
  EXPECT_NEAR(o.chain[600].log_smax + o.chain[600].log_smin, o.prefix(600).log_abs_det, 1e-8);
}

TEST(Cocycle, BlocksComposeToPrefix) {
  OrbitSegment o = compute_orbit(henon_map(), {0.2, 0.1}, 8);
  ScaledMatrix whole = cocycle_block(o, 0, 8);
  ScaledMatrix split = product(cocycle_block(o, 3, 8), cocycle_block(o, 0, 3));
  Mat2 a = whole.value(), b = split.value();
  EXPECT_NEAR((a - b).max_abs() / a.max_abs(), 0.0, 1e-14);
  EXPECT_THROW(cocycle_block(o, 5, 3), Error);
}

TEST(Cocycle, OrbitErrors) {
  try {
    compute_orbit(henon_map(), {10.0, 10.0}, 40);
    FAIL() << "expected escape";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OrbitEscaped);
    EXPECT_GT(e.index(), 0);
  }
  try {
    compute_orbit(lorenz2d_map(), {0.0, 0.2}, 3);
    FAIL() << "expected singular encounter";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularEncounter);
    EXPECT_EQ(e.index(), 0);
  }
  EXPECT_THROW(compute_orbit(henon_map(), {0.0, 0.0}, 0), Error);
  EXPECT_THROW(orbit_from_matrices({}), Error);
}

TEST(Cocycle, ScaledMatrixTracksSignAndZero) {
  ScaledMatrix m = ScaledMatrix::from({0.0, 1.0, 1.0, 0.0});
  EXPECT_EQ(m.det_sign, -1);
  ScaledMatrix z = ScaledMatrix::from({});
  EXPECT_TRUE(z.is_zero());
  EXPECT_THROW(norm_conorm_det(z), Error);
}
