#include <gtest/gtest.h>

#include <hypcoord/certificate.hpp>
#include <hypcoord/planar_maps.hpp>
#include <hypcoord/suites.hpp>

using namespace hypcoord;

TEST(CertificateOracle, AuxiliaryConstantsByHand) {
  ConstantsLedger l;
  l.flavor = Flavor::SingularII;
  l.Gamma = 2.0;
  l.GammaTilde = 1.0;
  l.lambda = 1.5;
  l.b = 0.5;
  l.c = 0.25;
  l.cTilde = 1.0;
  l.B = l.BTilde = l.C = l.D = 1.0;
  ASSERT_TRUE(structural_violations(l).empty());
  AuxiliaryConstants a = auxiliary_constants(l);
  const double Q0 = std::sqrt(2.0 / (1.0 - 0.0625));
  EXPECT_NEAR(a.Q0, Q0, 1e-15);
  EXPECT_NEAR(a.K1, Q0 * Q0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(a.Q, 16.0 / (2.25 * 3.5), 1e-14);
  const double Qt1 = 1.0 + Q0 / 0.75;
  EXPECT_NEAR(a.Qt1, Qt1, 1e-14);
  const double Qt2 = 1.0 + Q0 * 2.25 / (2.25 - 0.5);
  EXPECT_NEAR(a.Qt2, Qt2, 1e-14);
  EXPECT_NEAR(a.Qt3, Qt1 * 2.0, 1e-14);
  EXPECT_NEAR(a.Qt4, Qt1 * Qt2 * 16.0 / (2.25 * (2.25 - 1.0)), 1e-12);
  EXPECT_FALSE(a.valid_I);
  EXPECT_TRUE(a.k2_restricted);
}

TEST(CertificateOracle, AuxiliarySweep) {
  AuxOptions opt;
  opt.trials = 100;
  BoundReport r = aux_constants_sweep(opt);
  auto f = r.first_failure();
  EXPECT_FALSE(f) << f->name;
}

TEST(Certificate, HenonFixtureFitsAndPasses) {
  for (Vec2 p : henon_fixture_points()) {
    OrbitSegment o = compute_orbit(henon_map(), p, 20);
    for (Flavor fl : {Flavor::SingularI, Flavor::SingularII}) {
      ConstantsLedger l = fit_constants(o, fl);
      EXPECT_TRUE(structural_violations(l).empty());
      CertificateReport c = check_quasi_hyperbolic(o, l);
      EXPECT_TRUE(c.verdict) << to_string(fl);
    }
  }
}

TEST(Certificate, RotationIsInfeasible) {
  OrbitSegment o = compute_orbit(linear_map({0.0, 1.0, -1.0, 0.0}), {0.3, 0.1}, 5);
  try {
    fit_constants(o, Flavor::SingularII);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Infeasible);
    EXPECT_NE(std::string(e.what()).find("C_{xi0,i} < 1 fails at i=1"), std::string::npos);
  }
}

TEST(Certificate, CheckNamesTheFailingIndex) {
  OrbitSegment o = compute_orbit(henon_map(), {0.0, 0.0}, 20);
  ConstantsLedger l = fit_constants(o, Flavor::SingularII);
  l.D = 1.0;
  l.Gamma = l.lambda * 1.0001;
  CertificateReport c = check_quasi_hyperbolic(o, l);
  EXPECT_FALSE(c.verdict);
  ASSERT_TRUE(c.first_failure());
}

TEST(Certificate, StructuralViolationsAreNamed) {
  ConstantsLedger l;
  l.flavor = Flavor::SingularII;
  l.Gamma = 2.0;
  l.lambda = 1.5;
  l.cTilde = 0.5;
  l.b = 0.5;
  l.c = 0.4;
  auto v = structural_violations(l);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v.front(), "c < lambda^2 cTilde^2/(Gamma^2 GammaTilde)");
  l.B = 0.5;
  EXPECT_EQ(structural_violations(l).front(), "B >= 1");
}

TEST(Certificate, LedgerRoundTripIsExact) {
  OrbitSegment o = compute_orbit(henon_map(), {0.0, 0.0}, 20);
  ConstantsLedger l = fit_constants(o, Flavor::SingularII);
  ConstantsLedger r = read_ledger(write_ledger(l));
  EXPECT_EQ(r.Gamma, l.Gamma);
  EXPECT_EQ(r.lambda, l.lambda);
  EXPECT_EQ(r.c, l.c);
  EXPECT_EQ(r.cTilde, l.cTilde);
  EXPECT_EQ(r.B, l.B);
  EXPECT_EQ(r.D, l.D);
  EXPECT_EQ(r.flavor, l.flavor);
}

TEST(Certificate, KeyValueParsing) {
  auto kv = parse_key_values("# comment\n a = 1.5 \n\nflavor=II # trailing\n");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0].first, "a");
  EXPECT_EQ(kv[0].second, "1.5");
  EXPECT_EQ(kv[1].second, "II");
  EXPECT_THROW(parse_double("1.5x"), Error);
  EXPECT_THROW(parse_flavor("III"), Error);
}

TEST(Certificate, AuxiliaryDomainViolation) {
  ConstantsLedger l;
  l.flavor = Flavor::SingularII;
  l.B = 3.0;
  l.c = 0.5;
  try {
    auxiliary_constants(l);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DomainViolation);
  }
}

TEST(Certificate, FeasibilityScanSplitsTheGrid) {
  ScanGrid g;
  g.ratio = {0.3, 0.6, 0.9};
  g.c = {0.05, 0.5, 0.95};
  g.b = {0.1, 1.0};
  g.GammaTilde = {1.0, 1.2};
  g.cTilde = {0.5, 1.0};
  for (Flavor f : {Flavor::NonSingular, Flavor::SingularI, Flavor::SingularII}) {
    auto cells = feasibility_region_scan(f, g);
    int ok = 0;
    for (const auto& c : cells) {
      ok += c.feasible;
      if (!c.feasible) {
        EXPECT_FALSE(c.reason.empty());
      }
    }
    EXPECT_GT(ok, 0) << to_string(f);
    EXPECT_LT(ok, static_cast<int>(cells.size())) << to_string(f);
  }
}
