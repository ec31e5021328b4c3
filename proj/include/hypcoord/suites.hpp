#pragma once

// Seeded sweeps shared by the command line and the test binaries. Every sweep
// returns BoundReports whose row order depends only on its inputs.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bounds.hpp"
#include "certificate.hpp"
#include "cocycle.hpp"
#include "foliation.hpp"
#include "hypframe.hpp"
#include "planar_maps.hpp"

namespace hypcoord {

// Fixture points of the Henon map with the repository defaults a = 1.4, b = 0.3:
// the origin and the saddle fixed point.
inline std::vector<Vec2> henon_fixture_points() {
  const double a = 1.4, b = 0.3;
  double x = (-(1.0 - b) - std::sqrt((1.0 - b) * (1.0 - b) + 4.0 * a)) / (2.0 * a);
  return {{0.0, 0.0}, {x, b * x}};
}

namespace detail {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Mat2 random_matrix(std::mt19937_64& rng, double max_coecc) {
  for (;;) {
    Mat2 m{uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, -2, 2)};
    if (m.det() == 0.0) continue;
    if (coecc_value(ScaledMatrix::from(m)) < max_coecc) return m;
  }
}

inline double rel_diff(double a, double b) {
  return std::fabs(a - b) / std::max(std::fabs(a), std::fabs(b));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Frames against the closed form, the critical-angle formula and the grid.

struct OracleOptions {
  std::uint64_t seed = 7;
  int trials = 1000;
  long grid_n = 1000000;
  double max_coecc = 0.9;
};

inline BoundReport frame_oracle_sweep(const OracleOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  DirectionGrid grid(opt.grid_n);
  const double dtheta = kPi / static_cast<double>(opt.grid_n);
  BoundReport rep;
  rep.name = "frame_oracle";
  rep.tol = 0.0;
  for (int t = 0; t < opt.trials; ++t) {
    Mat2 M = detail::random_matrix(rng, opt.max_coecc);
    ScaledMatrix m = ScaledMatrix::from(M);
    Svd2 s = svd2(m);
    CriticalAngles ca = angle_theta(M);
    OracleResult g = grid.extremal(m);
    Eigen::Matrix2d E;
    E << M.a, M.b, M.c, M.d;
    Eigen::JacobiSVD<Eigen::Matrix2d> ev(E);

    double te = direction_angle(s.e), tf = direction_angle(s.f);
    rep.add(t, 0, "contracting direction: svd2 vs angle formula", angle_gap(te, ca.theta_contract),
            dtheta);
    rep.add(t, 0, "contracting direction: svd2 vs grid", angle_gap(te, g.theta_min), dtheta);
    rep.add(t, 0, "expanding direction: svd2 vs angle formula", angle_gap(tf, ca.theta_expand),
            dtheta);
    rep.add(t, 0, "expanding direction: svd2 vs grid", angle_gap(tf, g.theta_max), dtheta);

    double smax = std::exp(s.sigma_max), smin = std::exp(s.sigma_min);
    rep.add(t, 0, "norm: svd2 vs grid", detail::rel_diff(smax, std::exp(g.norm_max)), 1e-8);
    rep.add(t, 0, "conorm: svd2 vs grid", detail::rel_diff(smin, std::exp(g.norm_min)), 1e-8);
    rep.add(t, 0, "norm: svd2 vs Eigen", detail::rel_diff(smax, ev.singularValues()(0)), 1e-8);
    rep.add(t, 0, "conorm: svd2 vs Eigen", detail::rel_diff(smin, ev.singularValues()(1)), 1e-8);
    Vec2 ua{std::sin(ca.theta_expand), std::cos(ca.theta_expand)};
    rep.add(t, 0, "norm: angle formula vs svd2", detail::rel_diff(norm(M * ua), smax), 1e-8);

    Vec2 Me = M * s.e, Mf = M * s.f;
    rep.add(t, 0, "orthogonality |<e,f>|", std::fabs(dot(s.e, s.f)), 1e-9);
    rep.add(t, 0, "diagonal form |<Me,Mf>|/|M|^2", std::fabs(dot(Me, Mf)) / (smax * smax), 1e-9);
    rep.add(t, 0, "diagonal form ||Me|-conorm|/|M|", std::fabs(norm(Me) - smin) / smax, 1e-9);
    rep.add(t, 0, "diagonal form ||Mf|-norm|/|M|", std::fabs(norm(Mf) - smax) / smax, 1e-9);
  }
  return rep;
}

// The three co-eccentricity expressions on the same matrices as the frame
// sweep, plus a pair exhibiting non-multiplicativity.
inline BoundReport coeccentricity_sweep(const OracleOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  BoundReport rep;
  rep.name = "coeccentricity";
  rep.tol = 0.0;
  for (int t = 0; t < opt.trials; ++t) {
    ScaledMatrix m = ScaledMatrix::from(detail::random_matrix(rng, opt.max_coecc));
    Coeccentricity c = coeccentricity(m);
    rep.add(t, 0, "|det|/|M|^2 vs conorm/|M|",
            detail::rel_diff(c.det_over_norm2, c.conorm_over_norm), 1e-10);
    rep.add(t, 0, "conorm^2/|det| vs conorm/|M|",
            detail::rel_diff(c.conorm2_over_det, c.conorm_over_norm), 1e-10);
  }
  Mat2 A{2.0, 0.0, 0.0, 0.5};
  Mat2 B = Mat2{0.0, -1.0, 1.0, 0.0} * A;
  double cab = coecc_value(ScaledMatrix::from(A * B));
  double ca = coecc_value(ScaledMatrix::from(A)), cb = coecc_value(ScaledMatrix::from(B));
  rep.add(0, 0, "non-multiplicativity witness", 0.1, std::fabs(cab - ca * cb));
  return rep;
}

// ---------------------------------------------------------------------------
// A-priori estimates on random cocycles and on the Henon fixture.

struct CocycleOptions {
  std::uint64_t seed = 7;
  int trials = 1000;
  int max_length = 15;
  double max_step_coecc = 0.9;
};

inline BoundReport random_cocycle_sweep(const CocycleOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<int> len(1, opt.max_length);
  BoundReport rep;
  rep.name = "apriori_random_cocycles";
  for (int t = 0; t < opt.trials; ++t) {
    std::vector<Mat2> steps(len(rng));
    for (auto& s : steps) s = detail::random_matrix(rng, opt.max_step_coecc);
    OrbitSegment o = orbit_from_matrices(steps);
    BoundReport a = verify_apriori_all(o);
    BoundReport b = verify_sin_angle(o);
    for (auto* r : {&a, &b})
      for (auto row : r->rows) {
        row.name = "trial " + std::to_string(t) + ": " + row.name;
        rep.rows.push_back(row);
      }
  }
  rep.tol = 1e-9;
  return rep;
}

inline BoundReport henon_apriori(int kmax = 20) {
  MapSpec spec = henon_map();
  BoundReport rep;
  rep.name = "apriori_henon";
  for (Vec2 p : henon_fixture_points()) {
    OrbitSegment o = compute_orbit(spec, p, kmax);
    rep.append(verify_apriori_all(o, kmax));
    rep.append(verify_sin_angle(o, kmax));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Certificate and explicit convergence for k = 1..kmax with one fitted ledger.

struct ConvergenceRun {
  ConstantsLedger ledger;
  AuxiliaryConstants aux;
  CertificateReport certificate;
  BoundReport report;
};

inline ConvergenceRun certified_convergence(const MapSpec& spec, Vec2 start, int kmax,
                                            Flavor flavor, double eta = 1.05) {
  ConvergenceRun run;
  OrbitSegment o = compute_orbit(spec, start, kmax);
  FitOptions fo;
  fo.eta = eta;
  run.ledger = fit_constants(o, flavor, fo);
  run.certificate = check_quasi_hyperbolic(o, run.ledger);
  run.aux = auxiliary_constants(run.ledger);
  run.report.name = "explicit_convergence";
  for (int k = 1; k <= kmax; ++k)
    run.report.append(verify_explicit_convergence(compute_orbit(spec, start, k), run.ledger,
                                                  run.aux));
  return run;
}

// ---------------------------------------------------------------------------
// Auxiliary constants over random valid ledgers.

struct AuxOptions {
  std::uint64_t seed = 7;
  int trials = 100;
};

inline ConstantsLedger random_valid_ledger(std::mt19937_64& rng, Flavor flavor) {
  using detail::uniform;
  for (;;) {
    ConstantsLedger l;
    l.flavor = flavor;
    l.Gamma = uniform(rng, 1.05, 3.0);
    l.GammaTilde = flavor == Flavor::NonSingular ? 1.0 : uniform(rng, 1.0, 1.3);
    l.lambda = l.Gamma * uniform(rng, 0.3, 0.99);
    l.cTilde = flavor == Flavor::NonSingular ? 1.0 : uniform(rng, 0.3, 1.0);
    l.b = uniform(rng, 0.01, 1.0) * l.lambda * l.lambda * std::min(l.cTilde, 1.0 / l.GammaTilde);
    l.c = uniform(rng, 0.001, 1.0);
    l.B = uniform(rng, 1.0, 3.0);
    l.BTilde = uniform(rng, 0.1, 1.0);
    l.C = uniform(rng, 0.1, 1.0);
    l.D = uniform(rng, 1.0, 3.0);
    if (!structural_violations(l).empty() || l.B * l.c >= 1.0) continue;
    try {
      auxiliary_constants(l);
    } catch (const Error&) {
      continue;
    }
    return l;
  }
}

inline BoundReport aux_constants_sweep(const AuxOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  BoundReport rep;
  rep.name = "auxiliary_constants";
  rep.tol = 1e-12;
  const Flavor flavors[] = {Flavor::SingularI, Flavor::SingularII, Flavor::SingularBoth};
  for (int t = 0; t < opt.trials; ++t) {
    ConstantsLedger l = random_valid_ledger(rng, flavors[t % 3]);
    ConstantsLedger h = l;
    h.c *= 0.5;
    AuxiliaryConstants a = auxiliary_constants(l), b = auxiliary_constants(h);
    auto both = [&](const char* name, double va, double vb, bool valid) {
      if (!valid) return;
      rep.add(t, 0, std::string(name) + " > 0", 0.0, va);
      if (!(va > 0.0)) rep.rows.back().pass = false;
      rep.add(t, 0, std::string(name) + "(c/2) <= " + name + "(c)", vb, va);
    };
    both("Q0", a.Q0, b.Q0, true);
    both("K1", a.K1, b.K1, true);
    both("Q1", a.Q1, b.Q1, a.valid_I);
    both("Q2", a.Q2, b.Q2, a.valid_I);
    both("Q3", a.Q3, b.Q3, a.valid_I);
    both("Q4", a.Q4, b.Q4, a.valid_I);
    both("QTilde1", a.Qt1, b.Qt1, a.valid_II);
    both("QTilde2", a.Qt2, b.Qt2, a.valid_II);
    both("QTilde3", a.Qt3, b.Qt3, a.valid_II);
    both("QTilde4", a.Qt4, b.Qt4, a.valid_II);
    both("K2", a.K2, b.K2, true);
    if (t == 0) {
      ConstantsLedger z = l;
      z.c = 1e-6;
      AuxiliaryConstants lim = auxiliary_constants(z);
      rep.add(0, 0, "|Q0 - sqrt2| at c = 1e-6", std::fabs(lim.Q0 - kSqrt2), 1e-6);
      rep.add(0, 0, "|K1 - sqrt2| at c = 1e-6", std::fabs(lim.K1 - kSqrt2), 1e-6);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Column/bilinear norm brackets and the contraction identity.

struct NormOptions {
  std::uint64_t seed = 7;
  int trials = 1000;
  int identity_trials = 500;
};

inline BoundReport norm_lemma_sweep(const NormOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> g;
  BoundReport rep;
  rep.name = "norm_lemmas";
  rep.tol = 1e-12;
  for (int t = 0; t < opt.trials; ++t) {
    const int n = 2 + t % 3;
    Eigen::MatrixXd A(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) A(r, c) = g(rng);
    Bilinear B;
    for (int s = 0; s < n; ++s) {
      Eigen::MatrixXd S(n, n);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) S(r, c) = g(rng);
      B.slices.push_back(S);
    }
    Eigen::VectorXd v(n);
    for (int r = 0; r < n; ++r) v(r) = g(rng);
    v.normalize();
    for (auto part : {bilinear_column_bounds(A, rep.tol), bilinear_column_bounds(B, v, rng, rep.tol)})
      for (auto row : part.rows) {
        row.i = t;
        row.k = n;
        rep.rows.push_back(row);
      }
  }

  // Planar maps: analytic second derivative brackets and the identity.
  std::vector<MapSpec> maps = {henon_map(), standard_map(1.3), lorenz2d_map()};
  for (int t = 0; t < opt.identity_trials; ++t) {
    const MapSpec& spec = maps[t % maps.size()];
    Vec2 p{detail::uniform(rng, -1, 1), detail::uniform(rng, -1, 1)};
    if (spec.name == "lorenz2d" && std::fabs(p.x) < 0.1) p.x += p.x < 0 ? -0.1 : 0.1;
    double ang = detail::uniform(rng, 0, 2 * kPi);
    Vec2 v{std::cos(ang), std::sin(ang)};
    for (auto row : d2_contraction_identity(spec, p, v).rows) {
      row.name = spec.name + " " + row.name;
      row.i = t;
      rep.rows.push_back(row);
    }
    SecondDerivativeNorm sn = second_derivative_norm(spec, p, v, 180);
    rep.add(t, 0, spec.name + " second derivative brackets", sn.inside ? 0.0 : 1.0, 0.0);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Slow variation on prefixes of a certified orbit.

struct VariationRun {
  ConstantsLedger ledger;
  AuxiliaryConstants aux;
  std::vector<SlowVariationResult> results;
  BoundReport report;
};

inline VariationRun slow_variation_prefixes(const MapSpec& spec, Vec2 start, int kmax, int fit_k,
                                            Flavor flavor, double eta, double h) {
  VariationRun run;
  FitOptions fo;
  fo.eta = eta;
  run.ledger = fit_constants(compute_orbit(spec, start, std::max(kmax, fit_k)), flavor, fo);
  run.aux = auxiliary_constants(run.ledger);
  run.report.name = "slow_variation";
  SlowVariationOptions so;
  so.h = h;
  for (int k = 1; k <= kmax; ++k) {
    run.results.push_back(
        verify_slow_variation(compute_orbit(spec, start, k), run.ledger, run.aux, so));
    run.report.append(run.results.back().report);
  }
  return run;
}

// ---------------------------------------------------------------------------
// Foliation checks.

struct FoliationChecks {
  FoliationGrid grid;
  BoundReport report;
  double witness_deviation = 0.0;  // largest image non-orthogonality at i < k, not a verdict
  Vec2 witness_seed;
  int witness_i = 0;
  double order_ratio = 0.0;
};

inline FoliationChecks foliation_checks(const MapSpec& spec, const Rect& rect, int k,
                                        double spacing, double half_length, double step,
                                        std::vector<FieldTag> fields) {
  FoliationChecks out;
  out.grid = foliation_grid(spec, rect, k, spacing, fields, half_length, step);
  BoundReport& rep = out.report;
  rep.name = "foliation";
  rep.tol = 0.0;
  const auto& curves = out.grid.curves;
  for (std::size_t a = 0; a < curves.size(); ++a)
    for (std::size_t b = a + 1; b < curves.size(); ++b) {
      const auto& ca = curves[a];
      const auto& cb = curves[b];
      if (ca.field == cb.field || ca.points[ca.seed_index].x != cb.points[cb.seed_index].x ||
          ca.points[ca.seed_index].y != cb.points[cb.seed_index].y)
        continue;
      Vec2 ta = ca.tangents[ca.seed_index], tb = cb.tangents[cb.seed_index];
      rep.add(static_cast<int>(a), k, "seed orthogonality |<e,f>|",
              std::fabs(dot(ta, tb)) / (norm(ta) * norm(tb)), 1e-9);
    }
  bool both = fields.size() == 2;
  for (std::size_t s = 0; s < out.grid.seeds.size() && both; ++s) {
    Vec2 seed = out.grid.seeds[s];
    SeedOrthogonality so;
    try {
      so = image_orthogonality(spec, seed, k, k);
    } catch (const Error&) {
      continue;
    }
    rep.add(static_cast<int>(s), k, "image orthogonality at i = k (rad)", so.deviation, 1e-3);
    for (int i = 0; i < k; ++i) {
      SeedOrthogonality w = image_orthogonality(spec, seed, k, i);
      if (w.deviation > out.witness_deviation) {
        out.witness_deviation = w.deviation;
        out.witness_seed = seed;
        out.witness_i = i;
      }
    }
  }
  for (const auto& c : curves) {
    if (c.points.size() < 3) continue;
    Vec2 p = c.points[c.seed_index];
    try {
      out.order_ratio = integrator_order_ratio(spec, p, k, c.field, 0.4, 0.1);
    } catch (const Error&) {
      continue;
    }
    rep.add(0, k, "integrator order ratio >= 8", 8.0, out.order_ratio);
    break;
  }
  return out;
}

}  // namespace hypcoord
