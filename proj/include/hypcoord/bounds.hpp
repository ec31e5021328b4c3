#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "certificate.hpp"
#include "cocycle.hpp"
#include "errors.hpp"
#include "hypframe.hpp"
#include "linalg.hpp"
#include "planar_maps.hpp"

namespace hypcoord {

// ---------------------------------------------------------------------------
// Reports

struct BoundRow {
  int i = 0;
  int k = 0;
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double log_lhs = 0.0;
  double log_rhs = 0.0;
  double margin = 0.0;  // log_rhs - log_lhs
  bool pass = true;
};

// pass <=> lhs <= rhs * (1 + tol)
struct BoundReport {
  std::string name;
  std::string id;
  double tol = 1e-9;
  std::vector<BoundRow> rows;

  bool verdict() const {
    return std::all_of(rows.begin(), rows.end(), [](const BoundRow& r) { return r.pass; });
  }

  std::optional<BoundRow> first_failure() const {
    for (const auto& r : rows)
      if (!r.pass) return r;
    return std::nullopt;
  }

  std::size_t violations() const {
    return std::count_if(rows.begin(), rows.end(), [](const BoundRow& r) { return !r.pass; });
  }

  void add_log(int i, int k, const std::string& what, double log_lhs, double log_rhs) {
    BoundRow r;
    r.i = i;
    r.k = k;
    r.name = what;
    r.log_lhs = log_lhs;
    r.log_rhs = log_rhs;
    r.lhs = std::exp(log_lhs);
    r.rhs = std::exp(log_rhs);
    if (log_lhs == -kInf)
      r.margin = kInf;
    else if (log_rhs == kInf)
      r.margin = kInf;
    else
      r.margin = log_rhs - log_lhs;
    r.pass = !std::isnan(r.margin) && (log_lhs == -kInf || r.margin >= -std::log1p(tol));
    rows.push_back(r);
  }

  void add(int i, int k, const std::string& what, double lhs, double rhs) {
    add_log(i, k, what, safe_log(lhs), safe_log(rhs));
    rows.back().lhs = lhs;
    rows.back().rhs = rhs;
    if (std::isnan(lhs) || std::isnan(rhs)) rows.back().pass = false;
  }

  void append(const BoundReport& other) {
    rows.insert(rows.end(), other.rows.begin(), other.rows.end());
  }
};

namespace detail {

inline double log_sum(const std::vector<double>& logs) {
  double m = -kInf;
  for (double v : logs) m = std::max(m, v);
  if (m == -kInf || m == kInf) return m;
  double s = 0.0;
  for (double v : logs) s += std::exp(v - m);
  return m + std::log(s);
}

struct OrbitLogs {
  int k = 0;
  std::vector<double> norm;       // log ||DPhi^j||, j = 0..k
  std::vector<double> conorm;     // log conorm DPhi^j
  std::vector<double> coecc;      // log C_{xi0,j}
  std::vector<double> det;        // log |det DPhi^j|
  std::vector<double> step_norm;  // log ||DPhi_{xi_j}||, j = 0..k-1
  std::vector<double> step_coecc;
};

inline OrbitLogs orbit_logs(const OrbitSegment& o) {
  OrbitLogs L;
  L.k = o.k;
  for (int j = 0; j <= o.k; ++j) {
    auto n = prefix_ncd(o, j);
    L.norm.push_back(n.log_norm);
    L.conorm.push_back(n.log_conorm);
    L.coecc.push_back(n.log_conorm - n.log_norm);
    L.det.push_back(n.log_abs_det);
  }
  for (int j = 0; j < o.k; ++j) {
    L.step_norm.push_back(safe_log(op_norm(o.step_jacobians[j])));
    L.step_coecc.push_back(safe_log(step_coecc(o, j)));
  }
  return L;
}

inline void require_order(const OrbitSegment& o, int i, int k) {
  if (k < 1 || k > o.k || i < 1 || i > k)
    throw Error(ErrorKind::IndexOutOfRange,
                "bound indices (" + std::to_string(i) + ", " + std::to_string(k) + ")");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// A-priori convergence

inline double log_ctilde(const OrbitSegment& o, int k) {
  if (k < 1 || k > o.k) throw Error(ErrorKind::IndexOutOfRange, "ctilde order");
  double best = -kInf;
  for (int i = 1; i <= k; ++i) {
    auto n = prefix_ncd(o, i);
    double C = std::exp(n.log_conorm - n.log_norm);
    if (C >= 1.0 - kEpsCC)
      throw Error(ErrorKind::DegenerateCoeccentricity,
                  "C_{xi0,i} >= 1 at i=" + std::to_string(i));
    best = std::max(best, 0.5 * (std::log(2.0) - std::log1p(-C * C)));
  }
  return best;
}

inline double ctilde(const OrbitSegment& o, int k) { return std::exp(log_ctilde(o, k)); }

inline double log_tail_T(const OrbitSegment& o, int i, int k) {
  detail::require_order(o, i, k);
  std::vector<double> terms;
  for (int j = i; j < k; ++j) {
    double cj1 = step_coecc(o, j);
    if (cj1 == 0.0)
      throw Error(ErrorKind::DegenerateStep, "C_{xi_j,1} = 0 at j=" + std::to_string(j));
    auto n = prefix_ncd(o, j);
    terms.push_back(n.log_conorm - n.log_norm - std::log(cj1));
  }
  return detail::log_sum(terms);
}

inline double tail_T(const OrbitSegment& o, int i, int k) { return std::exp(log_tail_T(o, i, k)); }

// Checks at one pair (i, k): the three a-priori displays, their sacrifice
// variants, and the alternative quotient bound.
inline BoundReport verify_apriori_convergence(const OrbitSegment& o, int i, int k,
                                              double tol = 1e-9) {
  detail::require_order(o, i, k);
  BoundReport rep;
  rep.name = "apriori_convergence";
  rep.tol = tol;
  auto L = detail::orbit_logs(o);
  if (L.det[k] == -kInf)
    throw Error(ErrorKind::ZeroDeterminant, "det DPhi^k = 0 at k=" + std::to_string(k));
  const double lct = log_ctilde(o, k);
  const double lT = log_tail_T(o, i, k);

  std::vector<double> S, Sdet, Ssac;
  for (int j = i; j < k; ++j) {
    S.push_back(L.coecc[j] + L.norm[j] + L.step_norm[j] - L.norm[j + 1]);
    double ldet_ij = L.det[j] - L.det[i];
    Sdet.push_back(ldet_ij + L.step_norm[j] - L.norm[j] - L.norm[j + 1]);
    Ssac.push_back(ldet_ij - 2.0 * L.norm[j] - L.step_coecc[j]);
  }
  const double lS = detail::log_sum(S), lSdet = detail::log_sum(Sdet),
               lSsac = detail::log_sum(Ssac);

  const double gap = frame_distance(o, i, k);
  const double le = pushforward_frames(o, k, i).e.log_norm();
  const double lratio = le - L.det[i];

  rep.add_log(i, k, "frame_gap", safe_log(gap), lct + lS);
  rep.add_log(i, k, "pushed_contracted", le, log_add(L.conorm[i], lct + L.norm[i] + lS));
  rep.add_log(i, k, "pushed_contracted_over_det", lratio,
              log_add(-L.norm[i], lct + L.norm[i] + lSdet));
  rep.add_log(i, k, "frame_gap_tail", safe_log(gap), lT + lct);
  rep.add_log(i, k, "pushed_contracted_tail", le, log_add(L.conorm[i], L.norm[i] + lT + lct));
  rep.add_log(i, k, "pushed_contracted_over_det_tail", lratio,
              log_add(-L.norm[i], lct + L.norm[i] + lSsac));
  const double lblock = norm_conorm_det(cocycle_block(o, i, k)).log_norm;
  rep.add_log(i, k, "frame_gap_quotient", safe_log(gap),
              lct + L.coecc[i] + L.norm[i] + lblock - L.norm[k]);
  return rep;
}

// All pairs 1 <= i <= k <= kmax.
inline BoundReport verify_apriori_all(const OrbitSegment& o, int kmax = -1, double tol = 1e-9) {
  if (kmax < 0) kmax = o.k;
  BoundReport rep;
  rep.name = "apriori_convergence";
  rep.tol = tol;
  for (int k = 1; k <= kmax; ++k)
    for (int i = 1; i <= k; ++i) rep.append(verify_apriori_convergence(o, i, k, tol));
  return rep;
}

// Consecutive frames: sin^2 of the angle between e^(j) and e^(j+1), and the
// chord length against sqrt(2)|sin|.
inline BoundReport verify_sin_angle(const OrbitSegment& o, int kmax = -1, double tol = 1e-9) {
  if (kmax < 0) kmax = o.k;
  BoundReport rep;
  rep.name = "consecutive_frames";
  rep.tol = tol;
  auto L = detail::orbit_logs(o);
  for (int j = 1; j < kmax; ++j) {
    double th = reduce_half_turn(o.chain[j + 1].incr);
    double s = std::fabs(std::sin(th));
    double C1 = std::exp(L.coecc[j + 1]);
    double lrhs = 2.0 * (L.coecc[j] + L.norm[j] + L.step_norm[j] - L.norm[j + 1]) -
                  std::log1p(-C1 * C1);
    rep.add_log(j, j + 1, "sin_squared", 2.0 * safe_log(s), lrhs);
    rep.add(j, j + 1, "chord_vs_sin", 2.0 * std::fabs(std::sin(0.5 * th)), kSqrt2 * s);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Explicit convergence under a certificate

inline void require_certificate(const OrbitSegment& o, const ConstantsLedger& l) {
  auto cert = check_quasi_hyperbolic(o, l);
  if (!cert.verdict) {
    std::string why;
    if (!cert.structural.empty())
      why = cert.structural.front();
    else if (auto f = cert.first_failure())
      why = f->name + " fails at i=" + std::to_string(f->i);
    throw Error(ErrorKind::CertificateRequired, why);
  }
}

inline BoundReport verify_explicit_convergence(const OrbitSegment& o, const ConstantsLedger& in,
                                               const AuxiliaryConstants& aux, int k = -1,
                                               double tol = 1e-9) {
  if (k < 0) k = o.k;
  if (k < 1 || k > o.k) throw Error(ErrorKind::IndexOutOfRange, "explicit convergence order");
  require_certificate(o, in);
  const ConstantsLedger l = in.normalized();
  BoundReport rep;
  rep.name = "explicit_convergence";
  rep.tol = tol;
  auto L = detail::orbit_logs(o);
  const double lG = std::log(l.Gamma), lGt = std::log(l.GammaTilde), lla = std::log(l.lambda);
  const double lc = std::log(l.c), lct = std::log(l.cTilde);
  const bool typeI = uses_type_I(l.flavor) && l.flavor != Flavor::NonSingular;
  const bool typeII = uses_type_II(l.flavor);

  for (int i = 1; i <= k; ++i) {
    double lgap = safe_log(frame_distance(o, i, k));
    double le = pushforward_frames(o, k, i).e.log_norm();
    double lratio = le - L.det[i];
    if (typeI) {
      double lQ1 = std::log(aux.Q1), lQ2 = std::log(aux.Q2);
      rep.add_log(i, k, "gap_I", lgap, lQ1 + i * (lG + lGt + lc - lla));
      rep.add_log(i, k, "pushed_I", le, lQ1 + i * (2 * lG + lGt + lc - lla));
      rep.add_log(i, k, "pushed_over_det_I", lratio, lQ2 + i * (lG + lGt - 2 * lla));
    }
    if (typeII) {
      double lQ1 = std::log(aux.Qt1), lQ2 = std::log(aux.Qt2);
      rep.add_log(i, k, "gap_II", lgap, lQ1 + i * (lc - lct));
      rep.add_log(i, k, "pushed_II", le, lQ1 + i * (lG + lc - lct));
      rep.add_log(i, k, "pushed_over_det_II", lratio, lQ2 + i * (lG - 2 * lla - lct));
      if (l.flavor == Flavor::NonSingular)
        rep.add_log(i, k, "gap_nonsingular", lgap, lQ1 + i * lc);
    }
  }

  // Finite geometric sums against the closed-form tails used for them.
  std::vector<double> rates;
  if (typeI) {
    rates.push_back(lG + lGt + lc - lla);
    rates.push_back(3 * (lG + lGt - lla) + lc);
  }
  if (typeII) {
    rates.push_back(lc - lct);
    rates.push_back(2 * lG + lGt + lc - 2 * lla - 2 * lct);
  }
  for (double lr : rates) {
    double r = std::exp(lr);
    for (int i = 1; i <= k; ++i) {
      double s = 0.0;
      for (int j = i; j < k; ++j) s += std::pow(r, j);
      rep.add(i, k, "geometric_tail", s, r < 1.0 ? std::pow(r, i) / (1.0 - r) : kInf);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Second derivative norms

struct SecondDerivativeNorm {
  std::array<double, 2> partial_norms{};  // ||d_x DPhi||, ||d_y DPhi||
  double lower = 0.0;
  double upper = 0.0;
  double sampled = 0.0;  // angular grid over the unit-sphere pair
  double hopm = 0.0;     // alternating power iteration
  double grid_tol = 0.0;  // relative sampling deficit allowed by the grid
  bool inside = true;
  // Only set when a vector v is supplied: brackets of ||D2Phi(v, .)||.
  bool has_v = false;
  double v_lower = 0.0, v_upper = 0.0, v_exact = 0.0;
};

// Bilinear map R^n x R^n -> R^m stored as the slices B(., u_k).
struct Bilinear {
  std::vector<Eigen::MatrixXd> slices;

  int n() const { return static_cast<int>(slices.size()); }

  // Matrix of B(v, .): column k is B(v, u_k).
  Eigen::MatrixXd partial(const Eigen::VectorXd& v) const {
    Eigen::MatrixXd M(slices.front().rows(), n());
    for (int k = 0; k < n(); ++k) M.col(k) = slices[k] * v;
    return M;
  }

  Eigen::MatrixXd contract_second(const Eigen::VectorXd& w) const {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(slices.front().rows(), slices.front().cols());
    for (int k = 0; k < n(); ++k) M += w(k) * slices[k];
    return M;
  }
};

inline Bilinear bilinear_from(const SecondPartials& s) {
  Bilinear B;
  for (const Mat2* m : {&s.dx, &s.dy}) {
    Eigen::MatrixXd M(2, 2);
    M << m->a, m->b, m->c, m->d;
    B.slices.push_back(M);
  }
  return B;
}

inline double matrix_norm(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  return svd.singularValues()(0);
}

namespace detail {

inline Eigen::VectorXd top_right_singular(const Eigen::MatrixXd& A, const Eigen::VectorXd& fallback) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  if (svd.singularValues()(0) == 0.0) return fallback;
  return svd.matrixV().col(0);
}

}  // namespace detail

// Alternating maximization of ||B(v, w)|| started from every basis vector w = u_k.
// Each start begins at ||B(., u_k)|| and never decreases.
inline double bilinear_norm_hopm(const Bilinear& B, int iters = 200) {
  const int n = B.n();
  double best = 0.0;
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd w = Eigen::VectorXd::Unit(n, k);
    Eigen::VectorXd v = detail::top_right_singular(B.contract_second(w), Eigen::VectorXd::Unit(n, 0));
    double val = (B.contract_second(w) * v).norm();
    for (int it = 0; it < iters; ++it) {
      w = detail::top_right_singular(B.partial(v), w);
      v = detail::top_right_singular(B.contract_second(w), v);
      double nv = (B.contract_second(w) * v).norm();
      if (nv <= val * (1.0 + 1e-15)) {
        val = std::max(val, nv);
        break;
      }
      val = nv;
    }
    best = std::max(best, val);
  }
  return best;
}

// Monte Carlo over v with the exact inner norm ||B(v, .)||.
inline double bilinear_norm_sampled(const Bilinear& B, int samples, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  double best = 0.0;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd v(B.n());
    for (int t = 0; t < B.n(); ++t) v(t) = g(rng);
    if (v.norm() == 0.0) continue;
    best = std::max(best, matrix_norm(B.partial(v / v.norm())));
  }
  return best;
}

inline SecondDerivativeNorm second_derivative_norm(const MapSpec& spec, Vec2 p,
                                                   std::optional<Vec2> v = std::nullopt,
                                                   int grid = 720) {
  SecondPartials s = eval_second_derivative(spec, p);
  SecondDerivativeNorm r;
  r.partial_norms = {op_norm(s.dx), op_norm(s.dy)};
  r.lower = std::max(r.partial_norms[0], r.partial_norms[1]);
  r.upper = kSqrt2 * r.lower;

  std::vector<double> sn(grid), cs(grid);
  for (int j = 0; j < grid; ++j) {
    double t = kPi * j / grid;
    sn[j] = std::sin(t);
    cs[j] = std::cos(t);
  }
  double best = 0.0;
  for (int a = 0; a < grid; ++a) {
    Vec2 x{cs[a], sn[a]};
    Vec2 px = s.dx * x, py = s.dy * x;
    for (int b = 0; b < grid; ++b) {
      Vec2 val = cs[b] * px + sn[b] * py;
      best = std::max(best, dot(val, val));
    }
  }
  r.sampled = std::sqrt(best);
  // Each angle is at most pi/(2 grid) from the optimum; the value drops by at
  // most a factor cos of that per argument.
  double half = kPi / (2.0 * grid);
  r.grid_tol = 1.0 - std::cos(half) * std::cos(half);
  r.hopm = bilinear_norm_hopm(bilinear_from(s));

  const double slack = 1e-12 * std::max(1.0, r.upper);
  r.inside = r.sampled >= r.lower * (1.0 - r.grid_tol) - slack && r.sampled <= r.upper + slack &&
             r.hopm >= r.lower - slack && r.hopm <= r.upper + slack;
  if (v) {
    Vec2 a = s.dx * *v, b = s.dy * *v;
    r.has_v = true;
    r.v_lower = std::max(norm(a), norm(b));
    r.v_upper = kSqrt2 * r.v_lower;
    r.v_exact = op_norm(from_columns(a, b));
    r.inside = r.inside && r.v_exact >= r.v_lower - slack && r.v_exact <= r.v_upper + slack;
  }
  return r;
}

// Power iteration on A^T A, used to cross-check the SVD norm.
inline double matrix_norm_power(const Eigen::MatrixXd& A, int iters = 500) {
  Eigen::VectorXd x = Eigen::VectorXd::Ones(A.cols());
  Eigen::MatrixXd G = A.transpose() * A;
  double val = 0.0;
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd y = G * x;
    double ny = y.norm();
    if (ny == 0.0) return 0.0;
    x = y / ny;
    val = ny;
  }
  return std::sqrt(val);
}

// max_k ||a_k|| <= ||A|| <= sqrt(n) max_k ||a_k||.
inline BoundReport bilinear_column_bounds(const Eigen::MatrixXd& A, double tol = 1e-12) {
  if (A.cols() > 4) throw Error(ErrorKind::InvalidArgument, "dimension above 4");
  BoundReport rep;
  rep.name = "column_bounds";
  rep.tol = tol;
  double cmax = 0.0;
  for (int k = 0; k < A.cols(); ++k) cmax = std::max(cmax, A.col(k).norm());
  double nA = matrix_norm(A);
  rep.add(0, 0, "max_column <= norm", cmax, nA);
  rep.add(0, 0, "norm <= sqrt(n) max_column", nA, std::sqrt(double(A.cols())) * cmax);
  // Power iteration converges slowly for near-equal singular values; it can
  // only undershoot, so check it from below with a loose factor.
  double np = matrix_norm_power(A);
  rep.add(0, 0, "power_iteration <= norm", np, nA);
  rep.add(0, 0, "norm <= power_iteration", nA, np * (1.0 + 1e-6) + 1e-300);
  return rep;
}

// Bilinear version for a fixed v and for the whole map.
inline BoundReport bilinear_column_bounds(const Bilinear& B, const Eigen::VectorXd& v,
                                          std::mt19937_64& rng, double tol = 1e-12) {
  const int n = B.n();
  if (n > 4) throw Error(ErrorKind::InvalidArgument, "dimension above 4");
  BoundReport rep;
  rep.name = "bilinear_bounds";
  rep.tol = tol;
  Eigen::MatrixXd Bv = B.partial(v);
  double cmax = 0.0;
  for (int k = 0; k < n; ++k) cmax = std::max(cmax, Bv.col(k).norm());
  double nBv = matrix_norm(Bv);
  const double sq = std::sqrt(double(n));
  rep.add(0, 0, "max_k |B(v,u_k)| <= |B(v,.)|", cmax, nBv);
  rep.add(0, 0, "|B(v,.)| <= sqrt(n) max_k |B(v,u_k)|", nBv, sq * cmax);

  double smax = 0.0;
  for (int k = 0; k < n; ++k) smax = std::max(smax, matrix_norm(B.slices[k]));
  double nB = std::max(bilinear_norm_hopm(B), bilinear_norm_sampled(B, 64, rng));
  rep.add(0, 0, "max_k |B(.,u_k)| <= |B|", smax, nB);
  rep.add(0, 0, "|B| <= sqrt(n) max_k |B(.,u_k)|", nB, sq * smax);
  return rep;
}

// D2Phi_p(v, d_k) from a Hessian assembled by Richardson-extrapolated central
// differences of the Jacobian, against (d_k DPhi) v from the analytic second
// partials.
inline BoundReport d2_contraction_identity(const MapSpec& spec, Vec2 p, Vec2 v, double h = 1e-3,
                                           double tol = 1e-10) {
  SecondPartials s = eval_second_derivative(spec, p);
  if (spec.singular_set_distance) h *= std::min(1.0, spec.singular_set_distance(p));
  auto central = [&](int kk, double step) {
    Vec2 dp = kk == 0 ? Vec2{step, 0.0} : Vec2{0.0, step};
    return (1.0 / (2.0 * step)) * (eval_jacobian(spec, p + dp) - eval_jacobian(spec, p - dp));
  };
  // H[l][i][k] = d^2 Phi_l / dx^i dx^k
  double H[2][2][2];
  for (int kk = 0; kk < 2; ++kk) {
    Mat2 D = (1.0 / 3.0) * (4.0 * central(kk, 0.5 * h) - central(kk, h));
    H[0][0][kk] = D.a;
    H[0][1][kk] = D.b;
    H[1][0][kk] = D.c;
    H[1][1][kk] = D.d;
  }
  BoundReport rep;
  rep.name = "d2_contraction_identity";
  rep.tol = 0.0;
  const double vv[2] = {v.x, v.y};
  for (int kk = 0; kk < 2; ++kk) {
    Vec2 rhs = s[kk] * v;
    const double r[2] = {rhs.x, rhs.y};
    for (int l = 0; l < 2; ++l) {
      double lhs = 0.0;
      for (int i = 0; i < 2; ++i) lhs += H[l][i][kk] * vv[i];
      double scale = std::max(1.0, std::fabs(r[l]));
      rep.add(l, kk, "entry_difference", std::fabs(lhs - r[l]), tol * scale);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Slow variation

enum class DerivativeMode {
  ChainRule,  // d/d(xi_0) of DPhi(xi_i), through DPhi^i
  Local,      // partials of DPhi taken at xi_i itself
};

struct SlowVariationTerms {
  int k = 0;
  int axis = 0;  // 0 = x, 1 = y
  double log_A = 0.0, log_B = 0.0;
  std::vector<double> log_E;  // i = 0..k-1
  std::vector<double> log_F;
  double log_rhs_apriori = 0.0;

  double A() const { return std::exp(log_A); }
  double B() const { return std::exp(log_B); }
  double E(int i) const { return std::exp(log_E.at(i)); }
  double F(int i) const { return std::exp(log_F.at(i)); }
  double log_E_tail() const {
    return detail::log_sum(std::vector<double>(log_E.begin() + 1, log_E.end()));
  }
  double log_F_sum() const { return detail::log_sum(log_F); }
  double rhs_apriori() const { return std::exp(log_rhs_apriori); }
};

inline SlowVariationTerms slow_variation_terms(const OrbitSegment& o, int k, int axis,
                                               DerivativeMode mode = DerivativeMode::ChainRule) {
  if (k < 1 || k > o.k) throw Error(ErrorKind::IndexOutOfRange, "slow variation order");
  if (axis != 0 && axis != 1) throw Error(ErrorKind::InvalidArgument, "axis must be x or y");
  HyperbolicFrame hk = hyperbolic_coordinates(o, k);
  SlowVariationTerms t;
  t.k = k;
  t.axis = axis;
  double C = hk.coecc;
  double l1mc2 = std::log1p(-C * C);
  t.log_A = 0.5 * std::log(2.0) - l1mc2;
  t.log_B = 0.5 * std::log(2.0) + 2.0 * std::log(C) - l1mc2;

  std::vector<PushedFrame> pf;
  for (int i = 0; i <= k; ++i) pf.push_back(pushforward_frames(o, k, i));
  for (int i = 0; i < k; ++i) {
    double ldet = o.prefix_products[i + 1].log_abs_det;
    if (ldet == -kInf)
      throw Error(ErrorKind::ZeroDeterminant, "det DPhi^" + std::to_string(i + 1) + " = 0");
    const SecondPartials& sp = o.step_second_partials[i];
    Mat2 X;
    double lX = 0.0;
    if (mode == DerivativeMode::ChainRule) {
      const ScaledMatrix& P = o.prefix_products[i];
      double w0 = axis == 0 ? P.body.a : P.body.b;  // (DPhi^i)_{x, axis}
      double w1 = axis == 0 ? P.body.c : P.body.d;  // (DPhi^i)_{y, axis}
      X = w0 * sp.dx + w1 * sp.dy;
      lX = P.log_scale;
    } else {
      X = sp[axis];
    }
    auto term = [&](const ScaledVec& a, const ScaledVec& b) {
      double n = norm(X * a.body);
      if (n == 0.0) return -kInf;
      return std::log(n) + lX + a.log_scale + b.log_norm() - ldet;
    };
    t.log_E.push_back(term(pf[i].e, pf[i + 1].e));
    t.log_F.push_back(term(pf[i].f, pf[i + 1].f));
  }
  t.log_rhs_apriori = detail::log_sum(
      {t.log_A + t.log_E[0], t.log_A + t.log_E_tail(), t.log_B + t.log_F_sum()});
  return t;
}

struct FrameDerivativeEstimate {
  int k = 0;
  Vec2 base;
  double h = 0.0;
  Vec2 e, f;    // center frame
  Mat2 Df;      // columns d_x f, d_y f
  double norm = 0.0;
  std::array<double, 2> e_dot{};  // <e, d_s f>
  std::array<double, 2> f_dot{};  // <f, d_s f>
};

inline FrameDerivativeEstimate frame_derivative_fd(const MapSpec& spec, Vec2 xi0, int k, double h,
                                                   double guard = -1.0) {
  if (!(h > 0.0)) throw Error(ErrorKind::InvalidArgument, "FD step must be positive");
  if (!spec.eval || !spec.jacobian)
    throw Error(ErrorKind::InvalidArgument, "frame derivatives need a map, not a bare cocycle");
  auto frame_at = [&](Vec2 p) {
    HyperbolicFrame fr;
    try {
      fr = hyperbolic_coordinates(compute_orbit(spec, p, k, guard), k);
    } catch (const Error& err) {
      throw Error(ErrorKind::StencilDegenerate, err.what());
    }
    if (fr.low_confidence)
      throw Error(ErrorKind::StencilDegenerate, "co-eccentricity above the confidence band");
    return fr;
  };
  HyperbolicFrame c = frame_at(xi0);
  FrameDerivativeEstimate r;
  r.k = k;
  r.base = xi0;
  r.h = h;
  r.e = c.e;
  r.f = c.f;
  Vec2 cols[2];
  for (int s = 0; s < 2; ++s) {
    Vec2 d = s == 0 ? Vec2{h, 0.0} : Vec2{0.0, h};
    HyperbolicFrame fp = frame_at(xi0 + d), fm = frame_at(xi0 - d);
    for (HyperbolicFrame* fr : {&fp, &fm}) {
      double dt = dot(fr->e, c.e);
      if (std::fabs(dt) < 0.1)
        throw Error(ErrorKind::FrameFlipUnresolvable, "stencil frame nearly orthogonal to center");
      *fr = aligned(*fr, c);
    }
    cols[s] = (1.0 / (2.0 * h)) * (fp.f - fm.f);
    r.e_dot[s] = dot(c.e, cols[s]);
    r.f_dot[s] = dot(c.f, cols[s]);
  }
  r.Df = from_columns(cols[0], cols[1]);
  r.norm = op_norm(r.Df);
  return r;
}

struct SlowVariationOptions {
  double h = 1e-5;
  double tol = 1e-9;
  DerivativeMode mode = DerivativeMode::ChainRule;
  double guard = -1.0;
};

struct SlowVariationResult {
  BoundReport report;
  FrameDerivativeEstimate fd;
  FrameDerivativeEstimate fd_half;
  double fd_tol = 0.0;
  double d2_e1 = 0.0;  // ||D2Phi(e^(1), .)||
  std::array<SlowVariationTerms, 2> terms;
};

inline SlowVariationResult verify_slow_variation(const OrbitSegment& o, const ConstantsLedger& in,
                                                 const AuxiliaryConstants& aux,
                                                 SlowVariationOptions opt = {}) {
  require_certificate(o, in);
  const ConstantsLedger l = in.normalized();
  const int k = o.k;
  SlowVariationResult res;
  BoundReport& rep = res.report;
  rep.name = "slow_variation";
  rep.tol = opt.tol;

  res.fd = frame_derivative_fd(o.spec, o.points[0], k, opt.h, opt.guard);
  res.fd_half = frame_derivative_fd(o.spec, o.points[0], k, 0.5 * opt.h, opt.guard);
  double delta = std::fabs(res.fd.norm - res.fd_half.norm);
  res.fd_tol = std::max(1e-6, 2.0 * delta);
  rep.add(0, k, "richardson_change", delta, 0.05 * res.fd_half.norm);
  for (int s = 0; s < 2; ++s)
    rep.add(s, k, "f_component_of_df", std::fabs(res.fd.f_dot[s]), 1e-6);

  HyperbolicFrame h1 = hyperbolic_coordinates(o, 1);
  const SecondPartials& sp0 = o.step_second_partials[0];
  Vec2 a = sp0.dx * h1.e, b = sp0.dy * h1.e;
  res.d2_e1 = op_norm(from_columns(a, b));
  double d2_upper = kSqrt2 * std::max(norm(a), norm(b));

  rep.add(0, k, "frame_derivative_bound", res.fd.norm,
          aux.K1 * res.d2_e1 + aux.K2 * l.c + res.fd_tol);
  rep.add(0, k, "d2_e1_bracket", res.d2_e1, d2_upper);
  rep.add(0, k, "df_vs_inner_products", res.fd.norm,
          kSqrt2 * std::max(std::fabs(res.fd.e_dot[0]), std::fabs(res.fd.e_dot[1])) + res.fd_tol);

  const double lK1 = std::log(aux.K1);
  const double lC2 = 2.0 * std::log(hyperbolic_coordinates(o, k).coecc);
  const double lc = std::log(l.c), lct = std::log(l.cTilde);
  const bool typeI = uses_type_I(l.flavor) && l.flavor != Flavor::NonSingular;
  const bool typeII = uses_type_II(l.flavor);
  for (int s = 0; s < 2; ++s) {
    res.terms[s] = slow_variation_terms(o, k, s, opt.mode);
    const SlowVariationTerms& t = res.terms[s];
    double lhs = kSqrt2 * std::fabs(res.fd.e_dot[s]);
    rep.add(s, k, "apriori_slow_variation", lhs, t.rhs_apriori() + res.fd_tol);
    double laposteriori =
        lK1 + detail::log_sum({t.log_E[0], t.log_E_tail(), lC2 + t.log_F_sum()});
    rep.add(s, k, "aposteriori", lhs, std::exp(laposteriori) + res.fd_tol);
    rep.add_log(s, k, "A_k <= K1", t.log_A, lK1);
    rep.add_log(s, k, "B_k <= C^2 K1", t.log_B, lC2 + lK1);
    if (typeI) {
      rep.add(s, k, "E0_bound_I", t.E(0), res.d2_e1 + aux.Q3 * l.c);
      rep.add_log(s, k, "E_tail_bound_I", t.log_E_tail(), std::log(aux.Q4) + lc);
    }
    if (typeII) {
      rep.add(s, k, "E0_bound_II", t.E(0), res.d2_e1 + aux.Qt3 * std::exp(lc - lct));
      rep.add_log(s, k, "E_tail_bound_II", t.log_E_tail(), std::log(aux.Qt4) + lc - lct);
    }
    rep.add_log(s, k, "F_sum_bound", lC2 + t.log_F_sum(), std::log(aux.Q) + lc);
  }
  return res;
}

}  // namespace hypcoord
