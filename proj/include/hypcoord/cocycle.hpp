#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "planar_maps.hpp"

namespace hypcoord {

// exp(log_scale) * body, with max|body| in [1/2, 2]. The determinant is
// carried alongside as log|det| and its sign: it is multiplied step by step
// rather than recomputed from a nearly rank-one body.
struct ScaledMatrix {
  Mat2 body;
  double log_scale = 0.0;
  double log_abs_det = 0.0;
  int det_sign = 1;

  static ScaledMatrix identity() { return {Mat2::identity(), 0.0, 0.0, 1}; }

  static ScaledMatrix from(const Mat2& m) {
    ScaledMatrix s;
    double d = m.det();
    s.body = m;
    s.log_abs_det = d == 0.0 ? -kInf : std::log(std::fabs(d));
    s.det_sign = (d > 0) - (d < 0);
    s.normalize();
    return s;
  }

  bool is_zero() const { return body.max_abs() == 0.0; }

  Mat2 value() const { return std::exp(log_scale) * body; }

  void normalize() {
    double m = body.max_abs();
    if (m == 0.0) {
      body = Mat2{};
      log_scale = 0.0;
      log_abs_det = -kInf;
      det_sign = 0;
      return;
    }
    int n = static_cast<int>(std::lround(std::log2(m)));
    body = Mat2{std::ldexp(body.a, -n), std::ldexp(body.b, -n), std::ldexp(body.c, -n),
                std::ldexp(body.d, -n)};
    log_scale += n * std::log(2.0);
  }
};

inline ScaledMatrix product(const ScaledMatrix& A, const ScaledMatrix& B) {
  ScaledMatrix r;
  r.body = A.body * B.body;
  r.log_scale = A.log_scale + B.log_scale;
  r.log_abs_det = A.log_abs_det + B.log_abs_det;
  r.det_sign = A.det_sign * B.det_sign;
  r.normalize();
  return r;
}

struct NormConormDet {
  double log_norm;
  double log_conorm;  // -inf for singular matrices
  double log_abs_det;
  int det_sign;
};

inline NormConormDet norm_conorm_det(const ScaledMatrix& m) {
  if (m.is_zero()) throw Error(ErrorKind::ZeroMatrix, "norm_conorm_det of the zero matrix");
  double ln = std::log(op_norm(m.body)) + m.log_scale;
  return {ln, m.log_abs_det - ln, m.log_abs_det, m.det_sign};
}

// Singular value decomposition of the prefix products, propagated one step at
// a time. Step i describes DPhi^i = U_i diag(s1, s2) V_i^T with
// f^(i) = (cos alpha, sin alpha) the most expanded direction, e^(i) = perp(f^(i)),
// DPhi^i f^(i) = s1 u1 and DPhi^i e^(i) = s2 * det_sign * perp(u1).
// Because each new step only rotates the previous frame by `incr`, angles
// between frames of different orders are available to full relative precision
// even when they are far below machine epsilon.
struct ChainStep {
  double alpha = 0.0;       // accumulated angle of f^(i)
  double incr = 0.0;        // alpha_i - alpha_{i-1}
  double log_smax = 0.0;    // log ||DPhi^i||
  double log_smin = 0.0;    // log conorm, from Gram determinants
  Vec2 u1{1.0, 0.0};
};

inline std::vector<ChainStep> build_chain(const std::vector<Mat2>& steps,
                                          const std::vector<ScaledMatrix>& prefix) {
  std::vector<ChainStep> chain(steps.size() + 1);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const ChainStep& cur = chain[i];
    const Mat2& A = steps[i];
    double ratio = std::exp(cur.log_smin - cur.log_smax);
    Vec2 u2 = static_cast<double>(prefix[i].det_sign >= 0 ? 1 : -1) * perp(cur.u1);
    Vec2 c1 = A * cur.u1;
    Vec2 c2 = ratio * (A * u2);
    double g11 = dot(c1, c1), g22 = dot(c2, c2), g12 = dot(c1, c2);
    double phi = 0.5 * std::atan2(2.0 * g12, g11 - g22);
    double lmax = 0.5 * (g11 + g22) + std::hypot(0.5 * (g11 - g22), g12);
    double s1 = std::sqrt(lmax);
    // s2 = ratio |A u1 x A u2| / s1, kept in log form: ratio underflows on long orbits.
    double area = std::fabs(cross(c1, A * u2));
    Vec2 img = std::cos(phi) * c1 + std::sin(phi) * c2;
    ChainStep& nxt = chain[i + 1];
    nxt.incr = phi;
    nxt.alpha = cur.alpha + phi;
    nxt.log_smax = cur.log_smax + std::log(s1);
    nxt.log_smin = area > 0.0 && s1 > 0.0 ? cur.log_smin + std::log(area) - std::log(s1) : -kInf;
    nxt.u1 = norm(img) > 0.0 ? normalized(img) : cur.u1;
  }
  return chain;
}

struct OrbitSegment {
  MapSpec spec;
  std::vector<Vec2> points;                  // xi_0 .. xi_k
  std::vector<Mat2> step_jacobians;          // DPhi at xi_0 .. xi_{k-1}
  std::vector<SecondPartials> step_second_partials;
  std::vector<ScaledMatrix> prefix_products;  // DPhi^0 (identity) .. DPhi^k
  std::vector<double> step_dets;
  std::vector<ChainStep> chain;               // index 0 .. k
  int k = 0;

  const ScaledMatrix& prefix(int i) const { return prefix_products.at(i); }
};

namespace detail {

inline void finish_orbit(OrbitSegment& o) {
  o.k = static_cast<int>(o.step_jacobians.size());
  o.prefix_products.assign(1, ScaledMatrix::identity());
  o.step_dets.clear();
  for (const Mat2& J : o.step_jacobians) {
    o.step_dets.push_back(J.det());
    o.prefix_products.push_back(product(ScaledMatrix::from(J), o.prefix_products.back()));
  }
  o.chain = build_chain(o.step_jacobians, o.prefix_products);
}

}  // namespace detail

// guard < 0 selects the map's default guard.
inline OrbitSegment compute_orbit(const MapSpec& spec, Vec2 xi0, int k, double guard = -1.0) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "orbit order must be >= 1");
  if (guard < 0.0) guard = spec.default_guard;
  if (!spec.domain_check(xi0)) throw Error(ErrorKind::OutsideDomain, "initial point", 0);
  OrbitSegment o;
  o.spec = spec;
  Vec2 p = xi0;
  for (int i = 0; i <= k; ++i) {
    if (!spec.domain_check(p))
      throw Error(ErrorKind::OrbitEscaped, "orbit leaves the domain at i=" + std::to_string(i), i);
    double dist = spec.singular_set_distance(p);
    if (dist <= 0.0 || dist < guard)
      throw Error(ErrorKind::SingularEncounter,
                  "orbit meets the singular set at i=" + std::to_string(i), i);
    o.points.push_back(p);
    if (i == k) break;
    o.step_jacobians.push_back(spec.jacobian(p));
    o.step_second_partials.push_back(spec.second_partials(p));
    p = spec.eval(p);
  }
  detail::finish_orbit(o);
  return o;
}

// Cocycle given directly by its step matrices (no underlying map; second
// partials vanish, points are placeholders at the origin).
inline OrbitSegment orbit_from_matrices(const std::vector<Mat2>& steps) {
  if (steps.empty()) throw Error(ErrorKind::InvalidArgument, "empty cocycle");
  OrbitSegment o;
  o.spec.name = "cocycle";
  o.points.assign(steps.size() + 1, Vec2{});
  o.step_jacobians = steps;
  o.step_second_partials.assign(steps.size(), SecondPartials{});
  detail::finish_orbit(o);
  return o;
}

// DPhi^{j-i} at xi_i.
inline ScaledMatrix cocycle_block(const OrbitSegment& o, int i, int j) {
  if (i < 0 || j < i || j > o.k)
    throw Error(ErrorKind::IndexOutOfRange,
                "cocycle block (" + std::to_string(i) + ", " + std::to_string(j) + ")");
  ScaledMatrix r = ScaledMatrix::identity();
  for (int s = i; s < j; ++s) r = product(ScaledMatrix::from(o.step_jacobians[s]), r);
  return r;
}

// Norm, co-norm and determinant of DPhi^i in log form.
inline NormConormDet prefix_ncd(const OrbitSegment& o, int i) {
  const ChainStep& c = o.chain.at(i);
  const ScaledMatrix& m = o.prefix_products.at(i);
  return {c.log_smax, m.log_abs_det - c.log_smax, m.log_abs_det, m.det_sign};
}

// One-step co-eccentricity C_{xi_j, 1}.
inline double step_coecc(const OrbitSegment& o, int j) {
  const Mat2& J = o.step_jacobians.at(j);
  double n = op_norm(J);
  return n == 0.0 ? 0.0 : std::fabs(J.det()) / (n * n);
}

}  // namespace hypcoord
