#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "cocycle.hpp"
#include "errors.hpp"
#include "linalg.hpp"

namespace hypcoord {

inline constexpr double kEpsCC = 1e-12;        // frame existence threshold
inline constexpr double kLowConfidence = 0.999;  // near-conformal band

// e_y > 0, or e_y == 0 and e_x > 0; f is e rotated by -pi/2.
inline void apply_sign_convention(Vec2& e, Vec2& f) {
  if (e.y < 0.0 || (e.y == 0.0 && e.x < 0.0)) e = -e;
  f = Vec2{e.y, -e.x};
}

// Angle of a direction in the (sin t, cos t) parametrization, in [0, pi).
inline double direction_angle(Vec2 v) {
  double t = std::atan2(v.x, v.y);
  if (t < 0.0) t += kPi;
  if (t >= kPi) t -= kPi;
  return t;
}

struct Svd2 {
  double sigma_max;  // log
  double sigma_min;  // log, -inf when singular
  Vec2 f;
  Vec2 e;
  bool singular = false;
};

// Two-rotation closed form: M = R(beta) diag(q + r, q - r) R(gamma).
inline Svd2 svd2(const ScaledMatrix& m) {
  if (m.is_zero()) throw Error(ErrorKind::ZeroMatrix, "svd2 of the zero matrix");
  const Mat2& M = m.body;
  double E = 0.5 * (M.a + M.d), F = 0.5 * (M.a - M.d);
  double G = 0.5 * (M.c + M.b), H = 0.5 * (M.c - M.b);
  double q = std::hypot(E, H), r = std::hypot(F, G);
  double gamma = 0.5 * (std::atan2(H, E) - std::atan2(G, F));
  Svd2 s;
  s.sigma_max = std::log(q + r) + m.log_scale;
  s.sigma_min = m.log_abs_det - s.sigma_max;
  s.singular = m.det_sign == 0;
  s.e = Vec2{std::sin(gamma), std::cos(gamma)};
  apply_sign_convention(s.e, s.f);
  return s;
}

struct HyperbolicFrame {
  int k = 0;
  Vec2 e;
  Vec2 f;
  double sigma_max = 0.0;
  double sigma_min = 0.0;
  double coecc = 1.0;
  double theta = 0.0;
  bool low_confidence = false;
  // +1 when the convention agrees with the orientation carried by the
  // orbit's SVD chain, -1 otherwise.
  int chain_sign = 1;
};

inline HyperbolicFrame hyperbolic_coordinates(const OrbitSegment& o, int k) {
  if (k < 1 || k > o.k)
    throw Error(ErrorKind::IndexOutOfRange, "frame order " + std::to_string(k));
  const ChainStep& c = o.chain[k];
  const ScaledMatrix& m = o.prefix_products[k];
  HyperbolicFrame h;
  h.k = k;
  h.sigma_max = c.log_smax;
  h.sigma_min = m.log_abs_det - c.log_smax;
  h.coecc = std::exp(h.sigma_min - h.sigma_max);
  if (h.coecc >= 1.0 - kEpsCC)
    throw Error(ErrorKind::NoHyperbolicCoordinates,
                "co-eccentricity " + std::to_string(h.coecc) + " at order " + std::to_string(k));
  Vec2 f{std::cos(c.alpha), std::sin(c.alpha)};
  Vec2 e = perp(f);
  Vec2 e0 = e;
  apply_sign_convention(e, h.f);
  h.e = e;
  h.chain_sign = dot(e, e0) > 0.0 ? 1 : -1;
  h.theta = direction_angle(h.f);
  h.low_confidence = h.coecc > kLowConfidence;
  return h;
}

// Flips a frame so that e has nonnegative inner product with ref.e.
inline HyperbolicFrame aligned(HyperbolicFrame h, const HyperbolicFrame& ref) {
  if (dot(h.e, ref.e) < 0.0) {
    h.e = -h.e;
    h.f = -h.f;
    h.chain_sign = -h.chain_sign;
  }
  return h;
}

struct Coeccentricity {
  double det_over_norm2;     // |det| / ||M||^2
  double conorm2_over_det;   // conorm^2 / |det|
  double conorm_over_norm;   // conorm / ||M||
  bool det_available = true;
};

namespace detail {

inline Coeccentricity coecc_from_logs(double log_norm, double log_conorm, double log_abs_det) {
  Coeccentricity c;
  c.conorm_over_norm = std::exp(log_conorm - log_norm);
  if (log_abs_det == -kInf) {
    c.det_available = false;
    c.det_over_norm2 = c.conorm2_over_det = 0.0;
  } else {
    c.det_over_norm2 = std::exp(log_abs_det - 2.0 * log_norm);
    c.conorm2_over_det = std::exp(2.0 * log_conorm - log_abs_det);
  }
  return c;
}

}  // namespace detail

// Three expressions of C_{xi0,k}. The determinant comes from the tracked
// step determinants, the co-norm from the chain's Gram determinants.
inline Coeccentricity coeccentricity(const OrbitSegment& o, int k) {
  if (k < 1 || k > o.k) throw Error(ErrorKind::IndexOutOfRange, "coeccentricity order");
  const ChainStep& c = o.chain[k];
  return detail::coecc_from_logs(c.log_smax, c.log_smin, o.prefix_products[k].log_abs_det);
}

// Same for a single matrix; the co-norm is the difference form q - r of the
// closed-form SVD, independent of the tracked determinant.
inline Coeccentricity coeccentricity(const ScaledMatrix& m) {
  const Mat2& M = m.body;
  double E = 0.5 * (M.a + M.d), F = 0.5 * (M.a - M.d);
  double G = 0.5 * (M.c + M.b), H = 0.5 * (M.c - M.b);
  double q = std::hypot(E, H), r = std::hypot(F, G);
  double ln = std::log(q + r) + m.log_scale;
  double lc = std::log(std::fabs(q - r)) + m.log_scale;
  return detail::coecc_from_logs(ln, lc, m.log_abs_det);
}

inline double coecc_value(const ScaledMatrix& m) {
  auto n = norm_conorm_det(m);
  return std::exp(n.log_conorm - n.log_norm);
}

struct CriticalAngles {
  double theta_contract;  // (sin t, cos t) is the most contracted direction
  double theta_expand;
};

// Critical angles of |M (sin t, cos t)|. The columns of M are (dx Phi1, dx Phi2)
// and (dy Phi1, dy Phi2). In this parametrization the stationarity condition is
//   tan 2t = -2 <c_x, c_y> / (|c_x|^2 - |c_y|^2).
inline CriticalAngles angle_theta(double dxphi1, double dxphi2, double dyphi1, double dyphi2) {
  double num = 2.0 * (dxphi1 * dyphi1 + dxphi2 * dyphi2);
  double den = dxphi1 * dxphi1 + dxphi2 * dxphi2 - dyphi1 * dyphi1 - dyphi2 * dyphi2;
  double scale = std::max({1e-300, std::fabs(dxphi1), std::fabs(dxphi2), std::fabs(dyphi1),
                           std::fabs(dyphi2)});
  if (std::fabs(num) < 1e-14 * scale * scale && std::fabs(den) < 1e-14 * scale * scale)
    throw Error(ErrorKind::ConformalDegenerate, "every direction is critical");
  double t1 = 0.5 * std::atan2(-num, den);
  double t2 = t1 + 0.5 * kPi;
  auto value = [&](double t) {
    double s = std::sin(t), c = std::cos(t);
    return std::hypot(dxphi1 * s + dyphi1 * c, dxphi2 * s + dyphi2 * c);
  };
  auto wrap = [](double t) {
    while (t < 0.0) t += kPi;
    while (t >= kPi) t -= kPi;
    return t;
  };
  // The maximum of |.|^2 sits where the second derivative is negative; the
  // atan2 branch above picks it. Compare values only as a tie-breaker.
  if (value(t1) < value(t2)) std::swap(t1, t2);
  return {wrap(t2), wrap(t1)};
}

inline CriticalAngles angle_theta(const Mat2& m) { return angle_theta(m.a, m.c, m.b, m.d); }

// Vector exp(log_scale) * body.
struct ScaledVec {
  Vec2 body;
  double log_scale = 0.0;

  double log_norm() const {
    double n = norm(body);
    return n == 0.0 ? -kInf : std::log(n) + log_scale;
  }
  Vec2 value() const { return std::exp(log_scale) * body; }
  Vec2 direction() const { return normalized(body); }
};

struct PushedFrame {
  ScaledVec e;  // DPhi^i e^(k)
  ScaledVec f;  // DPhi^i f^(k)
};

namespace detail {

// a * u + b * w with log-magnitudes la, lb and signs sa, sb.
inline ScaledVec combine(int sa, double la, Vec2 u, int sb, double lb, Vec2 w) {
  double m = std::max(la, lb);
  if (m == -kInf) return {Vec2{}, 0.0};
  double wa = la == -kInf ? 0.0 : sa * std::exp(la - m);
  double wb = lb == -kInf ? 0.0 : sb * std::exp(lb - m);
  return {wa * u + wb * w, m};
}

inline double log_abs(double x) { return x == 0.0 ? -kInf : std::log(std::fabs(x)); }
inline int sign_of(double x) { return (x > 0) - (x < 0); }

}  // namespace detail

// Angle from the chain orientation of f^(i) to that of f^(k), accumulated
// from the per-step rotations.
inline double chain_rotation(const OrbitSegment& o, int i, int k) {
  double s = 0.0;
  if (k >= i)
    for (int j = k; j > i; --j) s += o.chain[j].incr;
  else
    for (int j = i; j > k; --j) s -= o.chain[j].incr;
  return s;
}

// Images DPhi^i e^(k), DPhi^i f^(k) for 0 <= i <= orbit.k, with e^(k) under the
// sign convention.
inline PushedFrame pushforward_frames(const OrbitSegment& o, int k, int i) {
  if (i < 0 || i > o.k) throw Error(ErrorKind::IndexOutOfRange, "pushforward index");
  HyperbolicFrame hk = hyperbolic_coordinates(o, k);
  const ChainStep& ci = o.chain[i];
  double d = chain_rotation(o, i, k);
  double cd = std::cos(d), sd = std::sin(d);
  int s = hk.chain_sign;
  int ds = o.prefix_products[i].det_sign >= 0 ? 1 : -1;
  Vec2 u1 = ci.u1, u2 = static_cast<double>(ds) * perp(ci.u1);
  // chain-oriented e^(k) = cos d e^(i) - sin d f^(i); f^(k) = cos d f^(i) + sin d e^(i)
  PushedFrame p;
  p.e = detail::combine(s * detail::sign_of(cd), detail::log_abs(cd) + ci.log_smin, u2,
                        -s * detail::sign_of(sd), detail::log_abs(sd) + ci.log_smax, u1);
  p.f = detail::combine(s * detail::sign_of(cd), detail::log_abs(cd) + ci.log_smax, u1,
                        s * detail::sign_of(sd), detail::log_abs(sd) + ci.log_smin, u2);
  return p;
}

// Aligned distance ||e^(k) - e^(i)|| with the sign of e^(k) chosen to
// minimize it.
inline double frame_distance(const OrbitSegment& o, int i, int k) {
  double d = reduce_half_turn(chain_rotation(o, i, k));
  return 2.0 * std::fabs(std::sin(0.5 * d));
}

struct GramOperator {
  Mat2 body;  // symmetric
  double log_scale = 0.0;

  Mat2 value() const { return std::exp(log_scale) * body; }
};

inline GramOperator gram_operator(const OrbitSegment& o, int k) {
  if (k < 0 || k > o.k) throw Error(ErrorKind::IndexOutOfRange, "gram order");
  const ScaledMatrix& m = o.prefix_products[k];
  Mat2 g = m.body.transpose() * m.body;
  g.c = g.b;  // exact symmetry
  return {g, 2.0 * m.log_scale};
}

struct OracleResult {
  double theta_max;
  double theta_min;
  double norm_max;  // log
  double norm_min;  // log
  bool flat = false;
};

// Precomputed (sin t, cos t) samples for the grid oracle.
class DirectionGrid {
 public:
  explicit DirectionGrid(long n) : n_(n), s_(n), c_(n) {
    if (n < 4) throw Error(ErrorKind::InvalidArgument, "grid_n must be >= 4");
    for (long j = 0; j < n; ++j) {
      double t = kPi * static_cast<double>(j) / static_cast<double>(n);
      s_[j] = std::sin(t);
      c_[j] = std::cos(t);
    }
  }

  OracleResult extremal(const ScaledMatrix& m) const {
    const Mat2& M = m.body;
    double best = -1.0, worst = kInf;
    long jb = 0, jw = 0;
    for (long j = 0; j < n_; ++j) {
      double x = M.a * s_[j] + M.b * c_[j];
      double y = M.c * s_[j] + M.d * c_[j];
      double v = x * x + y * y;
      if (v > best) { best = v; jb = j; }
      if (v < worst) { worst = v; jw = j; }
    }
    OracleResult r;
    r.theta_max = kPi * static_cast<double>(jb) / static_cast<double>(n_);
    r.theta_min = kPi * static_cast<double>(jw) / static_cast<double>(n_);
    // The extremal values are refined inside the winning grid cell; the grid
    // spacing alone limits them to O((pi/N)^2 / C^2) relative accuracy.
    best = std::max(best, refine(M, r.theta_max, true));
    worst = std::min(worst, refine(M, r.theta_min, false));
    r.norm_max = 0.5 * std::log(best) + m.log_scale;
    r.norm_min = worst > 0.0 ? 0.5 * std::log(worst) + m.log_scale : -kInf;
    r.flat = best - worst <= 1e-12 * best;
    return r;
  }

  long size() const { return n_; }

 private:
  // Golden-section search of |M(sin t, cos t)|^2 on [t0 - pi/N, t0 + pi/N].
  double refine(const Mat2& M, double t0, bool maximize) const {
    auto f = [&](double t) {
      double s = std::sin(t), c = std::cos(t);
      double x = M.a * s + M.b * c, y = M.c * s + M.d * c;
      double v = x * x + y * y;
      return maximize ? -v : v;
    };
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = t0 - kPi / n_, hi = t0 + kPi / n_;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 80; ++it) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - g * (hi - lo);
        f1 = f(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + g * (hi - lo);
        f2 = f(x2);
      }
    }
    double v = std::min(f1, f2);
    return maximize ? -v : v;
  }

  long n_;
  std::vector<double> s_, c_;
};

inline OracleResult oracle_extremal_directions(const ScaledMatrix& m, long grid_n) {
  return DirectionGrid(grid_n).extremal(m);
}

// Angular distance between two directions modulo pi.
inline double angle_gap(double t1, double t2) {
  return std::fabs(reduce_half_turn(t1 - t2));
}

}  // namespace hypcoord
