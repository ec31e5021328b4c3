#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bounds.hpp"
#include "cocycle.hpp"
#include "errors.hpp"
#include "hypframe.hpp"
#include "linalg.hpp"
#include "planar_maps.hpp"

namespace hypcoord {

enum class FieldTag { Stable, Unstable };  // e^(k), f^(k)

inline const char* to_string(FieldTag f) { return f == FieldTag::Stable ? "e" : "f"; }

enum class Termination { LengthReached, Degenerate, SingularSet, DomainExit };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::LengthReached: return "length";
    case Termination::Degenerate: return "degenerate";
    case Termination::SingularSet: return "singular";
    case Termination::DomainExit: return "domain";
  }
  return "unknown";
}

struct Rect {
  double xmin = -1.0, xmax = 1.0, ymin = -1.0, ymax = 1.0;
  bool contains(Vec2 p) const { return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax; }
};

struct FoliationCurve {
  int k = 0;
  FieldTag field = FieldTag::Stable;
  std::vector<Vec2> points;
  std::vector<double> s;   // arclength stamps
  std::vector<Vec2> tangents;  // sign-continued field at each vertex
  Termination reason = Termination::LengthReached;
  Termination start_reason = Termination::LengthReached;  // backward end of a two-sided curve
  std::size_t seed_index = 0;  // position of the seed in points
};

struct CurveOptions {
  double guard = -1.0;
  std::optional<Rect> clip;
};

namespace detail {

struct FieldSample {
  bool ok = false;
  Termination reason = Termination::LengthReached;
  Vec2 v;
};

inline FieldSample sample_field(const MapSpec& spec, Vec2 p, int k, FieldTag tag, Vec2 ref,
                                double near, const CurveOptions& opt) {
  FieldSample out;
  if (!spec.domain_check(p) || (opt.clip && !opt.clip->contains(p))) {
    out.reason = Termination::DomainExit;
    return out;
  }
  if (spec.singular_set_distance(p) < near) {
    out.reason = Termination::SingularSet;
    return out;
  }
  try {
    HyperbolicFrame h = hyperbolic_coordinates(compute_orbit(spec, p, k, opt.guard), k);
    if (h.coecc > kLowConfidence) {
      out.reason = Termination::Degenerate;
      return out;
    }
    Vec2 v = tag == FieldTag::Stable ? h.e : h.f;
    if (dot(v, ref) < 0.0) v = -v;
    out.ok = true;
    out.v = v;
  } catch (const Error& err) {
    switch (err.kind()) {
      case ErrorKind::SingularEncounter: out.reason = Termination::SingularSet; break;
      case ErrorKind::OutsideDomain:
      case ErrorKind::OrbitEscaped: out.reason = Termination::DomainExit; break;
      default: out.reason = Termination::Degenerate; break;
    }
  }
  return out;
}

}  // namespace detail

// Unit field vector at p under the global sign convention.
inline Vec2 field_at(const MapSpec& spec, Vec2 p, int k, FieldTag tag, double guard = -1.0) {
  HyperbolicFrame h = hyperbolic_coordinates(compute_orbit(spec, p, k, guard), k);
  return tag == FieldTag::Stable ? h.e : h.f;
}

// Classical RK4 on the unit field; every stage is flipped to agree with the
// previous stage, so the curve never reverses across the convention's seam.
// `direction` = +1 follows the convention vector at the start, -1 the opposite.
inline FoliationCurve integrate_curve(const MapSpec& spec, Vec2 start, int k, FieldTag tag,
                                      double total, double step, int direction = 1,
                                      CurveOptions opt = {}) {
  if (!(step > 0.0) || !(total >= step))
    throw Error(ErrorKind::InvalidArgument, "need 0 < step <= total arclength");
  FoliationCurve c;
  c.k = k;
  c.field = tag;
  Vec2 v0;
  try {
    HyperbolicFrame h = hyperbolic_coordinates(compute_orbit(spec, start, k, opt.guard), k);
    if (h.coecc > kLowConfidence) throw Error(ErrorKind::NoFrameAtStart, "co-eccentricity above 0.999");
    v0 = tag == FieldTag::Stable ? h.e : h.f;
  } catch (const Error& err) {
    if (err.kind() == ErrorKind::NoFrameAtStart) throw;
    throw Error(ErrorKind::NoFrameAtStart, err.what());
  }
  if (direction < 0) v0 = -v0;
  const long n = static_cast<long>(std::ceil(total / step - 1e-12));
  const double h = total / static_cast<double>(n);
  const double near = 2.0 * h;
  if (spec.singular_set_distance(start) < near) {
    c.points = {start};
    c.s = {0.0};
    c.tangents = {v0};
    c.reason = Termination::SingularSet;
    return c;
  }
  Vec2 p = start, prev = v0;
  c.points.push_back(p);
  c.s.push_back(0.0);
  c.tangents.push_back(v0);
  for (long j = 0; j < n; ++j) {
    auto k1 = detail::sample_field(spec, p, k, tag, prev, near, opt);
    if (!k1.ok) { c.reason = k1.reason; return c; }
    auto k2 = detail::sample_field(spec, p + 0.5 * h * k1.v, k, tag, k1.v, near, opt);
    if (!k2.ok) { c.reason = k2.reason; return c; }
    auto k3 = detail::sample_field(spec, p + 0.5 * h * k2.v, k, tag, k2.v, near, opt);
    if (!k3.ok) { c.reason = k3.reason; return c; }
    auto k4 = detail::sample_field(spec, p + h * k3.v, k, tag, k3.v, near, opt);
    if (!k4.ok) { c.reason = k4.reason; return c; }
    Vec2 q = p + (h / 6.0) * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
    auto kq = detail::sample_field(spec, q, k, tag, k4.v, near, opt);
    if (!kq.ok) { c.reason = kq.reason; return c; }
    p = q;
    prev = kq.v;
    c.points.push_back(p);
    c.s.push_back(h * static_cast<double>(j + 1));
    c.tangents.push_back(prev);
  }
  c.reason = Termination::LengthReached;
  return c;
}

// Curve through the seed: backward half reversed, then forward half.
inline FoliationCurve integrate_through(const MapSpec& spec, Vec2 seed, int k, FieldTag tag,
                                        double half_length, double step, CurveOptions opt = {}) {
  FoliationCurve fwd = integrate_curve(spec, seed, k, tag, half_length, step, 1, opt);
  FoliationCurve bwd = integrate_curve(spec, seed, k, tag, half_length, step, -1, opt);
  FoliationCurve c;
  c.k = k;
  c.field = tag;
  double s0 = bwd.s.back();
  for (std::size_t j = bwd.points.size(); j-- > 1;) {
    c.points.push_back(bwd.points[j]);
    c.s.push_back(s0 - bwd.s[j]);
    c.tangents.push_back(-bwd.tangents[j]);
  }
  c.seed_index = c.points.size();
  for (std::size_t j = 0; j < fwd.points.size(); ++j) {
    c.points.push_back(fwd.points[j]);
    c.s.push_back(s0 + fwd.s[j]);
    c.tangents.push_back(fwd.tangents[j]);
  }
  c.reason = fwd.reason;
  c.start_reason = bwd.reason;
  return c;
}

struct GridSeedFailure {
  Vec2 seed;
  std::string reason;
};

struct FoliationGrid {
  int k = 0;
  std::vector<Vec2> seeds;
  std::vector<FoliationCurve> curves;  // one per successful seed and field
  std::vector<GridSeedFailure> failures;
};

// Seeds on the horizontal midline of the rectangle, spaced by `spacing`.
inline std::vector<Vec2> transversal_seeds(const Rect& r, double spacing) {
  if (!(spacing > 0.0)) throw Error(ErrorKind::InvalidArgument, "seed spacing must be positive");
  std::vector<Vec2> seeds;
  double y = 0.5 * (r.ymin + r.ymax);
  long n = static_cast<long>(std::floor((r.xmax - r.xmin) / spacing + 1e-9));
  double x0 = r.xmin + 0.5 * ((r.xmax - r.xmin) - n * spacing);
  for (long j = 0; j <= n; ++j) seeds.push_back({x0 + spacing * j, y});
  return seeds;
}

inline FoliationGrid foliation_grid(const MapSpec& spec, const Rect& rect, int k, double spacing,
                                    std::vector<FieldTag> fields, double half_length, double step,
                                    double guard = -1.0) {
  FoliationGrid g;
  g.k = k;
  g.seeds = transversal_seeds(rect, spacing);
  CurveOptions opt;
  opt.guard = guard;
  opt.clip = rect;
  for (Vec2 seed : g.seeds) {
    for (FieldTag tag : fields) {
      try {
        g.curves.push_back(integrate_through(spec, seed, k, tag, half_length, step, opt));
      } catch (const Error& err) {
        g.failures.push_back({seed, std::string(to_string(tag)) + ": " + err.what()});
      }
    }
  }
  return g;
}

// Angle between two directions modulo pi, in [0, pi/2].
inline double line_angle(Vec2 a, Vec2 b) {
  double c = std::fabs(dot(a, b)) / (norm(a) * norm(b));
  double s = std::fabs(cross(a, b)) / (norm(a) * norm(b));
  return std::atan2(s, c);
}

// Image of the curve under Phi^i, checked for tangency with DPhi^i of the
// field at every interior vertex.
inline BoundReport pushforward_consistency(const MapSpec& spec, const FoliationCurve& curve, int i,
                                           double tol_rad = 5e-3, double guard = -1.0) {
  if (i < 0) throw Error(ErrorKind::InvalidArgument, "negative iterate");
  BoundReport rep;
  rep.name = "pushforward_tangency";
  rep.tol = 0.0;
  const int K = std::max(i, curve.k);
  std::vector<Vec2> img;
  for (Vec2 p : curve.points) {
    Vec2 q = p;
    for (int j = 0; j < i; ++j) q = eval_map(spec, q);
    img.push_back(q);
  }
  for (std::size_t j = 1; j + 1 < img.size(); ++j) {
    Vec2 chord = img[j + 1] - img[j - 1];
    OrbitSegment o = compute_orbit(spec, curve.points[j], K, guard);
    PushedFrame pf = pushforward_frames(o, curve.k, i);
    Vec2 dir = curve.field == FieldTag::Stable ? pf.e.body : pf.f.body;
    rep.add(static_cast<int>(j), i, "image_tangency", line_angle(chord, dir), tol_rad);
  }
  return rep;
}

// Endpoint differences under step halving: |P(h) - P(h/2)| / |P(h/2) - P(h/4)|.
// A fourth-order scheme gives about 16.
inline double integrator_order_ratio(const MapSpec& spec, Vec2 start, int k, FieldTag tag,
                                     double length, double step, CurveOptions opt = {}) {
  auto end = [&](double h) {
    FoliationCurve c = integrate_curve(spec, start, k, tag, length, h, 1, opt);
    if (c.reason != Termination::LengthReached)
      throw Error(ErrorKind::DegenerateStep, std::string("order check curve stopped: ") +
                                                 to_string(c.reason));
    return c.points.back();
  };
  Vec2 p1 = end(step), p2 = end(0.5 * step), p4 = end(0.25 * step);
  double d1 = norm(p1 - p2), d2 = norm(p2 - p4);
  if (d2 == 0.0) return kInf;
  return d1 / d2;
}

struct SeedOrthogonality {
  double deviation = 0.0;  // |angle between image tangents - pi/2|
  double image_angle = 0.0;
};

// Image e-curve and f-curve through the same seed, compared at the image
// of the seed using central differences along the image polylines.
inline SeedOrthogonality image_orthogonality(const MapSpec& spec, Vec2 seed, int k, int i,
                                             double step = 1e-4, double guard = -1.0) {
  auto tangent = [&](FieldTag tag) {
    FoliationCurve c = integrate_through(spec, seed, k, tag, step, step, {guard, std::nullopt});
    if (c.points.size() < 3 || c.seed_index == 0 || c.seed_index + 1 >= c.points.size())
      throw Error(ErrorKind::DegenerateStep, "curve too short at the seed");
    Vec2 a = c.points[c.seed_index - 1], b = c.points[c.seed_index + 1];
    for (int j = 0; j < i; ++j) {
      a = eval_map(spec, a);
      b = eval_map(spec, b);
    }
    return b - a;
  };
  Vec2 te = tangent(FieldTag::Stable), tf = tangent(FieldTag::Unstable);
  SeedOrthogonality r;
  r.image_angle = line_angle(te, tf);
  r.deviation = std::fabs(0.5 * kPi - r.image_angle);
  return r;
}

// ---------------------------------------------------------------------------
// Export

inline std::string curves_csv(const std::vector<FoliationCurve>& curves) {
  std::ostringstream os;
  os << "curve_id,s,x,y\n";
  char buf[128];
  for (std::size_t id = 0; id < curves.size(); ++id) {
    const auto& c = curves[id];
    for (std::size_t j = 0; j < c.points.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", id, c.s[j], c.points[j].x,
                    c.points[j].y);
      os << buf;
    }
  }
  return os.str();
}

inline std::string curves_svg(const std::vector<FoliationCurve>& curves, const Rect& view,
                              double width = 600.0) {
  double w = view.xmax - view.xmin, h = view.ymax - view.ymin;
  double height = width * h / w;
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                "viewBox=\"0 0 %.0f %.0f\">\n",
                width, height, width, height);
  os << buf;
  for (const auto& c : curves) {
    os << "<polyline fill=\"none\" stroke=\"" << (c.field == FieldTag::Stable ? "#1f4e9c" : "#b8322a")
       << "\" stroke-width=\"1\" points=\"";
    for (std::size_t j = 0; j < c.points.size(); ++j) {
      double px = (c.points[j].x - view.xmin) / w * width;
      double py = (view.ymax - c.points[j].y) / h * height;
      std::snprintf(buf, sizeof buf, "%s%.3f,%.3f", j ? " " : "", px, py);
      os << buf;
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace hypcoord
