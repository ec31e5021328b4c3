#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"

namespace hypcoord {

// (d_x DPhi, d_y DPhi): entry (j, i) of d_s DPhi is d^2 Phi_j / dx^i dx^s.
struct SecondPartials {
  Mat2 dx;
  Mat2 dy;
  const Mat2& operator[](int s) const { return s == 0 ? dx : dy; }
};

struct MapSpec {
  std::string name;
  std::vector<std::pair<std::string, double>> parameters;
  std::function<Vec2(Vec2)> eval;
  std::function<Mat2(Vec2)> jacobian;
  std::function<SecondPartials(Vec2)> second_partials;
  std::function<double(Vec2)> singular_set_distance = [](Vec2) { return kInf; };
  std::function<bool(Vec2)> domain_check = [](Vec2 p) {
    return std::isfinite(p.x) && std::isfinite(p.y);
  };
  // Guard used by compute_orbit when none is given.
  double default_guard = 0.0;

  double param(const std::string& key) const {
    for (const auto& [k, v] : parameters)
      if (k == key) return v;
    throw Error(ErrorKind::InvalidArgument, "map " + name + " has no parameter " + key);
  }
};

namespace detail {

inline void require_point(const MapSpec& spec, Vec2 p) {
  if (!spec.domain_check(p))
    throw Error(ErrorKind::OutsideDomain,
                spec.name + " at (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")");
  if (spec.singular_set_distance(p) <= 0.0)
    throw Error(ErrorKind::OnSingularSet,
                spec.name + " at (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")");
}

inline double sgn(double x) { return (x > 0) - (x < 0); }

}  // namespace detail

inline Vec2 eval_map(const MapSpec& spec, Vec2 p) {
  detail::require_point(spec, p);
  return spec.eval(p);
}

inline Mat2 eval_jacobian(const MapSpec& spec, Vec2 p) {
  detail::require_point(spec, p);
  return spec.jacobian(p);
}

inline SecondPartials eval_second_derivative(const MapSpec& spec, Vec2 p) {
  detail::require_point(spec, p);
  return spec.second_partials(p);
}

// ---------------------------------------------------------------------------
// Built-in maps

inline MapSpec henon_map(double a = 1.4, double b = 0.3) {
  MapSpec m;
  m.name = "henon";
  m.parameters = {{"a", a}, {"b", b}};
  m.eval = [a, b](Vec2 p) { return Vec2{1.0 + p.y - a * p.x * p.x, b * p.x}; };
  m.jacobian = [a, b](Vec2 p) { return Mat2{-2.0 * a * p.x, 1.0, b, 0.0}; };
  m.second_partials = [a](Vec2) { return SecondPartials{{-2.0 * a, 0.0, 0.0, 0.0}, {}}; };
  m.domain_check = [](Vec2 p) {
    return std::isfinite(p.x) && std::isfinite(p.y) && std::fabs(p.x) < 1e6 &&
           std::fabs(p.y) < 1e6;
  };
  return m;
}

// Chirikov standard map on the lift: y' = y + K sin x, x' = x + y'.
inline MapSpec standard_map(double K = 1.0) {
  MapSpec m;
  m.name = "standard";
  m.parameters = {{"K", K}};
  m.eval = [K](Vec2 p) {
    double y1 = p.y + K * std::sin(p.x);
    return Vec2{p.x + y1, y1};
  };
  m.jacobian = [K](Vec2 p) {
    double kc = K * std::cos(p.x);
    return Mat2{1.0 + kc, 1.0, kc, 1.0};
  };
  m.second_partials = [K](Vec2 p) {
    double ks = -K * std::sin(p.x);
    return SecondPartials{{ks, 0.0, ks, 0.0}, {}};
  };
  return m;
}

// Lorenz-like planar map with a singular line x = 0:
//   Phi1 = sgn(x) (rho |x|^alpha (1 + kappa y) - 1)
//   Phi2 = |x|^beta (mu y + nu)
// With the defaults the square [-1, 1]^2 is forward invariant and
// |d_x Phi1| ~ |x|^(alpha - 1) blows up at the singular line.
inline MapSpec lorenz2d_map(double alpha = 0.6, double beta = 1.5, double rho = 1.9,
                            double kappa = 0.05, double mu = 0.3, double nu = 0.5) {
  MapSpec m;
  m.name = "lorenz2d";
  m.parameters = {{"alpha", alpha}, {"beta", beta}, {"rho", rho},
                  {"kappa", kappa}, {"mu", mu},     {"nu", nu}};
  m.eval = [=](Vec2 p) {
    double s = detail::sgn(p.x), t = std::fabs(p.x);
    return Vec2{s * (rho * std::pow(t, alpha) * (1.0 + kappa * p.y) - 1.0),
                std::pow(t, beta) * (mu * p.y + nu)};
  };
  m.jacobian = [=](Vec2 p) {
    double s = detail::sgn(p.x), t = std::fabs(p.x);
    double ta = std::pow(t, alpha), tb = std::pow(t, beta);
    return Mat2{rho * alpha * ta / t * (1.0 + kappa * p.y), s * rho * ta * kappa,
                beta * tb / t * s * (mu * p.y + nu), tb * mu};
  };
  m.second_partials = [=](Vec2 p) {
    double s = detail::sgn(p.x), t = std::fabs(p.x);
    double ta = std::pow(t, alpha), tb = std::pow(t, beta);
    double xx1 = rho * alpha * (alpha - 1.0) * ta / (t * t) * s * (1.0 + kappa * p.y);
    double xy1 = rho * alpha * ta / t * kappa;
    double xx2 = beta * (beta - 1.0) * tb / (t * t) * (mu * p.y + nu);
    double xy2 = beta * tb / t * s * mu;
    return SecondPartials{{xx1, xy1, xx2, xy2}, {xy1, 0.0, xy2, 0.0}};
  };
  m.singular_set_distance = [](Vec2 p) { return std::fabs(p.x); };
  m.domain_check = [](Vec2 p) {
    return std::isfinite(p.x) && std::isfinite(p.y) && std::fabs(p.x) <= 2.0 &&
           std::fabs(p.y) <= 2.0;
  };
  m.default_guard = 1e-8;
  return m;
}

inline MapSpec linear_map(const Mat2& M) {
  MapSpec m;
  m.name = "linear";
  m.parameters = {{"m11", M.a}, {"m12", M.b}, {"m21", M.c}, {"m22", M.d}};
  m.eval = [M](Vec2 p) { return M * p; };
  m.jacobian = [M](Vec2) { return M; };
  m.second_partials = [](Vec2) { return SecondPartials{}; };
  return m;
}

// Cubic polynomial map. Coefficients are indexed by monomial x^i y^j with
// i + j <= 3, in the order of cubic_monomials().
inline const std::vector<std::pair<int, int>>& cubic_monomials() {
  static const std::vector<std::pair<int, int>> mono = [] {
    std::vector<std::pair<int, int>> v;
    for (int deg = 0; deg <= 3; ++deg)
      for (int i = deg; i >= 0; --i) v.emplace_back(i, deg - i);
    return v;
  }();
  return mono;
}

inline MapSpec cubic_map(const std::vector<double>& c1, const std::vector<double>& c2) {
  const auto& mono = cubic_monomials();
  if (c1.size() != mono.size() || c2.size() != mono.size())
    throw Error(ErrorKind::InvalidArgument, "cubic map needs 10 coefficients per component");
  MapSpec m;
  m.name = "cubic";
  for (std::size_t n = 0; n < mono.size(); ++n) {
    auto tag = std::to_string(mono[n].first) + std::to_string(mono[n].second);
    m.parameters.emplace_back("p" + tag, c1[n]);
  }
  for (std::size_t n = 0; n < mono.size(); ++n) {
    auto tag = std::to_string(mono[n].first) + std::to_string(mono[n].second);
    m.parameters.emplace_back("q" + tag, c2[n]);
  }
  // d^(dx+dy) of x^i y^j evaluated at p.
  auto mono_deriv = [](int i, int j, int dx, int dy, Vec2 p) {
    if (dx > i || dy > j) return 0.0;
    double f = 1.0;
    for (int r = 0; r < dx; ++r) f *= i - r;
    for (int r = 0; r < dy; ++r) f *= j - r;
    return f * std::pow(p.x, i - dx) * std::pow(p.y, j - dy);
  };
  auto poly = [mono, mono_deriv](const std::vector<double>& c, int dx, int dy, Vec2 p) {
    double s = 0.0;
    for (std::size_t n = 0; n < mono.size(); ++n)
      s += c[n] * mono_deriv(mono[n].first, mono[n].second, dx, dy, p);
    return s;
  };
  m.eval = [=](Vec2 p) { return Vec2{poly(c1, 0, 0, p), poly(c2, 0, 0, p)}; };
  m.jacobian = [=](Vec2 p) {
    return Mat2{poly(c1, 1, 0, p), poly(c1, 0, 1, p), poly(c2, 1, 0, p), poly(c2, 0, 1, p)};
  };
  m.second_partials = [=](Vec2 p) {
    Mat2 dx{poly(c1, 2, 0, p), poly(c1, 1, 1, p), poly(c2, 2, 0, p), poly(c2, 1, 1, p)};
    Mat2 dy{poly(c1, 1, 1, p), poly(c1, 0, 2, p), poly(c2, 1, 1, p), poly(c2, 0, 2, p)};
    return SecondPartials{dx, dy};
  };
  return m;
}

// ---------------------------------------------------------------------------
// Registry

struct BuiltinEntry {
  std::vector<std::pair<std::string, double>> defaults;
  std::function<MapSpec(const std::map<std::string, double>&)> make;
};

inline const std::map<std::string, BuiltinEntry>& builtin_registry() {
  static const std::map<std::string, BuiltinEntry> reg = [] {
    std::map<std::string, BuiltinEntry> r;
    r["henon"] = {{{"a", 1.4}, {"b", 0.3}},
                  [](const std::map<std::string, double>& p) {
                    return henon_map(p.at("a"), p.at("b"));
                  }};
    r["standard"] = {{{"K", 1.0}},
                     [](const std::map<std::string, double>& p) { return standard_map(p.at("K")); }};
    r["lorenz2d"] = {{{"alpha", 0.6}, {"beta", 1.5}, {"rho", 1.9},
                      {"kappa", 0.05}, {"mu", 0.3}, {"nu", 0.5}},
                     [](const std::map<std::string, double>& p) {
                       return lorenz2d_map(p.at("alpha"), p.at("beta"), p.at("rho"),
                                           p.at("kappa"), p.at("mu"), p.at("nu"));
                     }};
    r["linear"] = {{{"m11", 1.0}, {"m12", 0.0}, {"m21", 0.0}, {"m22", 1.0}},
                   [](const std::map<std::string, double>& p) {
                     return linear_map({p.at("m11"), p.at("m12"), p.at("m21"), p.at("m22")});
                   }};
    return r;
  }();
  return reg;
}

// Builds a registered map; unknown names or parameter keys are rejected.
inline MapSpec make_map(const std::string& name,
                        const std::map<std::string, double>& overrides = {}) {
  const auto& reg = builtin_registry();
  auto it = reg.find(name);
  if (it == reg.end()) throw Error(ErrorKind::InvalidArgument, "unknown map " + name);
  std::map<std::string, double> params(it->second.defaults.begin(), it->second.defaults.end());
  for (const auto& [k, v] : overrides) {
    if (!params.count(k))
      throw Error(ErrorKind::InvalidArgument, "map " + name + " has no parameter " + k);
    params[k] = v;
  }
  return it->second.make(params);
}

// ---------------------------------------------------------------------------
// Finite-difference validation

struct FdValidation {
  double jacobian_error = 0.0;  // max |J - FD(eval)| / max(1, max|J|)
  double second_error = 0.0;    // max |S - FD(J)| / max(1, max|S|)
};

inline FdValidation fd_validate(const MapSpec& spec, Vec2 p, double h = 1e-6) {
  if (spec.singular_set_distance(p) <= 10.0 * h)
    throw Error(ErrorKind::OnSingularSet, "fd_validate too close to the singular set");
  detail::require_point(spec, p);
  const Vec2 axes[2] = {{1.0, 0.0}, {0.0, 1.0}};
  Mat2 J = spec.jacobian(p);
  SecondPartials S = spec.second_partials(p);

  Vec2 cols[2];
  Mat2 dJ[2];
  for (int s = 0; s < 2; ++s) {
    Vec2 pp = p + h * axes[s], pm = p - h * axes[s];
    cols[s] = (1.0 / (2.0 * h)) * (spec.eval(pp) - spec.eval(pm));
    dJ[s] = (1.0 / (2.0 * h)) * (spec.jacobian(pp) - spec.jacobian(pm));
  }
  Mat2 Jfd = from_columns(cols[0], cols[1]);

  FdValidation r;
  r.jacobian_error = (J - Jfd).max_abs() / std::max(1.0, J.max_abs());
  double smax = std::max({1.0, S.dx.max_abs(), S.dy.max_abs()});
  r.second_error = std::max((S.dx - dJ[0]).max_abs(), (S.dy - dJ[1]).max_abs()) / smax;
  return r;
}

}  // namespace hypcoord
