#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cocycle.hpp"
#include "errors.hpp"
#include "hypframe.hpp"
#include "linalg.hpp"

namespace hypcoord {

enum class Flavor { NonSingular, SingularI, SingularII, SingularBoth };

inline const char* to_string(Flavor f) {
  switch (f) {
    case Flavor::NonSingular: return "NonSingular";
    case Flavor::SingularI: return "I";
    case Flavor::SingularII: return "II";
    case Flavor::SingularBoth: return "Both";
  }
  return "?";
}

inline Flavor parse_flavor(const std::string& s) {
  if (s == "NonSingular" || s == "nonsingular" || s == "N") return Flavor::NonSingular;
  if (s == "I" || s == "SingularI") return Flavor::SingularI;
  if (s == "II" || s == "SingularII") return Flavor::SingularII;
  if (s == "Both" || s == "SingularBoth") return Flavor::SingularBoth;
  throw Error(ErrorKind::InvalidArgument, "unknown flavor " + s);
}

inline bool uses_type_I(Flavor f) { return f == Flavor::SingularI || f == Flavor::SingularBoth; }
inline bool uses_type_II(Flavor f) { return f != Flavor::SingularI; }

struct ConstantsLedger {
  double Gamma = 2.0;
  double GammaTilde = 1.0;
  double lambda = 1.5;
  double b = 1.0;
  double c = 0.5;
  double cTilde = 1.0;
  double B = 1.0;
  double BTilde = 1.0;
  double C = 1.0;
  double D = 1.0;
  Flavor flavor = Flavor::SingularII;
  std::string note;

  // NonSingular is the type (II) specialization with cTilde = GammaTilde = 1.
  ConstantsLedger normalized() const {
    ConstantsLedger l = *this;
    if (l.flavor == Flavor::NonSingular) l.cTilde = l.GammaTilde = 1.0;
    return l;
  }
};

// Structural inequalities of the ledger, each violated one named.
inline std::vector<std::string> structural_violations(const ConstantsLedger& in) {
  ConstantsLedger l = in.normalized();
  std::vector<std::string> v;
  auto need = [&](bool ok, const char* what) {
    if (!ok) v.emplace_back(what);
  };
  for (double x : {l.Gamma, l.GammaTilde, l.lambda, l.b, l.c, l.cTilde})
    if (!(x > 0.0 && std::isfinite(x))) {
      v.emplace_back("constants must be positive and finite");
      return v;
    }
  need(l.B >= 1.0, "B >= 1");
  need(l.D >= 1.0, "D >= 1");
  need(l.BTilde > 0.0 && l.BTilde <= 1.0, "0 < BTilde <= 1");
  need(l.C > 0.0 && l.C <= 1.0, "0 < C <= 1");
  const double G = l.Gamma, Gt = l.GammaTilde, la = l.lambda, ct = l.cTilde;
  if (l.flavor == Flavor::NonSingular) {
    need(G >= std::max(la, 1.0), "Gamma >= max{lambda, 1}");
    need(l.b < la * la, "b < lambda^2");
    need(l.c < la * la / (G * G), "c < lambda^2/Gamma^2");
    need(la * la / (G * G) < 1.0, "lambda^2/Gamma^2 < 1");
    return v;
  }
  need(Gt >= 1.0, "GammaTilde >= 1");
  need(G > std::max(la, 1.0), "Gamma > max{lambda, 1}");
  need(l.b < G * G * Gt, "b < Gamma^2 GammaTilde");
  if (uses_type_I(l.flavor)) {
    double r = std::pow(la / (G * Gt), 3);
    need(l.b < la * la / Gt, "b < lambda^2/GammaTilde");
    need(l.c < r, "c < lambda^3/(Gamma^3 GammaTilde^3)");
    need(r < 1.0, "lambda^3/(Gamma^3 GammaTilde^3) < 1");
  }
  if (uses_type_II(l.flavor)) {
    double r = la * la * ct * ct / (G * G * Gt);
    need(l.b < la * la * ct, "b < lambda^2 cTilde");
    need(l.c < r, "c < lambda^2 cTilde^2/(Gamma^2 GammaTilde)");
    need(r < ct, "lambda^2 cTilde^2/(Gamma^2 GammaTilde) < cTilde");
    need(ct <= 1.0, "cTilde <= 1");
  }
  return v;
}

// ---------------------------------------------------------------------------
// Ledger text format: one `name = value` per line, '#' comments.

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string write_ledger(const ConstantsLedger& l) {
  std::ostringstream os;
  os << "flavor = " << to_string(l.flavor) << "\n";
  const std::pair<const char*, double> kv[] = {
      {"Gamma", l.Gamma}, {"GammaTilde", l.GammaTilde}, {"lambda", l.lambda},
      {"b", l.b},         {"c", l.c},                   {"cTilde", l.cTilde},
      {"B", l.B},         {"BTilde", l.BTilde},         {"C", l.C},
      {"D", l.D}};
  for (const auto& [k, v] : kv) os << k << " = " << format_double(v) << "\n";
  if (!l.note.empty()) os << "# " << l.note << "\n";
  return os.str();
}

inline std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Parses `key = value` lines; blank lines and '#' comments are skipped.
inline std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream is(text);
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::InvalidArgument, "line " + std::to_string(n) + ": expected key = value");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

inline double parse_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (...) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) throw Error(ErrorKind::InvalidArgument, "not a number: " + s);
  return v;
}

inline ConstantsLedger read_ledger(const std::string& text) {
  ConstantsLedger l;
  std::map<std::string, double*> slot = {
      {"Gamma", &l.Gamma}, {"GammaTilde", &l.GammaTilde}, {"lambda", &l.lambda},
      {"b", &l.b},         {"c", &l.c},                   {"cTilde", &l.cTilde},
      {"B", &l.B},         {"BTilde", &l.BTilde},         {"C", &l.C},
      {"D", &l.D}};
  for (const auto& [k, v] : parse_key_values(text)) {
    if (k == "flavor") {
      l.flavor = parse_flavor(v);
      continue;
    }
    auto it = slot.find(k);
    if (it == slot.end()) throw Error(ErrorKind::InvalidArgument, "unknown ledger key " + k);
    *it->second = parse_double(v);
  }
  return l;
}

inline ConstantsLedger read_ledger_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return read_ledger(ss.str());
}

// ---------------------------------------------------------------------------
// Per-index certificate check

inline constexpr double kStrictMargin = 1e-12;

struct CheckRow {
  int i;
  std::string name;
  double log_lhs;
  double log_rhs;
  double margin;  // log_rhs - log_lhs
  bool strict;
  bool pass;
};

struct CertificateReport {
  Flavor flavor;
  std::vector<std::string> structural;  // violated structural inequalities
  std::vector<CheckRow> rows;
  std::map<std::string, int> first_fail;
  bool verdict = true;

  // First failure in index-major order, for error messages.
  std::optional<CheckRow> first_failure() const {
    for (const auto& r : rows)
      if (!r.pass) return r;
    return std::nullopt;
  }
};

// Data along the orbit used by the certificate, all in log form.
struct OrbitProfile {
  int k = 0;
  std::vector<double> log_norm;        // index i = 1..k (0 unused)
  std::vector<double> log_coecc;       // C_{xi0,i}
  std::vector<double> log_step_norm;   // index j = 0..k-1
  std::vector<double> log_step_d2;     // sqrt(2) max_s ||d_s DPhi||
  std::vector<double> log_step_det;    // |det DPhi_{xi_j}|
  std::vector<double> log_step_coecc;  // C_{xi_j, 1}
};

inline double d2_upper_bracket(const SecondPartials& s) {
  return kSqrt2 * std::max(op_norm(s.dx), op_norm(s.dy));
}

inline double safe_log(double x) { return x > 0.0 ? std::log(x) : -kInf; }

inline OrbitProfile orbit_profile(const OrbitSegment& o) {
  OrbitProfile p;
  p.k = o.k;
  p.log_norm.assign(o.k + 1, 0.0);
  p.log_coecc.assign(o.k + 1, 0.0);
  for (int i = 1; i <= o.k; ++i) {
    auto n = prefix_ncd(o, i);
    p.log_norm[i] = n.log_norm;
    p.log_coecc[i] = n.log_conorm - n.log_norm;
  }
  for (int j = 0; j < o.k; ++j) {
    p.log_step_norm.push_back(safe_log(op_norm(o.step_jacobians[j])));
    p.log_step_d2.push_back(safe_log(d2_upper_bracket(o.step_second_partials[j])));
    p.log_step_det.push_back(safe_log(std::fabs(o.step_dets[j])));
    p.log_step_coecc.push_back(safe_log(step_coecc(o, j)));
  }
  return p;
}

inline CertificateReport check_quasi_hyperbolic(const OrbitSegment& o, const ConstantsLedger& in) {
  ConstantsLedger l = in.normalized();
  CertificateReport rep;
  rep.flavor = in.flavor;
  rep.structural = structural_violations(l);
  OrbitProfile p = orbit_profile(o);
  const double lG = std::log(l.Gamma), lGt = std::log(l.GammaTilde), lla = std::log(l.lambda);
  const double lc = std::log(l.c), lct = std::log(l.cTilde), lb = std::log(l.b);
  const double lB = std::log(l.B), lBt = std::log(l.BTilde), lC = std::log(l.C), lD = std::log(l.D);
  auto add = [&](int i, const char* name, double lhs, double rhs, bool strict) {
    double m = rhs - lhs;
    if (std::isnan(m)) m = (lhs == -kInf && rhs > -kInf) ? kInf : -kInf;
    bool pass = strict ? m > kStrictMargin : m >= -kStrictMargin;
    rep.rows.push_back({i, name, lhs, rhs, m, strict, pass});
    if (!pass && !rep.first_fail.count(name)) rep.first_fail[name] = i;
  };
  for (int i = 1; i <= p.k; ++i) {
    add(i, "C_{xi0,i} < 1", p.log_coecc[i], 0.0, true);
    add(i, "C lambda^i < |DPhi^i|", lC + i * lla, p.log_norm[i], true);
    add(i, "|DPhi^i| < D Gamma^i", p.log_norm[i], lD + i * lG, true);
    add(i, "C_{xi0,i} <= B c^i", p.log_coecc[i], lB + i * lc, false);
    add(i, "B c^i < 1", lB + i * lc, 0.0, true);
    double env = lD + lG + (i - 1) * lGt;
    add(i, "|DPhi_{xi_{i-1}}| < D Gamma GammaTilde^(i-1)", p.log_step_norm[i - 1], env, true);
    add(i, "|D2Phi_{xi_{i-1}}| < D Gamma GammaTilde^(i-1)", p.log_step_d2[i - 1], env, true);
    add(i, "|det DPhi_{xi_{i-1}}| <= b", p.log_step_det[i - 1], lb, false);
    if (uses_type_II(l.flavor))
      add(i, "C_{xi_{i-1},1} >= BTilde cTilde^(i-1)", lBt + (i - 1) * lct,
          p.log_step_coecc[i - 1], false);
  }
  rep.verdict = rep.structural.empty();
  for (const auto& r : rep.rows) rep.verdict = rep.verdict && r.pass;
  return rep;
}

// ---------------------------------------------------------------------------
// Fitting constants from orbit data

struct FitOptions {
  double eta = 1.05;
  double delta = 1e-9;  // Gamma >= eta (1 + delta)
};

namespace detail {

struct FitRates {
  double lambda, Gamma, c, b, cTilde, GammaTilde;
};

inline ConstantsLedger prefactors_for(const OrbitProfile& p, const FitRates& r, Flavor flavor) {
  ConstantsLedger l;
  l.flavor = flavor;
  l.lambda = r.lambda;
  l.Gamma = r.Gamma;
  l.c = r.c;
  l.b = r.b;
  l.cTilde = r.cTilde;
  l.GammaTilde = r.GammaTilde;
  const double pad = 1e-9;  // log-units padding for strict inequalities
  double lC = 0.0, lD = 0.0, lB = 0.0, lBt = 0.0;
  for (int i = 1; i <= p.k; ++i) {
    lC = std::min(lC, p.log_norm[i] - i * std::log(r.lambda) - pad);
    lD = std::max(lD, p.log_norm[i] - i * std::log(r.Gamma) + pad);
    double env = std::log(r.Gamma) + (i - 1) * std::log(r.GammaTilde);
    lD = std::max(lD, p.log_step_norm[i - 1] - env + pad);
    lD = std::max(lD, p.log_step_d2[i - 1] - env + pad);
    lB = std::max(lB, p.log_coecc[i] - i * std::log(r.c));
    lBt = std::min(lBt, p.log_step_coecc[i - 1] - (i - 1) * std::log(r.cTilde));
  }
  l.C = std::exp(lC);
  l.D = std::exp(lD);
  l.B = std::exp(lB);
  l.BTilde = std::exp(lBt);
  return l;
}

}  // namespace detail

// Envelope fit. Rates follow per-step root envelopes over the indices
// i >= `from` (from = 1 is the plain envelope); the prefactors B, C, D absorb
// the earlier transient. When the root envelope for cTilde (or the step-norm
// envelope for GammaTilde) violates the structural inequalities, cTilde = 1
// (resp. GammaTilde = 1) is tried next, with BTilde (resp. D) absorbing the
// data. The fit scans from = 1, 2, ... up to k/2 and returns the first
// feasible ledger; the variant used is recorded in the ledger note.
inline ConstantsLedger fit_constants(const OrbitSegment& o, Flavor flavor, FitOptions opt = {}) {
  const double eta = opt.eta;
  if (!(eta > 1.0)) throw Error(ErrorKind::InvalidArgument, "slack must exceed 1");
  OrbitProfile p = orbit_profile(o);
  for (int i = 1; i <= p.k; ++i)
    if (p.log_coecc[i] >= std::log1p(-kEpsCC))
      throw Error(ErrorKind::Infeasible, "C_{xi0,i} < 1 fails at i=" + std::to_string(i));
  for (int j = 0; j < p.k; ++j)
    if (p.log_step_det[j] == -kInf)
      throw Error(ErrorKind::Infeasible,
                  "one-step derivative is singular at i=" + std::to_string(j + 1));

  double max_det = -kInf;
  for (double d : p.log_step_det) max_det = std::max(max_det, d);
  double s0 = std::max(p.log_step_norm[0], p.log_step_d2[0]);
  double gt_env = 0.0;
  for (int j = 1; j < p.k; ++j) {
    double sj = std::max(p.log_step_norm[j], p.log_step_d2[j]);
    gt_env = std::max(gt_env, (sj - s0) / j);
  }
  gt_env = std::exp(gt_env);

  std::string first_reason;
  const int last_from = std::max(1, p.k / 2);
  for (int from = 1; from <= last_from; ++from) {
    double min_root = kInf, max_root = -kInf, max_c = -kInf;
    for (int i = from; i <= p.k; ++i) {
      min_root = std::min(min_root, p.log_norm[i] / i);
      max_root = std::max(max_root, p.log_norm[i] / i);
      max_c = std::max(max_c, p.log_coecc[i] / i);
    }
    detail::FitRates base;
    base.lambda = std::exp(min_root) / eta;
    base.Gamma = eta * std::max(std::exp(max_root), 1.0 + opt.delta);
    base.c = eta * std::exp(max_c);
    base.b = eta * std::exp(max_det);
    double ct_root = 1.0;
    for (int i = std::max(2, from); i <= p.k; ++i)
      ct_root = std::min(ct_root, std::exp(p.log_step_coecc[i - 1] / (i - 1)) / eta);

    struct Variant {
      double ct, gt;
      std::string note;
    };
    std::string tag = from == 1 ? "envelope fit" : "envelope fit from i=" + std::to_string(from);
    std::vector<Variant> variants;
    if (flavor == Flavor::NonSingular) {
      variants.push_back({1.0, 1.0, tag});
    } else {
      variants.push_back({ct_root, gt_env, tag});
      if (ct_root < 1.0) variants.push_back({1.0, gt_env, tag + ", cTilde = 1"});
      if (gt_env > 1.0) {
        variants.push_back({ct_root, 1.0, tag + ", GammaTilde = 1"});
        if (ct_root < 1.0) variants.push_back({1.0, 1.0, tag + ", cTilde = GammaTilde = 1"});
      }
    }
    for (const auto& v : variants) {
      detail::FitRates r = base;
      r.cTilde = v.ct;
      r.GammaTilde = v.gt;
      ConstantsLedger l = detail::prefactors_for(p, r, flavor);
      l.note = v.note;
      auto sv = structural_violations(l);
      std::string reason;
      if (!sv.empty()) {
        reason = sv.front() + " fails";
      } else {
        auto rep = check_quasi_hyperbolic(o, l);
        if (auto f = rep.first_failure()) reason = f->name + " fails at i=" + std::to_string(f->i);
      }
      if (reason.empty()) return l;
      if (first_reason.empty()) first_reason = reason;
    }
  }
  throw Error(ErrorKind::Infeasible, first_reason);
}

// ---------------------------------------------------------------------------
// Auxiliary constants

struct AuxiliaryConstants {
  double Q0 = 0, K1 = 0;
  double Q1 = 0, Q2 = 0, Q3 = 0, Q4 = 0;
  double Qt1 = 0, Qt2 = 0, Qt3 = 0, Qt4 = 0;
  double Q = 0, K2 = 0;
  bool valid_I = false;
  bool valid_II = false;
  // K2 is a max over one branch only (the other is undefined for this ledger).
  bool k2_restricted = false;
};

inline AuxiliaryConstants auxiliary_constants(const ConstantsLedger& in) {
  ConstantsLedger l = in.normalized();
  const double B = l.B, Bt = l.BTilde, C = l.C, D = l.D, G = l.Gamma, Gt = l.GammaTilde;
  const double la = l.lambda, b = l.b, c = l.c, ct = l.cTilde;
  auto pos = [](double den, const char* what) {
    if (!(den > 0.0)) throw Error(ErrorKind::DomainViolation, std::string(what) + " <= 0");
    return den;
  };
  AuxiliaryConstants a;
  a.Q0 = std::sqrt(2.0 / pos(1.0 - B * B * c * c, "1 - B^2 c^2"));
  a.K1 = a.Q0 * a.Q0 / kSqrt2;
  a.Q = B * D * D * D * std::pow(G, 4) * Gt / (C * C * la * la * pos(G * G * Gt - b, "Gamma^2 GammaTilde - b"));
  a.valid_I = uses_type_I(l.flavor);
  a.valid_II = uses_type_II(l.flavor);
  double k2 = 0.0;
  if (a.valid_I) {
    a.Q1 = B * D + a.Q0 * B * D * D * D * G / (C * pos(la - G * Gt * c, "lambda - Gamma GammaTilde c"));
    a.Q2 = 1.0 / C + a.Q0 * D * D * G * la / (C * C * pos(la * la - Gt * b, "lambda^2 - GammaTilde b"));
    a.Q3 = a.Q1 * D * G * G * Gt / la;
    a.Q4 = a.Q1 * a.Q2 * D * std::pow(G, 5) * std::pow(Gt, 4) /
           (la * la * pos(std::pow(la, 3) - std::pow(G * Gt, 3) * c,
                          "lambda^3 - Gamma^3 GammaTilde^3 c"));
    k2 = std::max(k2, a.K1 * (a.Q3 + a.Q4 + a.Q));
  }
  if (a.valid_II) {
    a.Qt1 = B * D + a.Q0 * B * ct / (Bt * pos(ct - c, "cTilde - c"));
    a.Qt2 = 1.0 / C + a.Q0 * D * la * la * ct / (Bt * C * C * pos(la * la * ct - b, "lambda^2 cTilde - b"));
    a.Qt3 = a.Qt1 * D * G;
    a.Qt4 = a.Qt1 * a.Qt2 * D * std::pow(G, 4) * Gt /
            (la * la * pos(la * la * ct * ct - G * G * Gt * c, "lambda^2 cTilde^2 - Gamma^2 GammaTilde c"));
    k2 = std::max(k2, a.K1 * (a.Qt3 + a.Qt4 + a.Q));
  }
  a.K2 = k2;
  a.k2_restricted = !(a.valid_I && a.valid_II);
  return a;
}

// ---------------------------------------------------------------------------
// Feasibility scan of the constant inequalities

struct ScanGrid {
  double Gamma = 1.5;
  std::vector<double> ratio;  // lambda / Gamma
  std::vector<double> c;
  std::vector<double> b;
  std::vector<double> GammaTilde;
  std::vector<double> cTilde;
};

struct ScanCell {
  double lambda, Gamma, c, b, GammaTilde, cTilde;
  bool feasible;       // the flavor's own constant inequalities
  bool structural_ok;  // full ledger structure including the shared ones
  std::string reason;  // first violated inequality
};

// Inequalities specific to the flavor: the non-singular set, (I) or (II).
inline std::vector<std::string> flavor_condition_violations(const ConstantsLedger& l) {
  std::vector<std::string> all = structural_violations(l);
  if (l.flavor == Flavor::NonSingular) return all;
  std::vector<std::string> own;
  static const std::vector<std::string> shared = {"GammaTilde >= 1", "Gamma > max{lambda, 1}",
                                                  "b < Gamma^2 GammaTilde", "B >= 1", "D >= 1",
                                                  "0 < BTilde <= 1", "0 < C <= 1"};
  for (const auto& s : all)
    if (std::find(shared.begin(), shared.end(), s) == shared.end()) own.push_back(s);
  return own;
}

inline std::vector<ScanCell> feasibility_region_scan(Flavor flavor, const ScanGrid& g) {
  std::vector<ScanCell> out;
  for (double r : g.ratio)
    for (double c : g.c)
      for (double b : g.b)
        for (double gt : g.GammaTilde)
          for (double ct : g.cTilde) {
            ConstantsLedger l;
            l.flavor = flavor;
            l.Gamma = g.Gamma;
            l.lambda = r * g.Gamma;
            l.c = c;
            l.b = b;
            l.GammaTilde = gt;
            l.cTilde = ct;
            auto own = flavor_condition_violations(l);
            auto full = structural_violations(l);
            ScanCell cell{l.lambda, l.Gamma, c, b, gt, ct, own.empty(), full.empty(), ""};
            if (!own.empty()) cell.reason = own.front();
            else if (!full.empty()) cell.reason = full.front();
            out.push_back(cell);
          }
  return out;
}

}  // namespace hypcoord
