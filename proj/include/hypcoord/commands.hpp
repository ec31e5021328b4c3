#pragma once

// Subcommands of the hypcoord tool. Each produces its output files in memory;
// run_command writes them and maps verdicts and errors to exit codes.

#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "io.hpp"
#include "suites.hpp"

namespace hypcoord {

enum ExitCode { kExitPass = 0, kExitFail = 1, kExitUsage = 2 };

struct CommandResult {
  bool pass = true;
  std::string failure;  // first failing inequality, when !pass
  std::vector<std::pair<std::string, std::string>> files;
  std::string summary;
};

struct CommandInfo {
  std::string name;
  std::string help;
  std::function<CommandResult(const RunConfig&)> run;
};

namespace detail {

inline std::string describe(const BoundRow& r) {
  std::ostringstream os;
  os << r.name << " fails at i=" << r.i << ", k=" << r.k << " (lhs " << format_double(r.lhs)
     << ", rhs " << format_double(r.rhs) << ")";
  return os.str();
}

inline void judge(CommandResult& res, const std::vector<BoundReport>& reports) {
  for (const auto& r : reports)
    if (auto f = r.first_failure()) {
      res.pass = false;
      res.failure = describe(*f);
      return;
    }
}

inline void emit_reports(CommandResult& res, const RunConfig& cfg, const std::string& stem,
                         const std::vector<BoundReport>& reports, nlohmann::json extra = {}) {
  if (cfg.csv) res.files.emplace_back(stem + ".csv", report_csv(reports));
  if (cfg.json) {
    nlohmann::json j = extra.is_null() ? nlohmann::json::object() : extra;
    j["reports"] = nlohmann::json::array();
    for (const auto& r : reports) j["reports"].push_back(report_json(r));
    res.files.emplace_back(stem + ".json", dump_json(j));
  }
  judge(res, reports);
  std::size_t rows = 0, bad = 0;
  for (const auto& r : reports) {
    rows += r.rows.size();
    bad += r.violations();
  }
  res.summary = std::to_string(rows) + " checks, " + std::to_string(bad) + " violations";
}

inline nlohmann::json map_json(const RunConfig& cfg, const MapSpec& spec) {
  nlohmann::json p = nlohmann::json::object();
  for (const auto& [k, v] : spec.parameters) p[k] = v;
  return {{"map", spec.name}, {"parameters", p}, {"x0", cfg.x0}, {"y0", cfg.y0}, {"k", cfg.k}};
}

// The ledger named in the config, or one fitted on the orbit of length `len`.
inline ConstantsLedger obtain_ledger(const RunConfig& cfg, const MapSpec& spec, int len) {
  if (!cfg.ledger.empty()) return read_ledger_file(cfg.ledger);
  FitOptions fo;
  fo.eta = cfg.eta;
  return fit_constants(compute_orbit(spec, cfg.start(), len), cfg.flavor, fo);
}

inline int fit_length(const RunConfig& cfg) { return std::max(cfg.k, cfg.fit_k); }

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int j = 0; j < n; ++j) v[j] = a + (b - a) * j / (n - 1);
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline CommandResult cmd_orbit(const RunConfig& cfg) {
  MapSpec spec = cfg.spec();
  OrbitSegment o = compute_orbit(spec, cfg.start(), cfg.k);
  std::ostringstream csv;
  csv << "j,x,y,log_norm,log_conorm,log_abs_det,coecc\n";
  nlohmann::json pts = nlohmann::json::array();
  for (int j = 0; j <= o.k; ++j) {
    NormConormDet n = norm_conorm_det(o.prefix(j));
    double cc = std::exp(n.log_conorm - n.log_norm);
    csv << j << ',' << format_double(o.points[j].x) << ',' << format_double(o.points[j].y) << ','
        << format_double(n.log_norm) << ',' << format_double(n.log_conorm) << ','
        << format_double(n.log_abs_det) << ',' << format_double(cc) << '\n';
    pts.push_back({{"j", j},
                   {"x", o.points[j].x},
                   {"y", o.points[j].y},
                   {"log_norm", n.log_norm},
                   {"log_conorm", n.log_conorm},
                   {"log_abs_det", n.log_abs_det},
                   {"coecc", cc}});
  }
  CommandResult res;
  if (cfg.csv) res.files.emplace_back("orbit.csv", csv.str());
  nlohmann::json j = detail::map_json(cfg, spec);
  j["orbit"] = pts;
  if (cfg.json) res.files.emplace_back("orbit.json", dump_json(j));
  res.summary = std::to_string(o.k + 1) + " points";
  return res;
}

inline CommandResult cmd_frames(const RunConfig& cfg) {
  MapSpec spec = cfg.spec();
  OrbitSegment o = compute_orbit(spec, cfg.start(), cfg.k);
  BoundReport rep;
  rep.name = "frame_residuals";
  rep.tol = 0.0;
  std::ostringstream csv;
  csv << "k,e_x,e_y,f_x,f_y,theta,log_norm,log_conorm,coecc,low_confidence\n";
  nlohmann::json frames = nlohmann::json::array();
  for (int k = 1; k <= o.k; ++k) {
    HyperbolicFrame h;
    try {
      h = hyperbolic_coordinates(o, k);
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::NoHyperbolicCoordinates) throw;
      csv << k << ",,,,,,,,1,\n";
      frames.push_back({{"k", k}, {"frame", nullptr}, {"reason", err.what()}});
      continue;
    }
    const Mat2& B = o.prefix(k).body;
    Vec2 Be = B * h.e, Bf = B * h.f;
    double nb = op_norm(B);
    rep.add(k, k, "orthogonality |<e,f>|", std::fabs(dot(h.e, h.f)), 1e-9);
    rep.add(k, k, "diagonal form |<Me,Mf>|/|M|^2", std::fabs(dot(Be, Bf)) / (nb * nb), 1e-9);
    csv << k << ',' << format_double(h.e.x) << ',' << format_double(h.e.y) << ','
        << format_double(h.f.x) << ',' << format_double(h.f.y) << ',' << format_double(h.theta)
        << ',' << format_double(h.sigma_max) << ',' << format_double(h.sigma_min) << ','
        << format_double(h.coecc) << ',' << (h.low_confidence ? 1 : 0) << '\n';
    frames.push_back({{"k", k},
                      {"e", {h.e.x, h.e.y}},
                      {"f", {h.f.x, h.f.y}},
                      {"theta", h.theta},
                      {"log_norm", h.sigma_max},
                      {"log_conorm", h.sigma_min},
                      {"coecc", h.coecc},
                      {"low_confidence", h.low_confidence}});
  }
  CommandResult res;
  if (cfg.csv) res.files.emplace_back("frames.csv", csv.str());
  nlohmann::json j = detail::map_json(cfg, spec);
  j["frames"] = frames;
  if (cfg.json) res.files.emplace_back("frames.json", dump_json(j));
  detail::emit_reports(res, cfg, "frame_checks", {rep});
  return res;
}

inline CommandResult cmd_certify(const RunConfig& cfg) {
  MapSpec spec = cfg.spec();
  OrbitSegment o = compute_orbit(spec, cfg.start(), cfg.k);
  ConstantsLedger l = detail::obtain_ledger(cfg, spec, cfg.k);
  CertificateReport rep = check_quasi_hyperbolic(o, l);
  CommandResult res;
  res.files.emplace_back("ledger.txt", write_ledger(l));
  if (cfg.csv) res.files.emplace_back("certificate.csv", certificate_csv(rep));
  if (cfg.json) {
    nlohmann::json j = detail::map_json(cfg, spec);
    j["ledger"] = ledger_json(l);
    j["certificate"] = certificate_json(rep);
    res.files.emplace_back("certificate.json", dump_json(j));
  }
  res.pass = rep.verdict;
  if (!rep.structural.empty())
    res.failure = rep.structural.front() + " fails";
  else if (auto f = rep.first_failure())
    res.failure = f->name + " fails at i=" + std::to_string(f->i);
  res.summary = std::to_string(rep.rows.size()) + " certificate checks, ledger " + l.note;
  return res;
}

inline CommandResult cmd_aux_constants(const RunConfig& cfg) {
  MapSpec spec = cfg.spec();
  ConstantsLedger l = detail::obtain_ledger(cfg, spec, detail::fit_length(cfg));
  AuxiliaryConstants a = auxiliary_constants(l);
  CommandResult res;
  nlohmann::json j = aux_json(a);
  if (cfg.csv) {
    std::ostringstream csv;
    csv << "name,value\n";
    for (const auto& [name, v] : j.items())
      if (v.is_number()) csv << name << ',' << format_double(v.get<double>()) << '\n';
    for (const char* branch : {"typeI", "typeII"})
      if (j.contains(branch))
        for (const auto& [name, v] : j[branch].items())
          csv << branch << '.' << name << ',' << format_double(v.get<double>()) << '\n';
    res.files.emplace_back("aux_constants.csv", csv.str());
  }
  if (cfg.json) {
    nlohmann::json out = {{"ledger", ledger_json(l)}, {"constants", j}};
    res.files.emplace_back("aux_constants.json", dump_json(out));
  }
  res.summary = "K1 = " + format_double(a.K1) + ", K2 = " + format_double(a.K2);
  return res;
}

inline CommandResult cmd_verify_convergence(const RunConfig& cfg) {
  MapSpec spec = cfg.spec();
  OrbitSegment o = compute_orbit(spec, cfg.start(), cfg.k);
  BoundReport apriori = verify_apriori_all(o);
  BoundReport angle = verify_sin_angle(o);
  ConstantsLedger l = detail::obtain_ledger(cfg, spec, detail::fit_length(cfg));
  AuxiliaryConstants a = auxiliary_constants(l);
  BoundReport expl;
  expl.name = "explicit_convergence";
  for (int k = 1; k <= cfg.k; ++k)
    expl.append(verify_explicit_convergence(compute_orbit(spec, cfg.start(), k), l, a));
  CommandResult res;
  nlohmann::json extra = detail::map_json(cfg, spec);
  extra["ledger"] = ledger_json(l);
  detail::emit_reports(res, cfg, "convergence", {apriori, angle, expl}, extra);
  return res;
}

inline CommandResult cmd_verify_variation(const RunConfig& cfg) {
  MapSpec spec = cfg.spec();
  ConstantsLedger l = detail::obtain_ledger(cfg, spec, detail::fit_length(cfg));
  AuxiliaryConstants a = auxiliary_constants(l);
  SlowVariationOptions so;
  so.h = cfg.h;
  BoundReport rep;
  rep.name = "slow_variation";
  nlohmann::json fd = nlohmann::json::array();
  for (int k = 1; k <= cfg.k; ++k) {
    SlowVariationResult r = verify_slow_variation(compute_orbit(spec, cfg.start(), k), l, a, so);
    rep.append(r.report);
    fd.push_back({{"k", k},
                  {"norm", r.fd.norm},
                  {"norm_half_step", r.fd_half.norm},
                  {"fd_tolerance", r.fd_tol},
                  {"d2_e1", r.d2_e1}});
  }
  CommandResult res;
  nlohmann::json extra = detail::map_json(cfg, spec);
  extra["ledger"] = ledger_json(l);
  extra["frame_derivative"] = fd;
  detail::emit_reports(res, cfg, "variation", {rep}, extra);
  return res;
}

inline CommandResult cmd_foliate(const RunConfig& cfg) {
  MapSpec spec = cfg.spec();
  std::vector<FieldTag> fields;
  if (cfg.field != "f") fields.push_back(FieldTag::Stable);
  if (cfg.field != "e") fields.push_back(FieldTag::Unstable);
  FoliationChecks fc =
      foliation_checks(spec, cfg.rect, cfg.k, cfg.spacing, cfg.length, cfg.step, fields);
  CommandResult res;
  res.files.emplace_back("foliation_curves.csv", curves_csv(fc.grid.curves));
  res.files.emplace_back("foliation.svg", curves_svg(fc.grid.curves, cfg.rect));
  nlohmann::json extra = detail::map_json(cfg, spec);
  nlohmann::json curves = nlohmann::json::array();
  for (std::size_t id = 0; id < fc.grid.curves.size(); ++id) {
    const auto& c = fc.grid.curves[id];
    curves.push_back({{"curve_id", id},
                      {"field", to_string(c.field)},
                      {"seed", {c.points[c.seed_index].x, c.points[c.seed_index].y}},
                      {"vertices", c.points.size()},
                      {"end", to_string(c.reason)},
                      {"start", to_string(c.start_reason)}});
  }
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : fc.grid.failures)
    failures.push_back({{"seed", {f.seed.x, f.seed.y}}, {"reason", f.reason}});
  extra["curves"] = curves;
  extra["seed_failures"] = failures;
  extra["integrator_order_ratio"] = fc.order_ratio;
  extra["witness"] = {{"deviation", fc.witness_deviation},
                      {"seed", {fc.witness_seed.x, fc.witness_seed.y}},
                      {"i", fc.witness_i}};
  detail::emit_reports(res, cfg, "foliation_checks", {fc.report}, extra);
  res.summary += ", " + std::to_string(fc.grid.curves.size()) + " curves";
  return res;
}

inline CommandResult cmd_oracle_check(const RunConfig& cfg) {
  OracleOptions opt;
  opt.seed = cfg.seed;
  opt.trials = cfg.trials;
  opt.grid_n = cfg.grid_n;
  CommandResult res;
  nlohmann::json extra = {{"seed", cfg.seed}, {"trials", cfg.trials}, {"grid_n", cfg.grid_n}};
  detail::emit_reports(res, cfg, "oracle", {frame_oracle_sweep(opt), coeccentricity_sweep(opt)},
                       extra);
  return res;
}

inline CommandResult cmd_scan_constants(const RunConfig& cfg) {
  const int n = cfg.scan_n;
  ScanGrid g;
  g.ratio = detail::linspace(0.1, 0.95, n);
  g.c = detail::linspace(0.01, 0.95, n);
  g.b = detail::linspace(0.01, 2.0, n);
  if (cfg.flavor == Flavor::NonSingular) {
    g.GammaTilde = {1.0};
    g.cTilde = {1.0};
  } else {
    g.GammaTilde = detail::linspace(1.0, 1.5, n);
    g.cTilde = detail::linspace(0.1, 1.0, n);
  }
  std::vector<ScanCell> cells = feasibility_region_scan(cfg.flavor, g);
  std::size_t feasible = 0;
  std::ostringstream csv;
  csv << "lambda,Gamma,c,b,GammaTilde,cTilde,feasible,structural_ok,reason\n";
  for (const auto& c : cells) {
    feasible += c.feasible;
    csv << format_double(c.lambda) << ',' << format_double(c.Gamma) << ',' << format_double(c.c)
        << ',' << format_double(c.b) << ',' << format_double(c.GammaTilde) << ','
        << format_double(c.cTilde) << ',' << (c.feasible ? 1 : 0) << ','
        << (c.structural_ok ? 1 : 0) << ",\"" << c.reason << "\"\n";
  }
  CommandResult res;
  if (cfg.csv) res.files.emplace_back("scan.csv", csv.str());
  if (cfg.json) {
    nlohmann::json j = {{"flavor", to_string(cfg.flavor)},
                        {"Gamma", g.Gamma},
                        {"cells", cells.size()},
                        {"feasible", feasible}};
    std::map<std::string, std::size_t> reasons;
    for (const auto& c : cells)
      if (!c.feasible) ++reasons[c.reason];
    j["first_violation_counts"] = reasons;
    res.files.emplace_back("scan.json", dump_json(j));
  }
  res.pass = feasible > 0;
  if (!res.pass) res.failure = "no feasible cell in the scanned region";
  res.summary = std::to_string(feasible) + " of " + std::to_string(cells.size()) + " cells feasible";
  return res;
}

// ---------------------------------------------------------------------------

inline const std::vector<CommandInfo>& command_table() {
  static const std::vector<CommandInfo> table = {
      {"orbit", "Iterate the map from (x0, y0) and record the prefix derivative norms, co-norms, determinants and co-eccentricities.", cmd_orbit},
      {"frames", "Hyperbolic coordinates e^(k), f^(k) of the derivative cocycle for k = 1..K, with orthogonality and diagonal-form residuals.", cmd_frames},
      {"certify", "Fit (or read) a constants ledger for the orbit and check the quasi-hyperbolicity inequalities at every index; writes ledger.txt.", cmd_certify},
      {"aux-constants", "Auxiliary constants Q0, K1, Q1..Q4, QTilde1..QTilde4, Q and K2 of a ledger.", cmd_aux_constants},
      {"verify-convergence", "A-priori frame convergence estimates and the explicit exponential bounds for a certified orbit.", cmd_verify_convergence},
      {"verify-variation", "Slow variation of the contracting field: finite-difference frame derivative against the a-priori and a-posteriori bounds.", cmd_verify_variation},
      {"foliate", "Integral curves of the e^(k) and f^(k) fields on a seed grid; orthogonality, pushforward and integrator order checks; CSV and SVG output.", cmd_foliate},
      {"oracle-check", "Closed-form SVD against the critical-angle formula and a brute-force direction grid on random matrices, plus co-eccentricity identities.", cmd_oracle_check},
      {"scan-constants", "Feasibility region of the constant inequalities for a flavor over a rate grid.", cmd_scan_constants},
  };
  return table;
}

inline const CommandInfo* find_command(const std::string& name) {
  for (const auto& c : command_table())
    if (c.name == name) return &c;
  return nullptr;
}

inline void write_outputs(const CommandResult& res, const std::filesystem::path& dir) {
  for (const auto& [name, text] : res.files) write_file(dir / name, text);
}

// Runs one subcommand, writes its files and returns the exit code.
inline int run_command(const std::string& name, const RunConfig& cfg, std::ostream& out,
                       std::ostream& err) {
  const CommandInfo* c = find_command(name);
  if (!c) {
    err << "unknown command " << name << '\n';
    return kExitUsage;
  }
  CommandResult res;
  try {
    res = c->run(cfg);
    write_outputs(res, cfg.out_dir());
  } catch (const Error& e) {
    err << e.what() << '\n';
    return e.kind() == ErrorKind::InvalidArgument ? kExitUsage : kExitFail;
  }
  out << name << ": " << (res.pass ? "pass" : "FAIL");
  if (!res.summary.empty()) out << " (" << res.summary << ")";
  out << '\n';
  for (const auto& f : res.files) out << "  wrote " << (cfg.out_dir() / f.first).string() << '\n';
  if (!res.pass) {
    err << res.failure << '\n';
    return kExitFail;
  }
  return kExitPass;
}

}  // namespace hypcoord
