// Acceptance run: one PASS/FAIL line per criterion. Reports of every suite are
// written under <dir>/run1 and, for the determinism criterion, regenerated
// under <dir>/run2 and compared byte for byte.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <hypcoord/commands.hpp>

using namespace hypcoord;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double limit_s;
  std::function<Outcome(const fs::path&)> run;
};

void save(const fs::path& dir, const std::string& stem, const std::vector<BoundReport>& reports,
          nlohmann::json extra = nlohmann::json::object()) {
  write_file(dir / (stem + ".csv"), report_csv(reports));
  extra["reports"] = nlohmann::json::array();
  for (const auto& r : reports) extra["reports"].push_back(report_json(r));
  write_file(dir / (stem + ".json"), dump_json(extra));
}

Outcome verdict(const std::vector<BoundReport>& reports) {
  std::size_t rows = 0, bad = 0;
  Outcome o;
  for (const auto& r : reports) {
    rows += r.rows.size();
    bad += r.violations();
    if (auto f = r.first_failure(); f && o.ok) {
      o.ok = false;
      o.detail = r.name + ": " + f->name + " fails at i=" + std::to_string(f->i) +
                 ", k=" + std::to_string(f->k);
    }
  }
  if (o.ok) o.detail = std::to_string(rows) + " checks, 0 violations";
  else o.detail += " (" + std::to_string(bad) + " of " + std::to_string(rows) + " violated)";
  return o;
}

Outcome frames(const fs::path& dir) {
  BoundReport r = frame_oracle_sweep({});
  save(dir, "c1_frame_oracle", {r});
  return verdict({r});
}

Outcome coecc(const fs::path& dir) {
  BoundReport r = coeccentricity_sweep({});
  save(dir, "c2_coeccentricity", {r});
  return verdict({r});
}

Outcome apriori(const fs::path& dir) {
  BoundReport a = random_cocycle_sweep({}), b = henon_apriori(20);
  save(dir, "c3_apriori", {a, b});
  return verdict({a, b});
}

Outcome explicit_convergence(const fs::path& dir) {
  std::vector<BoundReport> reps;
  nlohmann::json ledgers = nlohmann::json::array();
  Outcome extra;
  auto take = [&](const std::string& id, const ConvergenceRun& run) {
    BoundReport r = run.report;
    r.id = id;
    reps.push_back(r);
    ledgers.push_back({{"id", id}, {"ledger", ledger_json(run.ledger)}});
    if (!run.certificate.verdict && extra.ok) {
      extra.ok = false;
      extra.detail = id + ": certificate rejected";
    }
    for (const auto& row : r.rows)
      if (!(row.margin >= 0.0) && extra.ok) {
        extra.ok = false;
        extra.detail = id + ": " + row.name + " has negative margin at i=" + std::to_string(row.i);
      }
  };
  int n = 0;
  for (Vec2 p : henon_fixture_points())
    take("henon_" + std::to_string(n++), certified_convergence(henon_map(), p, 20, Flavor::SingularII));
  for (Flavor f : {Flavor::SingularI, Flavor::SingularII})
    take(std::string("diagonal_") + to_string(f),
         certified_convergence(linear_map({2.0, 0.0, 0.0, 0.5}), {0.3, 0.2}, 20, f));
  save(dir, "c4_explicit_convergence", reps, {{"ledgers", ledgers}});
  Outcome o = verdict(reps);
  return o.ok && !extra.ok ? extra : o;
}

Outcome aux(const fs::path& dir) {
  BoundReport r = aux_constants_sweep({});
  save(dir, "c5_auxiliary_constants", {r});
  return verdict({r});
}

Outcome norms(const fs::path& dir) {
  BoundReport r = norm_lemma_sweep({});
  save(dir, "c6_norm_lemmas", {r});
  return verdict({r});
}

Outcome variation(const fs::path& dir) {
  std::vector<BoundReport> reps;
  nlohmann::json fd = nlohmann::json::array();
  int n = 0;
  for (Vec2 p : henon_fixture_points()) {
    VariationRun run = slow_variation_prefixes(henon_map(), p, 8, 20, Flavor::SingularII, 1.05, 1e-5);
    run.report.id = "henon_" + std::to_string(n++);
    reps.push_back(run.report);
    for (const auto& r : run.results)
      fd.push_back({{"id", run.report.id}, {"k", r.fd.k}, {"norm", r.fd.norm},
                    {"norm_half_step", r.fd_half.norm}, {"fd_tolerance", r.fd_tol}});
  }
  save(dir, "c7_slow_variation", reps, {{"frame_derivative", fd}});
  return verdict(reps);
}

Outcome foliations(const fs::path& dir) {
  FoliationChecks fc = foliation_checks(henon_map(), {-1, 1, -1, 1}, 2, 0.1, 0.5, 1e-2,
                                        {FieldTag::Stable, FieldTag::Unstable});
  BoundReport w;
  w.name = "foliation_witness";
  w.tol = 0.0;
  w.add(fc.witness_i, 2, "non-orthogonality witness at i < k (rad)", 1e-2, fc.witness_deviation);
  write_file(dir / "c8_foliation_curves.csv", curves_csv(fc.grid.curves));
  write_file(dir / "c8_foliation.svg", curves_svg(fc.grid.curves, {-1, 1, -1, 1}));
  save(dir, "c8_foliation", {fc.report, w},
       {{"order_ratio", fc.order_ratio}, {"seed_failures", fc.grid.failures.size()}});
  Outcome o = verdict({fc.report, w});
  if (o.ok && !fc.grid.failures.empty()) {
    o.ok = false;
    o.detail = std::to_string(fc.grid.failures.size()) + " seeds failed to integrate";
  }
  return o;
}

// The command-line subcommands, through the same code path as the tool.
Outcome commands(const fs::path& dir) {
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> runs = {
      {"orbit", {}},
      {"frames", {}},
      {"certify", {}},
      {"aux-constants", {}},
      {"verify-convergence", {}},
      {"verify-variation", {{"k", "8"}, {"fit_k", "20"}}},
      {"foliate", {{"k", "2"}, {"spacing", "0.1"}, {"step", "0.01"}}},
      {"oracle-check", {{"trials", "200"}, {"grid_n", "100000"}}},
      {"scan-constants", {}},
  };
  Outcome o;
  std::ostringstream sink;
  for (const auto& [name, kv] : runs) {
    RunConfig cfg;
    for (const auto& [k, v] : kv) cfg.set(k, v);
    cfg.out = (dir / "cli" / name).string();
    std::ostringstream err;
    if (run_command(name, cfg, sink, err) != kExitPass && o.ok) {
      o.ok = false;
      o.detail = name + ": " + err.str();
    }
  }
  return o;
}

std::vector<std::pair<std::string, Outcome>> run_suite(const std::vector<Criterion>& cs,
                                                       const fs::path& dir, bool print) {
  std::vector<std::pair<std::string, Outcome>> out;
  for (const auto& c : cs) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(dir);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.ok && dt > c.limit_s) {
      o.ok = false;
      o.detail += "; runtime over the limit";
    }
    if (print) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.2fs / %.0fs", dt, c.limit_s);
      std::cout << (o.ok ? "PASS" : "FAIL") << "  criterion " << c.id << "  " << c.title << "  ["
                << buf << "]  " << o.detail << std::endl;
    }
    out.emplace_back(c.title, o);
  }
  return out;
}

std::vector<fs::path> files_under(const fs::path& root) {
  std::vector<fs::path> v;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) v.push_back(fs::relative(e.path(), root));
  std::sort(v.begin(), v.end());
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  fs::path root = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "hypcoord_acceptance";
  fs::remove_all(root);

  const std::vector<Criterion> criteria = {
      {1, "frame correctness", 60, frames},
      {2, "co-eccentricity identities", 5, coecc},
      {3, "a-priori estimates", 120, apriori},
      {4, "certificate and explicit convergence", 30, explicit_convergence},
      {5, "auxiliary constants", 5, aux},
      {6, "norm lemmas", 60, norms},
      {7, "slow variation", 120, variation},
      {8, "foliations", 60, foliations},
  };
  const std::vector<Criterion> cli = {{0, "command line", 300, commands}};

  bool all = true;
  for (const auto& [t, o] : run_suite(criteria, root / "run1", true)) all = all && o.ok;
  Outcome cli_run = run_suite(cli, root / "run1", false).front().second;

  auto t0 = std::chrono::steady_clock::now();
  run_suite(criteria, root / "run2", false);
  run_suite(cli, root / "run2", false);
  double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  auto a = files_under(root / "run1"), b = files_under(root / "run2");
  Outcome det;
  if (!cli_run.ok) {
    det = {false, "command line: " + cli_run.detail};
  } else if (a != b) {
    det = {false, "the two runs wrote different file sets"};
  } else {
    for (const auto& f : a)
      if (slurp(root / "run1" / f) != slurp(root / "run2" / f)) {
        det = {false, f.string() + " differs"};
        break;
      }
    if (det.ok) det.detail = std::to_string(a.size()) + " report files byte-identical";
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2fs", dt);
  std::cout << (det.ok ? "PASS" : "FAIL") << "  criterion 9  determinism  [" << buf << "]  "
            << det.detail << std::endl;
  all = all && det.ok;
  return all ? 0 : 1;
}
