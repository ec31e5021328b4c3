#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bounds.hpp"
#include "certificate.hpp"
#include "errors.hpp"
#include "foliation.hpp"
#include "planar_maps.hpp"

namespace hypcoord {

// ---------------------------------------------------------------------------
// Run configuration: flat `key = value`, the same keys as the CLI flags.

inline constexpr const char* kOutEnv = "HYPCOORD_OUT";

struct RunConfig {
  std::string map = "henon";
  std::map<std::string, double> params;
  double x0 = 0.0, y0 = 0.0;
  int k = 20;
  int fit_k = 0;  // orbit length for fitting the ledger; 0 means k
  Flavor flavor = Flavor::SingularII;
  double eta = 1.05;
  double h = 1e-5;
  Rect rect{-1.0, 1.0, -1.0, 1.0};
  double spacing = 0.25;
  double step = 1e-3;
  double length = 0.5;
  std::string field = "both";
  std::string out;
  std::uint64_t seed = 7;
  int trials = 1000;
  long grid_n = 1000000;
  int scan_n = 8;
  std::string ledger;
  bool csv = true;
  bool json = true;

  static const std::vector<std::string>& map_param_keys() {
    static const std::vector<std::string> keys = {"a",     "b",     "K",  "alpha", "beta",
                                                  "rho",   "kappa", "mu", "nu",    "m11",
                                                  "m12",   "m21",   "m22"};
    return keys;
  }

  void set(const std::string& key, const std::string& value) {
    auto positive = [&](double v) {
      if (!(v > 0.0)) throw Error(ErrorKind::InvalidArgument, key + " must be positive");
      return v;
    };
    auto positive_int = [&](const std::string& s) {
      double v = parse_double(s);
      if (!(v >= 1.0) || v != std::floor(v))
        throw Error(ErrorKind::InvalidArgument, key + " must be a positive integer");
      return v;
    };
    if (key == "map") {
      if (!builtin_registry().count(value))
        throw Error(ErrorKind::InvalidArgument, "unknown map " + value);
      map = value;
    } else if (std::find(map_param_keys().begin(), map_param_keys().end(), key) !=
               map_param_keys().end()) {
      params[key] = parse_double(value);
    } else if (key == "matrix") {
      std::vector<double> v;
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) v.push_back(parse_double(trim(item)));
      if (v.size() != 4) throw Error(ErrorKind::InvalidArgument, "matrix needs 4 entries");
      params["m11"] = v[0];
      params["m12"] = v[1];
      params["m21"] = v[2];
      params["m22"] = v[3];
    } else if (key == "x0") {
      x0 = parse_double(value);
    } else if (key == "y0") {
      y0 = parse_double(value);
    } else if (key == "k") {
      k = static_cast<int>(positive_int(value));
    } else if (key == "fit_k") {
      fit_k = static_cast<int>(positive_int(value));
    } else if (key == "scan_n") {
      scan_n = static_cast<int>(positive_int(value));
      if (scan_n < 2) throw Error(ErrorKind::InvalidArgument, "scan_n must be >= 2");
    } else if (key == "flavor") {
      flavor = parse_flavor(value);
    } else if (key == "eta") {
      eta = parse_double(value);
      if (!(eta > 1.0)) throw Error(ErrorKind::InvalidArgument, "eta must exceed 1");
    } else if (key == "h") {
      h = positive(parse_double(value));
    } else if (key == "xmin") {
      rect.xmin = parse_double(value);
    } else if (key == "xmax") {
      rect.xmax = parse_double(value);
    } else if (key == "ymin") {
      rect.ymin = parse_double(value);
    } else if (key == "ymax") {
      rect.ymax = parse_double(value);
    } else if (key == "spacing") {
      spacing = positive(parse_double(value));
    } else if (key == "step") {
      step = positive(parse_double(value));
    } else if (key == "length") {
      length = positive(parse_double(value));
    } else if (key == "field") {
      if (value != "e" && value != "f" && value != "both")
        throw Error(ErrorKind::InvalidArgument, "field must be e, f or both");
      field = value;
    } else if (key == "out") {
      out = value;
    } else if (key == "seed") {
      seed = static_cast<std::uint64_t>(positive_int(value));
    } else if (key == "trials") {
      trials = static_cast<int>(positive_int(value));
    } else if (key == "grid_n") {
      grid_n = static_cast<long>(positive_int(value));
      if (grid_n < 4) throw Error(ErrorKind::InvalidArgument, "grid_n must be >= 4");
    } else if (key == "ledger") {
      ledger = value;
    } else if (key == "format") {
      csv = value.find("csv") != std::string::npos;
      json = value.find("json") != std::string::npos;
      if (!csv && !json) throw Error(ErrorKind::InvalidArgument, "format must name csv and/or json");
    } else {
      throw Error(ErrorKind::InvalidArgument, "unknown config key " + key);
    }
  }

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidArgument, "cannot read config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    for (const auto& [key, value] : parse_key_values(ss.str())) set(key, value);
  }

  MapSpec spec() const { return make_map(map, params); }

  Vec2 start() const { return {x0, y0}; }

  std::filesystem::path out_dir() const {
    if (!out.empty()) return out;
    if (const char* env = std::getenv(kOutEnv)) return env;
    return "hypcoord_out";
  }
};

// ---------------------------------------------------------------------------
// Serialization

inline std::string csv_number(double x) { return format_double(x); }

inline std::string report_csv(const std::vector<BoundReport>& reports) {
  std::ostringstream os;
  os << "report,name,i,k,lhs,rhs,margin,pass\n";
  for (const auto& r : reports)
    for (const auto& row : r.rows)
      os << r.name << ',' << '"' << row.name << '"' << ',' << row.i << ',' << row.k << ','
         << csv_number(row.lhs) << ',' << csv_number(row.rhs) << ',' << csv_number(row.margin)
         << ',' << (row.pass ? 1 : 0) << '\n';
  return os.str();
}

inline nlohmann::json report_json(const BoundReport& r) {
  nlohmann::json j;
  j["report"] = r.name;
  if (!r.id.empty()) j["id"] = r.id;
  j["tolerance"] = r.tol;
  j["verdict"] = r.verdict();
  j["violations"] = r.violations();
  nlohmann::json checks = nlohmann::json::object();
  for (const auto& row : r.rows)
    checks[row.name].push_back({{"i", row.i},
                                {"k", row.k},
                                {"lhs", row.lhs},
                                {"rhs", row.rhs},
                                {"margin", row.margin},
                                {"pass", row.pass}});
  j["checks"] = checks;
  return j;
}

inline nlohmann::json ledger_json(const ConstantsLedger& l) {
  return {{"flavor", to_string(l.flavor)},
          {"Gamma", l.Gamma},
          {"GammaTilde", l.GammaTilde},
          {"lambda", l.lambda},
          {"b", l.b},
          {"c", l.c},
          {"cTilde", l.cTilde},
          {"B", l.B},
          {"BTilde", l.BTilde},
          {"C", l.C},
          {"D", l.D},
          {"note", l.note}};
}

inline nlohmann::json aux_json(const AuxiliaryConstants& a) {
  nlohmann::json j = {{"Q0", a.Q0}, {"K1", a.K1}, {"Q", a.Q}, {"K2", a.K2},
                      {"K2_single_branch", a.k2_restricted}};
  if (a.valid_I) j["typeI"] = {{"Q1", a.Q1}, {"Q2", a.Q2}, {"Q3", a.Q3}, {"Q4", a.Q4}};
  if (a.valid_II) j["typeII"] = {{"Q1", a.Qt1}, {"Q2", a.Qt2}, {"Q3", a.Qt3}, {"Q4", a.Qt4}};
  return j;
}

inline std::string certificate_csv(const CertificateReport& c) {
  std::ostringstream os;
  os << "i,name,log_lhs,log_rhs,margin,strict,pass\n";
  for (const auto& s : c.structural) os << "0,\"" << s << "\",,,,1,0\n";
  for (const auto& r : c.rows)
    os << r.i << ",\"" << r.name << "\"," << csv_number(r.log_lhs) << ',' << csv_number(r.log_rhs)
       << ',' << csv_number(r.margin) << ',' << (r.strict ? 1 : 0) << ',' << (r.pass ? 1 : 0)
       << '\n';
  return os.str();
}

inline nlohmann::json certificate_json(const CertificateReport& c) {
  nlohmann::json j;
  j["flavor"] = to_string(c.flavor);
  j["verdict"] = c.verdict;
  j["structural_violations"] = c.structural;
  nlohmann::json checks = nlohmann::json::object();
  for (const auto& r : c.rows)
    checks[r.name].push_back({{"i", r.i},
                              {"log_lhs", r.log_lhs},
                              {"log_rhs", r.log_rhs},
                              {"margin", r.margin},
                              {"pass", r.pass}});
  j["checks"] = checks;
  return j;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + p.string());
  out << text;
}

inline std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace hypcoord
