#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <hypcoord/commands.hpp>

namespace {

const std::vector<std::pair<std::string, std::string>> kFlags = {
    {"map", "henon, standard, lorenz2d or linear"},
    {"a", "Henon a"},
    {"b", "Henon b"},
    {"K", "standard map K"},
    {"alpha", "lorenz2d alpha"},
    {"beta", "lorenz2d beta"},
    {"rho", "lorenz2d rho"},
    {"kappa", "lorenz2d kappa"},
    {"mu", "lorenz2d mu"},
    {"nu", "lorenz2d nu"},
    {"matrix", "linear map entries m11,m12,m21,m22"},
    {"x0", "start point x"},
    {"y0", "start point y"},
    {"k", "orbit length / frame order"},
    {"fit_k", "orbit length used to fit the ledger (default k)"},
    {"flavor", "NonSingular, I, II or Both"},
    {"eta", "fit slack, > 1"},
    {"h", "finite-difference step"},
    {"xmin", "region"},
    {"xmax", "region"},
    {"ymin", "region"},
    {"ymax", "region"},
    {"spacing", "seed spacing"},
    {"step", "integrator step"},
    {"length", "half length of each curve"},
    {"field", "e, f or both"},
    {"out", "output directory (default $HYPCOORD_OUT or ./hypcoord_out)"},
    {"seed", "RNG seed"},
    {"trials", "random trials"},
    {"grid_n", "direction grid size"},
    {"scan_n", "points per axis of the constants scan"},
    {"ledger", "read the ledger from this file instead of fitting"},
    {"format", "csv, json or csv,json"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperbolic coordinates of planar maps: frames, certificates, bounds, foliations"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  std::string config_path;
  std::map<std::string, std::string> values;
  for (const auto& info : hypcoord::command_table()) {
    CLI::App* sub = app.add_subcommand(info.name, info.help);
    sub->set_help_flag("--help", "Print this help message and exit");
    sub->add_option("--config", config_path, "flat key = value file; flags override it");
    for (const auto& [key, help] : kFlags) sub->add_option("--" + key, values[key], help);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : hypcoord::kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  hypcoord::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& [key, help] : kFlags)
      if (sub->count("--" + key) > 0) cfg.set(key, values[key]);
  } catch (const hypcoord::Error& e) {
    std::cerr << e.what() << '\n';
    return hypcoord::kExitUsage;
  }
  return hypcoord::run_command(sub->get_name(), cfg, std::cout, std::cerr);
}
