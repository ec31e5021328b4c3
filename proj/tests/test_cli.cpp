#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <hypcoord/commands.hpp>

using namespace hypcoord;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("hypcoord_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(const std::string& args, const fs::path& dir) {
  fs::path o = dir / "stdout.txt", e = dir / "stderr.txt";
  std::string cmd = std::string("HYPCOORD_OUT=") + (dir / "out").string() + " " +
                    HYPCOORD_CLI_PATH + " " + args + " >" + o.string() + " 2>" + e.string();
  int status = std::system(cmd.c_str());
  return {WEXITSTATUS(status), slurp(o), slurp(e)};
}

}  // namespace

TEST(RunConfig, ValidatesKeys) {
  RunConfig c;
  c.set("map", "lorenz2d");
  c.set("rho", "1.8");
  c.set("k", "7");
  EXPECT_EQ(c.k, 7);
  EXPECT_DOUBLE_EQ(c.spec().param("rho"), 1.8);
  EXPECT_THROW(c.set("k", "0"), Error);
  EXPECT_THROW(c.set("k", "2.5"), Error);
  EXPECT_THROW(c.set("h", "-1e-5"), Error);
  EXPECT_THROW(c.set("spacing", "0"), Error);
  EXPECT_THROW(c.set("eta", "1"), Error);
  EXPECT_THROW(c.set("colour", "red"), Error);
  EXPECT_THROW(c.set("map", "tent"), Error);
  EXPECT_THROW(c.set("field", "g"), Error);
  c.set("matrix", "0, 1, -1, 0");
  EXPECT_DOUBLE_EQ(c.params.at("m21"), -1.0);
  EXPECT_THROW(c.set("matrix", "1,2,3"), Error);
}

TEST(RunConfig, FileThenOverride) {
  fs::path d = scratch("config");
  std::ofstream(d / "run.cfg") << "# fixture\nmap = henon\nk = 12\nflavor = I\n";
  RunConfig c;
  c.load_file((d / "run.cfg").string());
  EXPECT_EQ(c.k, 12);
  EXPECT_EQ(c.flavor, Flavor::SingularI);
  c.set("k", "5");
  EXPECT_EQ(c.k, 5);
  std::ofstream(d / "bad.cfg") << "k = 3\nunknown = 1\n";
  EXPECT_THROW(c.load_file((d / "bad.cfg").string()), Error);
}

TEST(Commands, InProcessCertify) {
  RunConfig c;
  c.k = 20;
  CommandResult r = cmd_certify(c);
  EXPECT_TRUE(r.pass);
  ASSERT_FALSE(r.files.empty());
  EXPECT_EQ(r.files.front().first, "ledger.txt");
  ConstantsLedger l = read_ledger(r.files.front().second);
  EXPECT_EQ(l.flavor, Flavor::SingularII);
}

TEST(Commands, ReportJsonUsesNullForInfinity) {
  BoundReport r;
  r.name = "t";
  r.add_log(0, 0, "x", -kInf, 0.0);
  std::string s = report_json(r).dump();
  EXPECT_NE(s.find("\"margin\":null"), std::string::npos);
}

TEST(Cli, CertifyHenonPasses) {
  fs::path d = scratch("certify");
  CliRun r = cli("certify --map henon --a 1.4 --b 0.3 --x0 0 --y0 0 --k 20 --flavor II", d);
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(d / "out" / "ledger.txt"));
  EXPECT_TRUE(fs::exists(d / "out" / "certificate.json"));
}

TEST(Cli, RotationFailsWithTheInequality) {
  fs::path d = scratch("rotation");
  CliRun r = cli("certify --map linear --matrix 0,1,-1,0 --k 5", d);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("C_{xi0,i} < 1 fails at i=1"), std::string::npos) << r.err;
}

TEST(Cli, VerificationFailureNamesTheFirstInequality) {
  fs::path d = scratch("badledger");
  std::ofstream(d / "ledger.txt") << "flavor = II\nGamma = 1.2\nlambda = 1.1\nb = 0.5\nc = 0.3\n"
                                     "cTilde = 1\nGammaTilde = 1\nB = 1\nBTilde = 1\nC = 1\nD = 1\n";
  CliRun r = cli("certify --k 10 --ledger " + (d / "ledger.txt").string(), d);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("fails"), std::string::npos) << r.err;
}

TEST(Cli, UsageErrorsExitTwo) {
  fs::path d = scratch("usage");
  EXPECT_EQ(cli("certify --bogus 1", d).code, 2);
  EXPECT_EQ(cli("frames --k -3", d).code, 2);
  EXPECT_EQ(cli("frames --map tent", d).code, 2);
  EXPECT_EQ(cli("nosuchcommand", d).code, 2);
  EXPECT_EQ(cli("", d).code, 2);
}

TEST(Cli, EverySubcommandHasHelp) {
  fs::path d = scratch("help");
  for (const auto& c : command_table()) {
    CliRun r = cli(c.name + " --help", d);
    EXPECT_EQ(r.code, 0) << c.name;
    EXPECT_NE(r.out.find(c.help.substr(0, 20)), std::string::npos) << c.name;
  }
}

TEST(Cli, ConfigFileAndFlagOverride) {
  fs::path d = scratch("cfgfile");
  std::ofstream(d / "run.cfg") << "map = henon\nk = 4\nout = " << (d / "fromcfg").string() << "\n";
  CliRun r = cli("orbit --config " + (d / "run.cfg").string() + " --k 6", d);
  ASSERT_EQ(r.code, 0) << r.err;
  std::string csv = slurp(d / "fromcfg" / "orbit.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 7);
}

TEST(Cli, OutputsAreDeterministic) {
  fs::path d = scratch("determinism");
  const std::string runs[] = {"oracle-check --seed 5 --trials 50 --grid_n 20000",
                              "verify-convergence --k 12", "verify-variation --k 4 --fit_k 20",
                              "foliate --k 2 --spacing 0.5 --step 0.02 --length 0.2",
                              "scan-constants --scan_n 4", "frames --k 6", "aux-constants"};
  for (const auto& args : runs) {
    ASSERT_EQ(cli(args + " --out " + (d / "a").string(), d).code, 0) << args;
    ASSERT_EQ(cli(args + " --out " + (d / "b").string(), d).code, 0) << args;
  }
  int files = 0;
  for (const auto& e : fs::directory_iterator(d / "a")) {
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(d / "b" / e.path().filename())) << e.path();
  }
  EXPECT_GT(files, 10);
}
