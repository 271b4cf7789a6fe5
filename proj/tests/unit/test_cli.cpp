#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "phi4/cli.hpp"
#include "phi4/io.hpp"

using namespace phi4;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "phi4");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "phi4_test_cli";
  fs::create_directories(dir);
  return dir;
}

std::string write_cfg(const std::string& name, const std::string& body) {
  const fs::path p = scratch() / name;
  write_text_file(p.string(), body + "output.dir = " + (scratch() / "out").string() + "\n");
  return p.string();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> v;
  std::stringstream ss(text);
  for (std::string l; std::getline(ss, l);) v.push_back(l);
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const std::string kGrid = "grid.d = 1\ngrid.n = 16\nmodel.c2 = 0\ntime.dt = 1e-3\ntime.burn_in = 0.01\n";
const std::string kSmall = kGrid + "time.horizon = 0.01\n";

}  // namespace

TEST_CASE("version and usage") {
  Result r = run({"version"});
  CHECK(r.code == 0);
  CHECK(r.out == "1.0.0\n");
  r = run({});
  CHECK(r.code == 2);
  r = run({"frobnicate"});
  CHECK(r.code == 2);
  CHECK(r.err.find("simulate") != std::string::npos);
  CHECK(r.err.find("besov-test") != std::string::npos);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"harness"}).code == 2);  // --config is required
}

TEST_CASE("config problems exit with 2") {
  Result r = run({"harness", "--config", (scratch() / "does_not_exist.cfg").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("config error") != std::string::npos);
  CHECK(run({"simulate", "--config", write_cfg("bad.cfg", "grid.n = 12\n")}).code == 2);
  CHECK(run({"harness", "--config", write_cfg("none.cfg", kSmall)}).code == 2);
  CHECK(run({"harness", "--config", write_cfg("none2.cfg", kSmall), "--experiment", "nope"}).code == 2);
  CHECK(run({"besov-test", "--kind", "holder"}).code == 2);
  CHECK(run({"gronwall", "--sigma", "1.5"}).code == 2);
}

TEST_CASE("gronwall emits a versioned table") {
  Result r = run({"gronwall", "--sigma", "0.5", "--s", "1,50"});
  REQUIRE(r.code == 0);
  const auto ls = lines_of(r.out);
  REQUIRE(ls.size() == 4);
  CHECK(ls[0] == "# phi4 csv v1 sigma,s,log_series,rate,target,rel_err");
  CHECK(ls[1] == "sigma,s,log_series,rate,target,rel_err");
  CHECK(ls[3].rfind("0.5,50,", 0) == 0);
  const double rel = std::stod(ls[3].substr(ls[3].rfind(',') + 1));
  CHECK(rel < 0.05);
}

TEST_CASE("besov-test runs one kind") {
  const fs::path out = scratch() / "besov.csv";
  Result r = run({"besov-test", "--kind", "sobolev", "--samples", "4", "--seed", "3", "--output", out.string()});
  REQUIRE(r.code == 0);
  const auto ls = lines_of(slurp(out));
  REQUIRE(ls.size() == 3);
  CHECK(ls[0] == "# phi4 csv v1 tag,param,fitted_exponent,worst_constant,n,seed");
  CHECK(ls[2].rfind("sobolev,", 0) == 0);
}

TEST_CASE("simulate writes a trajectory and snapshots") {
  for (const char* form : {"paracontrolled", "direct"}) {
    const std::string cfg_path = write_cfg(std::string("sim_") + form + ".cfg",
                                           std::string(kSmall) + "time.snapshot_every = 0.005\nmodel.formulation = " +
                                               form + "\n");
    Result r = run({"simulate", "--config", cfg_path});
    REQUIRE(r.code == 0);
    const fs::path csv = lines_of(r.out).at(0);
    const auto ls = lines_of(slurp(csv));
    REQUIRE(ls.size() == 13);
    CHECK(ls[0] == "# phi4 csv v1 t,v_sup,w_sup,x_sup,v_besov,w_besov,x_besov,blowup");
    CHECK(ls[12].rfind("0.01", 0) == 0);
    CHECK(ls[12].back() == '0');
    const fs::path dir = csv.parent_path();
    CHECK(dir.filename() == config_hash_hex(load_config(cfg_path)));
    for (const char* snap : {"x_00000000.bin", "x_00000005.bin", "x_00000010.bin"})
      CHECK(read_field_snapshot((dir / snap).string()).size() == 16);
    CHECK(load_config((dir / "config.txt").string()) == load_config(cfg_path));
  }
}

TEST_CASE("diagrams writes a regularity report") {
  Result r = run({"diagrams", "--config", write_cfg("diag.cfg", kSmall)});
  REQUIRE(r.code == 0);
  const auto ls = lines_of(slurp(lines_of(r.out).at(0)));
  REQUIRE(ls.size() == 9);
  CHECK(ls[0] == "# phi4 csv v1 tag,alpha,measured_norm");
  CHECK(ls[2].rfind("1,", 0) == 0);
  CHECK(ls[8].rfind("30_holder,0.125,", 0) == 0);
  CHECK(run({"diagrams", "--config", write_cfg("diag0.cfg", std::string(kSmall) + "experiment.noise = false\n")}).code ==
        2);
}

TEST_CASE("harness exit code follows the verdict") {
  const std::string base = kGrid +
                           "model.formulation = direct\nexperiment.noise = false\nexperiment.profile = constant\n"
                           "experiment.name = blowup_control\n";
  Result pass = run({"harness", "--config", write_cfg("bc.cfg", base + "experiment.amplitude = 2\ntime.horizon = 0.2\n")});
  CHECK(pass.code == 0);
  CHECK(pass.out.rfind("PASS blowup_control", 0) == 0);
  const fs::path dir = lines_of(pass.out).at(1);
  CHECK(fs::exists(dir / "report.csv"));
  CHECK(slurp(dir / "verdict.txt").rfind("PASS", 0) == 0);
  // Too short for the +X^3 control to blow up.
  Result fail = run({"harness", "--config", write_cfg("bc_short.cfg", base + "experiment.amplitude = 0.1\ntime.horizon = 0.01\n")});
  CHECK(fail.code == 1);
  CHECK(fail.out.rfind("FAIL", 0) == 0);
}
