#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include "phi4/io.hpp"

using namespace phi4;

namespace {

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "phi4_test_io";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("minimal config fills the documented defaults") {
  const RunConfig c = parse_config("grid.d = 3\ngrid.n = 16\n");
  CHECK(c.d == 3);
  CHECK(c.n == 16);
  CHECK(c.model.epsilon == 1e-3);
  CHECK(c.model.p == 24);
  CHECK(c.model.c == 1.0);
  CHECK(c.burn_in == 0.5);
  CHECK_FALSE(c.c2.has_value());
  CHECK(c == RunConfig{});
}

TEST_CASE("parse errors name the line") {
  auto message = [](const char* text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK_THROWS_AS(parse_config("grid.n = 12"), ConfigError);
  CHECK(message("grid.n = 12").find("power of two") != std::string::npos);
  CHECK(message("# header\ngrid.d = 2\ngrid.q = 1\n").find("line 3") != std::string::npos);
  CHECK(message("grid.d = two").find("line 1") != std::string::npos);
  CHECK(message("grid.d = 2\ngrid.d = 3").find("duplicate") != std::string::npos);
  CHECK(message("model.formulation = picard").find("line 1") != std::string::npos);
  CHECK(message("time.dt = 1e-3 junk").find("line 1") != std::string::npos);
  CHECK(message("model.p = 23").find("even") != std::string::npos);
  CHECK(message("grid.d = 3\nmodel.formulation = dpd2").find("dpd2") != std::string::npos);
  CHECK(message("experiment.name = nope").find("nope") != std::string::npos);
  CHECK(message("just text").find("line 1") != std::string::npos);
  CHECK_THROWS_AS(load_config(temp_path("missing.cfg")), ConfigError);
}

TEST_CASE("comments, blanks and lists") {
  const RunConfig c = parse_config(
      "  # leading comment\n\n"
      "experiment.lambdas = 1, 10,100   # trailing\n"
      "model.c2 = 0.25\n"
      "experiment.noise = false\r\n"
      "ensemble.root_seed = 18446744073709551615\n");
  CHECK(c.lambdas == std::vector<double>{1.0, 10.0, 100.0});
  REQUIRE(c.c2.has_value());
  CHECK(*c.c2 == 0.25);
  CHECK_FALSE(c.noise);
  CHECK(c.root_seed == std::numeric_limits<std::uint64_t>::max());
}

TEST_CASE("serialize then parse is the identity") {
  RunConfig c;
  c.d = 2;
  c.n = 64;
  c.model.m = -0.1 + 0.2;  // a value with no short decimal form
  c.model.formulation = Formulation::dpd2;
  c.model.com1 = Com1Kernel::massless;
  c.c2 = 1.0 / 3.0;
  c.dt = 1e-3;
  c.dt_values = {3e-4, 1.5e-4};
  c.experiment = "invariant_measure";
  c.output_dir = "runs/a b";
  const std::string text = serialize_config(c);
  const RunConfig back = parse_config(text);
  CHECK(back == c);
  CHECK(serialize_config(back) == text);
  CHECK(parse_config(serialize_config(RunConfig{})) == RunConfig{});
}

TEST_CASE("config hash is FNV-1a of the canonical form") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  RunConfig a, b;
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a) == fnv1a64(serialize_config(a)));
  b.root_seed = 2;
  CHECK(config_hash(a) != config_hash(b));
  // Formatting differences in the source text do not change the hash.
  CHECK(config_hash(parse_config("time.dt=0.0001")) == config_hash(parse_config("time.dt = 1e-4 # same")));
  CHECK(config_hash_hex(a).size() == 16);
}

TEST_CASE("field snapshots round trip bit-exactly") {
  auto g = make_grid(1, 8);
  Field f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::ldexp(1.0, static_cast<int>(i)) / 3.0 - 0.5;
  f[3] = -0.0;
  f[5] = std::numeric_limits<double>::denorm_min();
  const std::string path = temp_path("f1.bin");
  write_field_snapshot(f, path);
  const std::string bytes = slurp(path);
  REQUIRE(bytes.size() == 88);
  CHECK(bytes.substr(0, 8) == "PHI4FLD1");
  CHECK(static_cast<unsigned char>(bytes[8]) == 1);
  CHECK(static_cast<unsigned char>(bytes[12]) == 8);
  CHECK(static_cast<unsigned char>(bytes[16]) == 8);
  const Field back = read_field_snapshot(path);
  CHECK(back.grid()->dim() == 1);
  CHECK(back.grid()->points_per_axis() == 8);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::bit_cast<std::uint64_t>(back[i]) == std::bit_cast<std::uint64_t>(f[i]));

  auto g3 = make_grid(3, 8);
  Field h(g3);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = std::sin(0.1 * static_cast<double>(i));
  write_field_snapshot(h, temp_path("f3.bin"));
  const Field h2 = read_field_snapshot(temp_path("f3.bin"));
  for (std::size_t i = 0; i < h.size(); ++i) CHECK(h2[i] == h[i]);
}

TEST_CASE("damaged snapshots fail cleanly") {
  const std::string path = temp_path("bad.bin");
  write_field_snapshot(Field(make_grid(1, 8), 1.0), path);
  const std::string good = slurp(path);
  write_text_file(path, good.substr(0, 50));
  CHECK_THROWS_AS(read_field_snapshot(path), std::runtime_error);
  write_text_file(path, good.substr(0, 10));
  CHECK_THROWS_AS(read_field_snapshot(path), std::runtime_error);
  std::string bad = good;
  bad[3] = 'X';
  write_text_file(path, bad);
  CHECK_THROWS_AS(read_field_snapshot(path), std::runtime_error);
  bad = good;
  bad[16] = 9;  // count disagrees with n^d
  write_text_file(path, bad);
  CHECK_THROWS_AS(read_field_snapshot(path), std::runtime_error);
  CHECK_THROWS_AS(read_field_snapshot(temp_path("nothing.bin")), std::runtime_error);
}

TEST_CASE("versioned CSV") {
  const std::vector<std::string> cols{"t", "ratio"};
  CHECK(csv_version_line(cols) == "# phi4 csv v1 t,ratio");
  const std::string csv = format_csv(cols, {{"0.25", "1.1"}, {"0.5", "1"}});
  CHECK(csv == "# phi4 csv v1 t,ratio\nt,ratio\n0.25,1.1\n0.5,1\n");
  CHECK_THROWS(format_csv(cols, {{"1"}}));
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
