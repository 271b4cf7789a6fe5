#include "phi4/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

namespace phi4 {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(std::string_view s) {
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(x))
    throw ConfigError(fmt::format("expected a finite number, got '{}'", s));
  return x;
}

long long to_integer(std::string_view s) {
  long long x = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ConfigError(fmt::format("expected an integer, got '{}'", s));
  return x;
}

int to_int(std::string_view s) {
  const long long x = to_integer(s);
  if (x < -1000000000LL || x > 1000000000LL) throw ConfigError(fmt::format("integer out of range: '{}'", s));
  return static_cast<int>(x);
}

std::uint64_t to_u64(std::string_view s) {
  std::uint64_t x = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ConfigError(fmt::format("expected an unsigned integer, got '{}'", s));
  return x;
}

bool to_bool(std::string_view s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError(fmt::format("expected true or false, got '{}'", s));
}

std::vector<double> to_list(std::string_view s) {
  std::vector<double> out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(to_double(trim(s.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

std::string from_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += format_double(xs[i]);
  }
  return out;
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

struct Key {
  const char* name;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

// The canonical serialization lists keys in this order.
const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"grid.d", [](RunConfig& c, std::string_view v) { c.d = to_int(v); },
       [](const RunConfig& c) { return std::to_string(c.d); }},
      {"grid.n", [](RunConfig& c, std::string_view v) { c.n = to_int(v); },
       [](const RunConfig& c) { return std::to_string(c.n); }},
      {"model.m", [](RunConfig& c, std::string_view v) { c.model.m = to_double(v); },
       [](const RunConfig& c) { return format_double(c.model.m); }},
      {"model.c", [](RunConfig& c, std::string_view v) { c.model.c = to_double(v); },
       [](const RunConfig& c) { return format_double(c.model.c); }},
      {"model.epsilon", [](RunConfig& c, std::string_view v) { c.model.epsilon = to_double(v); },
       [](const RunConfig& c) { return format_double(c.model.epsilon); }},
      {"model.p", [](RunConfig& c, std::string_view v) { c.model.p = to_int(v); },
       [](const RunConfig& c) { return std::to_string(c.model.p); }},
      {"model.formulation",
       [](RunConfig& c, std::string_view v) {
         try {
           c.model.formulation = parse_formulation(std::string(v));
         } catch (const std::invalid_argument& e) {
           throw ConfigError(e.what());
         }
       },
       [](const RunConfig& c) { return std::string(to_string(c.model.formulation)); }},
      {"model.sign", [](RunConfig& c, std::string_view v) { c.model.sign = to_int(v); },
       [](const RunConfig& c) { return std::to_string(c.model.sign); }},
      {"model.com1",
       [](RunConfig& c, std::string_view v) {
         try {
           c.model.com1 = parse_com1_kernel(std::string(v));
         } catch (const std::invalid_argument& e) {
           throw ConfigError(e.what());
         }
       },
       [](const RunConfig& c) { return std::string(to_string(c.model.com1)); }},
      {"model.c2",
       [](RunConfig& c, std::string_view v) {
         if (v == "auto")
           c.c2.reset();
         else
           c.c2 = to_double(v);
       },
       [](const RunConfig& c) { return c.c2 ? format_double(*c.c2) : std::string("auto"); }},
      {"time.dt", [](RunConfig& c, std::string_view v) { c.dt = to_double(v); },
       [](const RunConfig& c) { return format_double(c.dt); }},
      {"time.horizon", [](RunConfig& c, std::string_view v) { c.horizon = to_double(v); },
       [](const RunConfig& c) { return format_double(c.horizon); }},
      {"time.burn_in", [](RunConfig& c, std::string_view v) { c.burn_in = to_double(v); },
       [](const RunConfig& c) { return format_double(c.burn_in); }},
      {"time.snapshot_every", [](RunConfig& c, std::string_view v) { c.snapshot_every = to_double(v); },
       [](const RunConfig& c) { return format_double(c.snapshot_every); }},
      {"ensemble.size", [](RunConfig& c, std::string_view v) { c.ensemble = to_int(v); },
       [](const RunConfig& c) { return std::to_string(c.ensemble); }},
      {"ensemble.root_seed", [](RunConfig& c, std::string_view v) { c.root_seed = to_u64(v); },
       [](const RunConfig& c) { return std::to_string(c.root_seed); }},
      {"experiment.name", [](RunConfig& c, std::string_view v) { c.experiment = std::string(v); },
       [](const RunConfig& c) { return c.experiment; }},
      {"experiment.noise", [](RunConfig& c, std::string_view v) { c.noise = to_bool(v); },
       [](const RunConfig& c) { return from_bool(c.noise); }},
      {"experiment.profile", [](RunConfig& c, std::string_view v) { c.profile = std::string(v); },
       [](const RunConfig& c) { return c.profile; }},
      {"experiment.amplitude", [](RunConfig& c, std::string_view v) { c.amplitude = to_double(v); },
       [](const RunConfig& c) { return format_double(c.amplitude); }},
      {"experiment.lambdas", [](RunConfig& c, std::string_view v) { c.lambdas = to_list(v); },
       [](const RunConfig& c) { return from_list(c.lambdas); }},
      {"experiment.record_times", [](RunConfig& c, std::string_view v) { c.record_times = to_list(v); },
       [](const RunConfig& c) { return from_list(c.record_times); }},
      {"experiment.dt_values", [](RunConfig& c, std::string_view v) { c.dt_values = to_list(v); },
       [](const RunConfig& c) { return from_list(c.dt_values); }},
      {"experiment.c_values", [](RunConfig& c, std::string_view v) { c.c_values = to_list(v); },
       [](const RunConfig& c) { return from_list(c.c_values); }},
      {"experiment.batches", [](RunConfig& c, std::string_view v) { c.batches = to_int(v); },
       [](const RunConfig& c) { return std::to_string(c.batches); }},
      {"experiment.reallocate", [](RunConfig& c, std::string_view v) { c.reallocate = to_bool(v); },
       [](const RunConfig& c) { return from_bool(c.reallocate); }},
      {"tolerance.ratio", [](RunConfig& c, std::string_view v) { c.tol_ratio = to_double(v); },
       [](const RunConfig& c) { return format_double(c.tol_ratio); }},
      {"tolerance.order", [](RunConfig& c, std::string_view v) { c.tol_order = to_double(v); },
       [](const RunConfig& c) { return format_double(c.tol_order); }},
      {"tolerance.shrink", [](RunConfig& c, std::string_view v) { c.tol_shrink = to_double(v); },
       [](const RunConfig& c) { return format_double(c.tol_shrink); }},
      {"tolerance.sigmas", [](RunConfig& c, std::string_view v) { c.tol_sigmas = to_double(v); },
       [](const RunConfig& c) { return format_double(c.tol_sigmas); }},
      {"tolerance.blowup_fraction", [](RunConfig& c, std::string_view v) { c.tol_blowup_fraction = to_double(v); },
       [](const RunConfig& c) { return format_double(c.tol_blowup_fraction); }},
      {"output.dir", [](RunConfig& c, std::string_view v) { c.output_dir = std::string(v); },
       [](const RunConfig& c) { return c.output_dir; }},
  };
  return table;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void require_positive_list(const std::vector<double>& xs, const char* name) {
  require(!xs.empty(), fmt::format("{} must not be empty", name));
  for (double x : xs) require(x > 0.0, fmt::format("{} entries must be positive", name));
}

}  // namespace

void validate(const RunConfig& c) {
  require(c.d >= 1 && c.d <= 3, fmt::format("grid.d must be 1, 2 or 3, got {}", c.d));
  require(c.n >= 8 && std::has_single_bit(static_cast<unsigned>(c.n)),
          fmt::format("grid.n must be a power of two >= 8, got {}", c.n));
  try {
    c.model.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  require(c.model.formulation != Formulation::dpd2 || c.d == 2, "model.formulation = dpd2 needs grid.d = 2");
  require(!c.c2 || std::isfinite(*c.c2), "model.c2 must be finite or auto");
  require(c.dt > 0.0, "time.dt must be positive");
  require(c.horizon > 0.0, "time.horizon must be positive");
  require(c.dt <= c.horizon, "time.dt must not exceed time.horizon");
  require(c.burn_in >= 0.0, "time.burn_in must be nonnegative");
  require(c.snapshot_every >= 0.0, "time.snapshot_every must be nonnegative");
  require(c.ensemble >= 1, "ensemble.size must be at least 1");
  require(std::find(std::begin(kExperimentNames), std::end(kExperimentNames), c.experiment) != std::end(kExperimentNames),
          fmt::format("unknown experiment.name '{}'", c.experiment));
  require(c.profile == "cosine" || c.profile == "constant" || c.profile == "zero",
          fmt::format("experiment.profile must be cosine, constant or zero, got '{}'", c.profile));
  require(c.amplitude >= 0.0, "experiment.amplitude must be nonnegative");
  require_positive_list(c.lambdas, "experiment.lambdas");
  require_positive_list(c.record_times, "experiment.record_times");
  require_positive_list(c.dt_values, "experiment.dt_values");
  require(!c.c_values.empty(), "experiment.c_values must not be empty");
  for (double x : c.c_values) require(x >= 0.0, "experiment.c_values entries must be nonnegative");
  require(c.batches >= 2, "experiment.batches must be at least 2");
  require(c.tol_ratio > 0.0, "tolerance.ratio must be positive");
  require(c.tol_shrink >= 0.0, "tolerance.shrink must be nonnegative");
  require(c.tol_sigmas > 0.0, "tolerance.sigmas must be positive");
  require(c.tol_blowup_fraction >= 0.0 && c.tol_blowup_fraction <= 1.0, "tolerance.blowup_fraction must lie in [0,1]");
  require(!c.output_dir.empty(), "output.dir must not be empty");
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  int line_no = 0;
  std::vector<std::string> seen;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(fmt::format("line {}: expected 'section.key = value'", line_no));
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const auto& table = keys();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return key == k.name; });
    if (it == table.end()) throw ConfigError(fmt::format("line {}: unknown key '{}'", line_no, key));
    if (std::find(seen.begin(), seen.end(), key) != seen.end())
      throw ConfigError(fmt::format("line {}: duplicate key '{}'", line_no, key));
    seen.push_back(key);
    if (value.empty()) throw ConfigError(fmt::format("line {}: empty value for '{}'", line_no, key));
    try {
      it->set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("line {}: {}: {}", line_no, key, e.what()));
    }
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  for (const Key& k : keys()) out += fmt::format("{} = {}\n", k.name, k.get(cfg));
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const RunConfig& cfg) { return fnv1a64(serialize_config(cfg)); }

std::string config_hash_hex(const RunConfig& cfg) { return fmt::format("{:016x}", config_hash(cfg)); }

namespace {

constexpr char kMagic[8] = {'P', 'H', 'I', '4', 'F', 'L', 'D', '1'};

template <class T>
void put_le(std::string& out, T x) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

template <class T>
T get_le(const unsigned char* p) {
  T x = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) x |= static_cast<T>(p[i]) << (8 * i);
  return x;
}

}  // namespace

void write_field_snapshot(const Field& f, const std::string& path) {
  const auto& g = *f.grid();
  std::string out(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.dim()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.points_per_axis()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(f.size()));
  for (double x : f.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(x));
  write_text_file(path, out);
}

Field read_field_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open snapshot '{}'", path));
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  constexpr std::size_t header = 8 + 4 + 4 + 8;
  if (bytes.size() < header) throw std::runtime_error(fmt::format("snapshot '{}' is truncated", path));
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw std::runtime_error(fmt::format("snapshot '{}' has a bad magic", path));
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const auto d = get_le<std::uint32_t>(p + 8);
  const auto n = get_le<std::uint32_t>(p + 12);
  const auto count = get_le<std::uint64_t>(p + 16);
  if (d < 1 || d > 3 || n < 8 || !std::has_single_bit(n) || n > (1u << 12))
    throw std::runtime_error(fmt::format("snapshot '{}' has an invalid grid d = {}, n = {}", path, d, n));
  std::uint64_t expect = 1;
  for (std::uint32_t i = 0; i < d; ++i) expect *= n;
  if (count != expect) throw std::runtime_error(fmt::format("snapshot '{}' count {} != n^d = {}", path, count, expect));
  if (bytes.size() != header + 8 * count)
    throw std::runtime_error(fmt::format("snapshot '{}' has {} bytes, expected {}", path, bytes.size(), header + 8 * count));
  Field f(make_grid(static_cast<int>(d), static_cast<int>(n)));
  for (std::uint64_t i = 0; i < count; ++i) f[i] = std::bit_cast<double>(get_le<std::uint64_t>(p + header + 8 * i));
  return f;
}

std::string csv_version_line(const std::vector<std::string>& columns) {
  std::string out = "# phi4 csv v1 ";
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out += ',';
    out += columns[i];
  }
  return out;
}

std::string format_csv(const std::vector<std::string>& columns, const std::vector<std::vector<std::string>>& rows) {
  std::string out = csv_version_line(columns) + '\n';
  out += csv_version_line(columns).substr(14) + '\n';
  for (const auto& row : rows) {
    if (row.size() != columns.size())
      throw std::invalid_argument(fmt::format("CSV row has {} cells, expected {}", row.size(), columns.size()));
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += row[i];
    }
    out += '\n';
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path fp(path);
  if (fp.has_parent_path()) std::filesystem::create_directories(fp.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error(fmt::format("write to '{}' failed", path));
}

}  // namespace phi4
