#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "phi4/grid.hpp"
#include "phi4/solver.hpp"

namespace phi4 {

inline constexpr const char* kVersion = "1.0.0";

/// Parse or validation failure; the message names the offending line when there is one.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kExperimentNames[] = {"none", "coming_down", "consistency", "c_invariance",
                                                        "blowup_control", "invariant_measure"};

/// Every setting of a run. Keys are "section.key"; the README lists them with their defaults.
struct RunConfig {
  // grid
  int d = 3;
  int n = 16;
  // model
  ModelParams model;
  std::optional<double> c2;  ///< nullopt: estimated from an ensemble ("auto")
  // time
  double dt = 1e-4;
  double horizon = 1.0;
  double burn_in = 0.5;
  double snapshot_every = 0.0;  ///< 0 disables snapshots
  // ensemble
  int ensemble = 1;
  std::uint64_t root_seed = 1;
  // experiment
  std::string experiment = "none";
  bool noise = true;
  std::string profile = "cosine";  ///< cosine | constant | zero
  double amplitude = 1.0;
  std::vector<double> lambdas{1.0, 10.0, 100.0};
  std::vector<double> record_times{0.25, 0.5, 1.0};
  std::vector<double> dt_values{2e-4, 1e-4, 5e-5};
  std::vector<double> c_values{1.0, 50.0};
  int batches = 16;
  bool reallocate = true;
  // tolerances
  double tol_ratio = 1.5;
  double tol_order = 0.8;
  double tol_shrink = 0.2;
  double tol_sigmas = 3.0;
  double tol_blowup_fraction = 0.9;
  // output
  std::string output_dir = "out";

  bool operator==(const RunConfig&) const = default;
};

/// Throws ConfigError naming the first violated precondition.
void validate(const RunConfig& cfg);

/// "section.key = value" lines, '#' starts a comment. Unset keys keep their defaults.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

/// Every key in a fixed order with round-trip exact values; parse_config inverts it.
std::string serialize_config(const RunConfig& cfg);

std::uint64_t fnv1a64(std::string_view bytes);
/// FNV-1a of the canonical serialization.
std::uint64_t config_hash(const RunConfig& cfg);
/// The hash as 16 lowercase hex digits.
std::string config_hash_hex(const RunConfig& cfg);

/// "PHI4FLD1", u32 d, u32 n, u64 n^d, then n^d float64 values; all little-endian.
void write_field_snapshot(const Field& f, const std::string& path);
Field read_field_snapshot(const std::string& path);

/// Versioned CSV: a "# phi4 csv v1 <columns>" comment line, the column row, then the rows.
std::string csv_version_line(const std::vector<std::string>& columns);
std::string format_csv(const std::vector<std::string>& columns, const std::vector<std::vector<std::string>>& rows);
void write_text_file(const std::string& path, const std::string& text);

/// Shortest text that reads back to the same double.
std::string format_double(double x);

}  // namespace phi4
