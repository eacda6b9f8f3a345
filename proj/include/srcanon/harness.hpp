#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "srcanon/anderson_darling.hpp"
#include "srcanon/eavesdropper.hpp"
#include "srcanon/network.hpp"
#include "srcanon/schedule.hpp"

namespace srcanon {

enum class Algorithm { baseline, group, exponential };

const char* to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& name);

struct ExperimentSpec {
  std::string name;
  ScheduleConfig schedule;
  Algorithm algorithm = Algorithm::group;
  WindowPolicy policy;
  AdTestConfig ad;
  std::size_t replications = 2000;
  std::uint64_t seed = 42;
  std::size_t grid_side = 32;
  std::optional<Duration> relay_interval;  // default: delta / (2 * diameter)
  bool insert_real_events = false;
  bool include_relays = false;

  // Throws ConfigError naming the offending key.
  void validate() const;
  NetworkGrid grid() const;
  RelayConfig relay() const;
  // Canonical key=value text; the manifest hash is taken over it.
  std::string canonical_text() const;
};

// One section of a manifest file. Sections that fail to parse keep their
// name and the parse error so a suite can report them without aborting.
struct ManifestEntry {
  std::string name;
  std::optional<ExperimentSpec> spec;
  std::string error;
};

// INI-style manifest: one [section] per experiment, key = value lines.
// Keys: algorithm, n, d, mu, delta, rounds, policy, window_k, alpha,
// min_sample, replications, seed, grid_side, relay_interval,
// insert_real_events, include_relays. Duplicate section names are an error.
std::vector<ManifestEntry> parse_manifest(std::istream& is);
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

// Overrides applied on top of every manifest entry.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replications;
};

void apply_overrides(std::vector<ManifestEntry>& manifest, const RunOverrides& overrides);

struct ExperimentSummary {
  std::string name;
  bool ok = false;
  std::string error;
  double mean_fa = 0.0;
  double trend_slope = 0.0;
  double outage_rate = 0.0;
  double mean_latency = 0.0;
  double total_hops_per_round = 0.0;
  double wn_ratio = 0.0;
  std::optional<double> pooled_z;
};

// Writes <out_dir>/<spec.name>/ with trace.csv, ledger.csv, latency.csv,
// manifest.txt and, for detection specs, trace_events.csv and
// detection.csv. Output bytes depend only on the spec.
ExperimentSummary run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir,
                                 std::size_t threads = 0);

struct SuiteOptions {
  std::size_t jobs = 1;     // experiments in flight
  std::size_t threads = 0;  // total worker threads, split across jobs
};

// Runs every entry; failures are recorded and the rest still run. Writes
// <out_dir>/summary.csv. Throws ConfigError on an empty manifest.
std::vector<ExperimentSummary> run_suite(const std::vector<ManifestEntry>& manifest,
                                         const std::filesystem::path& out_dir,
                                         const SuiteOptions& opts = {});

void write_summary_csv(std::ostream& os, const std::vector<ExperimentSummary>& rows);

// fig3A, fig3B-d10, fig3C-d10, fig3C-d100, fig3D, detection-d100.
std::string paper_repro_manifest_text();
std::vector<ManifestEntry> paper_repro_manifest();

struct CalibrationRow {
  std::size_t n = 0;
  double alpha = 0.0;
  double tabulated_critical = 0.0;
  double empirical_critical = 0.0;  // (1 - alpha) quantile of the statistic
  double rejection_rate = 0.0;      // at the tabulated critical value
  double band_low = 0.0;            // alpha -/+ 5 binomial sigma
  double band_high = 0.0;

  bool within_band() const { return rejection_rate >= band_low && rejection_rate <= band_high; }
};

// Monte Carlo calibration of the A-D critical values on exponential
// batches: `batches` samples of each size.
std::vector<CalibrationRow> calibrate_ad(const std::vector<std::size_t>& sizes,
                                         const std::vector<double>& alphas, std::size_t batches,
                                         const Rng& rng, std::size_t threads = 0);

void write_calibration_csv(std::ostream& os, const std::vector<CalibrationRow>& rows);

const char* library_version();

}  // namespace srcanon
