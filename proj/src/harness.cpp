#include "srcanon/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "srcanon/errors.hpp"
#include "srcanon/parallel.hpp"

#ifndef SRCANON_VERSION
#define SRCANON_VERSION "0.0.0"
#endif

namespace srcanon {
namespace {

namespace fs = std::filesystem;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError("key '" + key + "': expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || !std::isfinite(out)) {
    throw ConfigError("key '" + key + "': expected a real number, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

ExperimentSpec spec_from_section(const std::string& name, const boost::property_tree::ptree& section) {
  ExperimentSpec spec;
  spec.name = name;
  std::optional<std::size_t> n;
  for (const auto& [key, node] : section) {
    const std::string v = node.get_value<std::string>();
    if (key == "algorithm") {
      spec.algorithm = algorithm_from_string(v);
    } else if (key == "n") {
      n = parse_uint(key, v);
    } else if (key == "d") {
      spec.schedule.d = parse_uint(key, v);
    } else if (key == "mu") {
      spec.schedule.mu = parse_real(key, v);
    } else if (key == "delta") {
      spec.schedule.delta = parse_real(key, v);
    } else if (key == "rounds") {
      spec.schedule.rounds = parse_uint(key, v);
    } else if (key == "policy") {
      try {
        spec.policy.mode = window_mode_from_string(v);
      } catch (const ParameterError& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "window_k") {
      spec.policy.window_k = parse_uint(key, v);
    } else if (key == "alpha") {
      spec.ad.alpha = parse_real(key, v);
    } else if (key == "min_sample") {
      spec.ad.min_sample = parse_uint(key, v);
    } else if (key == "replications") {
      spec.replications = parse_uint(key, v);
    } else if (key == "seed") {
      spec.seed = parse_uint(key, v);
    } else if (key == "grid_side") {
      spec.grid_side = parse_uint(key, v);
    } else if (key == "relay_interval") {
      spec.relay_interval = parse_real(key, v);
    } else if (key == "insert_real_events") {
      spec.insert_real_events = parse_bool(key, v);
    } else if (key == "include_relays") {
      spec.include_relays = parse_bool(key, v);
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  spec.schedule.n = n.value_or(spec.grid_side * spec.grid_side);
  return spec;
}

// Observable timeline with every source's route traffic added.
Timeline with_relays(const Timeline& sources, const NetworkGrid& grid, const RelayConfig& relay) {
  EnergyLedger scratch(grid.size());
  Timeline out = sources;
  for (const auto& t : sources) {
    auto emission = emulate_route(route_to_sink(grid, t.cell), t.time, t.round_index, relay, scratch);
    out.insert(out.end(), emission.relays.begin(), emission.relays.end());
  }
  std::stable_sort(out.begin(), out.end(), [](const Transmission& a, const Transmission& b) { return a.time < b.time; });
  return out;
}

TimelineSource make_source(const ExperimentSpec& spec, const Rng& master) {
  const ScheduleConfig cfg = spec.schedule;
  switch (spec.algorithm) {
    case Algorithm::baseline: {
      ScheduleConfig epochs = cfg;
      // Enough epochs of length mu*n/d to cover rounds*mu.
      epochs.rounds = (cfg.rounds * cfg.d + cfg.n - 1) / cfg.n;
      return [epochs](const Rng& rng) { return baseline_schedule(epochs, rng); };
    }
    case Algorithm::group: {
      Rng assign_rng = master.derive("assignment");
      auto assign = std::make_shared<const GroupAssignment>(assign_groups(cfg, assign_rng));
      return [cfg, assign](const Rng& rng) { return group_schedule(cfg, *assign, rng); };
    }
    case Algorithm::exponential:
      return [cfg](const Rng& rng) { return exponential_schedule(cfg, rng); };
  }
  throw ConfigError("unhandled algorithm");
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << contents;
  if (!os) throw ConfigError("write failed for " + path.string());
}

}  // namespace

const char* library_version() { return SRCANON_VERSION; }

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::baseline:
      return "baseline";
    case Algorithm::group:
      return "group";
    case Algorithm::exponential:
      return "exponential";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "baseline") return Algorithm::baseline;
  if (name == "group") return Algorithm::group;
  if (name == "exponential") return Algorithm::exponential;
  throw ConfigError("unknown algorithm '" + name + "' (expected baseline, group or exponential)");
}

void ExperimentSpec::validate() const {
  auto fail = [this](const std::string& why) { throw ConfigError("experiment '" + name + "': " + why); };
  if (name.empty()) throw ConfigError("experiment name must not be empty");
  if (name.find_first_of("/\\") != std::string::npos || name == "." || name == "..") {
    fail("name must be usable as a directory name");
  }
  try {
    schedule.validate();
    ad.validate();
    policy.validate(ad);
  } catch (const ParameterError& e) {
    fail(e.what());
  }
  if (replications == 0) fail("replications must be positive");
  if (grid_side == 0) fail("grid_side must be positive");
  if (schedule.n != grid_side * grid_side) {
    fail("n = " + std::to_string(schedule.n) + " does not match grid_side^2 = " +
         std::to_string(grid_side * grid_side));
  }
  try {
    relay().validate(grid(), schedule.delta);
  } catch (const ConfigError& e) {
    fail(e.what());
  } catch (const ParameterError& e) {
    fail(e.what());
  }
}

NetworkGrid ExperimentSpec::grid() const {
  const NetworkGrid probe(grid_side, 0);
  return NetworkGrid(grid_side, probe.center());
}

RelayConfig ExperimentSpec::relay() const {
  if (relay_interval) return RelayConfig{*relay_interval};
  return RelayConfig::defaults_for(grid(), schedule.delta);
}

std::string ExperimentSpec::canonical_text() const {
  std::ostringstream os;
  os << "name=" << name << '\n'
     << "algorithm=" << to_string(algorithm) << '\n'
     << "n=" << schedule.n << '\n'
     << "d=" << schedule.d << '\n'
     << "mu=" << fmt_double(schedule.mu) << '\n'
     << "delta=" << fmt_double(schedule.delta) << '\n'
     << "rounds=" << schedule.rounds << '\n'
     << "policy=" << to_string(policy.mode) << '\n'
     << "window_k=" << policy.window_k << '\n'
     << "alpha=" << fmt_double(ad.alpha) << '\n'
     << "min_sample=" << ad.min_sample << '\n'
     << "replications=" << replications << '\n'
     << "seed=" << seed << '\n'
     << "grid_side=" << grid_side << '\n'
     << "relay_interval=" << (relay_interval ? fmt_double(*relay_interval) : std::string("default")) << '\n'
     << "insert_real_events=" << (insert_real_events ? "true" : "false") << '\n'
     << "include_relays=" << (include_relays ? "true" : "false") << '\n';
  return os.str();
}

std::vector<ManifestEntry> parse_manifest(std::istream& is) {
  std::ostringstream buffer;
  buffer << is.rdbuf();
  const std::string text = buffer.str();

  boost::property_tree::ptree tree;
  try {
    std::istringstream in(text);
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }

  // read_ini drops sections without keys; recover them (all defaults) and
  // the file order from the headers.
  std::vector<std::string> headers;
  {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      const auto b = line.find_first_not_of(" \t\r");
      const auto e = line.find_last_not_of(" \t\r");
      if (b == std::string::npos || line[b] != '[' || line[e] != ']') continue;
      const std::string name = line.substr(b + 1, e - b - 1);
      const auto nb = name.find_first_not_of(" \t");
      headers.push_back(nb == std::string::npos ? std::string() : name.substr(nb, name.find_last_not_of(" \t") - nb + 1));
    }
  }

  std::vector<ManifestEntry> out;
  const std::set<std::string> header_set(headers.begin(), headers.end());
  for (const auto& [name, node] : tree) {
    if (header_set.count(name) == 0) {
      out.push_back(ManifestEntry{name, std::nullopt, "top-level key '" + name + "' outside any [section]"});
    }
  }
  for (const auto& name : headers) {
    ManifestEntry entry;
    entry.name = name;
    try {
      const auto it = tree.find(name);
      entry.spec = spec_from_section(name, it == tree.not_found() ? boost::property_tree::ptree() : it->second);
    } catch (const ConfigError& e) {
      entry.error = e.what();
    }
    out.push_back(std::move(entry));
  }
  return out;
}

std::vector<ManifestEntry> load_manifest(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open manifest " + path.string());
  return parse_manifest(is);
}

void apply_overrides(std::vector<ManifestEntry>& manifest, const RunOverrides& overrides) {
  for (auto& e : manifest) {
    if (!e.spec) continue;
    if (overrides.seed) e.spec->seed = *overrides.seed;
    if (overrides.replications) e.spec->replications = *overrides.replications;
  }
}

ExperimentSummary run_experiment(const ExperimentSpec& spec, const fs::path& out_dir, std::size_t threads) {
  spec.validate();
  const fs::path bundle = out_dir / spec.name;
  fs::create_directories(bundle);

  const Rng master(spec.seed);
  const NetworkGrid grid = spec.grid();
  const RelayConfig relay = spec.relay();
  const ScheduleConfig& cfg = spec.schedule;
  const TimelineSource dummy_source = make_source(spec, master);

  ExperimentSummary summary;
  summary.name = spec.name;
  std::ostringstream results;

  FaTrace trace;
  if (spec.insert_real_events) {
    DetectionOptions opts;
    opts.threads = threads;
    const DetectionResult det =
        detection_experiment(cfg, dummy_source, spec.policy, spec.ad, spec.replications, master.derive("trace"), opts);
    trace = det.without_events;
    std::ostringstream with_csv;
    write_trace_csv(with_csv, det.with_events);
    write_file(bundle / "trace_events.csv", with_csv.str());
    std::ostringstream det_csv;
    det_csv << "round,z\n";
    for (const auto& [round, z] : det.round_z) det_csv << round << ',' << fmt_short(z) << '\n';
    write_file(bundle / "detection.csv", det_csv.str());
    summary.pooled_z = det.pooled_z;
    results << "detection_trials=" << det.trials << '\n'
            << "detection_rejections_without=" << det.rejections_without << '\n'
            << "detection_rejections_with=" << det.rejections_with << '\n'
            << "detection_pooled_z=" << fmt_short(det.pooled_z) << '\n'
            << "detection_distinguishable=" << (det.distinguishable ? "true" : "false") << '\n'
            << "real_events_inserted=" << det.real_events_inserted << '\n'
            << "mean_fa_with_events=" << fmt_short(det.with_events.mean_fa) << '\n';
  } else {
    TraceOptions opts;
    opts.threads = threads;
    opts.include_relays = spec.include_relays;
    TimelineSource observed = dummy_source;
    if (spec.include_relays) {
      observed = [dummy_source, grid, relay](const Rng& rng) { return with_relays(dummy_source(rng), grid, relay); };
    }
    trace = fa_trace(observed, spec.policy, spec.ad, cfg, spec.replications, master.derive("trace"), opts);
  }
  {
    std::ostringstream csv;
    write_trace_csv(csv, trace);
    write_file(bundle / "trace.csv", csv.str());
  }
  summary.mean_fa = trace.mean_fa;
  summary.trend_slope = trace.trend_slope;
  summary.outage_rate = trace.total_tests > 0 ? outage_stats(trace).outage_rate : 0.0;

  // Route emulation over one replication's horizon: dummy sources plus the
  // real events whose reporting latency is measured.
  const double horizon = cfg.mu * static_cast<double>(cfg.rounds);
  EnergyLedger ledger(grid.size());
  for (const auto& t : dummy_source(master.derive("network"))) {
    if (t.time >= horizon) break;
    emulate_route(route_to_sink(grid, t.cell), t.time, t.round_index, relay, ledger);
  }
  const RealEvents events = generate_real_events(cfg, horizon, master.derive("latency"));
  std::ostringstream latency_csv;
  latency_csv << "event,time,cell,hops,latency\n";
  double latency_sum = 0.0;
  for (std::size_t i = 0; i < events.events.size(); ++i) {
    const auto& e = events.events[i];
    const Route route = route_to_sink(grid, e.cell);
    const RouteEmission em = emulate_route(route, e.time, e.round_index, relay, ledger);
    const double latency = em.arrival - e.time;
    latency_sum += latency;
    latency_csv << i << ',' << fmt_double(e.time) << ',' << e.cell << ',' << route.hop_count() << ','
                << fmt_double(latency) << '\n';
  }
  write_file(bundle / "latency.csv", latency_csv.str());
  {
    std::ostringstream csv;
    write_ledger_csv(csv, ledger);
    write_file(bundle / "ledger.csv", csv.str());
  }
  summary.mean_latency = events.events.empty() ? 0.0 : latency_sum / static_cast<double>(events.events.size());
  summary.total_hops_per_round = static_cast<double>(ledger.total_hops()) / static_cast<double>(cfg.rounds);
  summary.wn_ratio =
      cfg.n >= 2 ? summary.total_hops_per_round / wn_bound(static_cast<double>(cfg.n), static_cast<double>(cfg.d))
                 : 0.0;

  const std::string canonical = spec.canonical_text();
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical)));
  std::ostringstream manifest;
  manifest << "library_version=" << library_version() << '\n'
           << "spec_hash=fnv1a64:" << hash << '\n'
           << canonical << "# results\n"
           << "mean_fa=" << fmt_short(trace.mean_fa) << '\n'
           << "trend_slope=" << fmt_short(trace.trend_slope) << '\n'
           << "slope_se=" << fmt_short(trace.slope_se) << '\n'
           << "first_testable_round=" << trace.first_testable_round() << '\n'
           << "straddle_fraction=" << fmt_short(trace.straddle_fraction()) << '\n'
           << "outage_rate=" << fmt_short(summary.outage_rate) << '\n'
           << "mean_latency=" << fmt_short(summary.mean_latency) << '\n'
           << "max_latency_bound=" << fmt_short(static_cast<double>(grid.diameter()) * relay.relay_interval) << '\n'
           << "overlap_warnings=" << events.overlap_warnings << '\n'
           << "total_hops_per_round=" << fmt_short(summary.total_hops_per_round) << '\n'
           << "wn_ratio=" << fmt_short(summary.wn_ratio) << '\n'
           << results.str();
  write_file(bundle / "manifest.txt", manifest.str());
  summary.ok = true;
  return summary;
}

std::vector<ExperimentSummary> run_suite(const std::vector<ManifestEntry>& manifest, const fs::path& out_dir,
                                         const SuiteOptions& opts) {
  if (manifest.empty()) throw ConfigError("manifest contains no experiments");
  fs::create_directories(out_dir);
  const std::size_t jobs = std::max<std::size_t>(1, std::min(opts.jobs, manifest.size()));
  const std::size_t per_job = std::max<std::size_t>(1, resolve_threads(opts.threads) / jobs);

  std::set<std::string> seen;
  std::vector<std::string> duplicate(manifest.size());
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (!seen.insert(manifest[i].name).second) duplicate[i] = "duplicate experiment name";
  }

  std::vector<ExperimentSummary> rows(manifest.size());
  parallel_for(manifest.size(), jobs, [&](std::size_t i) {
    const auto& entry = manifest[i];
    ExperimentSummary& row = rows[i];
    row.name = entry.name;
    if (!duplicate[i].empty()) {
      row.error = duplicate[i];
      return;
    }
    if (!entry.spec) {
      row.error = entry.error.empty() ? "unparsed experiment" : entry.error;
      return;
    }
    try {
      row = run_experiment(*entry.spec, out_dir, per_job);
    } catch (const std::exception& e) {
      row = ExperimentSummary{};
      row.name = entry.name;
      row.error = e.what();
    }
  });

  std::ostringstream csv;
  write_summary_csv(csv, rows);
  write_file(out_dir / "summary.csv", csv.str());
  return rows;
}

void write_summary_csv(std::ostream& os, const std::vector<ExperimentSummary>& rows) {
  os << "name,status,mean_fa,trend_slope,outage_rate,mean_latency,total_hops,wn_ratio,pooled_z,error\n";
  for (const auto& r : rows) {
    std::string error = r.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    os << r.name << ',' << (r.ok ? "ok" : "failed") << ',';
    if (r.ok) {
      os << fmt_short(r.mean_fa) << ',' << fmt_short(r.trend_slope) << ',' << fmt_short(r.outage_rate) << ','
         << fmt_short(r.mean_latency) << ',' << fmt_short(r.total_hops_per_round) << ',' << fmt_short(r.wn_ratio)
         << ',' << (r.pooled_z ? fmt_short(*r.pooled_z) : std::string()) << ',';
    } else {
      os << ",,,,,,,";
    }
    os << error << '\n';
  }
}

std::string paper_repro_manifest_text() {
  return R"(# Desk-scale reproduction of the FA-trend figure panes and the
# real-event imperceptibility experiment. 32x32 grid, mu = 1, alpha = 0.05.

[fig3A]
algorithm = exponential
d = 100
rounds = 50
policy = per_round_growing

[fig3B-d10]
algorithm = group
d = 10
rounds = 50
policy = fixed_d

[fig3C-d10]
algorithm = group
d = 10
rounds = 50
policy = per_round_growing

[fig3C-d100]
algorithm = group
d = 100
rounds = 50
policy = per_round_growing

[fig3D]
algorithm = group
d = 100
rounds = 50
policy = fixed_k
window_k = 200

[detection-d100]
algorithm = group
d = 100
rounds = 50
policy = fixed_k
window_k = 200
insert_real_events = true
)";
}

std::vector<ManifestEntry> paper_repro_manifest() {
  std::istringstream is(paper_repro_manifest_text());
  return parse_manifest(is);
}

std::vector<CalibrationRow> calibrate_ad(const std::vector<std::size_t>& sizes, const std::vector<double>& alphas,
                                         std::size_t batches, const Rng& rng, std::size_t threads) {
  if (batches == 0) throw ParameterError("calibrate_ad: batches must be positive");
  constexpr std::size_t kChunk = 1024;
  std::vector<CalibrationRow> rows;
  for (std::size_t n : sizes) {
    if (n < 2) throw ParameterError("calibrate_ad: sample size must be at least 2");
    std::vector<double> stats(batches);
    const Rng size_rng = rng.derive(n);
    const std::size_t chunks = (batches + kChunk - 1) / kChunk;
    parallel_for(chunks, threads, [&](std::size_t c) {
      Rng r = size_rng.derive(c);
      std::vector<double> sample(n);
      const std::size_t end = std::min(batches, (c + 1) * kChunk);
      for (std::size_t b = c * kChunk; b < end; ++b) {
        for (auto& x : sample) x = sample_exponential(1.0, r);
        stats[b] = ad_statistic_exponential(sample);
      }
    });
    std::vector<double> sorted = stats;
    std::sort(sorted.begin(), sorted.end());
    for (double alpha : alphas) {
      CalibrationRow row;
      row.n = n;
      row.alpha = alpha;
      row.tabulated_critical = ad_critical_value(alpha);
      const auto q = static_cast<std::size_t>(std::ceil((1.0 - alpha) * static_cast<double>(batches)));
      row.empirical_critical = sorted[std::min(batches - 1, q == 0 ? 0 : q - 1)];
      const auto rejected = static_cast<std::size_t>(
          sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), row.tabulated_critical));
      row.rejection_rate = static_cast<double>(rejected) / static_cast<double>(batches);
      const double sigma = std::sqrt(alpha * (1.0 - alpha) / static_cast<double>(batches));
      row.band_low = alpha - 5.0 * sigma;
      row.band_high = alpha + 5.0 * sigma;
      rows.push_back(row);
    }
  }
  return rows;
}

void write_calibration_csv(std::ostream& os, const std::vector<CalibrationRow>& rows) {
  os << "n,alpha,tabulated_critical,empirical_critical,rejection_rate,band_low,band_high,within_band\n";
  for (const auto& r : rows) {
    os << r.n << ',' << fmt_short(r.alpha) << ',' << fmt_short(r.tabulated_critical) << ','
       << fmt_short(r.empirical_critical) << ',' << fmt_short(r.rejection_rate) << ',' << fmt_short(r.band_low)
       << ',' << fmt_short(r.band_high) << ',' << (r.within_band() ? "true" : "false") << '\n';
  }
}

}  // namespace srcanon
