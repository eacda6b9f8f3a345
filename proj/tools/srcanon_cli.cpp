// Command-line front end: experiment manifests, A-D calibration, the
// bundled reproduction manifest and timeline export.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "srcanon/errors.hpp"
#include "srcanon/harness.hpp"

namespace {

std::string default_out_dir() {
  if (const char* env = std::getenv("SRCANON_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return "srcanon_out";
}

void print_summary(const std::vector<srcanon::ExperimentSummary>& rows) {
  srcanon::write_summary_csv(std::cout, rows);
}

int count_failures(const std::vector<srcanon::ExperimentSummary>& rows) {
  int failed = 0;
  for (const auto& r : rows) {
    if (!r.ok) {
      std::cerr << "experiment '" << r.name << "' failed: " << r.error << '\n';
      ++failed;
    }
  }
  return failed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fake-traffic scheduling and eavesdropper simulation for sensor-network source anonymity"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(srcanon::library_version()));

  std::string out_dir = default_out_dir();
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replications;
  std::size_t jobs = 1;
  std::size_t threads = 0;

  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--out-dir", out_dir, "Output directory (env SRCANON_OUT_DIR)");
    sub->add_option("--seed", seed, "Override every experiment's seed");
    sub->add_option("--replications", replications, "Override every experiment's replication count");
    sub->add_option("--jobs", jobs, "Experiments run concurrently")->check(CLI::PositiveNumber);
    sub->add_option("--threads", threads, "Worker threads in total (0 = all cores)");
  };

  std::string manifest_path;
  auto* run = app.add_subcommand("run", "Run every experiment in a manifest file");
  run->add_option("manifest", manifest_path, "INI manifest, one [section] per experiment")->required();
  add_run_flags(run);

  auto* repro = app.add_subcommand("repro-paper", "Run the bundled reproduction manifest");
  add_run_flags(repro);
  bool print_manifest = false;
  repro->add_flag("--print-manifest", print_manifest, "Print the bundled manifest and exit");

  auto* calibrate = app.add_subcommand("calibrate-ad", "Monte Carlo check of the A-D critical values");
  std::size_t batches = 100000;
  std::vector<std::size_t> sizes{20, 50, 100, 200};
  std::vector<double> alphas{0.10, 0.05, 0.025, 0.01};
  std::uint64_t cal_seed = 7;
  calibrate->add_option("--batches", batches, "Exponential batches per sample size")->check(CLI::PositiveNumber);
  calibrate->add_option("--sizes", sizes, "Sample sizes")->delimiter(',');
  calibrate->add_option("--alphas", alphas, "Significance levels")->delimiter(',');
  calibrate->add_option("--seed", cal_seed, "Seed");
  calibrate->add_option("--out-dir", out_dir, "Output directory (env SRCANON_OUT_DIR)");
  calibrate->add_option("--threads", threads, "Worker threads (0 = all cores)");

  auto* timeline = app.add_subcommand("timeline", "Write one schedule as CSV (time,cell,kind,round_index)");
  std::string algorithm = "group";
  srcanon::ScheduleConfig sched;
  std::uint64_t tl_seed = 42;
  bool with_events = false;
  std::string tl_out;
  timeline->add_option("--algorithm", algorithm, "baseline, group or exponential");
  timeline->add_option("--n", sched.n, "Cells");
  timeline->add_option("--d", sched.d, "Dummy population per round");
  timeline->add_option("--mu", sched.mu, "Expected inter-event time");
  timeline->add_option("--delta", sched.delta, "Delay bound");
  timeline->add_option("--rounds", sched.rounds, "Rounds (epochs for baseline)");
  timeline->add_option("--seed", tl_seed, "Seed");
  timeline->add_flag("--events", with_events, "Merge Poisson real events into the schedule");
  timeline->add_option("-o,--output", tl_out, "Output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed() || repro->parsed()) {
      if (repro->parsed() && print_manifest) {
        std::cout << srcanon::paper_repro_manifest_text();
        return 0;
      }
      auto manifest = run->parsed() ? srcanon::load_manifest(manifest_path) : srcanon::paper_repro_manifest();
      srcanon::apply_overrides(manifest, {seed, replications});
      srcanon::SuiteOptions opts;
      opts.jobs = jobs;
      opts.threads = threads;
      const auto rows = srcanon::run_suite(manifest, out_dir, opts);
      print_summary(rows);
      return count_failures(rows) == 0 ? 0 : 1;
    }
    if (calibrate->parsed()) {
      const auto rows = srcanon::calibrate_ad(sizes, alphas, batches, srcanon::Rng(cal_seed), threads);
      std::filesystem::create_directories(out_dir);
      std::ofstream os(std::filesystem::path(out_dir) / "ad_calibration.csv");
      srcanon::write_calibration_csv(os, rows);
      srcanon::write_calibration_csv(std::cout, rows);
      bool ok = true;
      for (const auto& r : rows) ok = ok && r.within_band();
      return ok ? 0 : 1;
    }
    if (timeline->parsed()) {
      const srcanon::Rng rng(tl_seed);
      srcanon::Timeline tl;
      switch (srcanon::algorithm_from_string(algorithm)) {
        case srcanon::Algorithm::baseline:
          tl = srcanon::baseline_schedule(sched, rng.derive("dummy"));
          break;
        case srcanon::Algorithm::group: {
          srcanon::Rng assign_rng = rng.derive("assignment");
          tl = srcanon::group_schedule(sched, srcanon::assign_groups(sched, assign_rng), rng.derive("dummy"));
          break;
        }
        case srcanon::Algorithm::exponential:
          tl = srcanon::exponential_schedule(sched, rng.derive("dummy"));
          break;
      }
      if (with_events) {
        const double horizon = tl.empty() ? sched.mu * static_cast<double>(sched.rounds) : tl.back().time;
        tl = srcanon::merge_timelines(tl, srcanon::generate_real_events(sched, horizon, rng.derive("events")).events);
      }
      if (tl_out.empty()) {
        srcanon::write_timeline_csv(std::cout, tl);
      } else {
        std::ofstream os(tl_out);
        if (!os) throw srcanon::ConfigError("cannot write " + tl_out);
        srcanon::write_timeline_csv(os, tl);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
