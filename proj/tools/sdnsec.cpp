// sdnsec: scenario runner and report tool.
//
//   sdnsec run <scenario> [--out DIR] [--seed N] [--format table|csv]
//   sdnsec overhead [--paths 3,5] [--sizes 200,850,1400] [--format table|csv]
//   sdnsec estimate [--hosts N] [--access-gbps G] [--utilization U]
//                   [--packet-bytes B] [--path-len N] [--report-bytes R]
//   sdnsec validate <scenario> <trace.jsonl> [--seed N] [--format table|csv]
//
// Exit status: 0 success, 1 a check failed, 2 usage or input error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sdnsec/sdnsec.hpp"

namespace fs = std::filesystem;
using namespace sdnsec;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << content;
}

Scenario load(const std::string& path, std::optional<std::uint64_t> seed) {
  Scenario sc = load_scenario(path);
  if (seed) sc.seed = *seed;
  return sc;
}

int cmd_run(const std::string& path, const std::string& out_dir, std::optional<std::uint64_t> seed,
            Format fmt) {
  Simulator sim(load(path, seed));
  const EventTrace& trace = sim.run();
  const RunResult& r = sim.result();

  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "trace.jsonl", trace.jsonl());
  write_file(fs::path(out_dir) / "verdicts.csv", verdicts_csv(r));
  write_file(fs::path(out_dir) / "counters.csv", counters_csv(r));
  write_file(fs::path(out_dir) / "report.txt", run_report(r, Format::table));

  std::cout << run_report(r, fmt);
  return r.ok() ? kOk : kCheckFailed;
}

int cmd_validate(const std::string& scenario_path, const std::string& trace_path,
                 std::optional<std::uint64_t> seed, Format fmt) {
  std::ifstream tin(trace_path);
  if (!tin) throw ScenarioError("cannot open trace file " + trace_path);
  const PvcInputs inputs = collect_reports(EventTrace::read_jsonl(tin));

  // Re-running the scenario rebuilds the controller's flow, failover and tree
  // records; validation itself only looks at the reports from the file.
  SimOptions opt;
  opt.validate_reports = false;
  opt.trace_headers = false;
  opt.trace_forwarding = false;
  Simulator sim(load(scenario_path, seed), opt);
  sim.run();
  Controller& ctl = sim.controller();

  std::size_t invalid = 0;
  std::map<std::string, std::size_t> outcomes;
  for (const ReportRecord& rep : inputs.reports) {
    const ValidationVerdict v = ctl.validate_header(rep.header, rep.reporter);
    ++outcomes[to_string(v.outcome)];
    if (!v.valid()) ++invalid;
  }
  std::size_t replays = 0;
  for (const auto& [key, v] : ctl.replay_verdicts()) replays += v.valid() ? 0 : 1;

  std::map<std::uint32_t, std::vector<std::pair<SwitchId, std::uint64_t>>> by_flow;
  for (const CounterRecord& c : inputs.counters) by_flow[c.flow_id].push_back({c.sw, c.count});
  std::size_t counter_failures = 0;
  for (auto& [fid, reports] : by_flow) {
    const FlowRecord* rec = ctl.flow(fid);
    if (!rec) {
      ++counter_failures;
      continue;
    }
    const auto path = switches_of(rec->path);
    std::sort(reports.begin(), reports.end(), [&](const auto& a, const auto& b) {
      return std::find(path.begin(), path.end(), a.first) < std::find(path.begin(), path.end(), b.first);
    });
    if (!reconcile_counters(reports, path).valid()) ++counter_failures;
  }

  if (fmt == Format::csv) {
    std::cout << "metric,value\n";
    std::cout << "reports," << inputs.reports.size() << '\n';
    for (const auto& [o, n] : outcomes) std::cout << o << ',' << n << '\n';
    std::cout << "replay_flags," << replays << '\n';
    std::cout << "counter_inconsistencies," << counter_failures << '\n';
  } else {
    std::cout << "reports                  " << inputs.reports.size() << '\n';
    for (const auto& [o, n] : outcomes) std::cout << "  " << o << std::string(23 - o.size(), ' ') << n << '\n';
    std::cout << "replay flags             " << replays << '\n';
    std::cout << "counter inconsistencies  " << counter_failures << '\n';
  }
  return invalid == 0 && replays == 0 && counter_failures == 0 ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SDNsec forwarding accountability: simulation and analysis"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::string format = "table";
  auto add_format = [&](CLI::App* sub) {
    sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"table", "csv"}));
  };

  std::string scenario_path, trace_path, out_dir = "sdnsec-out";
  auto* run = app.add_subcommand("run", "Run a scenario and validate its reports");
  run->add_option("scenario", scenario_path, "Scenario file")->required();
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--seed", seed, "Override the scenario seed");
  add_format(run);

  std::vector<std::size_t> paths{3, 5};
  std::vector<std::uint64_t> sizes{200, 850, 1400};
  auto* overhead = app.add_subcommand("overhead", "Header overhead per path length and packet size");
  overhead->add_option("--paths", paths, "Path lengths in switches")->delimiter(',')->check(CLI::Range(1, 256));
  overhead->add_option("--sizes", sizes, "Packet sizes in bytes")->delimiter(',')->check(CLI::PositiveNumber);
  add_format(overhead);

  EstimateInputs est;
  auto* estimate = app.add_subcommand("estimate", "Cost of reporting every packet header");
  estimate->add_option("--hosts", est.hosts)->check(CLI::NonNegativeNumber);
  estimate->add_option("--access-gbps", est.access_gbps)->check(CLI::NonNegativeNumber);
  estimate->add_option("--utilization", est.utilization)->check(CLI::NonNegativeNumber);
  estimate->add_option("--packet-bytes", est.mean_packet_bytes)->check(CLI::PositiveNumber);
  estimate->add_option("--path-len", est.path_len)->check(CLI::PositiveNumber);
  estimate->add_option("--report-bytes", est.report_bytes)->check(CLI::NonNegativeNumber);
  add_format(estimate);

  auto* validate = app.add_subcommand("validate", "Validate the reports recorded in a trace");
  validate->add_option("scenario", scenario_path, "Scenario file the trace came from")->required();
  validate->add_option("trace", trace_path, "trace.jsonl written by run")->required();
  validate->add_option("--seed", seed, "Override the scenario seed");
  add_format(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  const Format fmt = format == "csv" ? Format::csv : Format::table;
  try {
    if (*run) return cmd_run(scenario_path, out_dir, seed, fmt);
    if (*overhead) {
      std::cout << overhead_table(paths, sizes, fmt);
      return kOk;
    }
    if (*estimate) {
      std::cout << estimate_report(est, fmt);
      return kOk;
    }
    if (*validate) return cmd_validate(scenario_path, trace_path, seed, fmt);
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCheckFailed;
  }
  return kUsage;
}
