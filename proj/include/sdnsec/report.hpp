#pragma once

// Text and CSV renderings of overhead tables, the validation-cost estimate and
// simulation results. Output is byte-stable for fixed inputs.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sdnsec/controller.hpp"
#include "sdnsec/simnet.hpp"
#include "sdnsec/wire.hpp"

namespace sdnsec {

enum class Format { table, csv };

// Overhead as a percentage in tenths, rounded half up, computed in integers so
// that values like 4.45 do not depend on floating-point representation.
inline std::uint64_t overhead_tenths(std::size_t path_switches, std::uint64_t packet_bytes) {
  if (packet_bytes == 0) throw Error("packet size must be positive");
  const std::uint64_t o = overhead_bytes(path_switches);
  return (o * 2000 + packet_bytes) / (2 * packet_bytes);
}

inline std::string tenths_str(std::uint64_t tenths) {
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

inline double overhead_percent(std::size_t path_switches, std::uint64_t packet_bytes) {
  return static_cast<double>(overhead_tenths(path_switches, packet_bytes)) / 10.0;
}

namespace detail {

inline std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

inline std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace detail

inline std::string overhead_table(const std::vector<std::size_t>& paths,
                                  const std::vector<std::uint64_t>& sizes, Format fmt) {
  std::ostringstream os;
  if (fmt == Format::csv) {
    os << "path_switches,packet_bytes,overhead_bytes,overhead_percent\n";
    for (std::size_t n : paths)
      for (std::uint64_t s : sizes)
        os << n << ',' << s << ',' << overhead_bytes(n) << ',' << tenths_str(overhead_tenths(n, s)) << '\n';
    return os.str();
  }
  os << detail::pad("switches", 10) << detail::pad("bytes", 7);
  for (std::uint64_t s : sizes) os << detail::pad(std::to_string(s) + "B", 9);
  os << '\n';
  for (std::size_t n : paths) {
    os << detail::pad(std::to_string(n), 10) << detail::pad(std::to_string(overhead_bytes(n)), 7);
    for (std::uint64_t s : sizes) os << detail::pad(tenths_str(overhead_tenths(n, s)) + "%", 9);
    os << '\n';
  }
  return os.str();
}

struct EstimateInputs {
  double hosts = 80000;
  double access_gbps = 10;
  double utilization = 0.01;
  double mean_packet_bytes = 850;
  double path_len = 5;
  double report_bytes = 14;
};

inline std::string estimate_report(const EstimateInputs& in, Format fmt) {
  const ValidationOverhead r = estimate_validation_overhead(
      in.hosts, in.access_gbps, in.utilization, in.mean_packet_bytes, in.path_len, in.report_bytes);
  const std::vector<std::pair<std::string, std::string>> rows = {
      {"hosts", detail::fixed(in.hosts, 0)},
      {"access_gbps", detail::fixed(in.access_gbps, 2)},
      {"utilization", detail::fixed(in.utilization, 4)},
      {"mean_packet_bytes", detail::fixed(in.mean_packet_bytes, 0)},
      {"path_len", detail::fixed(in.path_len, 0)},
      {"report_bytes", detail::fixed(in.report_bytes, 0)},
      {"total_traffic_gbps", detail::fixed(r.total_traffic_bps / 1e9, 2)},
      {"packet_rate_mpps", detail::fixed(std::round(r.packet_rate_pps / 1e6), 0)},
      {"report_bandwidth_gbps", detail::fixed(r.report_bandwidth_bps / 1e9, 2)},
      {"report_ratio_percent", detail::fixed(r.ratio * 100, 1)},
  };
  std::ostringstream os;
  if (fmt == Format::csv) {
    os << "metric,value\n";
    for (const auto& [k, v] : rows) os << k << ',' << v << '\n';
  } else {
    for (const auto& [k, v] : rows) os << detail::pad(k, 24) << v << '\n';
  }
  return os.str();
}

// Per-flow roll-up of a simulation run.
struct FlowSummary {
  FlowStats stats;
  std::uint64_t reports = 0;
  std::uint64_t valid = 0;
  std::uint64_t mismatches = 0;
  bool replay_suspected = false;
  bool counter_inconsistent = false;
};

inline std::map<std::string, FlowSummary> summarize(const RunResult& r) {
  std::map<std::string, FlowSummary> out;
  for (const auto& [name, st] : r.flows) out[name].stats = st;
  for (const auto& v : r.verdicts) {
    auto& s = out[v.flow];
    ++s.reports;
    if (v.verdict.valid()) ++s.valid;
    else ++s.mismatches;
  }
  for (const auto& rv : r.replay)
    if (!rv.verdict.valid()) out[rv.flow].replay_suspected = true;
  for (const auto& c : r.counters)
    if (!c.verdict.valid()) out[c.flow].counter_inconsistent = true;
  return out;
}

inline std::string run_report(const RunResult& r, Format fmt) {
  std::ostringstream os;
  const auto flows = summarize(r);
  std::map<std::string, std::size_t> drops;
  for (const auto& d : r.drops) ++drops[to_string(d.reason)];

  if (fmt == Format::csv) {
    os << "flow,injected,delivered,dropped,reports,valid,pvf_mismatch,replay_suspected,counter_inconsistent\n";
    for (const auto& [name, s] : flows)
      os << (name.empty() ? "-" : name) << ',' << s.stats.injected << ',' << s.stats.delivered << ','
         << s.stats.dropped << ',' << s.reports << ',' << s.valid << ',' << s.mismatches << ','
         << (s.replay_suspected ? 1 : 0) << ',' << (s.counter_inconsistent ? 1 : 0) << '\n';
    return os.str();
  }

  os << "packets injected   " << r.injected << '\n';
  os << "packets delivered  " << r.delivered << '\n';
  os << "reports validated  " << r.verdicts.size() << " (" << r.invalid_reports() << " invalid)\n";
  os << "drops              " << r.drops.size() << '\n';
  for (const auto& [reason, n] : drops) os << "  " << detail::pad(reason, 26) << n << '\n';
  os << '\n';
  os << detail::pad("flow", 14) << detail::pad("injected", 10) << detail::pad("delivered", 11)
     << detail::pad("dropped", 9) << detail::pad("reports", 9) << detail::pad("valid", 8)
     << detail::pad("mismatch", 10) << "flags\n";
  for (const auto& [name, s] : flows) {
    std::string flags;
    if (s.replay_suspected) flags += "replay_suspected ";
    if (s.counter_inconsistent) flags += "counter_inconsistent ";
    if (!flags.empty()) flags.pop_back();
    os << detail::pad(name.empty() ? "-" : name, 14) << detail::pad(std::to_string(s.stats.injected), 10)
       << detail::pad(std::to_string(s.stats.delivered), 11)
       << detail::pad(std::to_string(s.stats.dropped), 9) << detail::pad(std::to_string(s.reports), 9)
       << detail::pad(std::to_string(s.valid), 8) << detail::pad(std::to_string(s.mismatches), 10)
       << (flags.empty() ? "-" : flags) << '\n';
  }
  for (const auto& c : r.counters) {
    if (c.verdict.valid()) continue;
    os << "counters " << c.flow << " (id " << c.flow_id << "): " << to_string(c.verdict.outcome);
    if (c.verdict.detail.link)
      os << " link " << to_string(c.verdict.detail.link->first) << "-" << to_string(c.verdict.detail.link->second);
    for (SwitchId sw : c.verdict.detail.switches) os << " switch " << to_string(sw);
    os << '\n';
  }
  os << '\n' << (r.ok() ? "result: ok" : "result: FAILED") << '\n';
  return os.str();
}

inline std::string counters_csv(const RunResult& r) {
  std::ostringstream os;
  os << "flow,flow_id,switch,count\n";
  for (const auto& c : r.counters)
    for (const auto& [sw, n] : c.reports) os << c.flow << ',' << c.flow_id << ',' << to_string(sw) << ',' << n << '\n';
  return os.str();
}

inline std::string verdicts_csv(const RunResult& r) {
  std::ostringstream os;
  os << "time_ms,reporter,flow,path_id,kind,outcome,note\n";
  for (const auto& v : r.verdicts)
    os << v.time_ms << ',' << to_string(v.reporter) << ',' << v.flow << ',' << v.path_id << ','
       << (v.multicast ? "multicast" : "unicast") << ',' << to_string(v.verdict.outcome) << ','
       << v.verdict.detail.note << '\n';
  return os.str();
}

}  // namespace sdnsec
