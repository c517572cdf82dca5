#pragma once

// Controller: path computation and rule provisioning, failover and multicast
// tree management, and reactive path validation of reported headers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "sdnsec/crypto.hpp"
#include "sdnsec/messages.hpp"
#include "sdnsec/switch.hpp"
#include "sdnsec/topology.hpp"
#include "sdnsec/wire.hpp"

namespace sdnsec {

struct ControllerConfig {
  std::uint32_t flow_ttl_s = 60;
  std::uint32_t failover_ttl_s = 3600;
  std::uint32_t tree_ttl_s = 3600;
  unsigned replay_threshold = 3;          // R: max occurrences of one SeqNo
  std::size_t replay_window = 1u << 16;   // reports kept per window
  bool multicast_safeguard = true;
  bool report_all = true;
  std::uint32_t id_space = 1u << 24;      // FlowIDs and FailoverPathIDs share [1, id_space)
};

struct FlowRecord {
  FlowKey key;
  std::uint32_t flow_id = 0;
  std::vector<PathHop> path;  // ingress ... egress; egress hop carries the host port
  std::uint32_t exp_time = 0;
  SwitchId egress_id{};
  std::vector<ForwardingEntry> fes;  // one per switch after the ingress
  bool do_not_detour = false;
};

enum class InstallState { pending, acked };

struct MulticastTreeRecord {
  std::uint32_t tree_id = 0;
  std::uint32_t group = 0;
  std::uint32_t exp_time = 0;
  SwitchId ingress{};
  std::map<SwitchId, std::vector<Interface>> interfaces;
  std::map<SwitchId, InstallState> install_state;  // every tree switch but the ingress
  bool ingress_enabled = false;
  std::map<SwitchId, std::vector<SwitchId>> leaf_paths;  // root ... leaf

  bool all_acked() const {
    return std::all_of(install_state.begin(), install_state.end(),
                       [](const auto& kv) { return kv.second == InstallState::acked; });
  }
};

enum class Outcome { valid, pvf_mismatch, replay_suspected, counter_inconsistent };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::valid: return "valid";
    case Outcome::pvf_mismatch: return "pvf_mismatch";
    case Outcome::replay_suspected: return "replay_suspected";
    case Outcome::counter_inconsistent: return "counter_inconsistent";
  }
  return "?";
}

struct VerdictDetail {
  std::vector<SwitchId> switches;
  std::optional<std::pair<SwitchId, SwitchId>> link;
  std::string note;

  bool empty() const { return switches.empty() && !link && note.empty(); }
};

struct ValidationVerdict {
  Outcome outcome = Outcome::valid;
  VerdictDetail detail;
  std::string evidence;

  bool valid() const { return outcome == Outcome::valid; }

  static ValidationVerdict ok() { return {}; }
  static ValidationVerdict fail(Outcome o, VerdictDetail d, std::string evidence) {
    return {o, std::move(d), std::move(evidence)};
  }
};

// Sliding window of recently reported sequence numbers.
class SeqWindow {
 public:
  explicit SeqWindow(std::size_t capacity = 1u << 16) : capacity_(capacity) {}

  void add(std::uint32_t seq) {
    if (capacity_ == 0) return;
    if (order_.size() == capacity_) {
      auto it = counts_.find(order_.front());
      if (--it->second == 0) counts_.erase(it);
      order_.pop_front();
    }
    order_.push_back(seq);
    ++counts_[seq];
  }

  // Most frequent SeqNo and its count (0, 0 when empty).
  std::pair<std::uint32_t, unsigned> max_repeat() const {
    std::pair<std::uint32_t, unsigned> best{0, 0};
    for (const auto& [seq, n] : counts_)
      if (n > best.second) best = {seq, n};
    return best;
  }

  std::size_t size() const { return order_.size(); }

 private:
  std::size_t capacity_;
  std::deque<std::uint32_t> order_;
  std::map<std::uint32_t, unsigned> counts_;
};

// Replay windows are kept per (path kind, path id, reporting switch) so a
// multicast SeqNo seen once at each leaf is not mistaken for a repeat.
struct WindowKey {
  bool multicast = false;
  std::uint32_t id = 0;
  SwitchId reporter{};

  friend auto operator<=>(const WindowKey&, const WindowKey&) = default;
};

inline ValidationVerdict detect_pvf_replay(const SeqWindow& window, unsigned threshold) {
  auto [seq, n] = window.max_repeat();
  if (n > threshold) {
    VerdictDetail d;
    d.note = "seq_no " + std::to_string(seq) + " reported " + std::to_string(n) + " times";
    return ValidationVerdict::fail(Outcome::replay_suspected, std::move(d),
                                   "repetition above threshold " + std::to_string(threshold));
  }
  return ValidationVerdict::ok();
}

// Compares per-switch packet counters for one flow along its path.
//
// A drop from some position onward that never recovers points at the link
// between the last high and the first low switch. A single low counter between
// two equal neighbours points at a dishonest report from that switch.
inline ValidationVerdict reconcile_counters(
    const std::vector<std::pair<SwitchId, std::uint64_t>>& reports,
    const std::vector<SwitchId>& path) {
  if (reports.empty()) return ValidationVerdict::ok();
  auto start = std::find(path.begin(), path.end(), reports.front().first);
  if (start == path.end()) throw AnalysisError("reporting switch not on path");
  if (static_cast<std::size_t>(path.end() - start) < reports.size())
    throw AnalysisError("reports extend past the end of the path");
  for (std::size_t i = 0; i < reports.size(); ++i)
    if (start[static_cast<std::ptrdiff_t>(i)] != reports[i].first)
      throw AnalysisError("reports do not cover a contiguous part of the path");

  const std::size_t n = reports.size();
  auto c = [&](std::size_t i) { return reports[i].second; };

  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (c(i) < c(i - 1) && c(i - 1) == c(i + 1)) {
      VerdictDetail d;
      d.switches = {reports[i].first};
      d.note = "dishonest report";
      return ValidationVerdict::fail(Outcome::counter_inconsistent, std::move(d),
                                     "isolated low counter at switch " +
                                         to_string(reports[i].first));
    }
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (c(i) < c(i - 1)) {
      bool recovers = false;
      for (std::size_t j = i + 1; j < n; ++j) recovers = recovers || c(j) > c(i);
      VerdictDetail d;
      if (!recovers) {
        d.link = std::make_pair(reports[i - 1].first, reports[i].first);
        d.note = "packets lost between switches";
      } else {
        d.switches = {reports[i].first};
        d.note = "inconsistent counters";
      }
      return ValidationVerdict::fail(
          Outcome::counter_inconsistent, std::move(d),
          std::to_string(c(i - 1)) + " -> " + std::to_string(c(i)) + " packets");
    }
    if (c(i) > c(i - 1)) {
      VerdictDetail d;
      d.switches = {reports[i].first};
      d.note = "more packets than upstream";
      return ValidationVerdict::fail(
          Outcome::counter_inconsistent, std::move(d),
          std::to_string(c(i - 1)) + " -> " + std::to_string(c(i)) + " packets");
    }
  }
  return ValidationVerdict::ok();
}

struct ValidationOverhead {
  double packet_rate_pps = 0;
  double report_bandwidth_bps = 0;
  double total_traffic_bps = 0;
  double ratio = 0;  // report bandwidth / total traffic
};

// Back-of-envelope cost of reporting every header to the controller.
// `path_len` does not enter the rate: every packet is reported once, by its
// egress switch.
inline ValidationOverhead estimate_validation_overhead(double hosts, double access_gbps,
                                                       double utilization,
                                                       double mean_packet_bytes,
                                                       double path_len, double report_bytes) {
  if (hosts < 0 || access_gbps < 0 || utilization < 0 || mean_packet_bytes <= 0 || path_len <= 0 ||
      report_bytes < 0)
    throw Error("estimate_validation_overhead: inputs must be positive");
  ValidationOverhead out;
  out.total_traffic_bps = hosts * access_gbps * 1e9 * utilization;
  out.packet_rate_pps = out.total_traffic_bps / (mean_packet_bytes * 8);
  out.report_bandwidth_bps = out.packet_rate_pps * report_bytes * 8;
  out.ratio = out.total_traffic_bps > 0 ? out.report_bandwidth_bps / out.total_traffic_bps : 0;
  return out;
}

// Addressed control message.
struct Outgoing {
  SwitchId to{};
  ControlMessage msg;
};
using Outbox = std::vector<Outgoing>;

struct ReportRecord {
  SwitchId reporter{};
  Bytes header;
};

class Controller {
 public:
  Controller(Topology topology, KeyStore keys, ControllerConfig config = {})
      : topo_(std::move(topology)), keys_(std::move(keys)), cfg_(config) {
    next_flow_id_ = 1;
    next_failover_id_ = cfg_.id_space - 1;
  }

  const Topology& topology() const { return topo_; }
  const KeyStore& keys() const { return keys_; }
  const ControllerConfig& config() const { return cfg_; }

  // Installs initial switch state: reporting directives and failover tables.
  Outbox bootstrap(std::uint64_t now_ms) {
    Outbox out;
    if (cfg_.report_all)
      for (SwitchId sw : topo_.edge_switches()) out.push_back({sw, SetReporting{true}});
    push_failover_tables(now_ms, out);
    return out;
  }

  // ---------------------------------------------------------------------------
  // Flows

  const FlowRecord* active_flow(const FlowKey& key, std::uint64_t now_ms) const {
    auto it = active_by_key_.find(key);
    if (it == active_by_key_.end()) return nullptr;
    const FlowRecord& rec = flows_.at(it->second);
    return expired(rec.exp_time, now_ms) ? nullptr : &rec;
  }

  const FlowRecord* flow(std::uint32_t flow_id) const {
    auto it = flows_.find(flow_id);
    return it == flows_.end() ? nullptr : &it->second;
  }

  const std::map<std::uint32_t, FlowRecord>& flows() const { return flows_; }

  std::size_t active_flow_count(std::uint64_t now_ms) const {
    std::size_t n = 0;
    for (const auto& [key, id] : active_by_key_) n += expired(flows_.at(id).exp_time, now_ms) ? 0 : 1;
    return n;
  }

  void set_do_not_detour(const FlowKey& key, bool flag) { dnd_[key] = flag; }
  void set_flow_ttl(const FlowKey& key, std::uint32_t ttl_s) { ttl_[key] = ttl_s; }
  void monitor_flow(const FlowKey& key, std::vector<SwitchId> switches) {
    monitors_[key] = std::move(switches);
  }

  // Computes a path for the flow and its FE list. The caller distributes the
  // rules (see provision_flow).
  const FlowRecord& admit_flow(const FlowKey& key, std::uint64_t now_ms) {
    if (active_flow(key, now_ms))
      throw AdmissionError("flow already active");
    const HostAttachment* src = topo_.host_by_ip(key.ip_src);
    const HostAttachment* dst = topo_.host_by_ip(key.ip_dst);
    if (!src || !dst) throw AdmissionError("flow endpoints are not known hosts");

    FlowRecord rec;
    rec.key = key;
    rec.path = cached_path(src->name, dst->name);
    rec.flow_id = allocate_flow_id(now_ms);
    rec.exp_time = seconds_of(now_ms) + ttl_for(key);
    rec.egress_id = rec.path.back().sw;
    rec.do_not_detour = dnd_.count(key) ? dnd_.at(key) : false;
    rec.fes = build_fe_list(std::span<const PathHop>(rec.path).subspan(1), keys_, rec.flow_id,
                            rec.exp_time);
    const std::uint32_t id = rec.flow_id;
    if (auto old = flows_.find(id); old != flows_.end()) {
      // Reclaimed id: forget the expired flow it used to name.
      auto a = active_by_key_.find(old->second.key);
      if (a != active_by_key_.end() && a->second == id) active_by_key_.erase(a);
    }
    flows_[id] = std::move(rec);
    active_by_key_[key] = id;
    live_ids_.insert(id);
    return flows_.at(id);
  }

  // Egress rule and monitoring entries go out before the ingress rule so they
  // are in place when the first packet arrives.
  Outbox provision_flow(const FlowRecord& rec) const {
    Outbox out;
    out.push_back({rec.egress_id, InstallEgressRule{rec.key, rec.flow_id, rec.exp_time,
                                                    rec.path.back().egress_if}});
    if (auto it = monitors_.find(rec.key); it != monitors_.end()) {
      const std::vector<SwitchId> path_switches = switches_of(rec.path);
      const auto& wanted = it->second;
      for (SwitchId sw : path_switches)
        if (wanted.empty() || std::find(wanted.begin(), wanted.end(), sw) != wanted.end())
          out.push_back({sw, InstallMonitor{rec.flow_id}});
    }
    IngressRule rule;
    rule.flow_id = rec.flow_id;
    rule.exp_time = rec.exp_time;
    rule.egress_id = rec.egress_id;
    rule.out_if = rec.path.front().egress_if;
    rule.do_not_detour = rec.do_not_detour;
    rule.fes = rec.fes;
    out.push_back({rec.path.front().sw, InstallIngressRule{rec.key, std::move(rule)}});
    return out;
  }

  Outbox handle_table_miss(SwitchId from, const FlowKey& key, std::uint64_t now_ms) {
    if (const FlowRecord* rec = active_flow(key, now_ms)) return provision_flow(*rec);
    const HostAttachment* src = topo_.host_by_ip(key.ip_src);
    if (!src || src->sw != from) return {};
    try {
      return provision_flow(admit_flow(key, now_ms));
    } catch (const UnreachableError&) {
      return {};
    } catch (const AdmissionError&) {
      ++admission_failures_;
      return {};
    }
  }

  std::size_t admission_failures() const { return admission_failures_; }

  // ---------------------------------------------------------------------------
  // Failover

  // For every switch D and every edge switch E != D, a detour D -> E that
  // avoids D's primary next-hop link towards E.
  std::map<SwitchId, std::map<SwitchId, FailoverPathRecord>> precompute_failover(
      std::uint64_t now_ms) {
    std::map<SwitchId, std::map<SwitchId, FailoverPathRecord>> out;
    const std::uint32_t exp = seconds_of(now_ms) + cfg_.failover_ttl_s;
    for (SwitchId head : topo_.switch_ids()) {
      for (SwitchId egress : topo_.edge_switches()) {
        if (head == egress) continue;
        auto primary = shortest_path(topo_, head, egress);
        if (!primary) continue;
        const auto avoid = topo_.link_at(head, primary->front().egress_if);
        auto detour = shortest_path(topo_, head, egress,
                                    [&](LinkId l) { return avoid && l == *avoid; });
        if (!detour) continue;
        FailoverPathRecord rec;
        rec.failover_path_id = allocate_failover_id(now_ms);
        rec.head = head;
        rec.egress_id = egress;
        rec.path = *detour;
        rec.exp_time = exp;
        rec.fes = build_fe_list(rec.path, keys_, rec.failover_path_id, exp);
        failovers_[rec.failover_path_id] = rec;
        out[head][egress] = std::move(rec);
      }
    }
    return out;
  }

  const FailoverPathRecord* failover(std::uint32_t id) const {
    auto it = failovers_.find(id);
    return it == failovers_.end() ? nullptr : &it->second;
  }

  // Marks the link down in the controller's view. Returns false when the
  // failure was already known.
  bool note_link_down(SwitchId sw, Interface port) {
    auto link = topo_.link_at(sw, port);
    if (!link || !topo_.link_up(*link)) return false;
    topo_.set_link_up(*link, false);
    path_cache_.clear();
    return true;
  }

  // Moves flows off failed links and refreshes every failover table.
  Outbox reconfigure(std::uint64_t now_ms) {
    Outbox out;
    std::vector<FlowKey> affected;
    for (const auto& [key, id] : active_by_key_) {
      const FlowRecord& rec = flows_.at(id);
      if (expired(rec.exp_time, now_ms)) continue;
      for (std::size_t i = 0; i + 1 < rec.path.size(); ++i) {
        auto link = topo_.link_at(rec.path[i].sw, rec.path[i].egress_if);
        if (link && !topo_.link_up(*link)) {
          affected.push_back(key);
          break;
        }
      }
    }
    for (const FlowKey& key : affected) {
      active_by_key_.erase(key);
      try {
        Outbox o = provision_flow(admit_flow(key, now_ms));
        out.insert(out.end(), o.begin(), o.end());
      } catch (const Error&) {
        // unreachable now; the ingress keeps missing until the network heals
      }
    }
    push_failover_tables(now_ms, out);
    ++reconfigurations_;
    return out;
  }

  unsigned reconfigurations() const { return reconfigurations_; }

  // ---------------------------------------------------------------------------
  // Multicast

  // Computes the tree and sends it to every tree switch except the ingress.
  // With the safeguard on, the ingress is only enabled once all have acked.
  std::pair<std::uint32_t, Outbox> create_multicast_tree(std::uint32_t group,
                                                         const std::string& src_host,
                                                         const std::vector<std::string>& members,
                                                         std::uint64_t now_ms) {
    const HostAttachment& src = topo_.host(src_host);
    MulticastTreeRecord tree;
    tree.tree_id = next_tree_id_++;
    if (tree.tree_id > kId24Max) throw AdmissionError("TreeID space exhausted");
    tree.group = group;
    tree.exp_time = seconds_of(now_ms) + cfg_.tree_ttl_s;
    tree.ingress = src.sw;

    std::map<SwitchId, std::set<Interface>> ports;
    ports[src.sw];
    for (const std::string& m : members) {
      const HostAttachment& h = topo_.host(m);
      if (m == src_host) continue;
      auto path = shortest_path(topo_, src.sw, h.sw);
      if (!path) throw UnreachableError("multicast member " + m + " unreachable");
      for (std::size_t i = 0; i + 1 < path->size(); ++i) ports[(*path)[i].sw].insert((*path)[i].egress_if);
      ports[h.sw].insert(h.port);
      tree.leaf_paths[h.sw] = switches_of(*path);
    }
    for (const auto& [sw, set] : ports) {
      tree.interfaces[sw] = std::vector<Interface>(set.begin(), set.end());
      if (sw != tree.ingress) tree.install_state[sw] = InstallState::pending;
    }

    Outbox out;
    for (const auto& [sw, st] : tree.install_state)
      out.push_back({sw, InstallMulticastTree{tree.tree_id, tree.exp_time, tree.interfaces.at(sw)}});
    const std::uint32_t id = tree.tree_id;
    trees_[id] = std::move(tree);
    if (!cfg_.multicast_safeguard || trees_.at(id).install_state.empty()) {
      // Control behaviour: hand the tree to the ingress straight away.
      trees_.at(id).ingress_enabled = true;
      out.push_back({trees_.at(id).ingress, enable_message(trees_.at(id))});
    }
    return {id, std::move(out)};
  }

  Outbox ack_install(std::uint32_t tree_id, SwitchId sw) {
    auto it = trees_.find(tree_id);
    if (it == trees_.end()) return {};
    MulticastTreeRecord& tree = it->second;
    auto st = tree.install_state.find(sw);
    if (st == tree.install_state.end()) return {};
    st->second = InstallState::acked;
    if (tree.ingress_enabled || !tree.all_acked()) return {};
    return enable_tree(tree_id);
  }

  // Rejects enabling a tree whose installs are not all acknowledged.
  Outbox enable_tree(std::uint32_t tree_id) {
    MulticastTreeRecord& tree = trees_.at(tree_id);
    if (!tree.all_acked())
      throw Error("tree " + std::to_string(tree_id) + " not installed on all switches");
    tree.ingress_enabled = true;
    return {{tree.ingress, enable_message(tree)}};
  }

  const MulticastTreeRecord* tree(std::uint32_t tree_id) const {
    auto it = trees_.find(tree_id);
    return it == trees_.end() ? nullptr : &it->second;
  }

  // ---------------------------------------------------------------------------
  // Path validation

  // Rebuilds the switch sequence the packet should have taken from its flow
  // blocks and recomputes the PVF. Records the SeqNo for replay analysis.
  ValidationVerdict validate_header(ByteView header, SwitchId reporter) {
    Header decoded;
    try {
      decoded = decode(header);
    } catch (const ParseError& e) {
      return mismatch({}, std::string("malformed report: ") + e.what());
    }
    if (const auto* mh = std::get_if<MulticastHeader>(&decoded)) return validate_multicast(*mh, reporter);
    return validate_unicast(std::get<SdnsecHeader>(decoded), reporter);
  }

  // Expected PVF segments for a unicast header, or a failure note.
  std::variant<std::vector<PvfSegment>, std::string> expected_segments(const SdnsecHeader& h,
                                                                       SwitchId reporter) const {
    const FlowRecord* rec = flow(h.flow_blocks.front().flow_id);
    if (!rec) return std::string("unknown path id");
    std::vector<PathHop> cur = rec->path;
    std::vector<PvfSegment> segments;
    for (std::size_t j = 1; j < h.flow_blocks.size(); ++j) {
      const FailoverPathRecord* fo = failover(h.flow_blocks[j].flow_id);
      if (!fo) return std::string("unknown path id");
      if (fo->egress_id != rec->egress_id) return std::string("failover path to wrong egress");
      auto at = std::find_if(cur.begin(), cur.end(), [&](const PathHop& hop) { return hop.sw == fo->head; });
      if (at == cur.end()) return std::string("failover head not on path");
      PvfSegment seg;
      for (auto it = cur.begin(); it != at; ++it) seg.switches.push_back(it->sw);
      seg.tweak = {h.flow_blocks[j - 1].flow_id, h.flow_blocks[j - 1].seq_no};
      segments.push_back(std::move(seg));
      cur = fo->path;
    }
    segments.push_back({switches_of(cur), {h.current_block().flow_id, h.current_block().seq_no}});
    if (cur.back().sw != reporter) return std::string("reporting switch is not the path's egress");
    return segments;
  }

  const SeqWindow* window(const WindowKey& key) const {
    auto it = windows_.find(key);
    return it == windows_.end() ? nullptr : &it->second;
  }

  const std::map<WindowKey, SeqWindow>& windows() const { return windows_; }

  std::vector<std::pair<WindowKey, ValidationVerdict>> replay_verdicts() const {
    std::vector<std::pair<WindowKey, ValidationVerdict>> out;
    for (const auto& [key, w] : windows_) out.push_back({key, detect_pvf_replay(w, cfg_.replay_threshold)});
    return out;
  }

 private:
  ValidationVerdict mismatch(std::vector<SwitchId> switches, std::string note,
                             std::string evidence = {}) const {
    VerdictDetail d;
    d.switches = std::move(switches);
    d.note = std::move(note);
    return ValidationVerdict::fail(Outcome::pvf_mismatch, std::move(d), std::move(evidence));
  }

  void record_seq(const WindowKey& key, std::uint32_t seq) {
    auto it = windows_.find(key);
    if (it == windows_.end()) it = windows_.emplace(key, SeqWindow(cfg_.replay_window)).first;
    it->second.add(seq);
  }

  ValidationVerdict compare(const PvfValue& expected, const PvfValue& reported,
                            std::vector<SwitchId> path) const {
    if (expected == reported) return ValidationVerdict::ok();
    return mismatch(std::move(path), "reported PVF differs from the expected path",
                    "expected " + to_hex(expected) + " got " + to_hex(reported));
  }

  ValidationVerdict validate_unicast(const SdnsecHeader& h, SwitchId reporter) {
    record_seq({false, h.flow_blocks.front().flow_id, reporter}, h.flow_blocks.front().seq_no);
    auto segs = expected_segments(h, reporter);
    if (auto* note = std::get_if<std::string>(&segs)) return mismatch({}, *note);
    const auto& segments = std::get<std::vector<PvfSegment>>(segs);
    std::vector<SwitchId> path;
    for (const auto& s : segments) path.insert(path.end(), s.switches.begin(), s.switches.end());
    return compare(expected_pvf(segments, keys_), h.pvf, std::move(path));
  }

  ValidationVerdict validate_multicast(const MulticastHeader& h, SwitchId reporter) {
    record_seq({true, h.tree_id, reporter}, h.seq_no);
    const MulticastTreeRecord* t = tree(h.tree_id);
    if (!t) return mismatch({}, "unknown path id");
    auto it = t->leaf_paths.find(reporter);
    if (it == t->leaf_paths.end()) return mismatch({}, "reporting switch is not a tree leaf");
    const PvfSegment seg{it->second, {h.tree_id, h.seq_no}};
    return compare(expected_pvf(std::span<const PvfSegment>(&seg, 1), keys_), h.pvf, it->second);
  }

  EnableTree enable_message(const MulticastTreeRecord& tree) const {
    return EnableTree{tree.group, tree.tree_id, tree.exp_time, tree.interfaces.at(tree.ingress)};
  }

  void push_failover_tables(std::uint64_t now_ms, Outbox& out) {
    auto tables = precompute_failover(now_ms);
    for (SwitchId sw : topo_.switch_ids()) {
      InstallFailoverTable msg;
      if (auto it = tables.find(sw); it != tables.end()) msg.table = std::move(it->second);
      out.push_back({sw, std::move(msg)});
    }
  }

  std::uint32_t ttl_for(const FlowKey& key) const {
    auto it = ttl_.find(key);
    return it == ttl_.end() ? cfg_.flow_ttl_s : it->second;
  }

  const std::vector<PathHop>& cached_path(const std::string& src, const std::string& dst) {
    auto key = std::make_pair(src, dst);
    auto it = path_cache_.find(key);
    if (it == path_cache_.end()) it = path_cache_.emplace(key, compute_path(topo_, src, dst)).first;
    return it->second;
  }

  void reclaim_expired(std::uint64_t now_ms) {
    for (auto it = live_ids_.begin(); it != live_ids_.end();) {
      if (expired(flows_.at(*it).exp_time, now_ms)) it = live_ids_.erase(it);
      else ++it;
    }
  }

  // Sequential FlowIDs from the bottom of the 24-bit space; ids whose flows
  // have expired are reused after a wrap.
  std::uint32_t allocate_flow_id(std::uint64_t now_ms) {
    for (int pass = 0; pass < 2; ++pass) {
      while (next_flow_id_ <= next_failover_id_) {
        const std::uint32_t id = next_flow_id_++;
        if (!live_ids_.count(id)) return id;
      }
      reclaim_expired(now_ms);
      next_flow_id_ = 1;
    }
    throw AdmissionError("FlowID space exhausted");
  }

  // FailoverPathIDs count down from the top of the same space.
  std::uint32_t allocate_failover_id(std::uint64_t now_ms) {
    if (next_failover_id_ < next_flow_id_ || next_failover_id_ == 0) {
      reclaim_expired(now_ms);
      while (next_failover_id_ > 0 && live_ids_.count(next_failover_id_)) --next_failover_id_;
      if (next_failover_id_ == 0) throw AdmissionError("FailoverPathID space exhausted");
    }
    const std::uint32_t id = next_failover_id_--;
    failovers_.erase(id);
    return id;
  }

  Topology topo_;
  KeyStore keys_;
  ControllerConfig cfg_;

  std::map<std::uint32_t, FlowRecord> flows_;
  std::map<FlowKey, std::uint32_t> active_by_key_;
  std::set<std::uint32_t> live_ids_;
  std::uint32_t next_flow_id_ = 1;
  std::uint32_t next_failover_id_ = 0;
  std::size_t admission_failures_ = 0;
  unsigned reconfigurations_ = 0;

  std::map<FlowKey, bool> dnd_;
  std::map<FlowKey, std::uint32_t> ttl_;
  std::map<FlowKey, std::vector<SwitchId>> monitors_;
  std::map<std::pair<std::string, std::string>, std::vector<PathHop>> path_cache_;

  std::map<std::uint32_t, FailoverPathRecord> failovers_;
  std::map<std::uint32_t, MulticastTreeRecord> trees_;
  std::uint32_t next_tree_id_ = 1;

  std::map<WindowKey, SeqWindow> windows_;
};

}  // namespace sdnsec
