#pragma once

// Deterministic discrete-event simulation of an SDNsec network: hosts, edge
// and core switches, the controller channel, link failures and misbehaving
// switches.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "sdnsec/controller.hpp"
#include "sdnsec/crypto.hpp"
#include "sdnsec/messages.hpp"
#include "sdnsec/switch.hpp"
#include "sdnsec/topology.hpp"
#include "sdnsec/wire.hpp"

namespace sdnsec {

// -----------------------------------------------------------------------------
// Adversaries

struct AdversaryBehavior {
  enum class Kind {
    honest,
    detour,             // send transit traffic off-path towards `target`
    forge,              // replace downstream FEs with made-up ones towards `target`
    shortcut,           // skip `count` on-path switches
    pvf_replay,         // stamp the SeqNo/PVF of the `count`-th packet on later ones
    seqno_replay,       // re-send the first packet `count` more times
    flood_flows,        // host: open `count` new flows at `rate` per second
    drop_packets,       // silently drop a `rate` fraction after counting
    dishonest_counter,  // report monitoring counters scaled by `rate`
    wormhole,           // bounce transit traffic through colluder `target`, then forward
    reflect,            // return every packet on the port it came from
  };

  Kind kind = Kind::honest;
  SwitchId target{};
  std::optional<Interface> via;
  std::uint64_t count = 0;
  double rate = 0;
  bool rewrite_pointer = false;
  std::string dst;  // flood_flows destination host

  static AdversaryBehavior honest() { return {}; }
  static AdversaryBehavior detour(SwitchId ret, std::optional<Interface> via = std::nullopt) {
    AdversaryBehavior b;
    b.kind = Kind::detour;
    b.target = ret;
    b.via = via;
    return b;
  }
  static AdversaryBehavior forge(SwitchId target) {
    AdversaryBehavior b;
    b.kind = Kind::forge;
    b.target = target;
    return b;
  }
  static AdversaryBehavior shortcut(std::uint64_t skip, bool rewrite_pointer = false) {
    AdversaryBehavior b;
    b.kind = Kind::shortcut;
    b.count = skip;
    b.rewrite_pointer = rewrite_pointer;
    return b;
  }
  static AdversaryBehavior pvf_replay(std::uint64_t source_packet) {
    AdversaryBehavior b;
    b.kind = Kind::pvf_replay;
    b.count = source_packet;
    return b;
  }
  static AdversaryBehavior seqno_replay(std::uint64_t copies) {
    AdversaryBehavior b;
    b.kind = Kind::seqno_replay;
    b.count = copies;
    return b;
  }
  static AdversaryBehavior flood_flows(double rate, std::uint64_t flows, std::string dst) {
    AdversaryBehavior b;
    b.kind = Kind::flood_flows;
    b.rate = rate;
    b.count = flows;
    b.dst = std::move(dst);
    return b;
  }
  static AdversaryBehavior drop_packets(double rate) {
    AdversaryBehavior b;
    b.kind = Kind::drop_packets;
    b.rate = rate;
    return b;
  }
  static AdversaryBehavior dishonest_counter(double factor) {
    AdversaryBehavior b;
    b.kind = Kind::dishonest_counter;
    b.rate = factor;
    return b;
  }
  static AdversaryBehavior wormhole(SwitchId colluder) {
    AdversaryBehavior b;
    b.kind = Kind::wormhole;
    b.target = colluder;
    return b;
  }
  static AdversaryBehavior reflect() {
    AdversaryBehavior b;
    b.kind = Kind::reflect;
    return b;
  }
};

inline const char* to_string(AdversaryBehavior::Kind k) {
  using K = AdversaryBehavior::Kind;
  switch (k) {
    case K::honest: return "honest";
    case K::detour: return "detour";
    case K::forge: return "forge";
    case K::shortcut: return "shortcut";
    case K::pvf_replay: return "pvf_replay";
    case K::seqno_replay: return "seqno_replay";
    case K::flood_flows: return "flood_flows";
    case K::drop_packets: return "drop_packets";
    case K::dishonest_counter: return "dishonest_counter";
    case K::wormhole: return "wormhole";
    case K::reflect: return "reflect";
  }
  return "?";
}

// -----------------------------------------------------------------------------
// Scenario

struct Timing {
  std::uint64_t link_delay_ms = 1;
  std::uint64_t control_delay_ms = 1;
  std::optional<std::uint64_t> reconfig_delay_ms;  // required when links fail
  std::uint64_t install_latency_ms = 0;             // extra delay for multicast installs
};

struct FlowSpec {
  std::string name;
  std::string src;
  std::string dst;
  std::uint64_t packets = 1;
  std::uint64_t start_ms = 0;
  std::uint64_t interval_ms = 1;
  std::size_t size = 850;
  std::optional<std::uint32_t> ttl_s;
  bool do_not_detour = false;
  // nullopt: unmonitored; empty: every switch on the path.
  std::optional<std::vector<SwitchId>> monitor;
};

struct GroupSpec {
  std::string name;
  std::string src;
  std::vector<std::string> members;
  std::uint64_t packets = 1;
  std::uint64_t start_ms = 0;
  std::uint64_t interval_ms = 1;
  std::size_t size = 850;
};

struct RegroupSpec {
  std::string group;
  std::uint64_t at_ms = 0;
  std::vector<std::string> members;
};

struct LinkFailure {
  std::uint64_t at_ms = 0;
  SwitchId sw{};
  Interface port = 0;
};

struct AdversarySpec {
  std::string entity;  // switch id or host name
  AdversaryBehavior behavior;
};

struct Scenario {
  Topology topology;
  std::vector<FlowSpec> flows;
  std::vector<GroupSpec> groups;
  std::vector<RegroupSpec> regroups;
  std::vector<LinkFailure> failures;
  std::vector<AdversarySpec> adversaries;
  ControllerConfig controller;
  Timing timing;
  std::uint64_t seed = 1;
  std::uint64_t duration_ms = 0;  // 0: run until no events remain

  void validate() const {
    std::set<std::string> names;
    auto need_host = [&](const std::string& h, const std::string& what) {
      if (!topology.has_host(h)) throw ScenarioError(what + ": unknown host " + h);
    };
    for (const FlowSpec& f : flows) {
      if (!names.insert(f.name).second) throw ScenarioError("duplicate flow or group " + f.name);
      need_host(f.src, "flow " + f.name);
      need_host(f.dst, "flow " + f.name);
      if (f.interval_ms == 0 && f.packets > 1)
        throw ScenarioError("flow " + f.name + ": interval must be positive");
      if (f.monitor)
        for (SwitchId sw : *f.monitor)
          if (!topology.has_switch(sw))
            throw ScenarioError("flow " + f.name + ": unknown switch " + to_string(sw));
    }
    for (const GroupSpec& g : groups) {
      if (!names.insert(g.name).second) throw ScenarioError("duplicate flow or group " + g.name);
      need_host(g.src, "group " + g.name);
      if (g.members.empty()) throw ScenarioError("group " + g.name + " has no members");
      for (const auto& m : g.members) need_host(m, "group " + g.name);
    }
    for (const RegroupSpec& r : regroups) {
      auto it = std::find_if(groups.begin(), groups.end(),
                             [&](const GroupSpec& g) { return g.name == r.group; });
      if (it == groups.end()) throw ScenarioError("regroup: unknown group " + r.group);
      for (const auto& m : r.members) need_host(m, "regroup " + r.group);
    }
    for (const LinkFailure& f : failures)
      if (!topology.link_at(f.sw, f.port))
        throw ScenarioError("fail: no link at " + to_string(f.sw) + ":" + std::to_string(f.port));
    if (!failures.empty() && !timing.reconfig_delay_ms)
      throw ScenarioError("link failures need timing reconfig_delay");
    for (const AdversarySpec& a : adversaries) validate_adversary(a);
  }

  void validate_adversary(const AdversarySpec& a) const {
    using K = AdversaryBehavior::Kind;
    const bool host_behavior = a.behavior.kind == K::flood_flows;
    if (host_behavior) {
      if (!topology.has_host(a.entity)) throw ScenarioError("adversary: unknown host " + a.entity);
      if (!topology.has_host(a.behavior.dst))
        throw ScenarioError("adversary: unknown host " + a.behavior.dst);
      if (a.behavior.rate <= 0) throw ScenarioError("adversary: flood rate must be positive");
      return;
    }
    const SwitchId sw = parse_switch(a.entity);
    if (!topology.has_switch(sw)) throw ScenarioError("adversary: unknown switch " + a.entity);
    if ((a.behavior.kind == K::detour || a.behavior.kind == K::forge ||
         a.behavior.kind == K::wormhole) &&
        !topology.has_switch(a.behavior.target))
      throw ScenarioError("adversary: unknown switch " + to_string(a.behavior.target));
    if (a.behavior.via && !topology.link_at(sw, *a.behavior.via))
      throw ScenarioError("adversary: no link at " + a.entity + ":" + std::to_string(*a.behavior.via));
    if (a.behavior.kind == K::drop_packets && (a.behavior.rate < 0 || a.behavior.rate > 1))
      throw ScenarioError("adversary: drop rate must be within [0, 1]");
  }

  static SwitchId parse_switch(const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos || s.size() > 5)
      throw ScenarioError("not a switch id: " + s);
    const unsigned long v = std::stoul(s);
    if (v > 0xFFFF) throw ScenarioError("switch id out of range: " + s);
    return switch_id(static_cast<unsigned>(v));
  }
};

// -----------------------------------------------------------------------------
// Trace

struct TraceRecord {
  std::uint64_t time_ms = 0;
  std::uint64_t seq = 0;
  std::string event;  // inject forward drop rewrite deliver report verdict miss queue ...
  std::optional<SwitchId> sw;
  std::optional<Interface> port;
  std::optional<std::uint64_t> uid;
  std::string flow;
  std::string header;  // hex snapshot
  std::string detail;
  std::optional<std::uint32_t> id;     // flow/tree id where relevant
  std::optional<std::uint64_t> value;  // counters

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["t"] = time_ms;
    j["seq"] = seq;
    j["event"] = event;
    if (sw) j["switch"] = to_int(*sw);
    if (port) j["port"] = *port;
    if (uid) j["uid"] = *uid;
    if (!flow.empty()) j["flow"] = flow;
    if (id) j["id"] = *id;
    if (value) j["value"] = *value;
    if (!header.empty()) j["header"] = header;
    if (!detail.empty()) j["detail"] = detail;
    return j;
  }

  static TraceRecord from_json(const nlohmann::json& j) {
    TraceRecord r;
    r.time_ms = j.at("t").get<std::uint64_t>();
    r.seq = j.at("seq").get<std::uint64_t>();
    r.event = j.at("event").get<std::string>();
    if (j.contains("switch")) r.sw = switch_id(j["switch"].get<unsigned>());
    if (j.contains("port")) r.port = j["port"].get<Interface>();
    if (j.contains("uid")) r.uid = j["uid"].get<std::uint64_t>();
    if (j.contains("flow")) r.flow = j["flow"].get<std::string>();
    if (j.contains("id")) r.id = j["id"].get<std::uint32_t>();
    if (j.contains("value")) r.value = j["value"].get<std::uint64_t>();
    if (j.contains("header")) r.header = j["header"].get<std::string>();
    if (j.contains("detail")) r.detail = j["detail"].get<std::string>();
    return r;
  }
};

struct EventTrace {
  std::vector<TraceRecord> records;

  void write_jsonl(std::ostream& os) const {
    for (const auto& r : records) os << r.to_json().dump() << '\n';
  }

  std::string jsonl() const {
    std::string out;
    for (const auto& r : records) {
      out += r.to_json().dump();
      out += '\n';
    }
    return out;
  }

  static EventTrace read_jsonl(std::istream& is) {
    EventTrace t;
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) {
      ++n;
      if (line.empty()) continue;
      try {
        t.records.push_back(TraceRecord::from_json(nlohmann::json::parse(line)));
      } catch (const nlohmann::json::exception& e) {
        throw ParseError("trace line " + std::to_string(n) + ": " + e.what());
      }
    }
    return t;
  }

  std::size_t count(const std::string& event) const {
    return static_cast<std::size_t>(std::count_if(
        records.begin(), records.end(), [&](const TraceRecord& r) { return r.event == event; }));
  }
};

// What the path validation side consumes from a finished trace.
struct CounterRecord {
  std::uint32_t flow_id = 0;
  SwitchId sw{};
  std::uint64_t count = 0;
};

struct PvcInputs {
  std::vector<ReportRecord> reports;
  std::vector<CounterRecord> counters;
};

inline PvcInputs collect_reports(const EventTrace& trace) {
  PvcInputs in;
  for (const TraceRecord& r : trace.records) {
    if (r.event == "report" && r.sw) in.reports.push_back({*r.sw, from_hex(r.header)});
    if (r.event == "counter" && r.sw && r.id && r.value) in.counters.push_back({*r.id, *r.sw, *r.value});
  }
  return in;
}

// -----------------------------------------------------------------------------
// Results

struct ReportVerdict {
  std::uint64_t time_ms = 0;
  SwitchId reporter{};
  std::string flow;
  std::uint32_t path_id = 0;
  bool multicast = false;
  ValidationVerdict verdict;
};

struct ReplayVerdict {
  std::string flow;
  WindowKey window;
  ValidationVerdict verdict;
};

struct CounterCheck {
  std::string flow;
  std::uint32_t flow_id = 0;
  std::vector<std::pair<SwitchId, std::uint64_t>> reports;
  ValidationVerdict verdict;
};

struct DropRecord {
  std::uint64_t time_ms = 0;
  SwitchId sw{};
  DropReason reason{};
  std::string flow;
};

struct FlowStats {
  std::uint64_t injected = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
};

struct RunResult {
  std::vector<ReportVerdict> verdicts;
  std::vector<ReplayVerdict> replay;
  std::vector<CounterCheck> counters;
  std::vector<DropRecord> drops;
  std::map<std::string, FlowStats> flows;
  std::uint64_t injected = 0;
  std::uint64_t delivered = 0;
  std::uint64_t adversary_actions = 0;

  std::size_t drops_of(DropReason r) const {
    return static_cast<std::size_t>(
        std::count_if(drops.begin(), drops.end(), [&](const DropRecord& d) { return d.reason == r; }));
  }
  std::size_t invalid_reports() const {
    return static_cast<std::size_t>(std::count_if(
        verdicts.begin(), verdicts.end(), [](const ReportVerdict& v) { return !v.verdict.valid(); }));
  }
  bool replay_flagged() const {
    return std::any_of(replay.begin(), replay.end(),
                       [](const ReplayVerdict& v) { return !v.verdict.valid(); });
  }
  bool counters_consistent() const {
    return std::all_of(counters.begin(), counters.end(),
                       [](const CounterCheck& c) { return c.verdict.valid(); });
  }
  // Every check an honest run must pass.
  bool ok() const {
    return invalid_reports() == 0 && !replay_flagged() && counters_consistent() && drops.empty();
  }
};

struct SimOptions {
  bool trace_headers = true;     // hex snapshots on forward/drop/report records
  bool trace_forwarding = true;  // one record per hop
  bool validate_reports = true;  // run the PVC on reports as they arrive
};

// -----------------------------------------------------------------------------
// Simulator

class Simulator {
 public:
  explicit Simulator(Scenario scenario, SimOptions options = {})
      : sc_(std::move(scenario)), opt_(options), rng_(sc_.seed ^ 0x5D4E5EC0ULL) {
    sc_.validate();
    std::mt19937_64 key_rng(sc_.seed);
    KeyStore keys;
    for (SwitchId sw : sc_.topology.switch_ids()) keys.provision_seeded(sw, key_rng);
    for (SwitchId sw : sc_.topology.switch_ids()) {
      std::map<Interface, bool> ports;
      for (const auto& [port, peer] : sc_.topology.ports(sw))
        ports[port] = peer.kind == Peer::Kind::host;
      switches_.emplace(sw, Switch(sw, sc_.topology.role(sw), keys.at(sw), std::move(ports)));
    }
    controller_.emplace(sc_.topology, std::move(keys), sc_.controller);
    for (const auto& a : sc_.adversaries) install_adversary(a);
    for (const auto& f : sc_.failures) schedule_failure(f);
  }

  const Scenario& scenario() const { return sc_; }
  Controller& controller() { return *controller_; }
  const Controller& controller() const { return *controller_; }
  const Switch& switch_at(SwitchId sw) const { return switches_.at(sw); }
  Switch& switch_at(SwitchId sw) { return switches_.at(sw); }
  const std::map<SwitchId, Switch>& switches() const { return switches_; }
  std::uint64_t now() const { return now_; }
  const EventTrace& trace() const { return trace_; }
  const RunResult& result() const { return result_; }

  void fail_link(std::uint64_t at_ms, SwitchId sw, Interface port) {
    LinkFailure f{at_ms, sw, port};
    if (!sc_.topology.link_at(sw, port))
      throw ScenarioError("fail_link: no link at " + to_string(sw) + ":" + std::to_string(port));
    if (!sc_.timing.reconfig_delay_ms) throw ScenarioError("link failures need timing reconfig_delay");
    sc_.failures.push_back(f);
    schedule_failure(f);
  }

  void attach_adversary(const std::string& entity, AdversaryBehavior behavior) {
    AdversarySpec a{entity, std::move(behavior)};
    sc_.validate_adversary(a);
    sc_.adversaries.push_back(a);
    install_adversary(a);
  }

  // Runs `fn` at virtual time `t` (tests use this to poke at state mid-run).
  void at(std::uint64_t t, std::function<void()> fn) { schedule(t, std::move(fn)); }

  // Injects one packet from `host` now; the flow must be known to the scenario
  // or created with make_key.
  void inject(const std::string& host, const FlowKey& key, std::size_t size, const std::string& label) {
    labels_.emplace(key, label);
    Packet pkt;
    pkt.uid = next_uid_++;
    pkt.key = key;
    pkt.payload.assign(size, 0);
    ++result_.injected;
    ++result_.flows[label].injected;
    const HostAttachment& h = sc_.topology.host(host);
    record("inject", h.sw, h.port, pkt.uid, label, {}, host);
    const Interface port = h.port;
    const SwitchId sw = h.sw;
    schedule(now_ + sc_.timing.link_delay_ms,
             [this, sw, port, p = std::move(pkt)]() mutable { arrive(sw, port, std::move(p)); });
  }

  FlowKey make_key(const std::string& src, const std::string& dst, std::uint16_t tp_src) const {
    const HostAttachment& s = sc_.topology.host(src);
    const HostAttachment& d = sc_.topology.host(dst);
    FlowKey k;
    k.in_port = s.port;
    k.eth_src = s.mac;
    k.eth_dst = d.mac;
    k.ip_src = s.ip;
    k.ip_dst = d.ip;
    k.tp_src = tp_src;
    k.tp_dst = 80;
    return k;
  }

  const EventTrace& run() {
    if (!started_) start();
    while (!queue_.empty()) {
      if (sc_.duration_ms && queue_.top().time > sc_.duration_ms) break;
      Event ev = queue_.top();
      queue_.pop();
      now_ = ev.time;
      ev.fn();
    }
    finish();
    return trace_;
  }

 private:
  struct Event {
    std::uint64_t time;
    std::uint64_t seq;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return std::tie(a.time, a.seq) > std::tie(b.time, b.seq);
    }
  };

  void schedule(std::uint64_t t, std::function<void()> fn) {
    queue_.push(Event{std::max(t, now_), next_event_++, std::move(fn)});
  }

  void record(std::string event, std::optional<SwitchId> sw, std::optional<Interface> port,
              std::optional<std::uint64_t> uid, std::string flow, const Bytes& header,
              std::string detail = {}, std::optional<std::uint32_t> id = std::nullopt,
              std::optional<std::uint64_t> value = std::nullopt) {
    TraceRecord r;
    r.time_ms = now_;
    r.seq = trace_seq_++;
    r.event = std::move(event);
    r.sw = sw;
    r.port = port;
    r.uid = uid;
    r.flow = std::move(flow);
    if (opt_.trace_headers && !header.empty()) r.header = to_hex(header);
    r.detail = std::move(detail);
    r.id = id;
    r.value = value;
    trace_.records.push_back(std::move(r));
  }

  std::string label_of(const FlowKey& key) const {
    auto it = labels_.find(key);
    return it == labels_.end() ? std::string{} : it->second;
  }

  // ---------------------------------------------------------------------------
  // Setup

  void install_adversary(const AdversarySpec& a) {
    if (a.behavior.kind == AdversaryBehavior::Kind::flood_flows) {
      floods_.push_back(a);
      if (started_) schedule_flood(a);
      return;
    }
    adversaries_[Scenario::parse_switch(a.entity)] = a.behavior;
  }

  void schedule_failure(const LinkFailure& f) {
    schedule(f.at_ms, [this, f] { do_fail_link(f.sw, f.port); });
  }

  void start() {
    started_ = true;
    schedule(0, [this] { send(controller_->bootstrap(now_)); });
    std::uint16_t tp = 10000;
    for (const FlowSpec& f : sc_.flows) {
      const FlowKey key = make_key(f.src, f.dst, tp++);
      labels_[key] = f.name;
      if (f.ttl_s) controller_->set_flow_ttl(key, *f.ttl_s);
      if (f.do_not_detour) controller_->set_do_not_detour(key, true);
      if (f.monitor) {
        controller_->monitor_flow(key, *f.monitor);
        monitored_.push_back({f.name, key});
      }
      schedule_stream(f.src, key, f.name, f.packets, f.start_ms, f.interval_ms, f.size, 0);
    }
    std::uint32_t group_ip = kMulticastBase + 1;
    for (const GroupSpec& g : sc_.groups) {
      const std::uint32_t ip = group_ip++;
      group_ips_[g.name] = ip;
      FlowKey key = make_key(g.src, g.src, tp++);
      key.ip_dst = ip;
      key.eth_dst = 0x01005E000000ULL | (ip & 0x7FFFFF);
      labels_[key] = g.name;
      schedule(g.start_ms, [this, g, ip] { create_tree(g.name, ip, g.src, g.members); });
      schedule_stream(g.src, key, g.name, g.packets, g.start_ms, g.interval_ms, g.size, 0);
    }
    for (const RegroupSpec& r : sc_.regroups) {
      const GroupSpec& g = *std::find_if(sc_.groups.begin(), sc_.groups.end(),
                                         [&](const GroupSpec& x) { return x.name == r.group; });
      schedule(r.at_ms, [this, r, src = g.src] {
        create_tree(r.group, group_ips_.at(r.group), src, r.members);
      });
    }
    for (const auto& a : floods_) schedule_flood(a);
  }

  void schedule_stream(const std::string& host, FlowKey key, std::string label, std::uint64_t packets,
                       std::uint64_t start, std::uint64_t interval, std::size_t size, std::uint64_t i) {
    if (i >= packets) return;
    schedule(start + i * interval, [=, this] {
      inject(host, key, size, label);
      schedule_stream(host, key, label, packets, start, interval, size, i + 1);
    });
  }

  void schedule_flood(const AdversarySpec& a) {
    flood_step(a.entity, a.behavior, 0);
  }

  // One packet on each of `count` fresh flows, spaced at 1/rate seconds.
  void flood_step(const std::string& host, const AdversaryBehavior& b, std::uint64_t i) {
    if (i >= b.count) return;
    const auto t = static_cast<std::uint64_t>(static_cast<double>(i) * 1000.0 / b.rate);
    schedule(t, [=, this] {
      FlowKey key = make_key(host, b.dst, 0);
      key.tp_src = static_cast<std::uint16_t>(i);
      key.tp_dst = static_cast<std::uint16_t>(1024 + (i >> 16));
      ++result_.adversary_actions;
      inject(host, key, 64, "flood:" + host);
      flood_step(host, b, i + 1);
    });
  }

  void create_tree(const std::string& group, std::uint32_t ip, const std::string& src,
                   const std::vector<std::string>& members) {
    auto [tree_id, out] = controller_->create_multicast_tree(ip, src, members, now_);
    tree_labels_[tree_id] = group;
    record("tree", controller_->tree(tree_id)->ingress, std::nullopt, std::nullopt, group, {},
           sc_.controller.multicast_safeguard ? "safeguard" : "no-safeguard", tree_id);
    send(std::move(out));
  }

  // ---------------------------------------------------------------------------
  // Controller channel

  void send(Outbox out) {
    for (auto& o : out) {
      std::uint64_t delay = sc_.timing.control_delay_ms;
      if (std::holds_alternative<InstallMulticastTree>(o.msg)) delay += sc_.timing.install_latency_ms;
      schedule(now_ + delay, [this, to = o.to, msg = std::move(o.msg)] {
        Output result = switches_.at(to).handle_control(msg, now_);
        auto adv = adversaries_.find(to);
        if (adv != adversaries_.end() && tampers_in_transit(adv->second.kind)) {
          std::vector<Emission> emissions = std::move(result.emit);
          result.emit.clear();
          handle_output(to, std::nullopt, std::move(result));
          tamper_and_emit(to, std::move(emissions), adv->second);
          return;
        }
        handle_output(to, std::nullopt, std::move(result));
      });
    }
  }

  void to_controller(SwitchId from, SwitchMessage msg) {
    schedule(now_ + sc_.timing.control_delay_ms,
             [this, from, m = std::move(msg)] { controller_receive(from, m); });
  }

  void controller_receive(SwitchId from, const SwitchMessage& msg) {
    if (const auto* miss = std::get_if<TableMiss>(&msg)) {
      send(controller_->handle_table_miss(from, miss->key, now_));
    } else if (const auto* ack = std::get_if<InstallAck>(&msg)) {
      send(controller_->ack_install(ack->tree_id, from));
    } else if (const auto* down = std::get_if<LinkDownNotice>(&msg)) {
      if (controller_->note_link_down(from, down->port)) {
        schedule(now_ + *sc_.timing.reconfig_delay_ms, [this] {
          record("reconfigure", std::nullopt, std::nullopt, std::nullopt, {}, {});
          send(controller_->reconfigure(now_));
        });
      }
    } else if (const auto* rep = std::get_if<HeaderReport>(&msg)) {
      if (opt_.validate_reports) validate_report(from, rep->header);
    }
    // DropNotice: drops are already accounted for where they happen.
  }

  void validate_report(SwitchId reporter, const Bytes& header) {
    ReportVerdict v;
    v.time_ms = now_;
    v.reporter = reporter;
    v.verdict = controller_->validate_header(header, reporter);
    if (is_multicast(header) && header.size() == kMulticastHeaderBytes) {
      v.multicast = true;
      v.path_id = be::get_u24(&header[6]);
      auto it = tree_labels_.find(v.path_id);
      if (it != tree_labels_.end()) v.flow = it->second;
    } else if (header.size() >= kMinHeaderBytes) {
      v.path_id = be::get_u24(&header[kFixedBytes]);
      if (const FlowRecord* rec = controller_->flow(v.path_id)) v.flow = label_of(rec->key);
    }
    record("verdict", reporter, std::nullopt, std::nullopt, v.flow, {},
           std::string(to_string(v.verdict.outcome)) +
               (v.verdict.detail.note.empty() ? "" : ": " + v.verdict.detail.note),
           v.path_id);
    result_.verdicts.push_back(std::move(v));
  }

  // ---------------------------------------------------------------------------
  // Data plane

  void do_fail_link(SwitchId sw, Interface port) {
    auto link_id = sc_.topology.link_at(sw, port);
    const Link& link = sc_.topology.links().at(*link_id);
    if (!sc_.topology.link_up(*link_id)) return;
    sc_.topology.set_link_up(*link_id, false);
    record("link_down", link.a, link.if_a, std::nullopt, {}, {},
           to_string(link.a) + ":" + std::to_string(link.if_a) + "-" + to_string(link.b) + ":" +
               std::to_string(link.if_b));
    for (auto [s, p] : {std::pair{link.a, link.if_a}, std::pair{link.b, link.if_b}}) {
      switches_.at(s).set_link_up(p, false);
      to_controller(s, LinkDownNotice{p});
    }
  }

  void arrive(SwitchId sw, Interface in_port, Packet pkt) {
    auto adv = adversaries_.find(sw);
    if (adv != adversaries_.end() && adv->second.kind != AdversaryBehavior::Kind::honest &&
        adv->second.kind != AdversaryBehavior::Kind::dishonest_counter) {
      misbehave(sw, in_port, std::move(pkt), adv->second);
      return;
    }
    const std::uint64_t uid = pkt.uid;
    const std::string label = label_of(pkt.key);
    Output out = switches_.at(sw).receive(in_port, std::move(pkt), now_);
    handle_output(sw, std::make_pair(uid, label), std::move(out));
  }

  void handle_output(SwitchId sw, std::optional<std::pair<std::uint64_t, std::string>> origin, Output out) {
    for (std::uint32_t fid : out.failovers)
      record("rewrite", sw, std::nullopt, origin ? std::optional(origin->first) : std::nullopt,
             origin ? origin->second : std::string{}, {}, "failover", fid);
    if (out.drop) {
      const DropNotice* notice = nullptr;
      for (const auto& m : out.to_controller)
        if ((notice = std::get_if<DropNotice>(&m))) break;
      const std::string label = origin ? origin->second : std::string{};
      record("drop", sw, std::nullopt, origin ? std::optional(origin->first) : std::nullopt, label,
             notice ? notice->header : Bytes{}, to_string(*out.drop));
      result_.drops.push_back({now_, sw, *out.drop, label});
      ++result_.flows[label].dropped;
    }
    if (out.queued && !out.drop && origin)
      record("queue", sw, std::nullopt, origin->first, origin->second, {});
    for (auto& m : out.to_controller) {
      if (const auto* rep = std::get_if<HeaderReport>(&m))
        record("report", sw, std::nullopt, std::nullopt, {}, rep->header);
      else if (const auto* miss = std::get_if<TableMiss>(&m))
        record("miss", sw, std::nullopt, std::nullopt, label_of(miss->key), {});
      to_controller(sw, std::move(m));
    }
    for (auto& e : out.emit) emit(sw, e.port, std::move(e.packet));
  }

  void emit(SwitchId sw, Interface port, Packet pkt) {
    auto peer = sc_.topology.peer(sw, port);
    const std::string label = label_of(pkt.key);
    if (!peer) {
      record("lost", sw, port, pkt.uid, label, pkt.header, "no peer");
      return;
    }
    if (peer->kind == Peer::Kind::host) {
      schedule(now_ + sc_.timing.link_delay_ms, [this, host = peer->host, sw, port, p = std::move(pkt)] {
        const std::string l = label_of(p.key);
        record("deliver", sw, port, p.uid, l, {}, host);
        ++result_.delivered;
        ++result_.flows[l].delivered;
      });
      return;
    }
    if (!sc_.topology.link_up(peer->link)) {
      record("lost", sw, port, pkt.uid, label, pkt.header, "link down");
      return;
    }
    if (opt_.trace_forwarding) record("forward", sw, port, pkt.uid, label, pkt.header);
    schedule(now_ + sc_.timing.link_delay_ms,
             [this, to = peer->sw, in = peer->port, p = std::move(pkt)]() mutable {
               arrive(to, in, std::move(p));
             });
  }

  // ---------------------------------------------------------------------------
  // Misbehaving switches

  void adversary_note(SwitchId sw, const Packet& pkt, const std::string& what) {
    ++result_.adversary_actions;
    record("adversary", sw, std::nullopt, pkt.uid, label_of(pkt.key), {}, what);
  }

  std::optional<Interface> port_towards(SwitchId from, SwitchId target,
                                        std::optional<Interface> avoid = std::nullopt) const {
    for (const auto& [port, peer] : sc_.topology.ports(from))
      if (peer.kind == Peer::Kind::link && peer.sw == target && port != avoid &&
          sc_.topology.link_up(peer.link))
        return port;
    std::optional<LinkId> avoid_link = avoid ? sc_.topology.link_at(from, *avoid) : std::nullopt;
    auto path = shortest_path(sc_.topology, from, target,
                              [&](LinkId l) { return avoid_link && l == *avoid_link; });
    if (!path || path->size() < 2) return std::nullopt;
    return path->front().egress_if;
  }

  static bool tampers_in_transit(AdversaryBehavior::Kind k) {
    using K = AdversaryBehavior::Kind;
    return k == K::detour || k == K::forge || k == K::shortcut || k == K::pvf_replay ||
           k == K::seqno_replay || k == K::drop_packets;
  }

  static bool is_transit(const Emission& e, const Switch& s) {
    return !s.is_host_port(e.port) && !e.packet.header.empty() && !is_multicast(e.packet.header);
  }

  void misbehave(SwitchId sw, Interface in_port, Packet pkt, const AdversaryBehavior& b) {
    using K = AdversaryBehavior::Kind;
    Switch& s = switches_.at(sw);

    if (b.kind == K::reflect) {
      if (pkt.header.empty()) {
        arrive_honest(sw, in_port, std::move(pkt));
        return;
      }
      adversary_note(sw, pkt, "reflect");
      emit(sw, in_port, std::move(pkt));
      return;
    }
    if (b.kind == K::wormhole) {
      auto colluder_port = port_towards(sw, b.target);
      auto peer = sc_.topology.peer(sw, in_port);
      const bool from_colluder = peer && peer->kind == Peer::Kind::link && peer->sw == b.target;
      if (!from_colluder && colluder_port && !pkt.header.empty() && !is_multicast(pkt.header)) {
        adversary_note(sw, pkt, "wormhole out");
        emit(sw, *colluder_port, std::move(pkt));
        return;
      }
      arrive_honest(sw, in_port, std::move(pkt));
      return;
    }

    const std::uint64_t uid = pkt.uid;
    const std::string label = label_of(pkt.key);
    Output out = s.receive(in_port, std::move(pkt), now_);
    std::vector<Emission> emissions = std::move(out.emit);
    out.emit.clear();
    handle_output(sw, std::make_pair(uid, label), std::move(out));
    tamper_and_emit(sw, std::move(emissions), b);
  }

  // Applies a transit-tampering behavior to everything a misbehaving switch
  // sends, including packets released from its queue by a rule install.
  void tamper_and_emit(SwitchId sw, std::vector<Emission> emissions, const AdversaryBehavior& b) {
    using K = AdversaryBehavior::Kind;
    const Switch& s = switches_.at(sw);
    for (Emission& e : emissions) {
      if (!is_transit(e, s)) {
        emit(sw, e.port, std::move(e.packet));
        continue;
      }
      switch (b.kind) {
        case K::detour: {
          auto port = b.via ? b.via : port_towards(sw, b.target, e.port);
          if (port) {
            adversary_note(sw, e.packet, "detour via " + std::to_string(*port));
            e.port = *port;
          }
          break;
        }
        case K::forge: {
          SdnsecHeader h = decode_unicast(e.packet.header);
          auto port = port_towards(sw, b.target, e.port);
          for (std::size_t i = h.fixed.fe_ptr; i < h.fes.size(); ++i)
            for (auto& byte : h.fes[i].mac) byte = static_cast<std::uint8_t>(rng_());
          if (port) e.port = *port;
          e.packet.header = encode(h);
          adversary_note(sw, e.packet, "forged FEs towards " + to_string(b.target));
          break;
        }
        case K::shortcut: {
          SdnsecHeader h = decode_unicast(e.packet.header);
          auto peer = sc_.topology.peer(sw, e.port);
          SwitchId cur = peer->sw;
          std::size_t slot = h.fixed.fe_ptr;
          for (std::uint64_t k = 0; k < b.count && slot + 1 < h.fes.size(); ++k) {
            auto next = sc_.topology.peer(cur, h.fes[slot].egress_if);
            if (!next || next->kind != Peer::Kind::link) break;
            cur = next->sw;
            ++slot;
          }
          if (cur == peer->sw) break;
          if (auto port = port_towards(sw, cur, e.port)) e.port = *port;
          else break;
          if (b.rewrite_pointer) {
            h.fixed.fe_ptr = static_cast<std::uint8_t>(slot);
            e.packet.header = encode(h);
          }
          adversary_note(sw, e.packet, "shortcut to " + to_string(cur));
          break;
        }
        case K::pvf_replay: {
          SdnsecHeader h = decode_unicast(e.packet.header);
          const std::uint32_t fid = h.flow_blocks.front().flow_id;
          const std::uint64_t seen = ++replay_seen_[fid];
          if (seen == b.count) {
            replay_source_[fid] = {h.current_block().seq_no, h.pvf};
          } else if (auto it = replay_source_.find(fid); it != replay_source_.end()) {
            for (auto& blk : h.flow_blocks) blk.seq_no = it->second.first;
            h.pvf = it->second.second;
            e.packet.header = encode(h);
            adversary_note(sw, e.packet, "replayed pvf of packet " + std::to_string(b.count));
          }
          break;
        }
        case K::seqno_replay: {
          if (!replayed_once_) {
            replayed_once_ = true;
            for (std::uint64_t c = 0; c < b.count; ++c) {
              Packet copy = e.packet;
              copy.uid = next_uid_++;
              adversary_note(sw, copy, "replayed copy");
              emit(sw, e.port, std::move(copy));
            }
          }
          break;
        }
        case K::drop_packets: {
          if (std::bernoulli_distribution(b.rate)(rng_)) {
            adversary_note(sw, e.packet, "silent drop");
            continue;
          }
          break;
        }
        default:
          break;
      }
      emit(sw, e.port, std::move(e.packet));
    }
  }

  void arrive_honest(SwitchId sw, Interface in_port, Packet pkt) {
    const std::uint64_t uid = pkt.uid;
    const std::string label = label_of(pkt.key);
    Output out = switches_.at(sw).receive(in_port, std::move(pkt), now_);
    handle_output(sw, std::make_pair(uid, label), std::move(out));
  }

  // ---------------------------------------------------------------------------
  // End of run

  void finish() {
    for (const auto& [name, key] : monitored_) {
      for (const auto& [fid, rec] : controller_->flows()) {
        if (!(rec.key == key)) continue;
        CounterCheck check;
        check.flow = name;
        check.flow_id = fid;
        for (SwitchId sw : switches_of(rec.path)) {
          auto c = switches_.at(sw).counter(fid);
          if (!c) continue;
          std::uint64_t reported = *c;
          auto adv = adversaries_.find(sw);
          if (adv != adversaries_.end() && adv->second.kind == AdversaryBehavior::Kind::dishonest_counter)
            reported = static_cast<std::uint64_t>(static_cast<double>(reported) * adv->second.rate);
          check.reports.push_back({sw, reported});
          record("counter", sw, std::nullopt, std::nullopt, name, {}, {}, fid, reported);
        }
        if (check.reports.empty()) continue;
        check.verdict = reconcile_counters(check.reports, switches_of(rec.path));
        if (!check.verdict.valid())
          record("counter_verdict", std::nullopt, std::nullopt, std::nullopt, name, {},
                 std::string(to_string(check.verdict.outcome)) + ": " + check.verdict.detail.note, fid);
        result_.counters.push_back(std::move(check));
      }
    }
    if (opt_.validate_reports) {
      for (auto& [key, verdict] : controller_->replay_verdicts()) {
        ReplayVerdict rv;
        rv.window = key;
        rv.verdict = verdict;
        if (key.multicast) {
          auto it = tree_labels_.find(key.id);
          if (it != tree_labels_.end()) rv.flow = it->second;
        } else if (const FlowRecord* rec = controller_->flow(key.id)) {
          rv.flow = label_of(rec->key);
        }
        if (!verdict.valid())
          record("replay_verdict", key.reporter, std::nullopt, std::nullopt, rv.flow, {},
                 verdict.detail.note, key.id);
        result_.replay.push_back(std::move(rv));
      }
    }
  }

  Scenario sc_;
  SimOptions opt_;
  std::mt19937_64 rng_;
  std::map<SwitchId, Switch> switches_;
  std::optional<Controller> controller_;
  std::map<SwitchId, AdversaryBehavior> adversaries_;
  std::vector<AdversarySpec> floods_;

  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t now_ = 0;
  std::uint64_t next_event_ = 0;
  std::uint64_t next_uid_ = 1;
  std::uint64_t trace_seq_ = 0;
  bool started_ = false;

  std::map<FlowKey, std::string> labels_;
  std::map<std::string, std::uint32_t> group_ips_;
  std::map<std::uint32_t, std::string> tree_labels_;
  std::vector<std::pair<std::string, FlowKey>> monitored_;

  std::map<std::uint32_t, std::uint64_t> replay_seen_;
  std::map<std::uint32_t, std::pair<std::uint32_t, PvfValue>> replay_source_;
  bool replayed_once_ = false;

  EventTrace trace_;
  RunResult result_;
};

inline EventTrace run_scenario(const Scenario& scenario, SimOptions options = {}) {
  Simulator sim(scenario, options);
  return sim.run();
}

}  // namespace sdnsec
