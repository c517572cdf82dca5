#pragma once

// Data-plane state machines. One Switch object plays whichever role a packet
// calls for: ingress for host traffic entering the domain, egress when the
// packet's EgressID names this switch, core otherwise.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "sdnsec/crypto.hpp"
#include "sdnsec/messages.hpp"
#include "sdnsec/topology.hpp"
#include "sdnsec/wire.hpp"

namespace sdnsec {

constexpr std::size_t kDefaultMissQueue = 64;

inline std::uint32_t seconds_of(std::uint64_t now_ms) {
  return static_cast<std::uint32_t>(now_ms / 1000);
}

// ExpTime has one-second granularity: forwarding information is valid up to,
// but not including, the second it names.
inline bool expired(std::uint32_t exp_time, std::uint64_t now_ms) {
  return exp_time <= seconds_of(now_ms);
}

struct IngressEntry {
  IngressRule rule;
  std::uint32_t seq_counter = 0;  // 24-bit, wraps
  std::uint64_t pkt_counter = 0;
};

struct IngressTable {
  std::map<FlowKey, IngressEntry> entries;
  std::size_t size() const { return entries.size(); }
};

struct EgressEntry {
  std::uint32_t flow_id = 0;
  std::uint32_t exp_time = 0;
  Interface host_port = 0;
};

struct EgressTable {
  std::map<FlowKey, EgressEntry> entries;
  std::size_t size() const { return entries.size(); }
};

struct GroupBinding {
  std::uint32_t tree_id = 0;
  std::uint32_t exp_time = 0;
  std::vector<Interface> interfaces;
  std::uint32_t seq_counter = 0;
};

struct MulticastEntry {
  std::uint32_t exp_time = 0;
  std::vector<Interface> interfaces;
};

// Everything a core switch holds. No per-flow forwarding entries.
struct CoreState {
  SwitchKeys keys;
  std::map<SwitchId, FailoverPathRecord> failover_table;   // keyed by EgressID
  std::map<std::uint32_t, MulticastEntry> multicast_table;  // keyed by TreeID
  std::map<std::uint32_t, std::uint64_t> monitor_table;     // keyed by FlowID

  std::size_t size() const {
    return failover_table.size() + multicast_table.size() + monitor_table.size();
  }
};

// Instrumentation: how often each table was consulted.
struct StateAccess {
  std::uint64_t flow_table_lookups = 0;  // ingress / egress flow tables
  std::uint64_t monitor_lookups = 0;
  std::uint64_t failover_lookups = 0;
  std::uint64_t multicast_lookups = 0;
  std::uint64_t core_forwarded = 0;  // unicast packets forwarded in the core role

  std::uint64_t per_flow_lookups() const { return flow_table_lookups + monitor_lookups; }
};

struct Emission {
  Interface port = 0;
  Packet packet;
};

struct Output {
  std::vector<Emission> emit;
  std::optional<DropReason> drop;
  std::vector<SwitchMessage> to_controller;
  std::vector<std::uint32_t> failovers;  // FailoverPathIDs inserted
  std::size_t queued = 0;
  std::size_t delivered = 0;

  void append(Output&& other) {
    for (auto& e : other.emit) emit.push_back(std::move(e));
    for (auto& m : other.to_controller) to_controller.push_back(std::move(m));
    failovers.insert(failovers.end(), other.failovers.begin(), other.failovers.end());
    queued += other.queued;
    delivered += other.delivered;
    if (other.drop && !drop) drop = other.drop;
  }
};

class Switch {
 public:
  Switch(SwitchId id, Role role, SwitchKeys keys, std::map<Interface, bool> host_ports,
         std::size_t miss_queue_limit = kDefaultMissQueue)
      : id_(id), role_(role), host_ports_(std::move(host_ports)), miss_limit_(miss_queue_limit) {
    core_.keys = std::move(keys);
    for (const auto& [port, is_host] : host_ports_) link_up_[port] = true;
  }

  SwitchId id() const { return id_; }
  Role role() const { return role_; }

  const IngressTable& ingress_table() const { return ingress_; }
  const EgressTable& egress_table() const { return egress_; }
  const CoreState& core_state() const { return core_; }
  const StateAccess& access() const { return access_; }
  const std::map<std::uint32_t, GroupBinding>& group_bindings() const { return groups_; }
  IngressTable& mutable_ingress_table() { return ingress_; }

  void set_link_up(Interface port, bool up) { link_up_[port] = up; }
  bool link_up(Interface port) const {
    auto it = link_up_.find(port);
    return it != link_up_.end() && it->second;
  }
  bool is_host_port(Interface port) const {
    auto it = host_ports_.find(port);
    return it != host_ports_.end() && it->second;
  }

  std::optional<std::uint64_t> counter(std::uint32_t flow_id) const {
    auto it = core_.monitor_table.find(flow_id);
    if (it == core_.monitor_table.end()) return std::nullopt;
    return it->second;
  }

  // Entry point for every packet arriving at this switch.
  Output receive(Interface in_port, Packet pkt, std::uint64_t now_ms) {
    if (pkt.header.empty()) {
      if (!is_host_port(in_port)) return dropped(DropReason::malformed, {});
      if (is_group_address(pkt.key.ip_dst)) return ingress_multicast(std::move(pkt), now_ms);
      return ingress_process(std::move(pkt), now_ms);
    }
    if (is_multicast(pkt.header)) return multicast_process(std::move(pkt), now_ms);
    SdnsecHeader h;
    try {
      h = decode_unicast(pkt.header);
    } catch (const ParseError&) {
      return dropped(DropReason::malformed, pkt.header);
    }
    if (h.current_block().egress_id == id_) return egress_process(std::move(pkt), std::move(h), now_ms);
    return core_process(std::move(pkt), std::move(h), now_ms);
  }

  Output handle_control(const ControlMessage& msg, std::uint64_t now_ms) {
    Output out;
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, InstallIngressRule>) {
            auto& entry = ingress_.entries[m.key];
            if (entry.rule.flow_id != m.rule.flow_id) entry.seq_counter = 0;
            entry.rule = m.rule;
            out = flush_pending(m.key, now_ms);
          } else if constexpr (std::is_same_v<T, InstallEgressRule>) {
            egress_.entries[m.key] = {m.flow_id, m.exp_time, m.host_port};
          } else if constexpr (std::is_same_v<T, InstallFailoverTable>) {
            core_.failover_table = m.table;
          } else if constexpr (std::is_same_v<T, InstallMulticastTree>) {
            core_.multicast_table[m.tree_id] = {m.exp_time, m.interfaces};
            out.to_controller.push_back(InstallAck{m.tree_id});
          } else if constexpr (std::is_same_v<T, EnableTree>) {
            groups_[m.group] = {m.tree_id, m.exp_time, m.interfaces, 0};
            out = flush_pending_group(m.group, now_ms);
          } else if constexpr (std::is_same_v<T, InstallMonitor>) {
            core_.monitor_table.emplace(m.flow_id, 0);
          } else if constexpr (std::is_same_v<T, SetReporting>) {
            reporting_ = m.report;
          }
        },
        msg);
    return out;
  }

  // ---------------------------------------------------------------------------
  // Ingress

  Output ingress_process(Packet pkt, std::uint64_t now_ms) {
    ++access_.flow_table_lookups;
    auto it = ingress_.entries.find(pkt.key);
    if (it == ingress_.entries.end() || expired(it->second.rule.exp_time, now_ms))
      return enqueue_miss(std::move(pkt));
    return stamp_and_forward(std::move(pkt), it->second);
  }

  // ---------------------------------------------------------------------------
  // Core

  Output core_process(Packet pkt, SdnsecHeader h, std::uint64_t now_ms) {
    if (expired(h.fixed.exp_time, now_ms)) return dropped(DropReason::expired, pkt.header);
    const std::size_t slot = h.fixed.fe_ptr;
    if (slot >= h.fes.size()) return dropped(DropReason::malformed, pkt.header);
    if (!verify_fe(core_.keys, h.fes, slot, bootstrap_of(h)))
      return dropped(DropReason::mac_verification_failed, pkt.header);

    count_monitored(h.flow_blocks.front().flow_id);

    Output out;
    Interface out_if = h.fes[slot].egress_if;
    if (!link_up(out_if)) {
      if (auto reason = failover_rewrite(h, out_if, out)) return dropped(*reason, pkt.header);
    } else {
      h.fixed.fe_ptr = static_cast<std::uint8_t>(slot + 1);
    }
    h.pvf = pvf_step(core_.keys, h.pvf, tweak_of(h));
    ++access_.core_forwarded;
    pkt.header = encode(h);
    out.emit.push_back({out_if, std::move(pkt)});
    return out;
  }

  // Replaces the FEs with this switch's pre-computed failover path towards the
  // packet's egress. On success `out_if` is the failover path's first hop and
  // fe_ptr points past the slot this switch consumed.
  std::optional<DropReason> failover_rewrite(SdnsecHeader& h, Interface& out_if, Output& out) {
    if (h.fixed.do_not_detour) return DropReason::do_not_detour;
    if (h.fixed.lfc >= kMaxLfc) return DropReason::no_failover;
    ++access_.failover_lookups;
    auto it = core_.failover_table.find(h.current_block().egress_id);
    if (it == core_.failover_table.end()) return DropReason::no_failover;
    const FailoverPathRecord& rec = it->second;
    if (rec.fes.empty() || !link_up(rec.fes.front().egress_if)) return DropReason::no_failover;

    const FlowInfoBlock current = h.current_block();
    h.fes = rec.fes;
    h.fixed.exp_time = rec.exp_time;
    h.flow_blocks.push_back({rec.failover_path_id, current.seq_no, current.egress_id});
    h.fixed.lfc = static_cast<std::uint8_t>(h.fixed.lfc + 1);
    if (!verify_fe(core_.keys, h.fes, 0, bootstrap_of(h))) return DropReason::mac_verification_failed;
    h.fixed.fe_ptr = 1;
    out_if = h.fes.front().egress_if;
    out.failovers.push_back(rec.failover_path_id);
    return std::nullopt;
  }

  // ---------------------------------------------------------------------------
  // Egress

  Output egress_process(Packet pkt, SdnsecHeader h, std::uint64_t now_ms) {
    if (expired(h.fixed.exp_time, now_ms)) return dropped(DropReason::expired, pkt.header);
    const std::size_t slot = h.fixed.fe_ptr;
    if (slot >= h.fes.size()) return dropped(DropReason::malformed, pkt.header);
    if (!verify_fe(core_.keys, h.fes, slot, bootstrap_of(h)))
      return dropped(DropReason::mac_verification_failed, pkt.header);
    h.pvf = pvf_step(core_.keys, h.pvf, tweak_of(h));
    h.fixed.fe_ptr = static_cast<std::uint8_t>(slot + 1);

    ++access_.flow_table_lookups;
    auto it = egress_.entries.find(pkt.key);
    if (it == egress_.entries.end()) return dropped(DropReason::malformed, pkt.header);
    count_monitored(h.flow_blocks.front().flow_id);
    return deliver(std::move(pkt), h, it->second.host_port);
  }

  // ---------------------------------------------------------------------------
  // Multicast

  Output ingress_multicast(Packet pkt, std::uint64_t now_ms) {
    auto it = groups_.find(pkt.key.ip_dst);
    if (it == groups_.end() || expired(it->second.exp_time, now_ms)) {
      auto& q = pending_groups_[pkt.key.ip_dst];
      Output out;
      push_bounded(q, std::move(pkt), out);
      return out;
    }
    GroupBinding& g = it->second;
    g.seq_counter = (g.seq_counter + 1) & kId24Mask;
    MulticastHeader h;
    h.exp_time = g.exp_time;
    h.tree_id = g.tree_id;
    h.seq_no = g.seq_counter;
    h.pvf = pvf_init(core_.keys, PvfTweak{h.tree_id, h.seq_no});
    return replicate(std::move(pkt), h, g.interfaces);
  }

  Output multicast_process(Packet pkt, std::uint64_t now_ms) {
    MulticastHeader h;
    try {
      h = decode_multicast(pkt.header);
    } catch (const ParseError&) {
      return dropped(DropReason::malformed, pkt.header);
    }
    ++access_.multicast_lookups;
    auto it = core_.multicast_table.find(h.tree_id);
    if (it == core_.multicast_table.end() || expired(it->second.exp_time, now_ms))
      return dropped(DropReason::unknown_tree, pkt.header);
    h.pvf = pvf_step(core_.keys, h.pvf, PvfTweak{h.tree_id, h.seq_no});
    return replicate(std::move(pkt), h, it->second.interfaces);
  }

  static PvfTweak tweak_of(const SdnsecHeader& h) {
    return {h.current_block().flow_id, h.current_block().seq_no};
  }

  static ChainValue bootstrap_of(const SdnsecHeader& h) {
    return bootstrap_chain(h.current_block().flow_id, h.fixed.exp_time);
  }

 private:
  Output dropped(DropReason reason, Bytes header) {
    Output out;
    out.drop = reason;
    out.to_controller.push_back(DropNotice{reason, std::move(header)});
    return out;
  }

  void count_monitored(std::uint32_t flow_id) {
    if (core_.monitor_table.empty()) return;
    ++access_.monitor_lookups;
    auto it = core_.monitor_table.find(flow_id);
    if (it != core_.monitor_table.end()) ++it->second;
  }

  Output deliver(Packet pkt, const SdnsecHeader& h, Interface host_port) {
    Output out;
    if (reporting_) out.to_controller.push_back(HeaderReport{encode(h)});
    pkt.header.clear();
    out.emit.push_back({host_port, std::move(pkt)});
    out.delivered = 1;
    return out;
  }

  Output replicate(Packet pkt, const MulticastHeader& h, const std::vector<Interface>& ports) {
    Output out;
    const Bytes header = encode(h);
    for (Interface port : ports) {
      Packet copy = pkt;
      if (is_host_port(port)) {
        if (reporting_) out.to_controller.push_back(HeaderReport{header});
        copy.header.clear();
        ++out.delivered;
      } else {
        if (!link_up(port)) continue;
        copy.header = header;
      }
      out.emit.push_back({port, std::move(copy)});
    }
    return out;
  }

  void push_bounded(std::deque<Packet>& q, Packet pkt, Output& out) {
    if (q.size() >= miss_limit_) {
      q.pop_front();
      out.drop = DropReason::queue_overflow;
    }
    q.push_back(std::move(pkt));
    out.queued = 1;
  }

  Output enqueue_miss(Packet pkt) {
    Output out;
    auto& q = pending_[pkt.key];
    const bool first = q.empty();
    const FlowKey key = pkt.key;
    push_bounded(q, std::move(pkt), out);
    if (first) out.to_controller.push_back(TableMiss{key});
    return out;
  }

  // Queued packets go out with the freshly installed rule even when it is
  // already past its ExpTime; downstream switches then drop them as expired.
  Output flush_pending(const FlowKey& key, std::uint64_t /*now_ms*/) {
    Output out;
    auto it = pending_.find(key);
    if (it == pending_.end()) return out;
    std::deque<Packet> q = std::move(it->second);
    pending_.erase(it);
    for (auto& pkt : q) out.append(stamp_and_forward(std::move(pkt), ingress_.entries.at(key)));
    return out;
  }

  Output stamp_and_forward(Packet pkt, IngressEntry& entry) {
    const IngressRule& rule = entry.rule;
    entry.seq_counter = (entry.seq_counter + 1) & kId24Mask;
    ++entry.pkt_counter;

    SdnsecHeader h;
    h.fixed.do_not_detour = rule.do_not_detour;
    h.fixed.exp_time = rule.exp_time;
    h.flow_blocks.push_back({rule.flow_id, entry.seq_counter, rule.egress_id});
    h.fes = rule.fes;
    count_monitored(rule.flow_id);

    Interface out_if = rule.out_if;
    if (rule.egress_id == id_) {
      // One-switch path: ingress is also the egress.
      h.pvf = pvf_init(core_.keys, tweak_of(h));
      return deliver(std::move(pkt), h, out_if);
    }
    Output out;
    if (!link_up(out_if)) {
      if (auto reason = failover_rewrite(h, out_if, out)) return dropped(*reason, encode(h));
    }
    h.pvf = pvf_init(core_.keys, tweak_of(h));
    pkt.header = encode(h);
    out.emit.push_back({out_if, std::move(pkt)});
    return out;
  }

  Output flush_pending_group(std::uint32_t group, std::uint64_t now_ms) {
    Output out;
    auto it = pending_groups_.find(group);
    if (it == pending_groups_.end()) return out;
    std::deque<Packet> q = std::move(it->second);
    pending_groups_.erase(it);
    for (auto& pkt : q) out.append(ingress_multicast(std::move(pkt), now_ms));
    return out;
  }

  SwitchId id_;
  Role role_;
  std::map<Interface, bool> host_ports_;
  std::map<Interface, bool> link_up_;
  std::size_t miss_limit_;
  bool reporting_ = false;

  IngressTable ingress_;
  EgressTable egress_;
  CoreState core_;
  std::map<std::uint32_t, GroupBinding> groups_;
  std::map<FlowKey, std::deque<Packet>> pending_;
  std::map<std::uint32_t, std::deque<Packet>> pending_groups_;
  StateAccess access_;
};

}  // namespace sdnsec
