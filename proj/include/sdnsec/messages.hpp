#pragma once

// Types shared between the data plane and the controller: flow keys, packets
// and the messages carried on the controller channel.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "sdnsec/crypto.hpp"
#include "sdnsec/types.hpp"
#include "sdnsec/wire.hpp"

namespace sdnsec {

// Exact-match subset of the OpenFlow match fields.
struct FlowKey {
  Interface in_port = 0;
  std::uint64_t eth_src = 0;  // 48 bits
  std::uint64_t eth_dst = 0;  // 48 bits
  std::uint16_t eth_type = 0x0800;
  std::uint32_t ip_src = 0;
  std::uint32_t ip_dst = 0;
  std::uint8_t ip_proto = 17;
  std::uint16_t tp_src = 0;
  std::uint16_t tp_dst = 0;

  friend auto operator<=>(const FlowKey&, const FlowKey&) = default;
};

constexpr std::uint32_t kMulticastBase = 0xE0000000u;  // 224.0.0.0/4

inline bool is_group_address(std::uint32_t ip) { return (ip & 0xF0000000u) == kMulticastBase; }

struct Packet {
  std::uint64_t uid = 0;
  FlowKey key;
  Bytes payload;
  Bytes header;  // empty while the packet is outside the SDNsec domain
};

enum class DropReason {
  mac_verification_failed,
  expired,
  unknown_tree,
  no_failover,
  do_not_detour,
  malformed,
  queue_overflow,
  adversary,
};

inline const char* to_string(DropReason r) {
  switch (r) {
    case DropReason::mac_verification_failed: return "mac_verification_failed";
    case DropReason::expired: return "expired";
    case DropReason::unknown_tree: return "unknown_tree";
    case DropReason::no_failover: return "no_failover";
    case DropReason::do_not_detour: return "do_not_detour";
    case DropReason::malformed: return "malformed";
    case DropReason::queue_overflow: return "queue_overflow";
    case DropReason::adversary: return "adversary";
  }
  return "?";
}

// Pre-computed detour from `head` to the egress switch, encoded like a normal
// path: slot 0 belongs to the head switch itself.
struct FailoverPathRecord {
  std::uint32_t failover_path_id = 0;
  SwitchId head{};
  SwitchId egress_id{};
  std::vector<PathHop> path;  // head ... egress
  std::uint32_t exp_time = 0;
  std::vector<ForwardingEntry> fes;
};

// -----------------------------------------------------------------------------
// Controller -> switch

struct IngressRule {
  std::uint32_t flow_id = 0;
  std::uint32_t exp_time = 0;
  SwitchId egress_id{};
  Interface out_if = 0;  // towards S1, or the host port on a one-switch path
  bool do_not_detour = false;
  std::vector<ForwardingEntry> fes;
};

struct InstallIngressRule {
  FlowKey key;
  IngressRule rule;
};

struct InstallEgressRule {
  FlowKey key;
  std::uint32_t flow_id = 0;
  std::uint32_t exp_time = 0;
  Interface host_port = 0;
};

struct InstallFailoverTable {
  std::map<SwitchId, FailoverPathRecord> table;  // keyed by egress switch
};

struct InstallMulticastTree {
  std::uint32_t tree_id = 0;
  std::uint32_t exp_time = 0;
  std::vector<Interface> interfaces;
};

// Lets an ingress switch stamp `tree_id` on traffic for `group`.
struct EnableTree {
  std::uint32_t group = 0;
  std::uint32_t tree_id = 0;
  std::uint32_t exp_time = 0;
  std::vector<Interface> interfaces;
};

struct InstallMonitor {
  std::uint32_t flow_id = 0;
};

struct SetReporting {
  bool report = true;
};

using ControlMessage = std::variant<InstallIngressRule, InstallEgressRule, InstallFailoverTable,
                                    InstallMulticastTree, EnableTree, InstallMonitor,
                                    SetReporting>;

// -----------------------------------------------------------------------------
// Switch -> controller

struct TableMiss {
  FlowKey key;
};

struct DropNotice {
  DropReason reason{};
  Bytes header;
};

struct HeaderReport {
  Bytes header;
};

struct LinkDownNotice {
  Interface port = 0;
};

struct InstallAck {
  std::uint32_t tree_id = 0;
};

using SwitchMessage = std::variant<TableMiss, DropNotice, HeaderReport, LinkDownNotice, InstallAck>;

}  // namespace sdnsec
