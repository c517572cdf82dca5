#pragma once

#include <algorithm>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sdnsec/crypto.hpp"
#include "sdnsec/types.hpp"

namespace sdnsec {

enum class Role { edge, core };

inline const char* to_string(Role r) { return r == Role::edge ? "edge" : "core"; }

using LinkId = std::size_t;

struct Link {
  SwitchId a{};
  Interface if_a = 0;
  SwitchId b{};
  Interface if_b = 0;
};

struct HostAttachment {
  std::string name;
  SwitchId sw{};
  Interface port = 0;
  std::uint32_t ip = 0;
  std::uint64_t mac = 0;
};

// What sits at the far end of a switch interface.
struct Peer {
  enum class Kind { link, host } kind = Kind::link;
  LinkId link = 0;
  SwitchId sw{};        // far switch (link)
  Interface port = 0;   // far interface (link)
  std::string host;     // host name (host)
};

class Topology {
 public:
  void add_switch(SwitchId id, Role role) {
    if (switches_.count(id)) throw ScenarioError("duplicate switch " + to_string(id));
    switches_[id] = role;
    ports_[id];
  }

  LinkId add_link(SwitchId a, Interface if_a, SwitchId b, Interface if_b) {
    if (a == b) throw ScenarioError("self-loop on switch " + to_string(a));
    claim_port(a, if_a);
    claim_port(b, if_b);
    const LinkId id = links_.size();
    links_.push_back({a, if_a, b, if_b});
    ports_[a][if_a] = Peer{Peer::Kind::link, id, b, if_b, {}};
    ports_[b][if_b] = Peer{Peer::Kind::link, id, a, if_a, {}};
    return id;
  }

  void add_host(const std::string& name, SwitchId sw, Interface port) {
    if (hosts_.count(name)) throw ScenarioError("duplicate host " + name);
    if (role(sw) != Role::edge)
      throw ScenarioError("host " + name + " must attach to an edge switch");
    claim_port(sw, port);
    const auto index = static_cast<std::uint32_t>(hosts_.size() + 1);
    hosts_[name] = {name, sw, port, 0x0A000000u + index, 0x020000000000ull + index};
    host_by_ip_[0x0A000000u + index] = name;
    Peer p;
    p.kind = Peer::Kind::host;
    p.host = name;
    ports_[sw][port] = p;
  }

  bool has_switch(SwitchId id) const { return switches_.count(id) != 0; }
  bool has_host(const std::string& name) const { return hosts_.count(name) != 0; }

  Role role(SwitchId id) const {
    auto it = switches_.find(id);
    if (it == switches_.end()) throw ScenarioError("unknown switch " + to_string(id));
    return it->second;
  }

  const HostAttachment& host(const std::string& name) const {
    auto it = hosts_.find(name);
    if (it == hosts_.end()) throw ScenarioError("unknown host " + name);
    return it->second;
  }

  std::optional<Peer> peer(SwitchId sw, Interface port) const {
    auto it = ports_.find(sw);
    if (it == ports_.end()) return std::nullopt;
    auto pit = it->second.find(port);
    if (pit == it->second.end()) return std::nullopt;
    return pit->second;
  }

  const std::map<Interface, Peer>& ports(SwitchId sw) const {
    auto it = ports_.find(sw);
    if (it == ports_.end()) throw ScenarioError("unknown switch " + to_string(sw));
    return it->second;
  }

  std::optional<LinkId> link_at(SwitchId sw, Interface port) const {
    auto p = peer(sw, port);
    if (!p || p->kind != Peer::Kind::link) return std::nullopt;
    return p->link;
  }

  std::vector<SwitchId> switch_ids() const {
    std::vector<SwitchId> out;
    for (const auto& [id, r] : switches_) out.push_back(id);
    return out;
  }

  std::vector<SwitchId> edge_switches() const {
    std::vector<SwitchId> out;
    for (const auto& [id, r] : switches_)
      if (r == Role::edge) out.push_back(id);
    return out;
  }

  const std::vector<Link>& links() const { return links_; }
  const std::map<std::string, HostAttachment>& hosts() const { return hosts_; }

  const HostAttachment* host_by_ip(std::uint32_t ip) const {
    auto it = host_by_ip_.find(ip);
    return it == host_by_ip_.end() ? nullptr : &hosts_.at(it->second);
  }
  std::size_t switch_count() const { return switches_.size(); }

  void set_link_up(LinkId id, bool up) {
    if (id >= links_.size()) throw ScenarioError("unknown link");
    if (up) down_.erase(id); else down_.insert(id);
  }
  bool link_up(LinkId id) const { return down_.count(id) == 0; }

 private:
  void claim_port(SwitchId sw, Interface port) {
    if (!switches_.count(sw)) throw ScenarioError("unknown switch " + to_string(sw));
    if (ports_[sw].count(port))
      throw ScenarioError("interface " + std::to_string(port) + " on switch " + to_string(sw) +
                          " already in use");
  }

  std::map<SwitchId, Role> switches_;
  std::vector<Link> links_;
  std::map<std::string, HostAttachment> hosts_;
  std::map<std::uint32_t, std::string> host_by_ip_;
  std::map<SwitchId, std::map<Interface, Peer>> ports_;
  std::set<LinkId> down_;
};

// Links a path search may not use, on top of links that are down.
using LinkFilter = std::function<bool(LinkId)>;

// Shortest path by hop count from `from` to `to`, ties broken by the
// lexicographically smallest switch sequence (then smallest interface for
// parallel links). The returned hops carry the interface toward the next
// switch; the last hop's egress_if is left 0 for the caller to fill.
inline std::optional<std::vector<PathHop>> shortest_path(const Topology& topo, SwitchId from,
                                                        SwitchId to,
                                                        const LinkFilter& excluded = {}) {
  auto usable = [&](LinkId l) { return topo.link_up(l) && !(excluded && excluded(l)); };

  // BFS distances to `to`.
  std::map<SwitchId, unsigned> dist;
  std::deque<SwitchId> queue{to};
  dist[to] = 0;
  while (!queue.empty()) {
    SwitchId cur = queue.front();
    queue.pop_front();
    for (const auto& [port, p] : topo.ports(cur)) {
      if (p.kind != Peer::Kind::link || !usable(p.link)) continue;
      if (!dist.count(p.sw)) {
        dist[p.sw] = dist[cur] + 1;
        queue.push_back(p.sw);
      }
    }
  }
  if (!dist.count(from)) return std::nullopt;

  std::vector<PathHop> hops;
  SwitchId cur = from;
  while (cur != to) {
    std::optional<std::pair<SwitchId, Interface>> best;
    for (const auto& [port, p] : topo.ports(cur)) {
      if (p.kind != Peer::Kind::link || !usable(p.link)) continue;
      auto it = dist.find(p.sw);
      if (it == dist.end() || it->second + 1 != dist[cur]) continue;
      std::pair<SwitchId, Interface> cand{p.sw, port};
      if (!best || cand < *best) best = cand;
    }
    hops.push_back({cur, best->second});
    cur = best->first;
  }
  hops.push_back({to, 0});
  return hops;
}

// Host-to-host path: ingress edge switch ... egress edge switch, with the
// egress hop carrying the destination host port.
inline std::vector<PathHop> compute_path(const Topology& topo, const std::string& src_host,
                                         const std::string& dst_host,
                                         const LinkFilter& excluded = {}) {
  const HostAttachment& src = topo.host(src_host);
  const HostAttachment& dst = topo.host(dst_host);
  auto path = shortest_path(topo, src.sw, dst.sw, excluded);
  if (!path)
    throw UnreachableError("no path from " + src_host + " to " + dst_host);
  path->back().egress_if = dst.port;
  return *path;
}

inline std::vector<SwitchId> switches_of(std::span<const PathHop> hops) {
  std::vector<SwitchId> out;
  out.reserve(hops.size());
  for (const auto& h : hops) out.push_back(h.sw);
  return out;
}

}  // namespace sdnsec
