#pragma once

// Small reference topologies for tests and bundled scenarios.

#include <string>

#include "sdnsec/topology.hpp"

namespace sdnsec::fixtures {

// Switches 1..n in a chain, edge at both ends. Switch i uses interface 2 towards
// i+1 and interface 1 towards i-1. Host "a" hangs off switch 1 and host "b" off
// switch n, both on interface 10.
inline Topology line(unsigned n) {
  Topology t;
  for (unsigned i = 1; i <= n; ++i)
    t.add_switch(switch_id(i), (i == 1 || i == n) ? Role::edge : Role::core);
  for (unsigned i = 1; i < n; ++i) t.add_link(switch_id(i), 2, switch_id(i + 1), 1);
  t.add_host("a", switch_id(1), 10);
  if (n > 1) t.add_host("b", switch_id(n), 10);
  return t;
}

// A chain 1..n as above plus a second, parallel chain of core switches
// 101..(100+n-2) joined to both ends, so that every core switch and every link
// on the primary chain has a detour. Each primary switch i (1<i<n) also links
// to the parallel switch 100+i-1 on interface 3, and consecutive parallel
// switches use interfaces 2 (forward) / 1 (back).
inline Topology ladder(unsigned n) {
  Topology t = line(n);
  if (n < 3) return t;
  const unsigned m = n - 2;
  for (unsigned j = 1; j <= m; ++j) t.add_switch(switch_id(100 + j), Role::core);
  for (unsigned j = 1; j < m; ++j) t.add_link(switch_id(100 + j), 2, switch_id(101 + j), 1);
  t.add_link(switch_id(1), 3, switch_id(101), 1);
  t.add_link(switch_id(100 + m), 2, switch_id(n), 3);
  for (unsigned i = 2; i < n; ++i) t.add_link(switch_id(i), 3, switch_id(100 + i - 1), 3);
  return t;
}

// Two-tier leaf-spine: leaves 1..leaves (edge), spines 11..(10+spines) (core).
// Leaf l uses interface s towards spine 10+s; spine uses interface l towards
// leaf l. Each leaf gets `hosts_per_leaf` hosts "h<l>_<k>" on interfaces 100+k.
inline Topology leaf_spine(unsigned leaves, unsigned spines, unsigned hosts_per_leaf) {
  Topology t;
  for (unsigned l = 1; l <= leaves; ++l) t.add_switch(switch_id(l), Role::edge);
  for (unsigned s = 1; s <= spines; ++s) t.add_switch(switch_id(10 + s), Role::core);
  for (unsigned l = 1; l <= leaves; ++l)
    for (unsigned s = 1; s <= spines; ++s)
      t.add_link(switch_id(l), static_cast<Interface>(s), switch_id(10 + s), static_cast<Interface>(l));
  for (unsigned l = 1; l <= leaves; ++l)
    for (unsigned k = 1; k <= hosts_per_leaf; ++k)
      t.add_host("h" + std::to_string(l) + "_" + std::to_string(k), switch_id(l),
                 static_cast<Interface>(100 + k));
  return t;
}

}  // namespace sdnsec::fixtures
