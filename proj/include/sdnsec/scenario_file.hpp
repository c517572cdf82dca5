#pragma once

// Line-oriented scenario files.
//
//   # comment
//   seed 7
//   duration 2000
//   timing link_delay=1 control_delay=2 reconfig_delay=20 install_latency=0
//   controller safeguard=on replay_threshold=3 replay_window=65536 report=on
//              flow_ttl=60 failover_ttl=3600 id_space=16777216
//   switch 1 role=edge
//   link 1:2 2:1
//   host h1 at=1:10
//   flow f1 src=h1 dst=h2 packets=100 start=0 interval=5 size=850 ttl=60
//        dnd=off monitor=all          (monitor=all | monitor=1,2,3)
//   group g1 src=h1 members=h2,h3 packets=10 start=0 interval=5 size=200
//   regroup g1 at=500 members=h2
//   fail 2:3 at=100
//   adversary 2 behavior=detour return=4 via=3
//
// One directive per line; a directive's arguments may not wrap. Switches and
// hosts must be declared before they are referenced. Times are milliseconds.

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sdnsec/simnet.hpp"

namespace sdnsec {

namespace detail {

struct Token {
  std::string text;
  std::size_t column = 0;  // 1-based
};

class ScenarioLine {
 public:
  ScenarioLine(std::size_t line, std::vector<Token> tokens) : line_(line), tokens_(std::move(tokens)) {
    for (std::size_t i = 1; i < tokens_.size(); ++i) {
      const Token& t = tokens_[i];
      auto eq = t.text.find('=');
      if (eq == std::string::npos) {
        positional_.push_back(t);
        continue;
      }
      if (eq == 0) fail(t, "missing key before '='");
      std::string key = t.text.substr(0, eq);
      if (named_.count(key)) fail(t, "duplicate key '" + key + "'");
      named_[key] = {t.text.substr(eq + 1), t.column + eq + 1};
      key_columns_[key] = t.column;
    }
  }

  const std::string& directive() const { return tokens_.front().text; }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const { fail_at(t.column, msg); }
  [[noreturn]] void fail_at(std::size_t column, const std::string& msg) const {
    throw ScenarioError(std::to_string(line_) + ":" + std::to_string(column) + ": " + msg);
  }

  void expect_positional(std::size_t n) const {
    if (positional_.size() < n)
      fail_at(tokens_.back().column + tokens_.back().text.size(),
              directive() + " expects " + std::to_string(n) + " positional argument(s)");
    if (positional_.size() > n) fail(positional_[n], "unexpected argument '" + positional_[n].text + "'");
  }

  const Token& positional(std::size_t i) const { return positional_.at(i); }

  void allow(std::initializer_list<std::string_view> keys) const {
    std::set<std::string_view> ok(keys);
    for (const auto& [k, v] : named_)
      if (!ok.count(k)) fail_at(key_columns_.at(k), "unknown key '" + k + "' for " + directive());
  }

  bool has(const std::string& key) const { return named_.count(key) != 0; }

  const Token& value(const std::string& key) const {
    auto it = named_.find(key);
    if (it == named_.end())
      fail_at(tokens_.front().column, directive() + " requires " + key + "=");
    return it->second;
  }

  std::uint64_t u64(const Token& t) const {
    std::uint64_t v = 0;
    const char* end = t.text.data() + t.text.size();
    auto [p, ec] = std::from_chars(t.text.data(), end, v);
    if (t.text.empty() || ec != std::errc() || p != end) fail(t, "expected a non-negative integer, got '" + t.text + "'");
    return v;
  }

  std::uint64_t u64(const std::string& key) const { return u64(value(key)); }
  std::uint64_t u64(const std::string& key, std::uint64_t dflt) const { return has(key) ? u64(key) : dflt; }

  std::uint64_t bounded(const Token& t, std::uint64_t max, const char* what) const {
    const std::uint64_t v = u64(t);
    if (v > max) fail(t, std::string(what) + " out of range: " + t.text);
    return v;
  }

  double real(const std::string& key) const {
    const Token& t = value(key);
    try {
      std::size_t used = 0;
      double v = std::stod(t.text, &used);
      if (used != t.text.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      fail(t, "expected a number, got '" + t.text + "'");
    }
  }

  bool flag(const std::string& key, bool dflt) const {
    if (!has(key)) return dflt;
    const Token& t = value(key);
    if (t.text == "on" || t.text == "true" || t.text == "yes") return true;
    if (t.text == "off" || t.text == "false" || t.text == "no") return false;
    fail(t, "expected on/off, got '" + t.text + "'");
  }

  std::vector<Token> list(const Token& t) const {
    std::vector<Token> out;
    std::size_t start = 0;
    while (start <= t.text.size()) {
      auto comma = t.text.find(',', start);
      if (comma == std::string::npos) comma = t.text.size();
      Token part{t.text.substr(start, comma - start), t.column + start};
      if (part.text.empty()) fail(part, "empty list element");
      out.push_back(std::move(part));
      start = comma + 1;
    }
    return out;
  }

 private:
  std::size_t line_;
  std::vector<Token> tokens_;
  std::vector<Token> positional_;
  std::map<std::string, Token> named_;
  std::map<std::string, std::size_t> key_columns_;
};

inline std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == '#') break;
    if (line[i] == ' ' || line[i] == '\t' || line[i] == '\r') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r' && line[j] != '#') ++j;
    out.push_back({std::string(line.substr(i, j - i)), i + 1});
    i = j;
  }
  return out;
}

}  // namespace detail

class ScenarioParser {
 public:
  Scenario parse(std::istream& in) {
    std::string text;
    std::size_t n = 0;
    while (std::getline(in, text)) {
      ++n;
      auto tokens = detail::tokenize(text);
      if (tokens.empty()) continue;
      detail::ScenarioLine line(n, std::move(tokens));
      try {
        directive(line);
      } catch (const ScenarioError& e) {
        // Errors raised by the model (duplicate ids, ports in use) get a position.
        const std::string what = e.what();
        if (!what.empty() && std::isdigit(static_cast<unsigned char>(what[0]))) throw;
        line.fail_at(1, what);
      }
    }
    try {
      sc_.validate();
    } catch (const ScenarioError& e) {
      throw ScenarioError(std::to_string(n + (n == 0)) + ":1: " + e.what());
    }
    return std::move(sc_);
  }

 private:
  using Line = detail::ScenarioLine;
  using Token = detail::Token;

  void directive(const Line& l) {
    const std::string& d = l.directive();
    if (d == "seed") {
      l.expect_positional(1);
      l.allow({});
      sc_.seed = l.u64(l.positional(0));
    } else if (d == "duration") {
      l.expect_positional(1);
      l.allow({});
      sc_.duration_ms = l.u64(l.positional(0));
    } else if (d == "timing") {
      l.expect_positional(0);
      l.allow({"link_delay", "control_delay", "reconfig_delay", "install_latency"});
      sc_.timing.link_delay_ms = l.u64("link_delay", sc_.timing.link_delay_ms);
      sc_.timing.control_delay_ms = l.u64("control_delay", sc_.timing.control_delay_ms);
      if (l.has("reconfig_delay")) sc_.timing.reconfig_delay_ms = l.u64("reconfig_delay");
      sc_.timing.install_latency_ms = l.u64("install_latency", sc_.timing.install_latency_ms);
    } else if (d == "controller") {
      l.expect_positional(0);
      l.allow({"safeguard", "replay_threshold", "replay_window", "report", "flow_ttl",
               "failover_ttl", "tree_ttl", "id_space"});
      auto& c = sc_.controller;
      c.multicast_safeguard = l.flag("safeguard", c.multicast_safeguard);
      c.report_all = l.flag("report", c.report_all);
      c.replay_threshold = static_cast<unsigned>(l.u64("replay_threshold", c.replay_threshold));
      c.replay_window = l.u64("replay_window", c.replay_window);
      c.flow_ttl_s = static_cast<std::uint32_t>(l.u64("flow_ttl", c.flow_ttl_s));
      c.failover_ttl_s = static_cast<std::uint32_t>(l.u64("failover_ttl", c.failover_ttl_s));
      c.tree_ttl_s = static_cast<std::uint32_t>(l.u64("tree_ttl", c.tree_ttl_s));
      if (l.has("id_space")) {
        const Token& t = l.value("id_space");
        c.id_space = static_cast<std::uint32_t>(l.bounded(t, 1u << 24, "id_space"));
        if (c.id_space < 2) l.fail(t, "id_space must be at least 2");
      }
    } else if (d == "switch") {
      l.expect_positional(1);
      l.allow({"role"});
      const Token& role = l.value("role");
      Role r;
      if (role.text == "edge") r = Role::edge;
      else if (role.text == "core") r = Role::core;
      else l.fail(role, "role must be edge or core");
      const Token& id = l.positional(0);
      sc_.topology.add_switch(switch_id(static_cast<unsigned>(l.bounded(id, 0xFFFF, "switch id"))), r);
    } else if (d == "link") {
      l.expect_positional(2);
      l.allow({});
      auto [a, ia] = endpoint(l, l.positional(0));
      auto [b, ib] = endpoint(l, l.positional(1));
      sc_.topology.add_link(a, ia, b, ib);
    } else if (d == "host") {
      l.expect_positional(1);
      l.allow({"at"});
      auto [sw, port] = endpoint(l, l.value("at"));
      sc_.topology.add_host(l.positional(0).text, sw, port);
    } else if (d == "flow") {
      l.expect_positional(1);
      l.allow({"src", "dst", "packets", "start", "interval", "size", "ttl", "dnd", "monitor"});
      FlowSpec f;
      f.name = l.positional(0).text;
      f.src = host(l, l.value("src"));
      f.dst = host(l, l.value("dst"));
      f.packets = l.u64("packets", f.packets);
      f.start_ms = l.u64("start", f.start_ms);
      f.interval_ms = l.u64("interval", f.interval_ms);
      f.size = l.u64("size", f.size);
      if (l.has("ttl")) f.ttl_s = static_cast<std::uint32_t>(l.u64("ttl"));
      f.do_not_detour = l.flag("dnd", false);
      if (l.has("monitor")) {
        const Token& m = l.value("monitor");
        f.monitor.emplace();
        if (m.text != "all")
          for (const Token& t : l.list(m)) f.monitor->push_back(known_switch(l, t));
      }
      sc_.flows.push_back(std::move(f));
    } else if (d == "group") {
      l.expect_positional(1);
      l.allow({"src", "members", "packets", "start", "interval", "size"});
      GroupSpec g;
      g.name = l.positional(0).text;
      g.src = host(l, l.value("src"));
      for (const Token& t : l.list(l.value("members"))) g.members.push_back(host(l, t));
      g.packets = l.u64("packets", g.packets);
      g.start_ms = l.u64("start", g.start_ms);
      g.interval_ms = l.u64("interval", g.interval_ms);
      g.size = l.u64("size", g.size);
      sc_.groups.push_back(std::move(g));
    } else if (d == "regroup") {
      l.expect_positional(1);
      l.allow({"at", "members"});
      RegroupSpec r;
      r.group = l.positional(0).text;
      r.at_ms = l.u64("at");
      for (const Token& t : l.list(l.value("members"))) r.members.push_back(host(l, t));
      sc_.regroups.push_back(std::move(r));
    } else if (d == "fail") {
      l.expect_positional(1);
      l.allow({"at"});
      const Token& ep = l.positional(0);
      auto [sw, port] = endpoint(l, ep);
      if (!sc_.topology.link_at(sw, port)) l.fail(ep, "no link at " + ep.text);
      sc_.failures.push_back({l.u64("at"), sw, port});
    } else if (d == "adversary") {
      adversary(l);
    } else {
      l.fail_at(1, "unknown directive '" + d + "'");
    }
  }

  void adversary(const Line& l) {
    using K = AdversaryBehavior::Kind;
    l.expect_positional(1);
    const Token& who = l.positional(0);
    const Token& beh = l.value("behavior");
    static const std::map<std::string, K> kinds = {
        {"honest", K::honest},
        {"detour", K::detour},
        {"forge", K::forge},
        {"shortcut", K::shortcut},
        {"pvf_replay", K::pvf_replay},
        {"seqno_replay", K::seqno_replay},
        {"flood_flows", K::flood_flows},
        {"drop_packets", K::drop_packets},
        {"dishonest_counter", K::dishonest_counter},
        {"wormhole", K::wormhole},
        {"reflect", K::reflect},
    };
    auto it = kinds.find(beh.text);
    if (it == kinds.end()) l.fail(beh, "unknown behavior '" + beh.text + "'");
    AdversaryBehavior b;
    b.kind = it->second;
    switch (b.kind) {
      case K::honest:
      case K::reflect:
        l.allow({"behavior"});
        break;
      case K::detour:
        l.allow({"behavior", "return", "via"});
        b.target = known_switch(l, l.value("return"));
        if (l.has("via")) b.via = static_cast<Interface>(l.bounded(l.value("via"), 255, "interface"));
        break;
      case K::forge:
        l.allow({"behavior", "target"});
        b.target = known_switch(l, l.value("target"));
        break;
      case K::shortcut:
        l.allow({"behavior", "skip", "rewrite"});
        b.count = l.u64("skip", 1);
        b.rewrite_pointer = l.flag("rewrite", false);
        break;
      case K::pvf_replay:
        l.allow({"behavior", "source"});
        b.count = l.u64("source", 1);
        break;
      case K::seqno_replay:
        l.allow({"behavior", "copies"});
        b.count = l.u64("copies", 100);
        break;
      case K::flood_flows:
        l.allow({"behavior", "rate", "flows", "dst"});
        b.rate = l.real("rate");
        b.count = l.u64("flows");
        b.dst = host(l, l.value("dst"));
        break;
      case K::drop_packets:
        l.allow({"behavior", "rate"});
        b.rate = l.real("rate");
        break;
      case K::dishonest_counter:
        l.allow({"behavior", "factor"});
        b.rate = l.real("factor");
        break;
      case K::wormhole:
        l.allow({"behavior", "colluder"});
        b.target = known_switch(l, l.value("colluder"));
        break;
    }
    AdversarySpec spec{who.text, b};
    try {
      sc_.validate_adversary(spec);
    } catch (const ScenarioError& e) {
      l.fail(who, e.what());
    }
    sc_.adversaries.push_back(std::move(spec));
  }

  SwitchId known_switch(const Line& l, const Token& t) {
    const SwitchId sw = switch_id(static_cast<unsigned>(l.bounded(t, 0xFFFF, "switch id")));
    if (!sc_.topology.has_switch(sw)) l.fail(t, "unknown switch " + t.text);
    return sw;
  }

  std::string host(const Line& l, const Token& t) {
    if (!sc_.topology.has_host(t.text)) l.fail(t, "unknown host " + t.text);
    return t.text;
  }

  std::pair<SwitchId, Interface> endpoint(const Line& l, const Token& t) {
    auto colon = t.text.find(':');
    if (colon == std::string::npos) l.fail(t, "expected <switch>:<interface>, got '" + t.text + "'");
    Token sw{t.text.substr(0, colon), t.column};
    Token port{t.text.substr(colon + 1), t.column + colon + 1};
    return {known_switch(l, sw), static_cast<Interface>(l.bounded(port, 255, "interface"))};
  }

  Scenario sc_;
};

inline Scenario parse_scenario(std::istream& in) { return ScenarioParser{}.parse(in); }

inline Scenario parse_scenario(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file " + path);
  return parse_scenario(in);
}

}  // namespace sdnsec
