#include <gtest/gtest.h>

#include "sdnsec/scenario_file.hpp"

using namespace sdnsec;

namespace {

const char* kBase = R"(# two edges and a core
seed 3
duration 500
timing link_delay=2 control_delay=3 reconfig_delay=10
controller safeguard=off replay_threshold=5 report=on
switch 1 role=edge
switch 2 role=core
switch 3 role=edge
link 1:2 2:1
link 2:2 3:1
host a at=1:10
host b at=3:10
)";

std::string error_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ScenarioError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(ScenarioFile, ParsesEveryDirective) {
  const std::string text = std::string(kBase) +
                           "flow f src=a dst=b packets=5 start=1 interval=3 size=200 ttl=9 dnd=on monitor=1,2\n"
                           "group g src=a members=b packets=2\n"
                           "regroup g at=100 members=b\n"
                           "fail 2:2 at=50\n"
                           "adversary 2 behavior=detour return=3 via=1\n"
                           "adversary a behavior=flood_flows rate=10 flows=3 dst=b\n";
  const Scenario sc = parse_scenario(text);
  EXPECT_EQ(sc.seed, 3u);
  EXPECT_EQ(sc.duration_ms, 500u);
  EXPECT_EQ(sc.timing.link_delay_ms, 2u);
  EXPECT_EQ(*sc.timing.reconfig_delay_ms, 10u);
  EXPECT_FALSE(sc.controller.multicast_safeguard);
  EXPECT_EQ(sc.controller.replay_threshold, 5u);
  EXPECT_EQ(sc.topology.switch_count(), 3u);
  ASSERT_EQ(sc.flows.size(), 1u);
  EXPECT_EQ(sc.flows[0].packets, 5u);
  EXPECT_EQ(*sc.flows[0].ttl_s, 9u);
  EXPECT_TRUE(sc.flows[0].do_not_detour);
  EXPECT_EQ(sc.flows[0].monitor->size(), 2u);
  EXPECT_EQ(sc.groups.size(), 1u);
  EXPECT_EQ(sc.regroups.size(), 1u);
  EXPECT_EQ(sc.failures.size(), 1u);
  ASSERT_EQ(sc.adversaries.size(), 2u);
  EXPECT_EQ(sc.adversaries[0].behavior.kind, AdversaryBehavior::Kind::detour);
  EXPECT_EQ(*sc.adversaries[0].behavior.via, 1);
  EXPECT_EQ(sc.adversaries[1].behavior.count, 3u);
}

TEST(ScenarioFile, ErrorsCarryLineAndColumn) {
  EXPECT_EQ(error_of(std::string(kBase) + "flow f src=a dst=b colour=red\n"),
            "13:20: unknown key 'colour' for flow");
  EXPECT_EQ(error_of(std::string(kBase) + "flow f src=a dst=zz\n"), "13:18: unknown host zz");
  EXPECT_EQ(error_of(std::string(kBase) + "flow f src=a dst=b packets=ten\n"),
            "13:28: expected a non-negative integer, got 'ten'");
  EXPECT_EQ(error_of("bogus 1\n"), "1:1: unknown directive 'bogus'");
  EXPECT_EQ(error_of("switch 1 role=spine\n"), "1:15: role must be edge or core");
  EXPECT_EQ(error_of("switch 1 role=edge\nlink 1:2 4:1\n"), "2:10: unknown switch 4");
  EXPECT_EQ(error_of(std::string(kBase) + "adversary 2 behavior=teleport\n"),
            "13:22: unknown behavior 'teleport'");
  EXPECT_EQ(error_of(std::string(kBase) + "fail 1:7 at=3\n"), "13:6: no link at 1:7");
}

TEST(ScenarioFile, ModelErrorsGetAPosition) {
  const std::string e = error_of("switch 1 role=edge\nswitch 1 role=core\n");
  EXPECT_EQ(e, "2:1: duplicate switch 1");
}

TEST(ScenarioFile, CommentsAndBlankLinesAreIgnored) {
  const Scenario sc = parse_scenario("\n   # nothing\nseed 9 # trailing\n\n");
  EXPECT_EQ(sc.seed, 9u);
}

TEST(ScenarioFile, MissingFileIsAnError) {
  EXPECT_THROW(load_scenario("/nonexistent/x.scn"), ScenarioError);
}
