#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "support.hpp"
#include "teimit/error.hpp"
#include "teimit/netmodel.hpp"

using namespace teimit;
using teimit::test::fixture;

namespace {

// Every simple s-t path by depth-first search, sorted by (hops, link ids).
std::vector<Path> all_simple_paths(const NetworkTopology& topo, NodeId s, NodeId t) {
  std::vector<Path> out;
  std::vector<char> on(static_cast<std::size_t>(topo.num_nodes()), 0);
  Path cur;
  std::function<void(NodeId)> dfs = [&](NodeId u) {
    if (u == t) {
      out.push_back(cur);
      return;
    }
    on[static_cast<std::size_t>(u)] = 1;
    for (LinkId l = 0; l < topo.num_links(); ++l) {
      const Link& e = topo.link(l);
      if (e.src != u || on[static_cast<std::size_t>(e.dst)]) continue;
      cur.push_back(l);
      dfs(e.dst);
      cur.pop_back();
    }
    on[static_cast<std::size_t>(u)] = 0;
  };
  dfs(s);
  std::sort(out.begin(), out.end(), [](const Path& a, const Path& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  return out;
}

NetworkTopology parse(const std::string& text) {
  std::istringstream in(text);
  return parse_topology(in, "inline");
}

}  // namespace

TEST(ErdosRenyi, CompleteGraphOnTwoNodes) {
  const NetworkTopology t = generate_erdos_renyi(2, 1.0, 9);
  EXPECT_EQ(t.num_nodes(), 2);
  EXPECT_EQ(t.num_links(), 2);
}

TEST(ErdosRenyi, LinkCountMatchesBinomial) {
  const int n = 20;
  const double q = 0.3;
  const double trials = n * (n - 1);
  const double mean = trials * q, sigma = std::sqrt(trials * q * (1 - q));
  double total = 0.0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) {
    const NetworkTopology t = generate_erdos_renyi(n, q, static_cast<std::uint64_t>(s));
    EXPECT_NEAR(t.num_links(), mean, 4.5 * sigma) << "seed " << s;
    total += t.num_links();
  }
  EXPECT_NEAR(total / seeds, mean, 4.0 * sigma / std::sqrt(seeds));
}

TEST(ErdosRenyi, CapacitiesInConfiguredRange) {
  const NetworkTopology t = generate_erdos_renyi(30, 0.5, 4, {2000, 3000});
  for (const Link& l : t.links()) {
    EXPECT_GE(l.capacity, 2000.0);
    EXPECT_LT(l.capacity, 3000.0);
  }
}

TEST(ErdosRenyi, LargestTrainingConfigurationScale) {
  // Roughly 100 * 99 * 0.8 = 7920 links at the largest training size.
  const NetworkTopology t = generate_erdos_renyi(100, 0.8, 11);
  EXPECT_GT(t.num_links(), 7500);
  EXPECT_LT(t.num_links(), 8300);
}

TEST(ErdosRenyi, DeterministicPerSeed) {
  EXPECT_EQ(generate_erdos_renyi(25, 0.4, 5), generate_erdos_renyi(25, 0.4, 5));
  EXPECT_FALSE(generate_erdos_renyi(25, 0.4, 5) == generate_erdos_renyi(25, 0.4, 6));
}

TEST(ErdosRenyi, RejectsBadParameters) {
  EXPECT_THROW(generate_erdos_renyi(1, 0.5, 1), ValidationError);
  EXPECT_THROW(generate_erdos_renyi(5, 0.0, 1), ValidationError);
  EXPECT_THROW(generate_erdos_renyi(5, 1.5, 1), ValidationError);
}

TEST(Waxman, MaximalDistanceAcceptanceRate) {
  // With two nodes the pair distance is the maximal distance, so each of the
  // two ordered pairs is linked with probability exp(-1).
  const int seeds = 10000;
  const double p = std::exp(-1.0);
  double links = 0.0;
  for (int s = 0; s < seeds; ++s) {
    links += generate_waxman(2, 1.0, 1.0, static_cast<std::uint64_t>(s)).num_links();
  }
  const double trials = 2.0 * seeds;
  EXPECT_NEAR(links, trials * p, 4.0 * std::sqrt(trials * p * (1 - p)));
}

TEST(Waxman, RejectsBadParameters) {
  EXPECT_THROW(generate_waxman(2, 0.0, 0.5, 1), ValidationError);
  EXPECT_THROW(generate_waxman(1, 0.5, 0.5, 1), ValidationError);
  EXPECT_THROW(generate_waxman(5, 0.5, 0.0, 1), ValidationError);
}

TEST(Waxman, DefaultAlphaProducesUsableInstances) {
  const NetworkTopology t = generate_waxman(200, 0.1, 0.2, 17);
  const TEInstance inst = sample_instance(t, 20, {1000, 5000}, 4, 3);
  EXPECT_EQ(inst.pairs.size(), 20u);
  EXPECT_NO_THROW(inst.validate());
}

TEST(TopologyFile, B4LikeFixtureShape) {
  const NetworkTopology t = load_topology_file(fixture("b4_like.topo"));
  EXPECT_EQ(t.num_nodes(), 12);
  EXPECT_EQ(t.num_links(), 38);
  EXPECT_EQ(t.provenance().kind, Provenance::Kind::file);
  EXPECT_EQ(t.provenance().name, "b4_like.topo");
}

TEST(TopologyFile, EmptyFileIsParseError) {
  EXPECT_THROW(parse(""), ParseError);
}

TEST(TopologyFile, ZeroCapacityIsValidationError) {
  EXPECT_THROW(parse("nodes 2\nlink 0 1 0\n"), ValidationError);
}

TEST(TopologyFile, DuplicateLinkIsValidationError) {
  EXPECT_THROW(parse("nodes 2\nlink 0 1 5\nlink 0 1 7\n"), ValidationError);
}

TEST(TopologyFile, ParseErrorNamesLine) {
  try {
    parse("nodes 3\n# comment\nlink 0 1 5\nlink 0 x 5\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4);
  }
}

TEST(TopologyFile, EdgeExpandsToTwoDirectedLinks) {
  const NetworkTopology t = parse("nodes 2 # header\nedge 0 1 1500\n");
  ASSERT_EQ(t.num_links(), 2);
  EXPECT_EQ(t.link(0), (Link{0, 1, 1500}));
  EXPECT_EQ(t.link(1), (Link{1, 0, 1500}));
}

TEST(Yen, TwoNodeSingleLink) {
  const NetworkTopology t(2, {{0, 1, 100}}, {});
  const auto paths = yen_k_shortest_paths(t, 0, 1, 3);
  ASSERT_EQ(paths.size(), 1u);
  EXPECT_EQ(paths[0], (Path{0}));
  EXPECT_TRUE(yen_k_shortest_paths(t, 1, 0, 3).empty());
}

TEST(Yen, FourNodeFixtureHasTwoPaths) {
  const NetworkTopology t = load_topology_file(fixture("four_node.topo"));
  EXPECT_EQ(t.num_nodes(), 4);
  EXPECT_EQ(t.num_links(), 6);
  const auto paths = yen_k_shortest_paths(t, 0, 3, 2);
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_EQ(paths[0], (Path{0}));     // 0 -> 3
  EXPECT_EQ(paths[1], (Path{1, 2}));  // 0 -> 1 -> 3
  EXPECT_EQ(yen_k_shortest_paths(t, 0, 3, 5).size(), 2u);
}

TEST(Yen, MatchesBruteForceEnumeration) {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const int n = 3 + static_cast<int>(seed % 6);
    const double q = 0.25 + 0.1 * static_cast<double>(seed % 5);
    const NetworkTopology t = generate_erdos_renyi(n, q, seed);
    for (NodeId s = 0; s < n; ++s) {
      for (NodeId d = 0; d < n; ++d) {
        if (s == d) continue;
        const auto oracle = all_simple_paths(t, s, d);
        for (int k : {1, 2, 4, 7}) {
          const auto got = yen_k_shortest_paths(t, s, d, k);
          const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(k), oracle.size());
          ASSERT_EQ(got.size(), want) << "seed " << seed << " " << s << "->" << d << " k=" << k;
          for (std::size_t i = 0; i < want; ++i) ASSERT_EQ(got[i], oracle[i]);
          ++checked;
        }
      }
    }
  }
  EXPECT_GT(checked, 1000);
}

TEST(Yen, RejectsBadArguments) {
  const NetworkTopology t(2, {{0, 1, 100}}, {});
  EXPECT_THROW(yen_k_shortest_paths(t, 0, 0, 1), ValidationError);
  EXPECT_THROW(yen_k_shortest_paths(t, 0, 1, 0), ValidationError);
  EXPECT_THROW(yen_k_shortest_paths(t, 0, 5, 1), ValidationError);
}

TEST(SampleInstance, SinglePairSinglePath) {
  const NetworkTopology t = generate_erdos_renyi(10, 0.6, 2);
  const TEInstance inst = sample_instance(t, 1, {1000, 5000}, 1, 8);
  ASSERT_EQ(inst.pairs.size(), 1u);
  EXPECT_EQ(inst.num_paths(), 1);
}

TEST(SampleInstance, TrainingStyleInstance) {
  const NetworkTopology t = generate_erdos_renyi(20, 0.3, 21);
  const TEInstance inst = sample_instance(t, 10, {1000, 5000}, 4, 22);
  ASSERT_EQ(inst.pairs.size(), 10u);
  std::set<std::pair<NodeId, NodeId>> ends;
  for (std::size_t i = 0; i < inst.pairs.size(); ++i) {
    const SDPair& sd = inst.pairs[i];
    EXPECT_GE(sd.demand, 1000.0);
    EXPECT_LT(sd.demand, 5000.0);
    EXPECT_TRUE(ends.emplace(sd.source, sd.destination).second);
    EXPECT_GE(inst.paths[i].size(), 1u);
    EXPECT_LE(inst.paths[i].size(), 4u);
    EXPECT_EQ(inst.paths[i], yen_k_shortest_paths(t, sd.source, sd.destination, 4));
  }
}

TEST(SampleInstance, SeedRepeatIsIdentical) {
  const NetworkTopology t = generate_erdos_renyi(20, 0.3, 21);
  EXPECT_EQ(sample_instance(t, 10, {1000, 5000}, 4, 5), sample_instance(t, 10, {1000, 5000}, 4, 5));
}

TEST(SampleInstance, InvariantsHoldOnManyInstances) {
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const TEInstance inst = teimit::test::random_instance(s, 6 + static_cast<int>(s % 10), 0.35, 4, 3);
    for (std::size_t i = 0; i < inst.pairs.size(); ++i) {
      for (const Path& p : inst.paths[i]) {
        ASSERT_EQ(path_source(inst.topology, p), inst.pairs[i].source);
        ASSERT_EQ(path_destination(inst.topology, p), inst.pairs[i].destination);
        std::set<NodeId> nodes{inst.pairs[i].source};
        for (std::size_t h = 0; h < p.size(); ++h) {
          if (h > 0) ASSERT_EQ(inst.topology.link(p[h - 1]).dst, inst.topology.link(p[h]).src);
          ASSERT_TRUE(nodes.insert(inst.topology.link(p[h]).dst).second);
        }
      }
    }
    ASSERT_NO_THROW(inst.validate());
  }
}

TEST(SampleInstance, DisconnectedTopologyFailsLoudly) {
  // No links at all: every pair is disconnected.
  const NetworkTopology t(5, {}, {});
  EXPECT_THROW(sample_instance(t, 2, {1000, 5000}, 2, 1), GenerationError);
}

TEST(SampleInstance, RejectsTooManyPairs) {
  const NetworkTopology t(2, {{0, 1, 5}, {1, 0, 5}}, {});
  EXPECT_THROW(sample_instance(t, 3, {1000, 5000}, 1, 1), ValidationError);
}

TEST(InstanceJson, RoundTrip) {
  TEInstance inst = teimit::test::random_instance(77, 12, 0.4, 5, 3);
  inst.recipe = "abc";
  const TEInstance back = instance_from_json(nlohmann::json::parse(to_json(inst).dump()));
  EXPECT_EQ(back, inst);
}

TEST(InstanceJson, DocumentedFieldNames) {
  const nlohmann::json j = to_json(teimit::test::single_path(1000, 5000));
  for (const char* key : {"topology", "pairs", "paths", "seed", "recipe"}) EXPECT_TRUE(j.contains(key));
  EXPECT_EQ(j["pairs"][0]["d"], 1000.0);
  EXPECT_EQ(j["paths"][0][0][0], 0);
}

TEST(InstanceJson, InvalidInstanceRejected) {
  nlohmann::json j = to_json(teimit::test::single_path(1000, 5000));
  j["paths"][0][0] = nlohmann::json::array({0, 0});
  EXPECT_THROW(instance_from_json(j), ValidationError);
}
