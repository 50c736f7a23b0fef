#pragma once

#include <filesystem>
#include <string>

#include "teimit/error.hpp"
#include "teimit/netmodel.hpp"
#include "teimit/rng.hpp"
#include "teimit/teprog.hpp"

namespace teimit::test {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(TEIMIT_FIXTURE_DIR) / name;
}

inline std::filesystem::path recipe_file(const std::string& name) {
  return std::filesystem::path(TEIMIT_RECIPE_DIR) / name;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("teimit_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// One pair 0 -> 1 routed over the single link 0 -> 1.
inline TEInstance single_path(double demand, double capacity) {
  TEInstance inst;
  inst.topology = NetworkTopology(2, {{0, 1, capacity}}, {});
  inst.pairs = {{0, 1, demand}};
  inst.paths = {{{0}}};
  return inst;
}

/// fixtures/four_node.topo with its single pair 0 -> 3 and both paths.
inline TEInstance four_node(double demand) {
  const NetworkTopology topo = load_topology_file(fixture("four_node.topo"));
  TEInstance inst;
  inst.topology = topo;
  inst.pairs = {{0, 3, demand}};
  inst.paths = {yen_k_shortest_paths(topo, 0, 3, 2)};
  return inst;
}

inline TEInstance random_instance(std::uint64_t seed, int n = 8, double q = 0.4, int pairs = 3,
                                  int k = 2) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    try {
      const NetworkTopology topo = generate_erdos_renyi(n, q, derive_seed(seed, 1, attempt));
      return sample_instance(topo, pairs, {1000, 5000}, k, derive_seed(seed, 2, attempt));
    } catch (const GenerationError&) {
    }
  }
}

}  // namespace teimit::test
