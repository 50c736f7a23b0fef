#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "teimit/gnn.hpp"
#include "teimit/ipm.hpp"
#include "teimit/netmodel.hpp"
#include "teimit/train.hpp"

namespace teimit {

/// One topology configuration of a recipe grid.
struct TopologyConfig {
  Provenance::Kind family = Provenance::Kind::erdos_renyi;
  int nodes = 0;
  double q = 0.0;      // erdos_renyi
  double alpha = 0.0;  // waxman
  double beta = 0.0;   // waxman
  std::filesystem::path file;  // file

  nlohmann::json to_json() const;
};

struct Recipe {
  std::string name;
  std::vector<TopologyConfig> configurations;
  int instances_per_config = 0;
  int pairs_per_instance = 10;
  Range demand_range{1000.0, 5000.0};
  Range capacity_range{1000.0, 5000.0};
  int k = 4;
  std::uint64_t seed = 1;
  IPMConfig ipm;
  ModelConfig model;
  std::uint64_t init_seed = 1;
  TrainConfig train;
  LossWeights loss;
  InitialAttributes attributes;

  /// The JSON the recipe was read from, with defaults filled in.
  nlohmann::json source;

  int total_instances() const {
    return static_cast<int>(configurations.size()) * instances_per_config;
  }
};

/// Accepted layouts for "topology":
///   {"family": "erdos_renyi", "nodes": [..], "q": [..]}            (grid)
///   {"family": "waxman", "nodes": [..], "alpha": [..], "beta": [..]} (grid)
///   {"family": "waxman", "configurations": [{"nodes", "alpha", "beta"}]}
///   {"family": "file", "path": "..."} (relative to the recipe file)
/// Every field is validated; throws ValidationError naming the field.
Recipe recipe_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
Recipe load_recipe(const std::filesystem::path& path);

IPMConfig ipm_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const IPMConfig& config);
InitialAttributes attributes_from_json(const nlohmann::json& j);

/// 16 hex digits of FNV-1a over the canonical (sorted-key) JSON.
std::string recipe_hash(const Recipe& recipe);

}  // namespace teimit
