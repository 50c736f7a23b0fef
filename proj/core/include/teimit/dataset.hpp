#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "teimit/recipe.hpp"
#include "teimit/train.hpp"

namespace teimit {

/// One instance file: instances/inst_NNNNNN.json.
struct InstanceRecord {
  std::string id;
  int config = 0;
  std::uint64_t seed = 0;
  std::string recipe_hash;
  TEInstance instance;
  std::optional<IPMTrajectory> trajectory;
  std::optional<KKTReport> kkt;
};

nlohmann::json to_json(const InstanceRecord& record);
InstanceRecord instance_record_from_json(const nlohmann::json& j);

struct GenerateResult {
  int written = 0;
  std::vector<std::string> failures;  // "id: reason"
};

/// Writes every instance file, then manifest.json. Output is a pure function
/// of the recipe. Topologies are regenerated (up to 20 attempts) if no SD
/// pairs can be sampled.
GenerateResult generate_dataset(const Recipe& recipe, const std::filesystem::path& dir,
                                int jobs = 1);

struct SolveResult {
  int solved = 0;
  int skipped = 0;  // already had a trajectory
  std::vector<std::string> failures;
  std::vector<std::string> corrupted;
};

/// Solves every instance lacking a trajectory and rewrites its file with
/// the trajectory and certificate. Failures and unreadable files are listed
/// in the manifest and do not stop the batch.
SolveResult solve_dataset(const std::filesystem::path& dir, int jobs = 1);

struct Dataset {
  std::filesystem::path dir;
  nlohmann::json manifest;
  std::string recipe_hash;
  nlohmann::json recipe;  // canonical recipe source
  IPMConfig ipm;
  InitialAttributes attributes;

  std::vector<std::filesystem::path> instance_files() const;
};

Dataset open_dataset(const std::filesystem::path& dir);

/// Solved instances as training samples; unsolved or unreadable files are
/// skipped and reported through `skipped`.
std::vector<TrainingSample> load_samples(const Dataset& ds, const InitialAttributes& attrs,
                                         std::vector<std::string>* skipped = nullptr);

/// Worker count from TEIMIT_JOBS, else 1.
int default_jobs();

}  // namespace teimit
