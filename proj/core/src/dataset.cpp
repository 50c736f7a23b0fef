#include "teimit/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <mutex>

#include "teimit/error.hpp"
#include "teimit/io.hpp"
#include "teimit/parallel.hpp"
#include "teimit/rng.hpp"

namespace teimit {

namespace {

constexpr int kDatasetVersion = 1;
constexpr int kTopologyAttempts = 20;

std::string instance_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "inst_%06d", index);
  return buf;
}

nlohmann::json kkt_json(const KKTReport& k) {
  return {{"primal_infeasibility", k.primal_infeasibility},
          {"dual_infeasibility", k.dual_infeasibility},
          {"duality_gap", k.duality_gap},
          {"max_residual", k.max_residual()}};
}

KKTReport kkt_from_json(const nlohmann::json& j) {
  return {j.at("primal_infeasibility").get<double>(), j.at("dual_infeasibility").get<double>(),
          j.at("duality_gap").get<double>()};
}

NetworkTopology make_topology(const TopologyConfig& c, const Recipe& r, std::uint64_t seed) {
  switch (c.family) {
    case Provenance::Kind::erdos_renyi:
      return generate_erdos_renyi(c.nodes, c.q, seed, r.capacity_range);
    case Provenance::Kind::waxman:
      return generate_waxman(c.nodes, c.alpha, c.beta, seed, r.capacity_range);
    case Provenance::Kind::file:
      return load_topology_file(c.file);
  }
  throw ValidationError("unknown topology family");
}

void write_manifest(const std::filesystem::path& dir, const nlohmann::json& manifest) {
  write_json_atomic(dir / "manifest.json", manifest, 2);
}

}  // namespace

nlohmann::json to_json(const InstanceRecord& r) {
  nlohmann::json j = {{"id", r.id},
                      {"config", r.config},
                      {"seed", r.seed},
                      {"recipe_hash", r.recipe_hash},
                      {"tool_version", TEIMIT_VERSION},
                      {"instance", to_json(r.instance)}};
  if (r.trajectory) j["trajectory"] = to_json(*r.trajectory);
  if (r.kkt) j["kkt"] = kkt_json(*r.kkt);
  return j;
}

InstanceRecord instance_record_from_json(const nlohmann::json& j) {
  InstanceRecord r;
  r.id = j.at("id").get<std::string>();
  r.config = j.at("config").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.recipe_hash = j.at("recipe_hash").get<std::string>();
  r.instance = instance_from_json(j.at("instance"));
  if (j.contains("trajectory")) r.trajectory = trajectory_from_json(j.at("trajectory"));
  if (j.contains("kkt")) r.kkt = kkt_from_json(j.at("kkt"));
  return r;
}

int default_jobs() {
  if (const char* env = std::getenv("TEIMIT_JOBS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

GenerateResult generate_dataset(const Recipe& recipe, const std::filesystem::path& dir, int jobs) {
  const std::string hash = recipe_hash(recipe);
  std::filesystem::create_directories(dir / "instances");
  // A stale manifest must not describe a half-written dataset.
  std::filesystem::remove(dir / "manifest.json");

  const int per = recipe.instances_per_config;
  const std::size_t total = static_cast<std::size_t>(recipe.total_instances());
  std::vector<nlohmann::json> entries(total);
  std::vector<std::string> errors(total);
  parallel_for(total, jobs, [&](std::size_t idx) {
    const int c = static_cast<int>(idx) / per;
    const int i = static_cast<int>(idx) % per;
    const TopologyConfig& cfg = recipe.configurations[static_cast<std::size_t>(c)];
    InstanceRecord rec;
    rec.id = instance_id(static_cast<int>(idx));
    rec.config = c;
    rec.seed = derive_seed(recipe.seed, static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(i));
    rec.recipe_hash = hash;
    std::string last_error;
    bool ok = false;
    for (int attempt = 0; attempt < kTopologyAttempts && !ok; ++attempt) {
      try {
        const NetworkTopology topo =
            make_topology(cfg, recipe, derive_seed(rec.seed, 1, static_cast<std::uint64_t>(attempt)));
        rec.instance = sample_instance(topo, recipe.pairs_per_instance, recipe.demand_range, recipe.k,
                                       derive_seed(rec.seed, 2, static_cast<std::uint64_t>(attempt)));
        rec.instance.recipe = hash;
        ok = true;
      } catch (const GenerationError& e) {
        last_error = e.what();
      }
    }
    const std::string file = "instances/" + rec.id + ".json";
    entries[idx] = {{"id", rec.id}, {"file", file}, {"config", c}, {"seed", rec.seed}};
    if (!ok) {
      errors[idx] = rec.id + ": " + last_error;
      return;
    }
    write_json_atomic(dir / file, to_json(rec));
  });

  GenerateResult result;
  nlohmann::json instances = nlohmann::json::array();
  for (std::size_t idx = 0; idx < total; ++idx) {
    if (!errors[idx].empty()) {
      result.failures.push_back(errors[idx]);
      continue;
    }
    instances.push_back(entries[idx]);
    ++result.written;
  }
  nlohmann::json configs = nlohmann::json::array();
  for (std::size_t c = 0; c < recipe.configurations.size(); ++c) {
    nlohmann::json cj = recipe.configurations[c].to_json();
    cj["index"] = c;
    cj["instances"] = per;
    configs.push_back(cj);
  }
  write_manifest(dir, {{"format", "teimit-dataset"},
                       {"version", kDatasetVersion},
                       {"tool_version", TEIMIT_VERSION},
                       {"recipe_hash", hash},
                       {"recipe", recipe.source},
                       {"num_configurations", recipe.configurations.size()},
                       {"num_instances", result.written},
                       {"configurations", configs},
                       {"instances", instances},
                       {"generation_failures", result.failures}});
  return result;
}

Dataset open_dataset(const std::filesystem::path& dir) {
  const std::filesystem::path mpath = dir / "manifest.json";
  if (!std::filesystem::exists(mpath)) {
    throw ValidationError("dataset " + dir.string() + " has no manifest.json (incomplete or not generated)");
  }
  Dataset ds;
  ds.dir = dir;
  ds.manifest = read_json(mpath);
  if (ds.manifest.value("format", std::string()) != "teimit-dataset") {
    throw ValidationError(mpath.string() + ": not a teimit dataset manifest");
  }
  ds.recipe_hash = ds.manifest.at("recipe_hash").get<std::string>();
  ds.recipe = ds.manifest.at("recipe");
  ds.ipm = ipm_config_from_json(ds.recipe.value("ipm", nlohmann::json::object()));
  ds.attributes = attributes_from_json(ds.recipe.value("attributes", nlohmann::json::object()));
  return ds;
}

std::vector<std::filesystem::path> Dataset::instance_files() const {
  std::vector<std::filesystem::path> out;
  for (const auto& e : manifest.at("instances")) out.push_back(dir / e.at("file").get<std::string>());
  return out;
}

SolveResult solve_dataset(const std::filesystem::path& dir, int jobs) {
  Dataset ds = open_dataset(dir);
  const std::vector<std::filesystem::path> files = ds.instance_files();
  enum class Outcome { solved, skipped, failed, corrupted };
  std::vector<Outcome> outcome(files.size());
  std::vector<std::string> message(files.size());
  parallel_for(files.size(), jobs, [&](std::size_t i) {
    InstanceRecord rec;
    try {
      rec = instance_record_from_json(read_json(files[i]));
      rec.instance.validate();
    } catch (const std::exception& e) {
      outcome[i] = Outcome::corrupted;
      message[i] = files[i].filename().string() + ": " + e.what();
      return;
    }
    if (rec.trajectory) {
      outcome[i] = Outcome::skipped;
      return;
    }
    try {
      const CanonicalLP lp = build_lp(rec.instance);
      IPMTrajectory tr = solve(lp, ds.ipm);
      rec.kkt = certify(lp, tr.final_x, tr.final_mu);
      rec.trajectory = std::move(tr);
      write_json_atomic(files[i], to_json(rec));
      outcome[i] = Outcome::solved;
    } catch (const Error& e) {
      outcome[i] = Outcome::failed;
      message[i] = rec.id + ": " + e.what();
    }
  });

  SolveResult result;
  for (std::size_t i = 0; i < files.size(); ++i) {
    switch (outcome[i]) {
      case Outcome::solved: ++result.solved; break;
      case Outcome::skipped: ++result.skipped; break;
      case Outcome::failed: result.failures.push_back(message[i]); break;
      case Outcome::corrupted: result.corrupted.push_back(message[i]); break;
    }
  }
  ds.manifest["solve"] = {{"tool_version", TEIMIT_VERSION},
                          {"ipm", to_json(ds.ipm)},
                          {"solved", result.solved + result.skipped},
                          {"failures", result.failures},
                          {"corrupted", result.corrupted}};
  write_manifest(dir, ds.manifest);
  return result;
}

std::vector<TrainingSample> load_samples(const Dataset& ds, const InitialAttributes& attrs,
                                         std::vector<std::string>* skipped) {
  std::vector<TrainingSample> out;
  for (const std::filesystem::path& f : ds.instance_files()) {
    try {
      InstanceRecord rec = instance_record_from_json(read_json(f));
      if (!rec.trajectory) {
        if (skipped) skipped->push_back(rec.id + ": no trajectory");
        continue;
      }
      out.push_back(make_sample(rec.id, build_lp(rec.instance), std::move(*rec.trajectory), attrs));
    } catch (const std::exception& e) {
      if (skipped) skipped->push_back(f.filename().string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace teimit
