#include "teimit/pipeline.hpp"

#include <cstdio>
#include <ostream>
#include <set>

#include "teimit/dataset.hpp"
#include "teimit/error.hpp"
#include "teimit/eval.hpp"
#include "teimit/io.hpp"

namespace teimit {

namespace {

template <class F>
int guarded(std::ostream& log, F&& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    log << "error: " << e.what() << '\n';
    return exit_validation;
  } catch (const ParseError& e) {
    log << "error: " << e.what() << '\n';
    return exit_validation;
  } catch (const DimensionError& e) {
    log << "error: " << e.what() << '\n';
    return exit_validation;
  } catch (const std::exception& e) {
    log << "internal error: " << e.what() << '\n';
    return exit_internal;
  }
}

nlohmann::json attributes_json(const InitialAttributes& a) {
  return {{"mode", a.mode == InitialAttributes::Mode::fixed ? "fixed" : "row_col_stats"},
          {"value", a.value}};
}

void list_problems(std::ostream& log, const char* what, const std::vector<std::string>& items) {
  for (const std::string& s : items) log << what << ": " << s << '\n';
}

std::string epoch_file(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%04d.json", epoch);
  return buf;
}

}  // namespace

int cmd_gen(const GenOptions& o, std::ostream& log) {
  return guarded(log, [&] {
    const Recipe recipe = load_recipe(o.recipe);
    log << "recipe " << recipe.name << " (" << recipe_hash(recipe) << "): "
        << recipe.configurations.size() << " configurations x " << recipe.instances_per_config
        << " instances\n";
    const GenerateResult r = generate_dataset(recipe, o.out, o.jobs);
    log << "wrote " << r.written << " instances to " << o.out.string() << '\n';
    list_problems(log, "generation failure", r.failures);
    return r.failures.empty() ? exit_ok : exit_partial;
  });
}

int cmd_solve(const SolveOptions& o, std::ostream& log) {
  return guarded(log, [&] {
    const SolveResult r = solve_dataset(o.data, o.jobs);
    log << "solved " << r.solved << ", already solved " << r.skipped << ", failed "
        << r.failures.size() << ", corrupted " << r.corrupted.size() << '\n';
    list_problems(log, "solver failure", r.failures);
    list_problems(log, "corrupted", r.corrupted);
    return r.failures.empty() && r.corrupted.empty() ? exit_ok : exit_partial;
  });
}

int cmd_encode(const EncodeOptions& o, std::ostream& log) {
  return guarded(log, [&] {
    const Dataset ds = open_dataset(o.data);
    int written = 0;
    std::vector<std::string> failures;
    for (const std::filesystem::path& f : ds.instance_files()) {
      try {
        const InstanceRecord rec = instance_record_from_json(read_json(f));
        const LPGraph g = encode(normalize(build_lp(rec.instance)), ds.attributes);
        write_json_atomic(o.out / "graphs" / (rec.id + ".json"),
                          {{"id", rec.id}, {"recipe_hash", ds.recipe_hash}, {"graph", to_json(g)}});
        ++written;
      } catch (const std::exception& e) {
        failures.push_back(f.filename().string() + ": " + e.what());
      }
    }
    log << "encoded " << written << " instances\n";
    list_problems(log, "encode failure", failures);
    return failures.empty() ? exit_ok : exit_partial;
  });
}

int cmd_train(const TrainOptions& o, std::ostream& log) {
  return guarded(log, [&] {
    if (o.data.empty()) throw ValidationError("train: at least one --data directory is required");
    std::vector<Dataset> sets;
    for (const auto& d : o.data) sets.push_back(open_dataset(d));
    const Dataset& first = sets.front();
    std::set<std::string> hashes;
    for (const Dataset& ds : sets) hashes.insert(ds.recipe_hash);
    if (hashes.size() > 1) log << "warning: training datasets come from different recipes\n";

    nlohmann::json model_json = first.recipe.value("model", nlohmann::json::object());
    if (!o.model.empty()) model_json = read_json(o.model);
    if (model_json.contains("recipe_hash") &&
        model_json.at("recipe_hash").get<std::string>() != first.recipe_hash) {
      log << "warning: model config recipe hash " << model_json.at("recipe_hash").get<std::string>()
          << " differs from dataset recipe hash " << first.recipe_hash << '\n';
    }
    const std::uint64_t init_seed = model_json.value("init_seed", std::uint64_t{1});
    model_json.erase("init_seed");
    model_json.erase("recipe_hash");
    const ModelConfig model = model_config_from_json(model_json);

    nlohmann::json train_json = first.recipe.value("train", nlohmann::json::object());
    nlohmann::json loss_json = first.recipe.value("loss", nlohmann::json::object());
    InitialAttributes attrs = first.attributes;
    if (!o.train.empty()) {
      train_json = read_json(o.train);
      if (train_json.contains("loss")) loss_json = train_json.at("loss");
      if (train_json.contains("attributes")) attrs = attributes_from_json(train_json.at("attributes"));
    }
    TrainConfig tc = train_config_from_json(train_json);
    const LossWeights weights = loss_weights_from_json(loss_json);
    if (o.strict_repro) tc.strict_repro = true;
    tc.workers = tc.strict_repro ? 1 : std::max(tc.workers, o.jobs);

    std::vector<TrainingSample> samples;
    for (const Dataset& ds : sets) {
      std::vector<std::string> skipped;
      auto s = load_samples(ds, attrs, &skipped);
      list_problems(log, "skipped", skipped);
      for (auto& x : s) {
        x.id = ds.dir.filename().string() + "/" + x.id;
        samples.push_back(std::move(x));
      }
    }
    if (samples.empty()) throw ValidationError("train: no solved instances in the given datasets");

    std::filesystem::create_directories(o.out / "checkpoints");
    nlohmann::json model_out = to_json(model);
    model_out["init_seed"] = init_seed;
    nlohmann::json data_out = nlohmann::json::array();
    for (const Dataset& ds : sets) {
      data_out.push_back({{"dir", ds.dir.string()}, {"recipe_hash", ds.recipe_hash}});
    }
    write_json_atomic(o.out / "config.json",
                      {{"tool_version", TEIMIT_VERSION},
                       {"recipe_hash", first.recipe_hash},
                       {"datasets", data_out},
                       {"model", model_out},
                       {"train", to_json(tc)},
                       {"loss", to_json(weights)},
                       {"attributes", attributes_json(attrs)},
                       {"seeds", {{"init_seed", init_seed}, {"train_seed", tc.seed}}},
                       {"num_samples", samples.size()}},
                      2);
    log << "training on " << samples.size() << " samples, " << init_parameters(model, 0).size()
        << " parameters\n";

    auto checkpoint = [&](const ModelParameters& p, int epoch) {
      Checkpoint c{p, first.recipe_hash,
                   {{"epoch", epoch}, {"attributes", attributes_json(attrs)}, {"loss", to_json(weights)}}};
      return c;
    };
    std::vector<EpochLoss> curve;
    TrainResult result;
    try {
      result = train(samples, tc, weights, init_parameters(model, init_seed),
                     [&](const EpochLoss& e, const ModelParameters& p) {
                       curve.push_back(e);
                       write_text_atomic(o.out / "loss_curve.csv", loss_curve_csv(curve));
                       log << "epoch " << e.epoch << " L_p " << e.mean.variable << " L_dl "
                           << e.mean.constraint << " L_o " << e.mean.objective << " total "
                           << e.total << std::endl;
                       if (tc.checkpoint_every > 0 && e.epoch % tc.checkpoint_every == 0) {
                         save_checkpoint(checkpoint(p, e.epoch),
                                         o.out / "checkpoints" / epoch_file(e.epoch));
                       }
                     });
    } catch (const TrainingDiverged& e) {
      log << "error: " << e.what() << " (batch " << e.batch() << ")\n";
      return exit_internal;
    }
    save_checkpoint(checkpoint(result.params, static_cast<int>(result.curve.size())),
                    o.out / "model.json");
    log << "wrote " << (o.out / "model.json").string() << '\n';
    return exit_ok;
  });
}

int cmd_eval(const EvalOptions& o, std::ostream& log) {
  return guarded(log, [&] {
    if (o.data.empty()) throw ValidationError("eval: at least one --data directory is required");
    const Checkpoint ckpt = load_checkpoint(o.checkpoint);
    std::vector<Dataset> sets;
    std::set<std::string> hashes;
    for (const auto& d : o.data) {
      sets.push_back(open_dataset(d));
      hashes.insert(sets.back().recipe_hash);
    }
    if (hashes.size() > 1 && !o.allow_mixed) {
      throw ValidationError("eval: datasets come from different recipes; pass --allow-mixed to combine them");
    }
    if (!hashes.count(ckpt.recipe_hash)) {
      log << "note: evaluating on data from a different recipe than training (" << ckpt.recipe_hash
          << ")\n";
    }
    BenchmarkOptions bo;
    bo.K = o.K;
    bo.repeats = o.repeats;
    bo.include_encoding_time = o.include_encoding_time;
    bo.ipm = sets.front().ipm;
    if (ckpt.extra.contains("attributes")) bo.attributes = attributes_from_json(ckpt.extra.at("attributes"));

    std::vector<EvalInstance> instances;
    std::vector<std::string> unreadable;
    nlohmann::json data_meta = nlohmann::json::array();
    for (const Dataset& ds : sets) {
      data_meta.push_back({{"dir", ds.dir.string()},
                           {"recipe_hash", ds.recipe_hash},
                           {"name", ds.recipe.value("name", std::string())},
                           {"demand_range", ds.recipe.value("demand_range", nlohmann::json())}});
      for (const std::filesystem::path& f : ds.instance_files()) {
        try {
          const InstanceRecord rec = instance_record_from_json(read_json(f));
          EvalInstance e;
          e.id = ds.dir.filename().string() + "/" + rec.id;
          e.lp = build_lp(rec.instance);
          if (rec.trajectory) e.optimal_x = rec.trajectory->final_x;
          e.num_nodes = rec.instance.topology.num_nodes();
          e.num_links = rec.instance.topology.num_links();
          e.num_pairs = static_cast<int>(rec.instance.pairs.size());
          instances.push_back(std::move(e));
        } catch (const std::exception& e) {
          unreadable.push_back(f.filename().string() + ": " + e.what());
        }
      }
    }
    list_problems(log, "unreadable", unreadable);
    EvalReport report = benchmark(instances, ckpt.params, bo);
    report.recipe_hash = hashes.size() == 1 ? *hashes.begin() : "mixed";
    report.metadata = {{"checkpoint", o.checkpoint.string()},
                       {"checkpoint_recipe_hash", ckpt.recipe_hash},
                       {"datasets", data_meta},
                       {"K", bo.K > 0 ? bo.K : ckpt.params.config.K_max},
                       {"repeats", bo.repeats},
                       {"include_encoding_time", bo.include_encoding_time},
                       {"unreadable", unreadable}};
    write_report(report, o.out, o.include_encoding_time);
    const nlohmann::json agg = report.aggregates();
    if (agg.contains("onocgap")) {
      log << "instances " << report.records.size() - static_cast<std::size_t>(report.excluded)
          << " ogap " << agg["ogap"]["mean"].get<double>() << " cgap "
          << agg["cgap"]["mean"].get<double>() << " onocgap " << agg["onocgap"]["mean"].get<double>()
          << '\n';
    }
    int failed = 0;
    for (const EvalRecord& r : report.records) {
      if (r.excluded) log << "excluded " << r.id << ": " << r.note << '\n';
      if (r.excluded && r.note.rfind("reference solve failed", 0) == 0) ++failed;
    }
    return failed || !unreadable.empty() ? exit_partial : exit_ok;
  });
}

}  // namespace teimit
