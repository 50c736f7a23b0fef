#include <iostream>

#include <CLI11.hpp>

#include "teimit/dataset.hpp"
#include "teimit/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"teimit: traffic-engineering LPs, IPM trajectories and a solver-imitating GNN"};
  app.set_version_flag("--version", std::string(TEIMIT_VERSION));
  app.require_subcommand(1);

  const int jobs_default = teimit::default_jobs();

  teimit::GenOptions gen;
  gen.jobs = jobs_default;
  auto* g = app.add_subcommand("gen", "generate a dataset from a recipe");
  g->add_option("--recipe", gen.recipe, "recipe JSON")->required()->check(CLI::ExistingFile);
  g->add_option("--out", gen.out, "output dataset directory")->required();
  g->add_option("--jobs", gen.jobs, "worker count (default $TEIMIT_JOBS or 1)")->check(CLI::PositiveNumber);

  teimit::SolveOptions solve;
  solve.jobs = jobs_default;
  auto* s = app.add_subcommand("solve", "record IPM trajectories for every instance");
  s->add_option("--data", solve.data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  s->add_option("--jobs", solve.jobs, "worker count")->check(CLI::PositiveNumber);

  teimit::EncodeOptions enc;
  auto* e = app.add_subcommand("encode", "write the tripartite LP graph of every instance");
  e->add_option("--data", enc.data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--out", enc.out, "output directory")->required();

  teimit::TrainOptions train;
  train.jobs = jobs_default;
  auto* t = app.add_subcommand("train", "train the model on solved datasets");
  t->add_option("--data", train.data, "solved dataset directory (repeatable)")
      ->required()
      ->check(CLI::ExistingDirectory);
  t->add_option("--model", train.model, "model config JSON")->check(CLI::ExistingFile);
  t->add_option("--train", train.train, "training config JSON")->check(CLI::ExistingFile);
  t->add_option("--out", train.out, "output run directory")->required();
  t->add_flag("--strict-repro", train.strict_repro, "single worker, bit-identical loss curve");
  t->add_option("--jobs", train.jobs, "gradient workers")->check(CLI::PositiveNumber);

  teimit::EvalOptions ev;
  auto* v = app.add_subcommand("eval", "evaluate a checkpoint against IPM references");
  v->add_option("--ckpt", ev.checkpoint, "checkpoint JSON")->required()->check(CLI::ExistingFile);
  v->add_option("--data", ev.data, "test dataset directory (repeatable)")
      ->required()
      ->check(CLI::ExistingDirectory);
  v->add_option("--out", ev.out, "report directory")->required();
  v->add_flag("--include-encoding-time", ev.include_encoding_time,
              "report end-to-end model time as primary");
  v->add_flag("--allow-mixed", ev.allow_mixed, "allow datasets from different recipes");
  v->add_option("--K", ev.K, "outer loops (default: model K_max)")->check(CLI::NonNegativeNumber);
  v->add_option("--repeats", ev.repeats, "timing repeats")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : teimit::exit_validation;
  }

  if (*g) return teimit::cmd_gen(gen, std::cerr);
  if (*s) return teimit::cmd_solve(solve, std::cerr);
  if (*e) return teimit::cmd_encode(enc, std::cerr);
  if (*t) return teimit::cmd_train(train, std::cerr);
  if (*v) return teimit::cmd_eval(ev, std::cerr);
  return teimit::exit_internal;
}
