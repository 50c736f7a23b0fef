#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "support.hpp"
#include "teimit/gnn.hpp"
#include "teimit/io.hpp"
#include "teimit/pipeline.hpp"

using namespace teimit;
using teimit::test::scratch_dir;

namespace {

nlohmann::json recipe_json(const std::string& name, std::uint64_t seed) {
  return {{"name", name},
          {"topology", {{"family", "erdos_renyi"}, {"nodes", {8, 9}}, {"q", {0.5}}}},
          {"instances_per_config", 3},
          {"pairs_per_instance", 3},
          {"k", 2},
          {"seed", seed},
          {"model",
           {{"hidden_dim", 8}, {"enc_hidden", 6}, {"readout_hidden1", 8}, {"readout_hidden2", 8}, {"K_max", 4}}},
          {"train", {{"epochs", 2}, {"batch_size", 2}, {"checkpoint_every", 1}}},
          {"loss", {{"normalize_objective", true}}}};
}

std::filesystem::path write_recipe(const std::filesystem::path& dir, const nlohmann::json& j) {
  const auto p = dir / (j.at("name").get<std::string>() + ".json");
  write_json_atomic(p, j, 2);
  return p;
}

// Generates and solves a dataset; returns its directory.
std::filesystem::path make_data(const std::filesystem::path& root, const std::string& name,
                                std::uint64_t seed) {
  std::ostringstream log;
  const auto out = root / name;
  EXPECT_EQ(cmd_gen({write_recipe(root, recipe_json(name, seed)), out, 2}, log), exit_ok) << log.str();
  EXPECT_EQ(cmd_solve({out, 2}, log), exit_ok) << log.str();
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new std::filesystem::path(scratch_dir("pipeline"));
    data_a_ = new std::filesystem::path(make_data(*root_, "alpha", 1));
    data_b_ = new std::filesystem::path(make_data(*root_, "beta", 2));
    std::ostringstream log;
    TrainOptions t;
    t.data = {*data_a_};
    t.out = *root_ / "run";
    ASSERT_EQ(cmd_train(t, log), exit_ok) << log.str();
  }
  static void TearDownTestSuite() {
    delete root_;
    delete data_a_;
    delete data_b_;
  }
  static std::filesystem::path* root_;
  static std::filesystem::path* data_a_;
  static std::filesystem::path* data_b_;
};

std::filesystem::path* Pipeline::root_ = nullptr;
std::filesystem::path* Pipeline::data_a_ = nullptr;
std::filesystem::path* Pipeline::data_b_ = nullptr;

}  // namespace

TEST_F(Pipeline, TrainWritesRunDirectory) {
  const auto run = *root_ / "run";
  EXPECT_TRUE(std::filesystem::exists(run / "model.json"));
  EXPECT_TRUE(std::filesystem::exists(run / "checkpoints" / "epoch_0001.json"));
  EXPECT_TRUE(std::filesystem::exists(run / "checkpoints" / "epoch_0002.json"));
  const nlohmann::json cfg = read_json(run / "config.json");
  EXPECT_EQ(cfg.at("num_samples"), 6);
  EXPECT_EQ(cfg.at("seeds").at("init_seed"), 1);
  std::ifstream csv(run / "loss_curve.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "epoch,L_p,L_dl,L_o,total");
  int rows = 0;
  for (std::string l; std::getline(csv, l);) ++rows;
  EXPECT_EQ(rows, 2);
}

TEST_F(Pipeline, EvalWritesReportsAndReloadIsBitIdentical) {
  std::ostringstream log;
  EvalOptions e;
  e.checkpoint = *root_ / "run" / "model.json";
  e.data = {*data_a_};
  e.repeats = 1;
  e.out = *root_ / "eval1";
  ASSERT_EQ(cmd_eval(e, log), exit_ok) << log.str();
  e.out = *root_ / "eval2";
  ASSERT_EQ(cmd_eval(e, log), exit_ok) << log.str();
  const nlohmann::json a = read_json(*root_ / "eval1" / "report.json");
  const nlohmann::json b = read_json(*root_ / "eval2" / "report.json");
  ASSERT_EQ(a.at("records").size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(a["records"][i]["f_model"], b["records"][i]["f_model"]);
    EXPECT_EQ(a["records"][i]["ogap"], b["records"][i]["ogap"]);
  }
  EXPECT_EQ(a.at("recipe_hash"), read_json(*data_a_ / "manifest.json").at("recipe_hash"));
}

TEST_F(Pipeline, MixedRecipesNeedExplicitFlag) {
  std::ostringstream log;
  EvalOptions e;
  e.checkpoint = *root_ / "run" / "model.json";
  e.data = {*data_a_, *data_b_};
  e.repeats = 1;
  e.out = *root_ / "eval_mixed";
  EXPECT_EQ(cmd_eval(e, log), exit_validation);
  EXPECT_NE(log.str().find("--allow-mixed"), std::string::npos);
  e.allow_mixed = true;
  EXPECT_EQ(cmd_eval(e, log), exit_ok) << log.str();
  EXPECT_EQ(read_json(e.out / "report.json").at("records").size(), 12u);
}

TEST_F(Pipeline, CrossRecipeEvalIsNoted) {
  std::ostringstream log;
  EvalOptions e;
  e.checkpoint = *root_ / "run" / "model.json";
  e.data = {*data_b_};
  e.repeats = 1;
  e.out = *root_ / "eval_b";
  EXPECT_EQ(cmd_eval(e, log), exit_ok);
  EXPECT_NE(log.str().find("different recipe"), std::string::npos);
}

TEST_F(Pipeline, ModelConfigHashMismatchWarns) {
  nlohmann::json m = recipe_json("alpha", 1).at("model");
  m["recipe_hash"] = "0000000000000000";
  write_json_atomic(*root_ / "model_cfg.json", m);
  std::ostringstream log;
  TrainOptions t;
  t.data = {*data_a_};
  t.model = *root_ / "model_cfg.json";
  t.out = *root_ / "run_warn";
  EXPECT_EQ(cmd_train(t, log), exit_ok) << log.str();
  EXPECT_NE(log.str().find("warning: model config recipe hash"), std::string::npos);
}

TEST_F(Pipeline, StrictReproIsBitIdentical) {
  std::ostringstream log;
  TrainOptions t;
  t.data = {*data_a_};
  t.strict_repro = true;
  t.out = *root_ / "repro1";
  ASSERT_EQ(cmd_train(t, log), exit_ok);
  t.out = *root_ / "repro2";
  ASSERT_EQ(cmd_train(t, log), exit_ok);
  EXPECT_EQ(slurp(*root_ / "repro1" / "loss_curve.csv"), slurp(*root_ / "repro2" / "loss_curve.csv"));
  EXPECT_EQ(load_checkpoint(*root_ / "repro1" / "model.json").params.values,
            load_checkpoint(*root_ / "repro2" / "model.json").params.values);
}

TEST_F(Pipeline, EncodeWritesGraphs) {
  std::ostringstream log;
  EXPECT_EQ(cmd_encode({*data_a_, *root_ / "enc"}, log), exit_ok);
  int n = 0;
  for (const auto& f : std::filesystem::directory_iterator(*root_ / "enc" / "graphs")) {
    const nlohmann::json j = read_json(f.path());
    EXPECT_NO_THROW(graph_from_json(j.at("graph")).validate());
    ++n;
  }
  EXPECT_EQ(n, 6);
}

TEST(PipelineExitCodes, InvalidRecipeWritesNothing) {
  const auto dir = scratch_dir("pipeline_bad");
  nlohmann::json j = recipe_json("bad", 1);
  j["instances_per_config"] = -1;
  std::ostringstream log;
  EXPECT_EQ(cmd_gen({write_recipe(dir, j), dir / "out", 1}, log), exit_validation);
  EXPECT_FALSE(std::filesystem::exists(dir / "out"));
  EXPECT_NE(log.str().find("instances_per_config"), std::string::npos);
}

TEST(PipelineExitCodes, MalformedRecipeIsValidationFailure) {
  const auto dir = scratch_dir("pipeline_malformed");
  std::ofstream(dir / "r.json") << "{\"name\": ";
  std::ostringstream log;
  EXPECT_EQ(cmd_gen({dir / "r.json", dir / "out", 1}, log), exit_validation);
}

TEST(PipelineExitCodes, MissingDatasetIsValidationFailure) {
  const auto dir = scratch_dir("pipeline_missing");
  std::ostringstream log;
  EXPECT_EQ(cmd_solve({dir / "nothing", 1}, log), exit_validation);
  TrainOptions t;
  t.data = {dir / "nothing"};
  t.out = dir / "run";
  EXPECT_EQ(cmd_train(t, log), exit_validation);
  EXPECT_EQ(cmd_train(TrainOptions{}, log), exit_validation);
}

TEST(PipelineExitCodes, CorruptedInstanceIsPartialFailure) {
  const auto dir = scratch_dir("pipeline_partial");
  std::ostringstream log;
  ASSERT_EQ(cmd_gen({write_recipe(dir, recipe_json("p", 3)), dir / "d", 1}, log), exit_ok);
  std::ofstream(dir / "d" / "instances" / "inst_000001.json") << "[]";
  EXPECT_EQ(cmd_solve({dir / "d", 1}, log), exit_partial);
  EXPECT_NE(log.str().find("corrupted: inst_000001.json"), std::string::npos);
}

TEST(PipelineExitCodes, UnsolvedDataCannotTrain) {
  const auto dir = scratch_dir("pipeline_unsolved");
  std::ostringstream log;
  ASSERT_EQ(cmd_gen({write_recipe(dir, recipe_json("u", 3)), dir / "d", 1}, log), exit_ok);
  TrainOptions t;
  t.data = {dir / "d"};
  t.out = dir / "run";
  EXPECT_EQ(cmd_train(t, log), exit_validation);
}
