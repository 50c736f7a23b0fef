#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace teimit {

enum ExitCode : int {
  exit_ok = 0,
  exit_validation = 1,
  exit_partial = 2,
  exit_internal = 3,
};

struct GenOptions {
  std::filesystem::path recipe;
  std::filesystem::path out;
  int jobs = 1;
};

struct SolveOptions {
  std::filesystem::path data;
  int jobs = 1;
};

struct EncodeOptions {
  std::filesystem::path data;
  std::filesystem::path out;
};

struct TrainOptions {
  std::vector<std::filesystem::path> data;
  /// Model config JSON (the "model" section of a recipe). Empty: use the
  /// dataset recipe's.
  std::filesystem::path model;
  /// Training config JSON ("train" keys plus optional "loss" and
  /// "attributes" objects). Empty: use the dataset recipe's.
  std::filesystem::path train;
  std::filesystem::path out;
  bool strict_repro = false;
  int jobs = 1;
};

struct EvalOptions {
  std::filesystem::path checkpoint;
  std::vector<std::filesystem::path> data;
  std::filesystem::path out;
  bool include_encoding_time = false;
  bool allow_mixed = false;
  int K = 0;
  int repeats = 5;
};

/// Each command logs to `log` and returns an ExitCode; errors are caught
/// and mapped (ValidationError/ParseError -> 1, other failures -> 3).
int cmd_gen(const GenOptions& options, std::ostream& log);
int cmd_solve(const SolveOptions& options, std::ostream& log);
int cmd_encode(const EncodeOptions& options, std::ostream& log);
int cmd_train(const TrainOptions& options, std::ostream& log);
int cmd_eval(const EvalOptions& options, std::ostream& log);

}  // namespace teimit
