#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "teimit/gnn.hpp"
#include "teimit/ipm.hpp"

namespace teimit {

/// |f(opt) - f(model)| / f(opt). Throws UndefinedMetric when f(opt) <= 0.
double ogap(const CanonicalLP& lp, const Solution& model_x, const Solution& optimal_x);

/// sum_j relu((A x - b)_j) / b_j. Requires x >= 0.
double cgap(const CanonicalLP& lp, const Solution& model_x);

/// `cgap` divided by the number of constraint rows.
double cgap_per_constraint(const CanonicalLP& lp, const Solution& model_x);

/// ogap of scale_to_feasible(model_x); the scaled point is checked to have
/// zero residual first.
double onocgap(const CanonicalLP& lp, const Solution& model_x, const Solution& optimal_x);

struct EvalInstance {
  std::string id;
  CanonicalLP lp;
  /// Certified optimum; solved on demand when empty.
  Solution optimal_x;
  int num_nodes = 0;
  int num_links = 0;
  int num_pairs = 0;
};

struct EvalRecord {
  std::string id;
  int num_nodes = 0;
  int num_links = 0;
  int num_pairs = 0;
  int num_paths = 0;
  bool excluded = false;
  std::string note;
  double f_opt = 0.0;
  double f_model = 0.0;
  double ogap = 0.0;
  double cgap = 0.0;
  double cgap_per_constraint = 0.0;
  double onocgap = 0.0;
  double model_ms = 0.0;       // forward pass only, median
  double model_e2e_ms = 0.0;   // normalize + encode + forward, median
  double ipm_ms = 0.0;         // median
};

struct Summary {
  int count = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double p50 = 0.0;
  double p90 = 0.0;
  double p99 = 0.0;
};

Summary summarize(std::vector<double> values);

struct EvalReport {
  std::vector<EvalRecord> records;
  int excluded = 0;
  std::string recipe_hash;
  nlohmann::json metadata = nlohmann::json::object();

  /// Aggregates over non-excluded records; empty when there are none.
  nlohmann::json aggregates() const;
  double mean(double EvalRecord::*field) const;
};

struct BenchmarkOptions {
  int K = 0;          // 0: model K_max
  int repeats = 5;    // timing repeats, median reported
  bool time_ipm = true;
  /// Report end-to-end model time (encoding included) as the primary time.
  bool include_encoding_time = false;
  IPMConfig ipm;
  InitialAttributes attributes;
};

EvalReport benchmark(const std::vector<EvalInstance>& instances, const ModelParameters& params,
                     const BenchmarkOptions& options = {});

nlohmann::json to_json(const EvalReport& report);
std::string report_csv(const EvalReport& report);

/// report.json, report.csv, gap_vs_nodes.csv, time_vs_nodes.csv,
/// time_vs_pairs.csv.
void write_report(const EvalReport& report, const std::filesystem::path& dir,
                  bool include_encoding_time = false);

}  // namespace teimit
