#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "teimit/gnn.hpp"
#include "teimit/ipm.hpp"

namespace teimit {

struct TrainingSample {
  std::string id;
  CanonicalLP lp;
  LPGraph graph;
  std::shared_ptr<const GraphOperators> ops;
  IPMTrajectory trajectory;
};

/// Builds graph and operators from the LP with the default attribute mode.
TrainingSample make_sample(std::string id, CanonicalLP lp, IPMTrajectory trajectory,
                           const InitialAttributes& attrs = {});

struct LossWeights {
  double rho1 = 1.0;
  double rho2 = 1.0;
  double rho3 = 1.0;
  double xi = 0.9;
  /// Divide the objective term by f_0(target)^2 so it is unit-free.
  bool normalize_objective = false;

  void validate() const;
};

struct LossComponents {
  double variable = 0.0;
  double constraint = 0.0;
  double objective = 0.0;

  double total(const LossWeights& w) const {
    return w.rho1 * variable + w.rho2 * constraint + w.rho3 * objective;
  }
};

/// Iterates the model is supervised against: the last min(K_tau, K_max).
std::vector<Solution> aligned_targets(const IPMTrajectory& trajectory, int K_max);

/// sum_k xi^(K-k) |R_k - x_k|^2. `grad`, when given, receives dL/dR_k.
double variable_loss(const std::vector<Solution>& R, const std::vector<Solution>& targets,
                     double xi, std::vector<Vector>* grad = nullptr);

/// sum_k xi^(K-k) sum_j relu((A R_k - b)_j) / b_j. Demand rows have b = 1,
/// so only capacity terms are divided by C(l).
double constraint_loss(const std::vector<Solution>& R, const CanonicalLP& lp, double xi,
                       std::vector<Vector>* grad = nullptr);

/// sum_k xi^(K-k) (c'R_k - target)^2, optionally divided by target^2.
double objective_loss(const std::vector<Solution>& R, const CanonicalLP& lp, double target,
                      double xi, bool normalize = false, std::vector<Vector>* grad = nullptr);

/// Trajectory-based overloads; the objective target is the last iterate's.
double variable_loss(const std::vector<Solution>& R, const IPMTrajectory& trajectory, double xi);
double objective_loss(const std::vector<Solution>& R, const CanonicalLP& lp,
                      const IPMTrajectory& trajectory, double xi);

double total_loss(const LossComponents& components, const LossWeights& weights);

/// Runs the model on one sample for K = number of aligned targets and
/// returns the loss components and, when `grad` is given, the parameter
/// gradient of the weighted total.
LossComponents sample_loss(const TrainingSample& sample, const ModelParameters& params,
                           const LossWeights& weights, Vector* grad = nullptr);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 16;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double grad_clip = 1.0;  // global norm; <= 0 disables
  /// "constant" or "cosine" (decay to 10% of the initial rate).
  std::string lr_schedule = "constant";
  std::uint64_t seed = 1;
  int checkpoint_every = 0;  // epochs; 0 disables
  int max_steps = 0;         // 0: no limit
  int workers = 1;
  bool strict_repro = false;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LossWeights& weights);
LossWeights loss_weights_from_json(const nlohmann::json& j);

class Adam {
 public:
  Adam(Eigen::Index size, double beta1, double beta2, double epsilon);

  void step(Vector& params, const Vector& grad, double learning_rate);
  long steps() const { return t_; }

 private:
  Vector m_, v_;
  double beta1_, beta2_, epsilon_;
  long t_ = 0;
};

struct EpochLoss {
  int epoch = 0;
  LossComponents mean;
  double total = 0.0;
};

struct TrainResult {
  ModelParameters params;
  std::vector<EpochLoss> curve;
  int steps = 0;
};

using EpochCallback = std::function<void(const EpochLoss&, const ModelParameters&)>;

/// Minibatch training with Adam. Shuffle order is a pure function of the
/// seed and epoch; per-sample gradients are reduced in sample order, so the
/// result does not depend on the worker count. Throws TrainingDiverged with
/// the global batch index on a non-finite loss or gradient.
TrainResult train(const std::vector<TrainingSample>& dataset, const TrainConfig& config,
                  const LossWeights& weights, ModelParameters params0,
                  const EpochCallback& on_epoch = {});

std::string loss_curve_csv(const std::vector<EpochLoss>& curve);

}  // namespace teimit
