#include "teimit/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "teimit/error.hpp"
#include "teimit/rng.hpp"

namespace teimit {

namespace {

std::vector<Vector>* reset(std::vector<Vector>* grad, const std::vector<Solution>& R) {
  if (grad) {
    grad->resize(R.size());
    for (std::size_t k = 0; k < R.size(); ++k) (*grad)[k] = Vector::Zero(R[k].size());
  }
  return grad;
}

// xi^(K-k) for 1-based k, i.e. weight 1 on the last readout.
double discount(double xi, std::size_t k, std::size_t K) {
  return std::pow(xi, static_cast<double>(K - 1 - k));
}

void check_R(const std::vector<Solution>& R, const CanonicalLP& lp) {
  for (const Solution& r : R) {
    if (r.size() != lp.num_cols()) throw DimensionError("loss: readout size does not match LP");
  }
}

}  // namespace

TrainingSample make_sample(std::string id, CanonicalLP lp, IPMTrajectory trajectory,
                           const InitialAttributes& attrs) {
  TrainingSample s;
  s.id = std::move(id);
  s.graph = encode(normalize(lp), attrs);
  s.ops = prepare(s.graph);
  s.lp = std::move(lp);
  s.trajectory = std::move(trajectory);
  for (const Iterate& it : s.trajectory.iterates) {
    if (it.x.size() != s.graph.num_p) {
      throw DimensionError("sample " + s.id + ": trajectory dimension does not match the LP");
    }
  }
  if (s.trajectory.iterates.empty()) throw ValidationError("sample " + s.id + ": empty trajectory");
  return s;
}

void LossWeights::validate() const {
  if (rho1 < 0.0 || rho2 < 0.0 || rho3 < 0.0) throw ValidationError("loss weights must be >= 0");
  if (!(rho1 > 0.0 || rho2 > 0.0 || rho3 > 0.0)) {
    throw ValidationError("at least one loss weight must be positive");
  }
  if (!(xi > 0.0 && xi <= 1.0)) throw ValidationError("discount xi must be in (0, 1]");
}

std::vector<Solution> aligned_targets(const IPMTrajectory& trajectory, int K_max) {
  const int K = std::min(trajectory.iterations(), K_max);
  std::vector<Solution> out;
  for (int k = trajectory.iterations() - K; k < trajectory.iterations(); ++k) {
    out.push_back(trajectory.iterates[static_cast<std::size_t>(k)].x);
  }
  return out;
}

double variable_loss(const std::vector<Solution>& R, const std::vector<Solution>& targets,
                     double xi, std::vector<Vector>* grad) {
  if (R.size() != targets.size()) throw DimensionError("variable_loss: length mismatch");
  reset(grad, R);
  double loss = 0.0;
  for (std::size_t k = 0; k < R.size(); ++k) {
    if (R[k].size() != targets[k].size()) throw DimensionError("variable_loss: size mismatch");
    const double w = discount(xi, k, R.size());
    const Vector diff = R[k] - targets[k];
    loss += w * diff.squaredNorm();
    if (grad) (*grad)[k] += 2.0 * w * diff;
  }
  return loss;
}

double constraint_loss(const std::vector<Solution>& R, const CanonicalLP& lp, double xi,
                       std::vector<Vector>* grad) {
  check_R(R, lp);
  reset(grad, R);
  double loss = 0.0;
  for (std::size_t k = 0; k < R.size(); ++k) {
    const double w = discount(xi, k, R.size());
    const Vector ax = lp.A * R[k];
    for (Eigen::Index j = 0; j < lp.A.outerSize(); ++j) {
      const double viol = ax[j] - lp.b[j];
      if (viol <= 0.0) continue;
      loss += w * viol / lp.b[j];
      if (grad) {
        for (SparseMatrix::InnerIterator it(lp.A, j); it; ++it) {
          (*grad)[k][it.col()] += w * it.value() / lp.b[j];
        }
      }
    }
  }
  return loss;
}

double objective_loss(const std::vector<Solution>& R, const CanonicalLP& lp, double target,
                      double xi, bool normalize, std::vector<Vector>* grad) {
  check_R(R, lp);
  reset(grad, R);
  const double scale = normalize && target != 0.0 ? 1.0 / (target * target) : 1.0;
  double loss = 0.0;
  for (std::size_t k = 0; k < R.size(); ++k) {
    const double w = discount(xi, k, R.size()) * scale;
    const double diff = lp.c.dot(R[k]) - target;
    loss += w * diff * diff;
    if (grad) (*grad)[k] += 2.0 * w * diff * lp.c;
  }
  return loss;
}

double variable_loss(const std::vector<Solution>& R, const IPMTrajectory& trajectory, double xi) {
  return variable_loss(R, aligned_targets(trajectory, static_cast<int>(R.size())), xi);
}

double objective_loss(const std::vector<Solution>& R, const CanonicalLP& lp,
                      const IPMTrajectory& trajectory, double xi) {
  if (trajectory.iterates.empty()) throw ValidationError("objective_loss: empty trajectory");
  return objective_loss(R, lp, trajectory.iterates.back().objective, xi);
}

double total_loss(const LossComponents& components, const LossWeights& weights) {
  return components.total(weights);
}

LossComponents sample_loss(const TrainingSample& sample, const ModelParameters& params,
                           const LossWeights& weights, Vector* grad) {
  const std::vector<Solution> targets = aligned_targets(sample.trajectory, params.config.K_max);
  const int K = static_cast<int>(targets.size());
  const ForwardTrace trace = forward(sample.ops, params, K);
  std::vector<Solution> R;
  for (const Vector& r : trace.R) R.push_back(decode_solution(sample.graph, r));

  const double target = sample.trajectory.iterates.back().objective;
  std::vector<Vector> g1, g2, g3;
  const bool want = grad != nullptr;
  LossComponents c;
  c.variable = variable_loss(R, targets, weights.xi, want ? &g1 : nullptr);
  c.constraint = constraint_loss(R, sample.lp, weights.xi, want ? &g2 : nullptr);
  c.objective = objective_loss(R, sample.lp, target, weights.xi, weights.normalize_objective,
                               want ? &g3 : nullptr);
  if (want) {
    std::vector<Vector> dR(static_cast<std::size_t>(K));
    for (std::size_t k = 0; k < dR.size(); ++k) {
      const Vector col = weights.rho1 * g1[k] + weights.rho2 * g2[k] + weights.rho3 * g3[k];
      // Column order back to p-vertex order.
      dR[k].resize(sample.graph.num_p);
      for (int v = 0; v < sample.graph.num_p; ++v) {
        dR[k][v] = col[sample.graph.p_col[static_cast<std::size_t>(v)]];
      }
    }
    *grad = backward(trace, params, dR);
  }
  return c;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("train: epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ValidationError("train: learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ValidationError("train: Adam betas must be in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ValidationError("train: adam_epsilon must be positive");
  if (lr_schedule != "constant" && lr_schedule != "cosine") {
    throw ValidationError("train: lr_schedule must be 'constant' or 'cosine'");
  }
  if (checkpoint_every < 0 || max_steps < 0) throw ValidationError("train: negative count");
  if (workers < 1) throw ValidationError("train: workers must be >= 1");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"adam_epsilon", c.adam_epsilon},
          {"grad_clip", c.grad_clip},
          {"lr_schedule", c.lr_schedule},
          {"seed", c.seed},
          {"checkpoint_every", c.checkpoint_every},
          {"max_steps", c.max_steps},
          {"workers", c.workers},
          {"strict_repro", c.strict_repro}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
  c.grad_clip = j.value("grad_clip", c.grad_clip);
  c.lr_schedule = j.value("lr_schedule", c.lr_schedule);
  c.seed = j.value("seed", c.seed);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.max_steps = j.value("max_steps", c.max_steps);
  c.workers = j.value("workers", c.workers);
  c.strict_repro = j.value("strict_repro", c.strict_repro);
  c.validate();
  return c;
}

nlohmann::json to_json(const LossWeights& w) {
  return {{"rho1", w.rho1},
          {"rho2", w.rho2},
          {"rho3", w.rho3},
          {"xi", w.xi},
          {"normalize_objective", w.normalize_objective}};
}

LossWeights loss_weights_from_json(const nlohmann::json& j) {
  LossWeights w;
  w.rho1 = j.value("rho1", w.rho1);
  w.rho2 = j.value("rho2", w.rho2);
  w.rho3 = j.value("rho3", w.rho3);
  w.xi = j.value("xi", w.xi);
  w.normalize_objective = j.value("normalize_objective", w.normalize_objective);
  w.validate();
  return w;
}

Adam::Adam(Eigen::Index size, double beta1, double beta2, double epsilon)
    : m_(Vector::Zero(size)), v_(Vector::Zero(size)), beta1_(beta1), beta2_(beta2),
      epsilon_(epsilon) {}

void Adam::step(Vector& params, const Vector& grad, double learning_rate) {
  if (grad.size() != m_.size() || params.size() != m_.size()) {
    throw DimensionError("Adam: size mismatch");
  }
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + epsilon_);
}

TrainResult train(const std::vector<TrainingSample>& dataset, const TrainConfig& config,
                  const LossWeights& weights, ModelParameters params0,
                  const EpochCallback& on_epoch) {
  config.validate();
  weights.validate();
  if (dataset.empty()) throw ValidationError("train: empty dataset");
  for (const TrainingSample& s : dataset) {
    if (s.graph.attr_dim() != params0.config.attr_dim) {
      throw DimensionError("train: sample " + s.id + " attribute width does not match the model");
    }
  }

  TrainResult result{std::move(params0), {}, 0};
  ModelParameters& params = result.params;
  Adam adam(params.size(), config.beta1, config.beta2, config.adam_epsilon);
  const int workers = config.strict_repro ? 1 : config.workers;
  const std::size_t n = dataset.size();
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  const int batches_per_epoch = static_cast<int>((n + bs - 1) / bs);
  const long total_steps = config.max_steps > 0
                               ? std::min<long>(config.max_steps, static_cast<long>(config.epochs) * batches_per_epoch)
                               : static_cast<long>(config.epochs) * batches_per_epoch;

  std::vector<std::size_t> order(n);
  std::vector<Vector> grads;
  std::vector<LossComponents> comps;
  int batch_id = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, 0x5348554646ULL, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    LossComponents sum;
    std::size_t seen = 0;
    bool stop = false;
    for (std::size_t start = 0; start < n; start += bs, ++batch_id) {
      const std::size_t count = std::min(bs, n - start);
      grads.assign(count, Vector());
      comps.assign(count, LossComponents());
      auto work = [&](std::size_t w) {
        for (std::size_t i = w; i < count; i += static_cast<std::size_t>(workers)) {
          comps[i] = sample_loss(dataset[order[start + i]], params, weights, &grads[i]);
        }
      };
      if (workers == 1 || count == 1) {
        work(0);
      } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work, static_cast<std::size_t>(w));
        for (std::thread& t : pool) t.join();
      }

      Vector g = Vector::Zero(params.size());
      LossComponents batch;
      for (std::size_t i = 0; i < count; ++i) {
        g += grads[i];
        batch.variable += comps[i].variable;
        batch.constraint += comps[i].constraint;
        batch.objective += comps[i].objective;
      }
      g /= static_cast<double>(count);
      if (!std::isfinite(batch.total(weights)) || !g.allFinite()) {
        throw TrainingDiverged("training diverged at batch " + std::to_string(batch_id), batch_id);
      }
      sum.variable += batch.variable;
      sum.constraint += batch.constraint;
      sum.objective += batch.objective;
      seen += count;

      if (config.grad_clip > 0.0) {
        const double norm = g.norm();
        if (norm > config.grad_clip) g *= config.grad_clip / norm;
      }
      double lr = config.learning_rate;
      if (config.lr_schedule == "cosine") {
        const double frac = static_cast<double>(result.steps) / static_cast<double>(total_steps);
        lr *= 0.1 + 0.9 * 0.5 * (1.0 + std::cos(3.14159265358979323846 * frac));
      }
      adam.step(params.values, g, lr);
      ++result.steps;
      if (config.max_steps > 0 && result.steps >= config.max_steps) {
        stop = true;
        break;
      }
    }

    EpochLoss e;
    e.epoch = epoch + 1;
    const double inv = 1.0 / static_cast<double>(seen);
    e.mean = {sum.variable * inv, sum.constraint * inv, sum.objective * inv};
    e.total = e.mean.total(weights);
    result.curve.push_back(e);
    if (on_epoch) on_epoch(e, params);
    if (stop) break;
  }
  return result;
}

std::string loss_curve_csv(const std::vector<EpochLoss>& curve) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,L_p,L_dl,L_o,total\n";
  for (const EpochLoss& e : curve) {
    out << e.epoch << ',' << e.mean.variable << ',' << e.mean.constraint << ','
        << e.mean.objective << ',' << e.total << '\n';
  }
  return out.str();
}

}  // namespace teimit
