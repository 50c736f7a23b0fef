#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "teimit/lpgraph.hpp"

namespace teimit {

struct ModelConfig {
  int attr_dim = 2;
  int hidden_dim = 360;
  int enc_hidden = 180;
  int readout_hidden1 = 360;
  int readout_hidden2 = 720;
  int J = 2;
  int K_max = 8;
  /// Divide each aggregator input block and the readout input by its RMS
  /// over the vertex set before use.
  bool block_norm = true;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Offsets of one affine map y = x W + b inside the flat parameter vector.
/// W is stored column-major with shape (in, out).
struct DenseLayout {
  int in = 0;
  int out = 0;
  Eigen::Index w = 0;
  Eigen::Index b = 0;
};

/// Rectifier after every layer but the last; `relu_out` adds one there too.
struct MLPLayout {
  std::vector<DenseLayout> layers;
  bool relu_out = false;
};

enum Msg : int { msg_p_dl, msg_o_dl, msg_dl_o, msg_p_o, msg_dl_p, msg_o_p, num_msgs };

struct InnerLayout {
  std::array<DenseLayout, num_msgs> msg;  // single perceptron + rectifier each
  MLPLayout g_dl, g_o, g_p;               // over [own | message A | message B]
};

struct ModelLayout {
  MLPLayout enc_p, enc_dl, enc_o;
  std::vector<InnerLayout> inner;  // J entries, shared by every outer loop
  MLPLayout readout;
  Eigen::Index size = 0;

  static ModelLayout build(const ModelConfig& config);
};

struct ModelParameters {
  ModelConfig config;
  ModelLayout layout;
  Vector values;

  Eigen::Map<Matrix> weight(const DenseLayout& d) {
    return {values.data() + d.w, d.in, d.out};
  }
  Eigen::Map<const Matrix> weight(const DenseLayout& d) const {
    return {values.data() + d.w, d.in, d.out};
  }
  Eigen::Map<Vector> bias(const DenseLayout& d) { return {values.data() + d.b, d.out}; }
  Eigen::Map<const Vector> bias(const DenseLayout& d) const { return {values.data() + d.b, d.out}; }

  Eigen::Index size() const { return values.size(); }
};

/// Uniform(-sqrt(3 / fan_in), sqrt(3 / fan_in)) weights, zero biases except
/// the readout output, which starts at 0.5 so the clamp passes gradients.
ModelParameters init_parameters(const ModelConfig& config, std::uint64_t seed);

/// Per-graph operators consumed by the model. Objective-side quantities
/// (E^po weights, objective-vertex attributes) are divided by max_p c_p so
/// that the inputs do not depend on the demand unit.
struct GraphOperators {
  SparseMatrix S;   // num_dl x num_p, E^pd and E^pl weights
  SparseMatrix St;  // transpose, kept explicitly for a canonical sum order
  Vector w_po;      // num_p
  Vector w_dlo;     // num_dl
  Matrix init_p, init_dl, init_o;
  double objective_scale = 1.0;

  int num_p() const { return static_cast<int>(S.cols()); }
  int num_dl() const { return static_cast<int>(S.rows()); }
};

std::shared_ptr<const GraphOperators> prepare(const LPGraph& graph);

struct DenseCache {
  Matrix in;
  Matrix pre;
};
using MLPCache = std::vector<DenseCache>;

struct InnerCache {
  std::array<DenseCache, num_msgs> msg;
  MLPCache g_dl, g_o, g_p;
  std::array<double, 9> rms{};  // block norms, phase-major (own, A, B)
};

struct ForwardTrace {
  std::shared_ptr<const GraphOperators> ops;
  int K = 0;
  int J = 0;
  MLPCache enc_p, enc_dl, enc_o;
  std::vector<InnerCache> inner;  // K * J, loop-major
  std::vector<MLPCache> readout;  // K
  std::vector<double> readout_rms;  // K
  // Attributes after the last inner layer of each outer loop.
  std::vector<Matrix> h_p, h_dl, h_o;
  std::vector<Vector> R;  // readout per outer loop, p-vertex order, >= 0
};

/// Attributes after one three-phase layer (dl, then o, then p), each phase
/// adding its aggregator output to its input.
struct Attributes {
  Matrix p, dl, o;
};
Attributes inner_layer(const GraphOperators& ops, const Attributes& h, int j,
                       const ModelParameters& params);

ForwardTrace forward(const LPGraph& graph, const ModelParameters& params, int K);
ForwardTrace forward(std::shared_ptr<const GraphOperators> ops, const ModelParameters& params,
                     int K);

/// Readout of the last outer loop only, without retaining intermediates.
Vector predict(const GraphOperators& ops, const ModelParameters& params, int K);

/// Gradient of sum_k dR[k] . R_k with respect to every parameter; shared
/// weights accumulate over all outer loops.
Vector backward(const ForwardTrace& trace, const ModelParameters& params,
                const std::vector<Vector>& dR);

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

struct Checkpoint {
  ModelParameters params;
  std::string recipe_hash;
  nlohmann::json extra = nlohmann::json::object();
};

nlohmann::json to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace teimit
