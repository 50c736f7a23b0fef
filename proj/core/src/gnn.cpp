#include "teimit/gnn.hpp"

#include <cmath>
#include <set>
#include <string>

#include "teimit/error.hpp"
#include "teimit/io.hpp"
#include "teimit/rng.hpp"

namespace teimit {

namespace {

constexpr int kCheckpointVersion = 1;
constexpr double kReadoutBias = 0.5;

DenseLayout add_dense(Eigen::Index& cursor, int in, int out) {
  DenseLayout d{in, out, cursor, cursor + static_cast<Eigen::Index>(in) * out};
  cursor = d.b + out;
  return d;
}

MLPLayout add_mlp(Eigen::Index& cursor, std::initializer_list<int> widths, bool relu_out) {
  MLPLayout m;
  m.relu_out = relu_out;
  const int* prev = widths.begin();
  for (const int* w = prev + 1; w != widths.end(); prev = w, ++w) {
    m.layers.push_back(add_dense(cursor, *prev, *w));
  }
  return m;
}

Matrix relu(const Matrix& m) { return m.cwiseMax(0.0); }

Matrix relu_grad(const Matrix& pre, const Matrix& dout) {
  return (pre.array() > 0.0).select(dout, 0.0);
}

// x W + b for every row of x.
Matrix affine(const ModelParameters& params, const DenseLayout& d, const Matrix& x) {
  Matrix out = x * params.weight(d);
  out.rowwise() += params.bias(d).transpose();
  return out;
}

Matrix dense_relu(const ModelParameters& params, const DenseLayout& d, const Matrix& x,
                  DenseCache* cache) {
  Matrix pre = affine(params, d, x);
  Matrix out = relu(pre);
  if (cache) {
    cache->in = x;
    cache->pre = std::move(pre);
  }
  return out;
}

Matrix mlp(const ModelParameters& params, const MLPLayout& m, Matrix x) {
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    Matrix pre = affine(params, m.layers[i], x);
    const bool last = i + 1 == m.layers.size();
    x = (!last || m.relu_out) ? relu(pre) : std::move(pre);
  }
  return x;
}

// Forward variant that keeps each layer input too.
Matrix mlp_cached(const ModelParameters& params, const MLPLayout& m, Matrix x, MLPCache& cache) {
  cache.resize(m.layers.size());
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    cache[i].in = x;
    cache[i].pre = affine(params, m.layers[i], x);
    const bool last = i + 1 == m.layers.size();
    x = (!last || m.relu_out) ? relu(cache[i].pre) : cache[i].pre;
  }
  return x;
}

// Accumulates parameter gradients of a layer given d(pre); returns d(in).
Matrix dense_backward(const DenseLayout& d, const ModelParameters& params, const DenseCache& c,
                      const Matrix& dpre, Vector& grad) {
  Eigen::Map<Matrix> gw(grad.data() + d.w, d.in, d.out);
  Eigen::Map<Vector> gb(grad.data() + d.b, d.out);
  gw.noalias() += c.in.transpose() * dpre;
  gb.noalias() += dpre.colwise().sum().transpose();
  return dpre * params.weight(d).transpose();
}

Matrix mlp_backward(const MLPLayout& m, const ModelParameters& params, const MLPCache& cache,
                    Matrix dout, Vector& grad) {
  for (std::size_t i = m.layers.size(); i-- > 0;) {
    const bool last = i + 1 == m.layers.size();
    const Matrix dpre = (!last || m.relu_out) ? relu_grad(cache[i].pre, dout) : dout;
    dout = dense_backward(m.layers[i], params, cache[i], dpre, grad);
  }
  return dout;
}

double block_rms(const Matrix& x) {
  if (x.size() == 0) return 1.0;
  return std::sqrt(x.squaredNorm() / static_cast<double>(x.size()) + 1e-12);
}

Matrix normalized(const Matrix& x, bool on, double* rms) {
  *rms = on ? block_rms(x) : 1.0;
  return on ? Matrix(x / *rms) : x;
}

// d(in) of y = x / rms(x), given y and dy.
Matrix normalized_backward(const Matrix& y, const Matrix& dy, bool on, double rms) {
  if (!on || y.size() == 0) return dy;
  const double proj = dy.cwiseProduct(y).sum() / static_cast<double>(y.size());
  return (dy - proj * y) / rms;
}

Matrix concat3(const Matrix& a, const Matrix& b, const Matrix& c) {
  Matrix out(a.rows(), a.cols() + b.cols() + c.cols());
  out << a, b, c;
  return out;
}

// Shared by inner_layer, forward and predict.
Attributes run_inner(const GraphOperators& ops, const Attributes& h, const InnerLayout& L,
                     const ModelParameters& params, InnerCache* cache) {
  auto msg = [&](Msg m, const Matrix& x) {
    return dense_relu(params, L.msg[m], x, cache ? &cache->msg[m] : nullptr);
  };
  auto agg = [&](const MLPLayout& g, Matrix x, MLPCache* gc) {
    return gc ? mlp_cached(params, g, std::move(x), *gc) : mlp(params, g, std::move(x));
  };
  const bool on = params.config.block_norm;
  std::array<double, 9> r{};
  auto block = [&](const Matrix& own, const Matrix& a, const Matrix& b, int phase) {
    return concat3(normalized(own, on, &r[3 * phase]), normalized(a, on, &r[3 * phase + 1]),
                   normalized(b, on, &r[3 * phase + 2]));
  };
  Attributes out;
  {
    const Matrix a = ops.S * msg(msg_p_dl, h.p);
    const Matrix b = ops.w_dlo * msg(msg_o_dl, h.o);
    out.dl = h.dl + agg(L.g_dl, block(h.dl, a, b, 0), cache ? &cache->g_dl : nullptr);
  }
  {
    const Matrix a = ops.w_dlo.transpose() * msg(msg_dl_o, out.dl);
    const Matrix b = ops.w_po.transpose() * msg(msg_p_o, h.p);
    out.o = h.o + agg(L.g_o, block(h.o, a, b, 1), cache ? &cache->g_o : nullptr);
  }
  {
    const Matrix a = ops.St * msg(msg_dl_p, out.dl);
    const Matrix b = ops.w_po * msg(msg_o_p, out.o);
    out.p = h.p + agg(L.g_p, block(h.p, a, b, 2), cache ? &cache->g_p : nullptr);
  }
  if (cache) cache->rms = r;
  return out;
}

void check_K(const ModelParameters& params, int K) {
  if (K < 1 || K > params.config.K_max) {
    throw ValidationError("forward: K = " + std::to_string(K) + " outside [1, " +
                          std::to_string(params.config.K_max) + "]");
  }
}

void check_attr(const GraphOperators& ops, const ModelParameters& params) {
  if (ops.init_p.cols() != params.config.attr_dim) {
    throw DimensionError("forward: graph attributes have width " +
                         std::to_string(ops.init_p.cols()) + ", model expects " +
                         std::to_string(params.config.attr_dim));
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (attr_dim < 1 || hidden_dim < 1 || enc_hidden < 1 || readout_hidden1 < 1 ||
      readout_hidden2 < 1) {
    throw ValidationError("model: widths must be positive");
  }
  if (J < 1) throw ValidationError("model: J must be >= 1");
  if (K_max < 1) throw ValidationError("model: K_max must be >= 1");
}

ModelLayout ModelLayout::build(const ModelConfig& c) {
  c.validate();
  ModelLayout L;
  Eigen::Index cur = 0;
  const int h = c.hidden_dim;
  L.enc_p = add_mlp(cur, {c.attr_dim, c.enc_hidden, h}, false);
  L.enc_dl = add_mlp(cur, {c.attr_dim, c.enc_hidden, h}, false);
  L.enc_o = add_mlp(cur, {c.attr_dim, c.enc_hidden, h}, false);
  for (int j = 0; j < c.J; ++j) {
    InnerLayout in;
    for (auto& m : in.msg) m = add_dense(cur, h, h);
    in.g_dl = add_mlp(cur, {3 * h, h, h}, false);
    in.g_o = add_mlp(cur, {3 * h, h, h}, false);
    in.g_p = add_mlp(cur, {3 * h, h, h}, false);
    L.inner.push_back(std::move(in));
  }
  L.readout = add_mlp(cur, {h, c.readout_hidden1, c.readout_hidden2, 1}, true);
  L.size = cur;
  return L;
}

ModelParameters init_parameters(const ModelConfig& config, std::uint64_t seed) {
  ModelParameters p{config, ModelLayout::build(config), {}};
  p.values = Vector::Zero(p.layout.size);
  Rng rng(seed);
  auto fill = [&](const DenseLayout& d) {
    const double a = std::sqrt(3.0 / d.in);
    auto w = p.weight(d);
    for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = rng.uniform(-a, a);
  };
  auto fill_mlp = [&](const MLPLayout& m) {
    for (const DenseLayout& d : m.layers) fill(d);
  };
  fill_mlp(p.layout.enc_p);
  fill_mlp(p.layout.enc_dl);
  fill_mlp(p.layout.enc_o);
  for (const InnerLayout& in : p.layout.inner) {
    for (const DenseLayout& m : in.msg) fill(m);
    fill_mlp(in.g_dl);
    fill_mlp(in.g_o);
    fill_mlp(in.g_p);
  }
  fill_mlp(p.layout.readout);
  p.bias(p.layout.readout.layers.back()).setConstant(kReadoutBias);
  return p;
}

std::shared_ptr<const GraphOperators> prepare(const LPGraph& graph) {
  graph.validate();
  auto ops = std::make_shared<GraphOperators>();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(graph.edges_pd_pl.size());
  for (const PDEdge& e : graph.edges_pd_pl) t.emplace_back(e.dl, e.p, e.weight);
  ops->S.resize(graph.num_dl, graph.num_p);
  ops->S.setFromTriplets(t.begin(), t.end());
  ops->S.makeCompressed();
  ops->St = ops->S.transpose();
  ops->St.makeCompressed();

  double cmax = 0.0;
  for (const VertexEdge& e : graph.edges_po) cmax = std::max(cmax, std::abs(e.weight));
  ops->objective_scale = cmax > 0.0 ? cmax : 1.0;
  ops->w_po = Vector::Zero(graph.num_p);
  for (const VertexEdge& e : graph.edges_po) ops->w_po[e.v] = e.weight / ops->objective_scale;
  ops->w_dlo = Vector::Zero(graph.num_dl);
  for (const VertexEdge& e : graph.edges_dlo) ops->w_dlo[e.v] = e.weight;

  ops->init_p = graph.init_p;
  ops->init_dl = graph.init_dl;
  ops->init_o = graph.init_o;
  if (ops->init_o.cols() >= 2) {
    ops->init_o(0, 0) /= ops->objective_scale;
    ops->init_o(0, 1) /= ops->objective_scale * ops->objective_scale;
  }
  return ops;
}

Attributes inner_layer(const GraphOperators& ops, const Attributes& h, int j,
                       const ModelParameters& params) {
  if (j < 0 || j >= params.config.J) throw ValidationError("inner_layer: layer index out of range");
  const int w = params.config.hidden_dim;
  if (h.p.cols() != w || h.dl.cols() != w || h.o.cols() != w || h.p.rows() != ops.num_p() ||
      h.dl.rows() != ops.num_dl() || h.o.rows() != 1) {
    throw DimensionError("inner_layer: attribute shapes do not match the graph and hidden_dim");
  }
  return run_inner(ops, h, params.layout.inner[static_cast<std::size_t>(j)], params, nullptr);
}

ForwardTrace forward(const LPGraph& graph, const ModelParameters& params, int K) {
  return forward(prepare(graph), params, K);
}

ForwardTrace forward(std::shared_ptr<const GraphOperators> ops, const ModelParameters& params,
                     int K) {
  check_K(params, K);
  check_attr(*ops, params);
  ForwardTrace tr;
  tr.ops = ops;
  tr.K = K;
  tr.J = params.config.J;
  const ModelLayout& L = params.layout;
  Attributes h{mlp_cached(params, L.enc_p, ops->init_p, tr.enc_p),
               mlp_cached(params, L.enc_dl, ops->init_dl, tr.enc_dl),
               mlp_cached(params, L.enc_o, ops->init_o, tr.enc_o)};
  tr.inner.resize(static_cast<std::size_t>(K * tr.J));
  tr.readout.resize(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    for (int j = 0; j < tr.J; ++j) {
      h = run_inner(*ops, h, L.inner[static_cast<std::size_t>(j)], params,
                    &tr.inner[static_cast<std::size_t>(k * tr.J + j)]);
    }
    double rr = 1.0;
    const Matrix r = mlp_cached(params, L.readout, normalized(h.p, params.config.block_norm, &rr),
                                tr.readout[static_cast<std::size_t>(k)]);
    tr.readout_rms.push_back(rr);
    tr.R.emplace_back(r.col(0));
    tr.h_p.push_back(h.p);
    tr.h_dl.push_back(h.dl);
    tr.h_o.push_back(h.o);
  }
  return tr;
}

Vector predict(const GraphOperators& ops, const ModelParameters& params, int K) {
  check_K(params, K);
  check_attr(ops, params);
  const ModelLayout& L = params.layout;
  Attributes h{mlp(params, L.enc_p, ops.init_p), mlp(params, L.enc_dl, ops.init_dl),
               mlp(params, L.enc_o, ops.init_o)};
  for (int k = 0; k < K; ++k) {
    for (int j = 0; j < params.config.J; ++j) {
      h = run_inner(ops, h, L.inner[static_cast<std::size_t>(j)], params, nullptr);
    }
  }
  double rr = 1.0;
  return mlp(params, L.readout, normalized(h.p, params.config.block_norm, &rr)).col(0);
}

Vector backward(const ForwardTrace& tr, const ModelParameters& params,
                const std::vector<Vector>& dR) {
  if (!tr.ops || static_cast<int>(tr.inner.size()) != tr.K * tr.J) {
    throw ValidationError("backward: trace was not retained by forward");
  }
  if (static_cast<int>(dR.size()) != tr.K) {
    throw DimensionError("backward: expected " + std::to_string(tr.K) + " readout gradients");
  }
  const GraphOperators& ops = *tr.ops;
  const ModelLayout& L = params.layout;
  const int w = params.config.hidden_dim;
  Vector grad = Vector::Zero(params.size());
  Matrix dp = Matrix::Zero(ops.num_p(), w);
  Matrix ddl = Matrix::Zero(ops.num_dl(), w);
  Matrix dob = Matrix::Zero(1, w);

  auto msg_back = [&](const InnerLayout& in, const InnerCache& c, Msg m, const Matrix& dout) {
    return dense_backward(in.msg[m], params, c.msg[m], relu_grad(c.msg[m].pre, dout), grad);
  };

  const bool on = params.config.block_norm;
  for (int k = tr.K; k-- > 0;) {
    const Vector& g = dR[static_cast<std::size_t>(k)];
    if (g.size() != ops.num_p()) throw DimensionError("backward: readout gradient size mismatch");
    const MLPCache& rc = tr.readout[static_cast<std::size_t>(k)];
    dp += normalized_backward(rc[0].in, mlp_backward(L.readout, params, rc, Matrix(g), grad), on,
                              tr.readout_rms[static_cast<std::size_t>(k)]);
    for (int j = tr.J; j-- > 0;) {
      const InnerLayout& in = L.inner[static_cast<std::size_t>(j)];
      const InnerCache& c = tr.inner[static_cast<std::size_t>(k * tr.J + j)];
      // Gradients of the three raw input blocks of an aggregator.
      auto blocks = [&](const MLPLayout& gl, const MLPCache& gc, const Matrix& dout, int phase) {
        const Matrix dx = mlp_backward(gl, params, gc, dout, grad);
        const Matrix& y = gc[0].in;
        std::array<Matrix, 3> out;
        for (int b = 0; b < 3; ++b) {
          out[static_cast<std::size_t>(b)] =
              normalized_backward(y.middleCols(b * w, w), dx.middleCols(b * w, w), on,
                                  c.rms[static_cast<std::size_t>(3 * phase + b)]);
        }
        return out;
      };

      // phase 3: p
      const auto xp = blocks(in.g_p, c.g_p, dp, 2);
      dp += xp[0];
      ddl += msg_back(in, c, msg_dl_p, ops.S * xp[1]);
      dob += msg_back(in, c, msg_o_p, ops.w_po.transpose() * xp[2]);

      // phase 2: o
      const auto xo = blocks(in.g_o, c.g_o, dob, 1);
      dob += xo[0];
      ddl += msg_back(in, c, msg_dl_o, ops.w_dlo * xo[1]);
      dp += msg_back(in, c, msg_p_o, ops.w_po * xo[2]);

      // phase 1: dl
      const auto xd = blocks(in.g_dl, c.g_dl, ddl, 0);
      ddl += xd[0];
      dp += msg_back(in, c, msg_p_dl, ops.St * xd[1]);
      dob += msg_back(in, c, msg_o_dl, ops.w_dlo.transpose() * xd[2]);
    }
  }
  mlp_backward(L.enc_p, params, tr.enc_p, dp, grad);
  mlp_backward(L.enc_dl, params, tr.enc_dl, ddl, grad);
  mlp_backward(L.enc_o, params, tr.enc_o, dob, grad);
  return grad;
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"attr_dim", c.attr_dim},
          {"hidden_dim", c.hidden_dim},
          {"enc_hidden", c.enc_hidden},
          {"readout_hidden1", c.readout_hidden1},
          {"readout_hidden2", c.readout_hidden2},
          {"J", c.J},
          {"K_max", c.K_max},
          {"block_norm", c.block_norm}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {"attr_dim", "hidden_dim", "enc_hidden",
                                              "readout_hidden1", "readout_hidden2", "J",
                                              "K_max", "block_norm"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ValidationError("model config: unknown field '" + key + "'");
  }
  ModelConfig c;
  c.attr_dim = j.value("attr_dim", c.attr_dim);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.enc_hidden = j.value("enc_hidden", c.enc_hidden);
  c.readout_hidden1 = j.value("readout_hidden1", c.readout_hidden1);
  c.readout_hidden2 = j.value("readout_hidden2", c.readout_hidden2);
  c.J = j.value("J", c.J);
  c.K_max = j.value("K_max", c.K_max);
  c.block_norm = j.value("block_norm", c.block_norm);
  c.validate();
  return c;
}

nlohmann::json to_json(const Checkpoint& ckpt) {
  const Vector& v = ckpt.params.values;
  return {{"format", "teimit-checkpoint"},
          {"version", kCheckpointVersion},
          {"tool_version", TEIMIT_VERSION},
          {"recipe_hash", ckpt.recipe_hash},
          {"config", to_json(ckpt.params.config)},
          {"num_parameters", v.size()},
          {"parameters", std::vector<double>(v.data(), v.data() + v.size())},
          {"extra", ckpt.extra}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "teimit-checkpoint") {
    throw ValidationError("checkpoint: missing format tag");
  }
  if (j.value("version", 0) != kCheckpointVersion) {
    throw ValidationError("checkpoint: unsupported version");
  }
  Checkpoint ckpt;
  ckpt.params.config = model_config_from_json(j.at("config"));
  ckpt.params.layout = ModelLayout::build(ckpt.params.config);
  const auto values = j.at("parameters").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != ckpt.params.layout.size) {
    throw DimensionError("checkpoint: parameter count does not match the model config");
  }
  ckpt.params.values = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  ckpt.recipe_hash = j.value("recipe_hash", std::string());
  ckpt.extra = j.value("extra", nlohmann::json::object());
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_json_atomic(path, to_json(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(read_json(path));
}

}  // namespace teimit
