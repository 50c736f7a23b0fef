#include "teimit/lpgraph.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "teimit/error.hpp"

namespace teimit {

namespace {

struct Moments {
  double sum = 0.0;
  double sq = 0.0;
  int n = 0;

  void add(double v) {
    sum += v;
    sq += v * v;
    ++n;
  }
  double mean() const { return n ? sum / n : 0.0; }
  double variance() const {
    if (!n) return 0.0;
    const double m = mean();
    return std::max(0.0, sq / n - m * m);
  }
};

std::vector<int> inverse(const std::vector<int>& perm, int n, const char* what) {
  if (static_cast<int>(perm.size()) != n) {
    throw DimensionError(std::string("permute: ") + what + " permutation has wrong size");
  }
  std::vector<int> inv(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    const int old = perm[static_cast<std::size_t>(i)];
    if (old < 0 || old >= n || inv[static_cast<std::size_t>(old)] != -1) {
      throw ValidationError(std::string("permute: ") + what + " is not a permutation");
    }
    inv[static_cast<std::size_t>(old)] = i;
  }
  return inv;
}

template <class M>
M permute_rows(const M& m, const std::vector<int>& perm) {
  M out(m.rows(), m.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(perm[i]);
  }
  return out;
}

}  // namespace

void LPGraph::validate() const {
  if (num_p < 0 || num_dl < 0) throw ValidationError("LPGraph: negative vertex count");
  if (init_p.rows() != num_p || init_dl.rows() != num_dl || init_o.rows() != 1 ||
      init_dl.cols() != init_p.cols() || init_o.cols() != init_p.cols()) {
    throw DimensionError("LPGraph: attribute shapes disagree with vertex counts");
  }
  if (static_cast<int>(edges_po.size()) != num_p || static_cast<int>(edges_dlo.size()) != num_dl) {
    throw ValidationError("LPGraph: every vertex needs exactly one objective edge");
  }
  if (static_cast<int>(p_col.size()) != num_p || static_cast<int>(dl_row.size()) != num_dl ||
      static_cast<int>(col_tags.size()) != num_p || static_cast<int>(row_tags.size()) != num_dl) {
    throw DimensionError("LPGraph: backref sizes disagree with vertex counts");
  }
  for (const PDEdge& e : edges_pd_pl) {
    if (e.p < 0 || e.p >= num_p || e.dl < 0 || e.dl >= num_dl) {
      throw ValidationError("LPGraph: p-dl edge endpoint out of range");
    }
  }
  std::vector<int> seen_p(static_cast<std::size_t>(num_p), 0);
  for (const VertexEdge& e : edges_po) {
    if (e.v < 0 || e.v >= num_p || seen_p[static_cast<std::size_t>(e.v)]++) {
      throw ValidationError("LPGraph: objective edges must cover each p-vertex once");
    }
  }
  std::vector<int> seen_dl(static_cast<std::size_t>(num_dl), 0);
  for (const VertexEdge& e : edges_dlo) {
    if (e.v < 0 || e.v >= num_dl || seen_dl[static_cast<std::size_t>(e.v)]++) {
      throw ValidationError("LPGraph: objective edges must cover each dl-vertex once");
    }
  }
}

LPGraph encode(const NormalizedLP& nlp, const InitialAttributes& attrs) {
  const CanonicalLP& lp = nlp.lp;
  LPGraph g;
  g.num_p = lp.num_cols();
  g.num_dl = lp.num_rows();
  std::vector<Moments> col_m(static_cast<std::size_t>(g.num_p));
  std::vector<Moments> row_m(static_cast<std::size_t>(g.num_dl));
  for (Eigen::Index j = 0; j < lp.A.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(lp.A, j); it; ++it) {
      if (it.value() == 0.0) continue;
      g.edges_pd_pl.push_back({static_cast<int>(it.col()), static_cast<int>(j), it.value()});
      col_m[static_cast<std::size_t>(it.col())].add(it.value());
      row_m[static_cast<std::size_t>(j)].add(it.value());
    }
  }
  canonicalize(g);
  Moments obj;
  for (int p = 0; p < g.num_p; ++p) {
    g.edges_po.push_back({p, lp.c[p]});
    obj.add(lp.c[p]);
  }
  for (int r = 0; r < g.num_dl; ++r) g.edges_dlo.push_back({r, lp.b[r]});

  g.init_p.resize(g.num_p, 2);
  g.init_dl.resize(g.num_dl, 2);
  g.init_o.resize(1, 2);
  if (attrs.mode == InitialAttributes::Mode::fixed) {
    g.init_p.setConstant(attrs.value);
    g.init_dl.setConstant(attrs.value);
    g.init_o.setConstant(attrs.value);
  } else {
    for (int p = 0; p < g.num_p; ++p) {
      g.init_p(p, 0) = col_m[static_cast<std::size_t>(p)].mean();
      g.init_p(p, 1) = col_m[static_cast<std::size_t>(p)].variance();
    }
    for (int r = 0; r < g.num_dl; ++r) {
      g.init_dl(r, 0) = row_m[static_cast<std::size_t>(r)].mean();
      g.init_dl(r, 1) = row_m[static_cast<std::size_t>(r)].variance();
    }
    g.init_o(0, 0) = obj.mean();
    g.init_o(0, 1) = obj.variance();
  }

  g.p_col.resize(static_cast<std::size_t>(g.num_p));
  std::iota(g.p_col.begin(), g.p_col.end(), 0);
  g.dl_row.resize(static_cast<std::size_t>(g.num_dl));
  std::iota(g.dl_row.begin(), g.dl_row.end(), 0);
  g.col_tags = lp.cols;
  g.row_tags = lp.rows;
  return g;
}

Solution decode_solution(const LPGraph& graph, const Vector& p_values) {
  if (p_values.size() != graph.num_p) {
    throw DimensionError("decode_solution: expected " + std::to_string(graph.num_p) +
                         " values, got " + std::to_string(p_values.size()));
  }
  Solution x(graph.num_p);
  for (int v = 0; v < graph.num_p; ++v) x[graph.p_col[static_cast<std::size_t>(v)]] = p_values[v];
  return x;
}

void canonicalize(LPGraph& graph) {
  std::sort(graph.edges_pd_pl.begin(), graph.edges_pd_pl.end(),
            [](const PDEdge& a, const PDEdge& b) {
              return a.dl != b.dl ? a.dl < b.dl : a.p < b.p;
            });
  auto by_v = [](const VertexEdge& a, const VertexEdge& b) { return a.v < b.v; };
  std::sort(graph.edges_po.begin(), graph.edges_po.end(), by_v);
  std::sort(graph.edges_dlo.begin(), graph.edges_dlo.end(), by_v);
}

LPGraph permute(const LPGraph& graph, const std::vector<int>& p_perm,
                const std::vector<int>& dl_perm) {
  const std::vector<int> p_inv = inverse(p_perm, graph.num_p, "p");
  const std::vector<int> dl_inv = inverse(dl_perm, graph.num_dl, "dl");
  LPGraph out;
  out.num_p = graph.num_p;
  out.num_dl = graph.num_dl;
  for (const PDEdge& e : graph.edges_pd_pl) {
    out.edges_pd_pl.push_back({p_inv[static_cast<std::size_t>(e.p)],
                               dl_inv[static_cast<std::size_t>(e.dl)], e.weight});
  }
  for (const VertexEdge& e : graph.edges_po) {
    out.edges_po.push_back({p_inv[static_cast<std::size_t>(e.v)], e.weight});
  }
  for (const VertexEdge& e : graph.edges_dlo) {
    out.edges_dlo.push_back({dl_inv[static_cast<std::size_t>(e.v)], e.weight});
  }
  out.init_p = permute_rows(graph.init_p, p_perm);
  out.init_dl = permute_rows(graph.init_dl, dl_perm);
  out.init_o = graph.init_o;
  for (int old : p_perm) {
    out.p_col.push_back(graph.p_col[static_cast<std::size_t>(old)]);
    out.col_tags.push_back(graph.col_tags[static_cast<std::size_t>(old)]);
  }
  for (int old : dl_perm) {
    out.dl_row.push_back(graph.dl_row[static_cast<std::size_t>(old)]);
    out.row_tags.push_back(graph.row_tags[static_cast<std::size_t>(old)]);
  }
  canonicalize(out);
  return out;
}

nlohmann::json to_json(const LPGraph& g) {
  auto rows = [](const Matrix& m) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      std::vector<double> r(static_cast<std::size_t>(m.cols()));
      for (Eigen::Index k = 0; k < m.cols(); ++k) r[static_cast<std::size_t>(k)] = m(i, k);
      a.push_back(r);
    }
    return a;
  };
  nlohmann::json pd = nlohmann::json::array();
  for (const PDEdge& e : g.edges_pd_pl) pd.push_back({e.p, e.dl, e.weight});
  nlohmann::json po = nlohmann::json::array();
  for (const VertexEdge& e : g.edges_po) po.push_back({e.v, e.weight});
  nlohmann::json dlo = nlohmann::json::array();
  for (const VertexEdge& e : g.edges_dlo) dlo.push_back({e.v, e.weight});
  nlohmann::json cols = nlohmann::json::array();
  for (const ColTag& t : g.col_tags) cols.push_back({t.pair, t.path});
  nlohmann::json rtags = nlohmann::json::array();
  for (const RowTag& t : g.row_tags) {
    rtags.push_back({t.kind == RowTag::Kind::demand ? "demand" : "capacity", t.index});
  }
  return {{"num_p", g.num_p},         {"num_dl", g.num_dl},
          {"edges_pd_pl", pd},        {"edges_po", po},
          {"edges_dlo", dlo},         {"init_p", rows(g.init_p)},
          {"init_dl", rows(g.init_dl)}, {"init_o", rows(g.init_o)},
          {"p_col", g.p_col},         {"dl_row", g.dl_row},
          {"col_tags", cols},         {"row_tags", rtags}};
}

LPGraph graph_from_json(const nlohmann::json& j) {
  LPGraph g;
  g.num_p = j.at("num_p").get<int>();
  g.num_dl = j.at("num_dl").get<int>();
  for (const auto& e : j.at("edges_pd_pl")) {
    g.edges_pd_pl.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>()});
  }
  for (const auto& e : j.at("edges_po")) g.edges_po.push_back({e.at(0).get<int>(), e.at(1).get<double>()});
  for (const auto& e : j.at("edges_dlo")) g.edges_dlo.push_back({e.at(0).get<int>(), e.at(1).get<double>()});
  auto matrix = [](const nlohmann::json& a, Eigen::Index expected_rows) {
    const Eigen::Index cols = a.empty() ? 2 : static_cast<Eigen::Index>(a.at(0).size());
    if (static_cast<Eigen::Index>(a.size()) != expected_rows) {
      throw DimensionError("LPGraph JSON: attribute row count mismatch");
    }
    Matrix m(expected_rows, cols);
    for (Eigen::Index i = 0; i < expected_rows; ++i) {
      const auto r = a.at(static_cast<std::size_t>(i)).get<std::vector<double>>();
      if (static_cast<Eigen::Index>(r.size()) != cols) throw DimensionError("LPGraph JSON: ragged attributes");
      for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = r[static_cast<std::size_t>(k)];
    }
    return m;
  };
  g.init_p = matrix(j.at("init_p"), g.num_p);
  g.init_dl = matrix(j.at("init_dl"), g.num_dl);
  g.init_o = matrix(j.at("init_o"), 1);
  g.p_col = j.at("p_col").get<std::vector<int>>();
  g.dl_row = j.at("dl_row").get<std::vector<int>>();
  for (const auto& t : j.at("col_tags")) g.col_tags.push_back({t.at(0).get<int>(), t.at(1).get<int>()});
  for (const auto& t : j.at("row_tags")) {
    g.row_tags.push_back({t.at(0).get<std::string>() == "demand" ? RowTag::Kind::demand
                                                                 : RowTag::Kind::capacity,
                          t.at(1).get<int>()});
  }
  g.validate();
  return g;
}

}  // namespace teimit
