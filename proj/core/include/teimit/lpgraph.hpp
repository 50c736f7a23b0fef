#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "teimit/teprog.hpp"

namespace teimit {

struct PDEdge {
  int p = 0;
  int dl = 0;
  double weight = 0.0;

  friend bool operator==(const PDEdge&, const PDEdge&) = default;
};

struct VertexEdge {
  int v = 0;
  double weight = 0.0;

  friend bool operator==(const VertexEdge&, const VertexEdge&) = default;
};

struct InitialAttributes {
  enum class Mode { fixed, row_col_stats };
  Mode mode = Mode::row_col_stats;
  double value = 1.0;  // used by `fixed`
};

/// Tripartite graph of a normalized LP: one p-vertex per column, one
/// dl-vertex per row (demand rows first, then links), one objective vertex.
struct LPGraph {
  int num_p = 0;
  int num_dl = 0;
  std::vector<PDEdge> edges_pd_pl;   // nonzeros of normalized A
  std::vector<VertexEdge> edges_po;  // weight c_p
  std::vector<VertexEdge> edges_dlo; // weight normalized b_j (= 1)
  Matrix init_p;                     // num_p x attr_dim
  Matrix init_dl;                    // num_dl x attr_dim
  Matrix init_o;                     // 1 x attr_dim

  // Backrefs: LP column of each p-vertex, LP row of each dl-vertex.
  std::vector<int> p_col;
  std::vector<int> dl_row;
  std::vector<ColTag> col_tags;
  std::vector<RowTag> row_tags;

  int attr_dim() const { return static_cast<int>(init_p.cols()); }
  void validate() const;
};

LPGraph encode(const NormalizedLP& lp, const InitialAttributes& attrs = {});

/// Maps per-p-vertex values into LP column order.
Solution decode_solution(const LPGraph& graph, const Vector& p_values);

/// Relabels vertices: new p-vertex i is old p-vertex p_perm[i], likewise for
/// dl. Backrefs follow the vertices, so decoding is unchanged.
LPGraph permute(const LPGraph& graph, const std::vector<int>& p_perm,
                const std::vector<int>& dl_perm);

/// Sorts edge lists by (dl, p) / vertex so summation order is canonical.
void canonicalize(LPGraph& graph);

nlohmann::json to_json(const LPGraph& graph);
LPGraph graph_from_json(const nlohmann::json& j);

}  // namespace teimit
