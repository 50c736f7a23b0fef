#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <nlohmann/json.hpp>

#include "teimit/netmodel.hpp"

namespace teimit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Split ratios R(p), one per LP column.
using Solution = Eigen::VectorXd;

struct RowTag {
  enum class Kind { demand, capacity };
  Kind kind = Kind::demand;
  int index = 0;  // SD-pair index for demand rows, link id for capacity rows

  friend bool operator==(const RowTag&, const RowTag&) = default;
};

struct ColTag {
  int pair = 0;
  int path = 0;  // position within P_pair

  friend bool operator==(const ColTag&, const ColTag&) = default;
};

/// max c'x  s.t.  A x <= b, x >= 0.
/// Rows: one demand row per SD pair (b = 1), then one capacity row per link
/// used by at least one path, ascending link id (b = C(l)).
struct CanonicalLP {
  Vector c;
  SparseMatrix A;
  Vector b;
  std::vector<RowTag> rows;
  std::vector<ColTag> cols;

  int num_rows() const { return static_cast<int>(A.rows()); }
  int num_cols() const { return static_cast<int>(A.cols()); }
  int num_demand_rows() const;
};

/// Row-scaled copy with b identically one; `scale` keeps the original b.
struct NormalizedLP {
  CanonicalLP lp;
  Vector scale;
};

CanonicalLP build_lp(const TEInstance& instance);

NormalizedLP normalize(const CanonicalLP& lp);
CanonicalLP denormalize(const NormalizedLP& nlp);

double objective(const CanonicalLP& lp, const Solution& x);

/// Per-row max(0, (Ax)_j - b_j) in the row's own units.
Vector constraint_violations(const CanonicalLP& lp, const Solution& x);

/// max(1, max_j (Ax)_j / b_j).
double feasibility_scale(const CanonicalLP& lp, const Solution& x);

/// x / sigma with sigma from `feasibility_scale`, nudged upward by ulps when
/// rounding would otherwise leave a positive residual. Requires x >= 0.
Solution scale_to_feasible(const CanonicalLP& lp, const Solution& x);

nlohmann::json to_json(const CanonicalLP& lp);
CanonicalLP lp_from_json(const nlohmann::json& j);

}  // namespace teimit
