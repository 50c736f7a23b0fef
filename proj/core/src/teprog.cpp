#include "teimit/teprog.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "teimit/error.hpp"

namespace teimit {

int CanonicalLP::num_demand_rows() const {
  int count = 0;
  for (const RowTag& r : rows) count += r.kind == RowTag::Kind::demand ? 1 : 0;
  return count;
}

CanonicalLP build_lp(const TEInstance& instance) {
  const int num_pairs = static_cast<int>(instance.pairs.size());
  CanonicalLP lp;
  for (int i = 0; i < num_pairs; ++i) {
    for (int j = 0; j < static_cast<int>(instance.paths[static_cast<std::size_t>(i)].size()); ++j) {
      lp.cols.push_back({i, j});
    }
  }
  const int num_cols = static_cast<int>(lp.cols.size());

  // link id -> (column, demand) contributions, in column order.
  std::map<LinkId, std::vector<std::pair<int, double>>> link_usage;
  for (int col = 0; col < num_cols; ++col) {
    const ColTag& tag = lp.cols[static_cast<std::size_t>(col)];
    const double d = instance.pairs[static_cast<std::size_t>(tag.pair)].demand;
    for (LinkId l : instance.paths[static_cast<std::size_t>(tag.pair)][static_cast<std::size_t>(tag.path)]) {
      link_usage[l].emplace_back(col, d);
    }
  }

  const int num_rows = num_pairs + static_cast<int>(link_usage.size());
  lp.c.resize(num_cols);
  lp.b.resize(num_rows);
  std::vector<Eigen::Triplet<double>> triplets;
  for (int col = 0; col < num_cols; ++col) {
    const ColTag& tag = lp.cols[static_cast<std::size_t>(col)];
    lp.c[col] = instance.pairs[static_cast<std::size_t>(tag.pair)].demand;
    triplets.emplace_back(tag.pair, col, 1.0);
  }
  for (int i = 0; i < num_pairs; ++i) {
    lp.rows.push_back({RowTag::Kind::demand, i});
    lp.b[i] = 1.0;
  }
  int row = num_pairs;
  for (const auto& [link, usage] : link_usage) {
    lp.rows.push_back({RowTag::Kind::capacity, link});
    lp.b[row] = instance.topology.link(link).capacity;
    for (const auto& [col, d] : usage) triplets.emplace_back(row, col, d);
    ++row;
  }
  lp.A.resize(num_rows, num_cols);
  lp.A.setFromTriplets(triplets.begin(), triplets.end());
  lp.A.makeCompressed();
  return lp;
}

NormalizedLP normalize(const CanonicalLP& lp) {
  for (Eigen::Index j = 0; j < lp.b.size(); ++j) {
    if (!(lp.b[j] > 0.0)) throw ValidationError("normalize: right-hand side must be positive");
  }
  NormalizedLP out{lp, lp.b};
  for (Eigen::Index j = 0; j < out.lp.A.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(out.lp.A, j); it; ++it) it.valueRef() /= lp.b[j];
  }
  out.lp.b.setOnes();
  return out;
}

CanonicalLP denormalize(const NormalizedLP& nlp) {
  CanonicalLP lp = nlp.lp;
  for (Eigen::Index j = 0; j < lp.A.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(lp.A, j); it; ++it) it.valueRef() *= nlp.scale[j];
  }
  lp.b = nlp.scale;
  return lp;
}

namespace {
void check_dim(const CanonicalLP& lp, const Solution& x) {
  if (x.size() != lp.num_cols()) {
    throw DimensionError("solution has " + std::to_string(x.size()) + " entries, LP has " +
                         std::to_string(lp.num_cols()) + " columns");
  }
}
}  // namespace

double objective(const CanonicalLP& lp, const Solution& x) {
  check_dim(lp, x);
  return lp.c.dot(x);
}

Vector constraint_violations(const CanonicalLP& lp, const Solution& x) {
  check_dim(lp, x);
  Vector ax = lp.A * x;
  return (ax - lp.b).cwiseMax(0.0);
}

double feasibility_scale(const CanonicalLP& lp, const Solution& x) {
  check_dim(lp, x);
  const Vector ax = lp.A * x;
  double sigma = 1.0;
  for (Eigen::Index j = 0; j < ax.size(); ++j) sigma = std::max(sigma, ax[j] / lp.b[j]);
  return sigma;
}

Solution scale_to_feasible(const CanonicalLP& lp, const Solution& x) {
  check_dim(lp, x);
  if ((x.array() < 0.0).any()) throw ValidationError("scale_to_feasible: x must be nonnegative");
  double sigma = feasibility_scale(lp, x);
  Solution scaled = sigma == 1.0 ? x : Solution(x / sigma);
  while ((lp.A * scaled - lp.b).maxCoeff() > 0.0) {
    sigma = std::nextafter(sigma, std::numeric_limits<double>::infinity()) *
            (1.0 + 4.0 * std::numeric_limits<double>::epsilon());
    scaled = x / sigma;
  }
  return scaled;
}

nlohmann::json to_json(const CanonicalLP& lp) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index j = 0; j < lp.A.outerSize(); ++j) {
    nlohmann::json entries = nlohmann::json::array();
    for (SparseMatrix::InnerIterator it(lp.A, j); it; ++it) {
      entries.push_back({it.col(), it.value()});
    }
    const RowTag& tag = lp.rows[static_cast<std::size_t>(j)];
    rows.push_back({{"tag", {{"kind", tag.kind == RowTag::Kind::demand ? "demand" : "capacity"},
                             {"index", tag.index}}},
                    {"entries", std::move(entries)}});
  }
  nlohmann::json cols = nlohmann::json::array();
  for (const ColTag& t : lp.cols) cols.push_back({t.pair, t.path});
  return {{"c", std::vector<double>(lp.c.data(), lp.c.data() + lp.c.size())},
          {"b", std::vector<double>(lp.b.data(), lp.b.data() + lp.b.size())},
          {"rows", std::move(rows)},
          {"col_meta", std::move(cols)}};
}

CanonicalLP lp_from_json(const nlohmann::json& j) {
  CanonicalLP lp;
  const auto c = j.at("c").get<std::vector<double>>();
  const auto b = j.at("b").get<std::vector<double>>();
  lp.c = Eigen::Map<const Vector>(c.data(), static_cast<Eigen::Index>(c.size()));
  lp.b = Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size()));
  std::vector<Eigen::Triplet<double>> triplets;
  int r = 0;
  for (const auto& row : j.at("rows")) {
    const auto& tag = row.at("tag");
    lp.rows.push_back({tag.at("kind").get<std::string>() == "demand" ? RowTag::Kind::demand
                                                                       : RowTag::Kind::capacity,
                       tag.at("index").get<int>()});
    for (const auto& e : row.at("entries")) {
      triplets.emplace_back(r, e.at(0).get<int>(), e.at(1).get<double>());
    }
    ++r;
  }
  for (const auto& cm : j.at("col_meta")) lp.cols.push_back({cm.at(0).get<int>(), cm.at(1).get<int>()});
  if (static_cast<int>(lp.b.size()) != r || lp.c.size() != static_cast<Eigen::Index>(lp.cols.size())) {
    throw DimensionError("LP JSON: inconsistent row/column counts");
  }
  lp.A.resize(r, static_cast<Eigen::Index>(lp.cols.size()));
  lp.A.setFromTriplets(triplets.begin(), triplets.end());
  lp.A.makeCompressed();
  return lp;
}

}  // namespace teimit
