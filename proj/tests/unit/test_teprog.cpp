#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "support.hpp"
#include "teimit/error.hpp"
#include "teimit/rng.hpp"
#include "teimit/teprog.hpp"

using namespace teimit;
using teimit::test::four_node;
using teimit::test::random_instance;
using teimit::test::single_path;

namespace {

Matrix dense(const CanonicalLP& lp) { return Matrix(lp.A); }

Solution random_x(const CanonicalLP& lp, Rng& rng, double hi) {
  Solution x(lp.num_cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.uniform(0.0, hi);
  return x;
}

}  // namespace

TEST(BuildLP, FourNodeInstance) {
  const CanonicalLP lp = build_lp(four_node(1000));
  EXPECT_EQ(lp.num_rows(), 4);  // one demand row, three on-path links
  EXPECT_EQ(lp.num_cols(), 2);
  EXPECT_EQ(lp.num_demand_rows(), 1);
  EXPECT_EQ(lp.c, (Vector(2) << 1000, 1000).finished());
  const Matrix A = dense(lp);
  EXPECT_EQ(A(0, 0), 1.0);
  EXPECT_EQ(A(0, 1), 1.0);
  // Links 0 (0->3), 1 (0->1), 2 (1->3); link 0 only on the direct path.
  EXPECT_EQ(lp.rows[1], (RowTag{RowTag::Kind::capacity, 0}));
  EXPECT_EQ(A(1, 0), 1000.0);
  EXPECT_EQ(A(1, 1), 0.0);
  EXPECT_EQ(A(2, 1), 1000.0);
  EXPECT_EQ(A(3, 1), 1000.0);
  EXPECT_EQ(lp.b, (Vector(4) << 1, 2000, 3000, 1500).finished());
}

TEST(BuildLP, SinglePathTranscription) {
  const CanonicalLP lp = build_lp(single_path(1000, 5000));
  EXPECT_EQ(dense(lp), (Matrix(2, 1) << 1, 1000).finished());
  EXPECT_EQ(lp.b, (Vector(2) << 1, 5000).finished());
  EXPECT_EQ(lp.c, (Vector(1) << 1000).finished());
}

TEST(BuildLP, PathWalkOracle) {
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const TEInstance inst = random_instance(s, 6 + static_cast<int>(s % 12), 0.3, 5, 3);
    const CanonicalLP lp = build_lp(inst);
    // Independent re-derivation: walk every path link by link.
    std::vector<LinkId> used;
    for (const auto& group : inst.paths) {
      for (const Path& p : group) used.insert(used.end(), p.begin(), p.end());
    }
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    const int D = static_cast<int>(inst.pairs.size());
    ASSERT_EQ(lp.num_rows(), D + static_cast<int>(used.size()));
    Matrix want = Matrix::Zero(lp.num_rows(), inst.num_paths());
    Vector want_b(lp.num_rows()), want_c(inst.num_paths());
    int col = 0;
    for (int i = 0; i < D; ++i) {
      for (const Path& p : inst.paths[static_cast<std::size_t>(i)]) {
        want(i, col) = 1.0;
        want_c[col] = inst.pairs[static_cast<std::size_t>(i)].demand;
        for (LinkId l : p) {
          const auto r = std::find(used.begin(), used.end(), l) - used.begin();
          want(D + r, col) += inst.pairs[static_cast<std::size_t>(i)].demand;
        }
        ++col;
      }
    }
    for (int i = 0; i < D; ++i) want_b[i] = 1.0;
    for (std::size_t r = 0; r < used.size(); ++r) {
      want_b[D + static_cast<int>(r)] = inst.topology.link(used[r]).capacity;
      ASSERT_EQ(lp.rows[static_cast<std::size_t>(D) + r].index, used[r]);
    }
    ASSERT_EQ(dense(lp), want) << "seed " << s;
    ASSERT_EQ(lp.b, want_b);
    ASSERT_EQ(lp.c, want_c);
    // Every column: its demand row plus at least one capacity row.
    const Vector col_nnz = Matrix(dense(lp).cwiseAbs().cwiseSign()).colwise().sum().transpose();
    for (int c = 0; c < lp.num_cols(); ++c) ASSERT_GE(col_nnz[c], 2.0);
  }
}

TEST(BuildLP, PairRelabelingPermutesRowsAndColumns) {
  const TEInstance inst = random_instance(3, 12, 0.35, 6, 3);
  TEInstance rev = inst;
  std::reverse(rev.pairs.begin(), rev.pairs.end());
  std::reverse(rev.paths.begin(), rev.paths.end());
  const CanonicalLP a = build_lp(inst), b = build_lp(rev);
  auto row_multiset = [](const CanonicalLP& lp) {
    std::vector<std::vector<double>> rows;
    const Matrix A = dense(lp);
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
      std::vector<double> v;
      for (Eigen::Index c = 0; c < A.cols(); ++c) {
        if (A(r, c) != 0.0) v.push_back(A(r, c));
      }
      std::sort(v.begin(), v.end());
      v.push_back(lp.b[r]);
      rows.push_back(v);
    }
    std::sort(rows.begin(), rows.end());
    return rows;
  };
  EXPECT_EQ(row_multiset(a), row_multiset(b));
  std::vector<double> ca(a.c.data(), a.c.data() + a.c.size()), cb(b.c.data(), b.c.data() + b.c.size());
  std::sort(ca.begin(), ca.end());
  std::sort(cb.begin(), cb.end());
  EXPECT_EQ(ca, cb);
}

TEST(Normalize, UnitRhsIsUnchanged) {
  CanonicalLP lp = build_lp(single_path(1000, 5000));
  lp.b.setOnes();
  const NormalizedLP n = normalize(lp);
  EXPECT_EQ(dense(n.lp), dense(lp));
}

TEST(Normalize, CapacityRowEntry) {
  const NormalizedLP n = normalize(build_lp(single_path(1000, 5000)));
  EXPECT_DOUBLE_EQ(dense(n.lp)(1, 0), 0.2);
  EXPECT_EQ(n.lp.b, Vector::Ones(2));
  EXPECT_EQ(n.scale, (Vector(2) << 1, 5000).finished());
}

TEST(Normalize, RoundTrip) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const CanonicalLP lp = build_lp(random_instance(s, 10, 0.4, 4, 4));
    const CanonicalLP back = denormalize(normalize(lp));
    const Matrix a = dense(lp), b = dense(back);
    ASSERT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12 * a.cwiseAbs().maxCoeff());
    ASSERT_EQ(back.b, lp.b);
  }
}

TEST(Normalize, RejectsNonPositiveRhs) {
  CanonicalLP lp = build_lp(single_path(1000, 5000));
  lp.b[1] = 0.0;
  EXPECT_THROW(normalize(lp), ValidationError);
}

TEST(Objective, Examples) {
  const CanonicalLP lp = build_lp(four_node(1000));
  EXPECT_EQ(objective(lp, Solution::Zero(2)), 0.0);
  EXPECT_DOUBLE_EQ(objective(lp, (Solution(2) << 0.5, 0.5).finished()), 1000.0);
  EXPECT_THROW(objective(lp, Solution::Zero(3)), DimensionError);
}

TEST(Objective, LoopOracle) {
  Rng rng(1);
  for (std::uint64_t s = 0; s < 200; ++s) {
    const TEInstance inst = random_instance(s, 10, 0.4, 4, 3);
    const CanonicalLP lp = build_lp(inst);
    const Solution x = random_x(lp, rng, 1.0);
    double want = 0.0;
    int col = 0;
    for (std::size_t i = 0; i < inst.pairs.size(); ++i) {
      double share = 0.0;
      for (std::size_t p = 0; p < inst.paths[i].size(); ++p) share += x[col++];
      want += inst.pairs[i].demand * share;
    }
    ASSERT_NEAR(objective(lp, x), want, 1e-9 * want);
  }
}

TEST(ConstraintViolations, Examples) {
  const CanonicalLP lp = build_lp(single_path(1000, 500));
  EXPECT_EQ(constraint_violations(lp, (Solution(1) << 0.5).finished()), Vector::Zero(2));
  const Vector v = constraint_violations(lp, (Solution(1) << 1.0).finished());
  EXPECT_EQ(v[0], 0.0);
  EXPECT_EQ(v[1], 500.0);
}

TEST(ConstraintViolations, LoopOracle) {
  Rng rng(2);
  for (std::uint64_t s = 0; s < 200; ++s) {
    const TEInstance inst = random_instance(s, 10, 0.4, 4, 3);
    const CanonicalLP lp = build_lp(inst);
    const Solution x = random_x(lp, rng, 1.5);
    const Vector got = constraint_violations(lp, x);
    // Demand rows.
    int col = 0;
    for (std::size_t i = 0; i < inst.pairs.size(); ++i) {
      double sum = 0.0;
      for (std::size_t p = 0; p < inst.paths[i].size(); ++p) sum += x[col++];
      ASSERT_NEAR(got[static_cast<Eigen::Index>(i)], std::max(0.0, sum - 1.0), 1e-12);
    }
    // Capacity rows, by walking links.
    std::map<LinkId, double> load;
    col = 0;
    for (std::size_t i = 0; i < inst.pairs.size(); ++i) {
      for (const Path& p : inst.paths[i]) {
        for (LinkId l : p) load[l] += inst.pairs[i].demand * x[col];
        ++col;
      }
    }
    Eigen::Index r = static_cast<Eigen::Index>(inst.pairs.size());
    for (const auto& [l, f] : load) {
      ASSERT_NEAR(got[r], std::max(0.0, f - inst.topology.link(l).capacity), 1e-9 * f);
      ++r;
    }
  }
}

TEST(ScaleToFeasible, FeasibleUnchanged) {
  const CanonicalLP lp = build_lp(four_node(1000));
  const Solution x = (Solution(2) << 0.3, 0.4).finished();
  EXPECT_EQ(feasibility_scale(lp, x), 1.0);
  EXPECT_EQ(scale_to_feasible(lp, x), x);
}

TEST(ScaleToFeasible, WorstRatioTwoHalves) {
  const CanonicalLP lp = build_lp(single_path(1000, 5000));
  const Solution x = (Solution(1) << 2.0).finished();  // demand row ratio 2, capacity 0.4
  EXPECT_EQ(feasibility_scale(lp, x), 2.0);
  const Solution y = scale_to_feasible(lp, x);
  EXPECT_EQ(y[0], 1.0);
  EXPECT_EQ(constraint_violations(lp, y), Vector::Zero(2));
}

TEST(ScaleToFeasible, RandomInfeasibleBecomesExactlyFeasible) {
  Rng rng(3);
  for (std::uint64_t s = 0; s < 500; ++s) {
    const CanonicalLP lp = build_lp(random_instance(s, 10, 0.4, 5, 4));
    const Solution x = random_x(lp, rng, 3.0);
    const Solution y = scale_to_feasible(lp, x);
    ASSERT_EQ(constraint_violations(lp, y).maxCoeff(), 0.0);
    const double sigma = feasibility_scale(lp, x);
    // Homogeneity of the objective.
    ASSERT_NEAR(objective(lp, y), objective(lp, x) / sigma, 1e-12 * objective(lp, x));
  }
}

TEST(ScaleToFeasible, RejectsNegative) {
  const CanonicalLP lp = build_lp(single_path(1000, 5000));
  EXPECT_THROW(scale_to_feasible(lp, (Solution(1) << -0.1).finished()), ValidationError);
}

TEST(LPJson, RoundTrip) {
  const CanonicalLP lp = build_lp(random_instance(9, 12, 0.4, 5, 3));
  const CanonicalLP back = lp_from_json(nlohmann::json::parse(to_json(lp).dump()));
  EXPECT_EQ(dense(back), dense(lp));
  EXPECT_EQ(back.b, lp.b);
  EXPECT_EQ(back.c, lp.c);
  EXPECT_EQ(back.rows, lp.rows);
  EXPECT_EQ(back.cols, lp.cols);
  const nlohmann::json j = to_json(lp);
  for (const char* key : {"c", "b", "rows", "col_meta"}) EXPECT_TRUE(j.contains(key));
}
