#include "teimit/ipm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/QR>

#include "teimit/error.hpp"

namespace teimit {

void IPMConfig::validate() const {
  if (!(mu0 > 0.0)) throw ValidationError("IPM: mu0 must be positive");
  if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("IPM: tau must be in (0, 1)");
  if (!(epsilon > 0.0)) throw ValidationError("IPM: epsilon must be positive");
  if (!(mu0 > epsilon)) throw ValidationError("IPM: mu0 must exceed epsilon");
  if (max_newton_per_mu < 1) throw ValidationError("IPM: max_newton_per_mu must be >= 1");
  if (!(boundary_fraction > 0.0 && boundary_fraction < 1.0)) {
    throw ValidationError("IPM: boundary_fraction must be in (0, 1)");
  }
  if (final_centering_steps < 0) throw ValidationError("IPM: final_centering_steps must be >= 0");
  if (!(certificate_tolerance > 0.0)) throw ValidationError("IPM: certificate_tolerance must be positive");
}

double KKTReport::max_residual() const {
  return std::max({primal_infeasibility, dual_infeasibility, duality_gap});
}

Vector initial_point(const CanonicalLP& lp) {
  double delta = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < lp.A.outerSize(); ++j) {
    double rowsum = 0.0;
    for (SparseMatrix::InnerIterator it(lp.A, j); it; ++it) rowsum += it.value();
    if (rowsum > 0.0) delta = std::min(delta, lp.b[j] / rowsum);
  }
  if (!std::isfinite(delta)) delta = 1.0;
  return Vector::Constant(lp.num_cols(), 0.5 * delta);
}

double objective_scale(const CanonicalLP& lp) {
  // Upper bound on c'x from per-column bounds x_p <= min_j b_j / A_jp.
  Vector upper = Vector::Constant(lp.num_cols(), std::numeric_limits<double>::infinity());
  for (Eigen::Index j = 0; j < lp.A.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(lp.A, j); it; ++it) {
      if (it.value() > 0.0) upper[it.col()] = std::min(upper[it.col()], lp.b[j] / it.value());
    }
  }
  double bound = 0.0;
  for (Eigen::Index p = 0; p < upper.size(); ++p) {
    if (std::isfinite(upper[p])) bound += std::abs(lp.c[p]) * upper[p];
  }
  if (!(bound > 0.0)) return 1.0;
  return bound / static_cast<double>(lp.num_rows() + lp.num_cols());
}

CanonicalLP with_scaled_objective(const CanonicalLP& lp) {
  CanonicalLP out = lp;
  out.c /= objective_scale(lp);
  return out;
}

double barrier_objective(const CanonicalLP& lp, const Vector& x, double mu) {
  const Vector s = lp.b - lp.A * x;
  if ((s.array() <= 0.0).any() || (x.array() <= 0.0).any()) {
    return -std::numeric_limits<double>::infinity();
  }
  return lp.c.dot(x) + mu * (s.array().log().sum() + x.array().log().sum());
}

namespace {

Vector barrier_gradient(const CanonicalLP& lp, const Vector& x, const Vector& s, double mu) {
  const Vector inv_s = s.cwiseInverse();
  return lp.c - mu * (lp.A.transpose() * inv_s) + mu * x.cwiseInverse();
}

}  // namespace

Vector newton_direction(const CanonicalLP& lp, const Vector& x, double mu) {
  if (x.size() != lp.num_cols()) throw DimensionError("newton_direction: x has wrong size");
  const Vector s = lp.b - lp.A * x;
  if ((s.array() <= 0.0).any() || (x.array() <= 0.0).any()) {
    throw SolverError("newton_direction: point is not strictly feasible");
  }
  const Vector g = barrier_gradient(lp, x, s, mu);
  if (g.isZero(0.0)) return Vector::Zero(x.size());

  // -H = mu (A' S^-2 A + X^-2). In variables scaled by X the system is
  // mu (B'B + I) y = X g with B = S^-1 A X, i.e. the least-squares problem
  // min |B y|^2 + |y - X g / mu|^2, solved by QR on [B; I] to avoid squaring
  // the condition number near the boundary.
  const Eigen::Index m = lp.A.rows();
  const Eigen::Index n = lp.A.cols();
  Matrix stacked = Matrix::Zero(m + n, n);
  stacked.topRows(m) = Matrix(s.cwiseInverse().asDiagonal() * lp.A * x.asDiagonal());
  stacked.bottomRows(n).setIdentity();
  Vector rhs = Vector::Zero(m + n);
  rhs.tail(n) = x.cwiseProduct(g) / mu;
  Eigen::HouseholderQR<Matrix> qr(stacked);
  const Vector y = qr.solve(rhs);
  if (!y.allFinite()) {
    std::ostringstream msg;
    msg << "newton_direction: ill-conditioned Newton system (max |B| entry "
        << stacked.topRows(m).cwiseAbs().maxCoeff() << ")";
    throw SolverError(msg.str());
  }
  Vector dx = x.cwiseProduct(y);
  if (!dx.allFinite()) throw SolverError("newton_direction: non-finite direction");
  return dx;
}

double line_search(const CanonicalLP& lp, const Vector& x, const Vector& dx, double mu,
                   double boundary_fraction) {
  if (dx.isZero(0.0)) return 1.0;
  const Vector s = lp.b - lp.A * x;
  const Vector adx = lp.A * dx;
  double alpha_max = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    if (adx[j] > 0.0) alpha_max = std::min(alpha_max, s[j] / adx[j]);
  }
  for (Eigen::Index p = 0; p < x.size(); ++p) {
    if (dx[p] < 0.0) alpha_max = std::min(alpha_max, x[p] / -dx[p]);
  }
  double alpha = std::min(1.0, boundary_fraction * alpha_max);

  // Outside the quadratic-convergence region (Newton decrement^2 / mu > 1)
  // a full step tends to land next to the boundary; take the maximizer of
  // the concave barrier along the ray instead.
  const Vector g = barrier_gradient(lp, x, s, mu);
  if (g.dot(dx) / mu > 1.0) {
    const double cdx = lp.c.dot(dx);
    auto slope = [&](double a) {
      double d = cdx;
      for (Eigen::Index j = 0; j < s.size(); ++j) d -= mu * adx[j] / (s[j] - a * adx[j]);
      for (Eigen::Index p = 0; p < x.size(); ++p) d += mu * dx[p] / (x[p] + a * dx[p]);
      return d;
    };
    if (slope(alpha) < 0.0) {
      double lo = 0.0;
      double hi = alpha;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (slope(mid) > 0.0 ? lo : hi) = mid;
      }
      alpha = lo > 0.0 ? lo : hi;
    }
  }

  // In the quadratic region the predicted gain (about mu * decrement^2 / 2)
  // can fall below the resolution of the barrier value itself; a failed
  // comparison there is roundoff, and the fraction-to-boundary step is kept.
  const bool quadratic = g.dot(dx) / mu <= 1e-6;
  const double phi0 = barrier_objective(lp, x, mu);
  const double full = alpha;
  for (;;) {
    const Vector next = x + alpha * dx;
    if (barrier_objective(lp, next, mu) >= phi0) return alpha;
    if (quadratic) return full;
    alpha *= 0.5;
    if (alpha < 1e-14) {
      throw SolverError("line_search: step size underflow (stalled progress)");
    }
  }
}

namespace {

// One damped Newton step; returns false when the point is already centered
// to within roundoff and no step was taken.
bool newton_step(const CanonicalLP& lp, Vector& x, double mu, double boundary_fraction) {
  const Vector dx = newton_direction(lp, x, mu);
  const Vector s = lp.b - lp.A * x;
  const double decrement = barrier_gradient(lp, x, s, mu).dot(dx);
  if (decrement / mu <= 1e-14) return false;
  const double alpha = line_search(lp, x, dx, mu, boundary_fraction);
  x += alpha * dx;
  return true;
}

}  // namespace

IPMTrajectory solve(const CanonicalLP& lp_in, const IPMConfig& config) {
  config.validate();
  if (lp_in.num_cols() == 0) throw ValidationError("IPM: LP has no columns");
  if ((lp_in.b.array() <= 0.0).any()) throw ValidationError("IPM: right-hand side must be positive");
  if ((lp_in.c.array() < 0.0).any()) throw ValidationError("IPM: objective must be nonnegative");
  const CanonicalLP lp = with_scaled_objective(lp_in);

  IPMTrajectory traj;
  Vector x = initial_point(lp);
  double mu = config.mu0;
  double last_mu = mu;
  while (mu > config.epsilon) {
    for (int t = 0; t < config.max_newton_per_mu; ++t) {
      if (!newton_step(lp, x, mu, config.boundary_fraction)) break;
      ++traj.newton_steps;
    }
    traj.iterates.push_back({x, mu, lp_in.c.dot(x)});
    last_mu = mu;
    mu *= config.tau;
  }
  for (int t = 0; t < config.final_centering_steps; ++t) {
    if (!newton_step(lp, x, last_mu, config.boundary_fraction)) break;
    ++traj.newton_steps;
  }
  traj.iterates.back().x = x;
  traj.iterates.back().objective = lp_in.c.dot(x);
  traj.final_x = x;
  traj.final_mu = last_mu;
  const KKTReport report = certify(lp, x, last_mu);
  traj.kkt_residual = report.max_residual();
  if (!(traj.kkt_residual <= config.certificate_tolerance)) {
    std::ostringstream msg;
    msg << "IPM certificate failed: primal " << report.primal_infeasibility << ", dual "
        << report.dual_infeasibility << ", gap " << report.duality_gap;
    throw SolverError(msg.str());
  }
  return traj;
}

KKTReport certify(const CanonicalLP& lp_in, const Vector& x, double mu) {
  if (x.size() != lp_in.num_cols()) throw DimensionError("certify: x has wrong size");
  const CanonicalLP lp = with_scaled_objective(lp_in);
  KKTReport r;
  const Vector s = lp.b - lp.A * x;
  Vector lambda = Vector::Zero(s.size());
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    r.primal_infeasibility = std::max(r.primal_infeasibility, -s[j] / lp.b[j]);
    if (s[j] > 0.0) lambda[j] = mu / s[j];
  }
  for (Eigen::Index p = 0; p < x.size(); ++p) {
    r.primal_infeasibility = std::max(r.primal_infeasibility, -x[p]);
  }
  const Vector reduced = lp.A.transpose() * lambda - lp.c;
  const double cmax = std::max(lp.c.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  r.dual_infeasibility = std::max(0.0, (-reduced).maxCoeff()) / cmax;
  const double primal = lp.c.dot(x);
  r.duality_gap = std::abs(lp.b.dot(lambda) - primal) /
                  std::max(std::abs(primal), std::numeric_limits<double>::min());
  return r;
}

nlohmann::json to_json(const IPMTrajectory& trajectory) {
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json iterates = nlohmann::json::array();
  for (const Iterate& it : trajectory.iterates) {
    iterates.push_back({{"x", vec(it.x)}, {"mu", it.mu}, {"objective", it.objective}});
  }
  return {{"iterates", std::move(iterates)},
          {"final_x", vec(trajectory.final_x)},
          {"final_mu", trajectory.final_mu},
          {"kkt_residual", trajectory.kkt_residual},
          {"newton_steps", trajectory.newton_steps}};
}

IPMTrajectory trajectory_from_json(const nlohmann::json& j) {
  auto vec = [](const nlohmann::json& a) {
    const auto v = a.get<std::vector<double>>();
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  IPMTrajectory t;
  for (const auto& it : j.at("iterates")) {
    t.iterates.push_back({vec(it.at("x")), it.at("mu").get<double>(), it.at("objective").get<double>()});
  }
  if (t.iterates.empty()) throw ValidationError("trajectory has no iterates");
  t.final_x = vec(j.at("final_x"));
  t.final_mu = j.value("final_mu", t.iterates.back().mu);
  t.kkt_residual = j.at("kkt_residual").get<double>();
  t.newton_steps = j.value("newton_steps", 0);
  return t;
}

}  // namespace teimit
