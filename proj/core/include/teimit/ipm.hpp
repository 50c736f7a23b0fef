#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "teimit/teprog.hpp"

namespace teimit {

/// Primal log-barrier method settings. The barrier is
///   c'x + mu * (sum log(b - Ax) + sum log x)
/// maximized for a geometric sequence mu0, tau*mu0, ... while mu > epsilon.
struct IPMConfig {
  double mu0 = 1.0;
  double tau = 0.2;
  double epsilon = 1e-8;
  int max_newton_per_mu = 3;
  double boundary_fraction = 0.99;
  /// Extra Newton steps allowed at the last barrier value to recenter
  /// before the certificate is computed.
  int final_centering_steps = 50;
  double certificate_tolerance = 1e-6;

  void validate() const;
};

struct Iterate {
  Vector x;
  double mu = 0.0;
  double objective = 0.0;
};

struct IPMTrajectory {
  std::vector<Iterate> iterates;  // one per barrier value
  Vector final_x;
  double final_mu = 0.0;
  double kkt_residual = 0.0;
  int newton_steps = 0;

  int iterations() const { return static_cast<int>(iterates.size()); }
};

struct KKTReport {
  double primal_infeasibility = 0.0;  // max relative row/bound violation
  double dual_infeasibility = 0.0;    // max relu(c - A'lambda) / max|c|
  double duality_gap = 0.0;           // |b'lambda - c'x| / |c'x|

  double max_residual() const;
};

/// Objective normalizer used by `solve` and `certify`: an upper bound on
/// c'x divided by (rows + columns), so the first barrier subproblem has a
/// duality gap comparable to the objective. `mu` values are in these units.
double objective_scale(const CanonicalLP& lp);
CanonicalLP with_scaled_objective(const CanonicalLP& lp);

/// delta * 1 with delta = 0.5 * min_j b_j / rowsum(A_j).
Vector initial_point(const CanonicalLP& lp);

/// Barrier value; -infinity outside the strict interior.
double barrier_objective(const CanonicalLP& lp, const Vector& x, double mu);

/// Newton step for the barrier at a strictly feasible x.
Vector newton_direction(const CanonicalLP& lp, const Vector& x, double mu);

/// Starts at min(1, boundary_fraction * alpha_max). When the Newton
/// decrement over mu exceeds one, moves to the barrier maximizer along dx
/// (bisection). Then halves until the barrier does not decrease, except in
/// the quadratic region (decrement^2 / mu <= 1e-6), where the first step is
/// kept.
/// Throws SolverError when the step underflows 1e-14.
double line_search(const CanonicalLP& lp, const Vector& x, const Vector& dx, double mu,
                   double boundary_fraction);

/// Runs the barrier method, recording the last iterate for each mu.
/// Throws SolverError on stall or when the final certificate exceeds the
/// configured tolerance.
IPMTrajectory solve(const CanonicalLP& lp, const IPMConfig& config = {});

/// Optimality certificate from barrier multipliers lambda_j = mu / s_j.
KKTReport certify(const CanonicalLP& lp, const Vector& x, double mu);

nlohmann::json to_json(const IPMTrajectory& trajectory);
IPMTrajectory trajectory_from_json(const nlohmann::json& j);

}  // namespace teimit
