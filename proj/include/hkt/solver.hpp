#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hkt/cones.hpp"
#include "hkt/fields.hpp"

// Damped Newton solver for f(lambda(g_phi)) = h + b on the discrete torus.
//
// The pair (phi, b) is the unknown: phi is gauged to mean zero and the
// constant b absorbs the solvability defect of h. Each Newton step solves
// the linearized equation L(u) - db = -residual with a restarted GMRES
// iteration preconditioned by the exact spectral inverse of a constant
// coefficient Laplacian on mean-zero fields, then backtracks until the sup
// residual decreases while the admissibility margin stays above a tenth of
// its current value.

namespace hkt {

struct LinearSolverOptions {
  int max_iter = 400;   ///< total Krylov iterations across restarts
  double tol = 1e-10;   ///< relative preconditioned residual target
  int restart = 40;     ///< GMRES restart length
};

struct SolverConfig {
  ConeFunction family;
  HermField chi;
  ScalarField h;
  double tol_residual = 1e-9;
  int max_newton = 50;
  double shrink = 0.5;                        ///< backtracking factor
  double min_step = 0x1p-20;                  ///< line search floor
  int continuity_steps = 1;                   ///< 1 = direct solve only
  LinearSolverOptions linear;
  std::uint64_t seed = 0;                     ///< recorded for provenance
  std::optional<ScalarField> initial_phi;     ///< defaults to zero
};

enum class SolveStatus {
  Converged,
  NoAdmissibleStart,
  LineSearchFailed,
  LinearSolveStalled,
  MaxIterationsExceeded,
};

std::string to_string(SolveStatus status);

struct SolveReport {
  ScalarField phi;  ///< mean-zero
  double b = 0;
  SolveStatus status = SolveStatus::MaxIterationsExceeded;
  int newton_iters = 0;
  long linear_iters = 0;
  std::vector<double> residual_history;     ///< sup norm at each accepted state
  std::vector<double> cone_margin_history;  ///< min margin, aligned with the above
  double wall_time_s = 0;
};

/// Pointwise f(lambda(g_phi)) - h - b. Throws NotAdmissible (witness point)
/// when the assembled spectrum leaves the cone anywhere.
ScalarField residual_field(const ConeFunction& f, const HermField& chi,
                           const ScalarField& phi, const ScalarField& h, double b);

/// Forward operator f(lambda(g_phi)) pointwise; the natural way to
/// manufacture exactly solvable right-hand sides.
ScalarField apply_operator(const ConeFunction& f, const HermField& chi,
                           const ScalarField& phi);

/// Per-point linearization coefficient matrices of f at the assembled state.
HermField linearized_field(const ConeFunction& f, const HermField& g);

/// Apply the linearized operator: (1/2) Re tr(F(p) * Hc(u)(p)) at each point.
/// Coefficients must be pointwise hyperhermitian for this contraction to be
/// the derivative of the nonlinear operator.
ScalarField apply_linearized(const HermField& coeff, const ScalarField& u);

struct KrylovResult {
  ScalarField solution;                  ///< mean-zero
  std::vector<double> residual_history;  ///< preconditioned norms, monotone
  int iterations = 0;
  bool converged = false;
};

/// Solve the mean-zero part of the linearized system, L u = rhs projected
/// onto fluctuations, by preconditioned restarted GMRES.
KrylovResult solve_linearized(const HermField& coeff, const ScalarField& rhs,
                              const LinearSolverOptions& opts);

struct NewtonState {
  ScalarField phi;
  double b = 0;
};

struct DampingOptions {
  double shrink = 0.5;
  double min_step = 0x1p-20;
  double margin_keep = 0.1;  ///< trial margin must exceed this fraction of current
};

struct StepInfo {
  double step_size = 0;          ///< accepted backtracking factor
  int linear_iters = 0;
  double sup_residual_before = 0;
  double sup_residual_after = 0;
  double margin_after = 0;
  double update_sup = 0;         ///< sup |s * u|
};

/// One damped Newton step. Throws LineSearchFailed when backtracking hits
/// the floor and LinearSolveStalled when GMRES cannot reduce the linear
/// residual to a usable level. At a converged state returns the input
/// unchanged with step_size 1. `forcing` overrides the relative linear
/// tolerance when non-negative.
NewtonState newton_step(const ConeFunction& f, const HermField& chi, const ScalarField& h,
                        const NewtonState& state, const LinearSolverOptions& lin,
                        const DampingOptions& damping = {}, StepInfo* info = nullptr,
                        double forcing = -1.0);

/// Full solve: direct damped Newton, then a continuity path in h when the
/// direct attempt fails and continuity_steps > 1.
SolveReport solve(const SolverConfig& config);

}  // namespace hkt
