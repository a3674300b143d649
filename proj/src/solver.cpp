#include "hkt/solver.hpp"

#include <chrono>
#include <cmath>

namespace hkt {

namespace {

// Admissibility, residual and assembled state of a (phi, b) pair, with the
// spectrum computed once.
struct StateEval {
  HermField g;
  EigenvalueField ev;
  double margin = 0;
  long margin_argmin = -1;
  bool admissible = false;
  ScalarField residual;
  double sup = 0;
};

StateEval evaluate_state(const ConeFunction& f, const HermField& chi, const ScalarField& phi,
                         const ScalarField& h, double b) {
  StateEval st{assemble_g_phi(chi, phi), {phi.grid, {}, 0}, 0, -1, false,
               ScalarField::zero(phi.grid), 0};
  st.ev = eigenvalue_field(st.g);
  const long points = phi.grid.points();
  Eigen::VectorXd lam(st.ev.lambda.cols());
  st.margin = std::numeric_limits<double>::infinity();
  for (long p = 0; p < points; ++p) {
    lam = st.ev.lambda.row(p);
    const double m = f.margin(lam);
    if (m < st.margin) {
      st.margin = m;
      st.margin_argmin = p;
    }
  }
  if (!(st.margin > 0)) return st;
  st.admissible = true;
  for (long p = 0; p < points; ++p) {
    lam = st.ev.lambda.row(p);
    st.residual.values[p] = f.eval(lam) - h.values[p] - b;
  }
  st.sup = st.residual.sup_abs();
  return st;
}

// Spectral inverse of alpha0 * laplacian on mean-zero fields; modes the
// derivative operators annihilate are projected out.
struct LaplaceInverse {
  TorusGrid grid;
  Eigen::ArrayXd inv_mult;

  LaplaceInverse(const TorusGrid& g, double alpha0) : grid(g), inv_mult(g.points()) {
    std::vector<Eigen::ArrayXd> omega(g.axes());
    for (int ax = 0; ax < g.axes(); ++ax) {
      omega[ax].resize(g.dims()[ax]);
      for (int k = 0; k < g.dims()[ax]; ++k) omega[ax][k] = signed_omega(g, ax, k);
    }
    std::vector<int> c(g.axes(), 0);
    for (long flat = 0; flat < g.points(); ++flat) {
      double w2 = 0;
      for (int ax = 0; ax < g.axes(); ++ax) w2 += omega[ax][c[ax]] * omega[ax][c[ax]];
      inv_mult[flat] = w2 > 0 ? 1.0 / (alpha0 * -0.5 * w2) : 0.0;
      for (int ax = g.axes() - 1; ax >= 0; --ax) {
        if (++c[ax] < g.dims()[ax]) break;
        c[ax] = 0;
      }
    }
  }

  Eigen::ArrayXd apply(const Eigen::ArrayXd& values) const {
    Eigen::ArrayXcd coeffs = dft_forward(grid, values);
    coeffs *= inv_mult;
    return dft_inverse_real(grid, coeffs);
  }
};

double mean_of(const Eigen::ArrayXd& v) { return v.mean(); }

}  // namespace

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::NoAdmissibleStart: return "no_admissible_start";
    case SolveStatus::LineSearchFailed: return "line_search_failed";
    case SolveStatus::LinearSolveStalled: return "linear_solve_stalled";
    case SolveStatus::MaxIterationsExceeded: return "max_iterations_exceeded";
  }
  return "unknown";
}

ScalarField residual_field(const ConeFunction& f, const HermField& chi,
                           const ScalarField& phi, const ScalarField& h, double b) {
  if (!(phi.grid == h.grid)) throw ShapeError("residual_field: phi and h grids differ");
  StateEval st = evaluate_state(f, chi, phi, h, b);
  if (!st.admissible)
    throw NotAdmissible("residual_field: spectrum leaves the cone", st.margin_argmin);
  return std::move(st.residual);
}

ScalarField apply_operator(const ConeFunction& f, const HermField& chi,
                           const ScalarField& phi) {
  return residual_field(f, chi, phi, ScalarField::zero(phi.grid), 0.0);
}

HermField linearized_field(const ConeFunction& f, const HermField& g) {
  const int side = g.side();
  HermField coeff = HermField::zero(g.grid);
  if (side == 2) {
    // Hyperhermitian 2x2 matrices are scalar, so the coefficient matrix is
    // f'(lambda) * Id without any eigensolve.
    Eigen::VectorXd lam(1);
    for (long p = 0; p < g.grid.points(); ++p) {
      const auto m = g.matrix(p);
      lam[0] = 0.5 * (m(0, 0).real() + m(1, 1).real());
      const double fprime = f.grad(lam)[0];
      coeff.data(0, p) = fprime;
      coeff.data(3, p) = fprime;
    }
    return coeff;
  }
  for (long p = 0; p < g.grid.points(); ++p) {
    const LinearizedCoeffs lc = linearized_coeffs(f, g.matrix(p));
    coeff.matrix(p) = lc.f_matrix;
  }
  return coeff;
}

ScalarField apply_linearized(const HermField& coeff, const ScalarField& u) {
  if (!(coeff.grid == u.grid)) throw ShapeError("apply_linearized: grids differ");
  const long points = u.grid.points();
  if (coeff.side() == 2) {
    // F = c * Id pointwise, so the contraction collapses to c/8 times the
    // full trace term, which is the scalar laplacian up to the fixed factor.
    ScalarField out = laplacian(u);
    for (long p = 0; p < points; ++p)
      out.values[p] *= 0.125 * (coeff.data(0, p).real() + coeff.data(3, p).real());
    return out;
  }
  const HermField hc = complex_hessian(u);
  ScalarField out = ScalarField::zero(u.grid);
  for (long p = 0; p < points; ++p)
    out.values[p] = 0.5 * coeff.data.col(p).dot(hc.data.col(p)).real();
  return out;
}

KrylovResult solve_linearized(const HermField& coeff, const ScalarField& rhs,
                              const LinearSolverOptions& opts) {
  const TorusGrid& grid = rhs.grid;
  const long points = grid.points();
  const int n = grid.n();

  double mean_trace = 0;
  for (long p = 0; p < points; ++p) {
    for (int d = 0; d < coeff.side(); ++d)
      mean_trace += coeff.data(d * coeff.side() + d, p).real();
  }
  mean_trace /= static_cast<double>(points);
  const double alpha0 = mean_trace > 1e-14 ? mean_trace / (8.0 * n) : 1.0;
  const LaplaceInverse minv(grid, alpha0);

  auto op = [&](const Eigen::ArrayXd& v) {
    return minv.apply(apply_linearized(coeff, {grid, v}).values);
  };

  KrylovResult res{ScalarField::zero(grid), {}, 0, false};
  const Eigen::ArrayXd b0 = minv.apply(rhs.values);
  const double beta0 = std::sqrt((b0 * b0).sum());
  if (beta0 == 0.0) {
    res.converged = true;
    return res;
  }

  Eigen::ArrayXd x = Eigen::ArrayXd::Zero(points);
  const int m = std::max(1, opts.restart);

  while (res.iterations < opts.max_iter) {
    Eigen::ArrayXd r = b0 - op(x);
    double beta = std::sqrt((r * r).sum());
    if (beta / beta0 <= opts.tol) {
      res.converged = true;
      break;
    }

    std::vector<Eigen::ArrayXd> basis;
    basis.push_back(r / beta);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(m + 1, m);
    Eigen::VectorXd cs(m), sn(m), g = Eigen::VectorXd::Zero(m + 1);
    g[0] = beta;

    int j = 0;
    bool cycle_done = false;
    for (; j < m && res.iterations < opts.max_iter && !cycle_done; ++j) {
      Eigen::ArrayXd w = op(basis[j]);
      for (int i = 0; i <= j; ++i) {
        hess(i, j) = (basis[i] * w).sum();
        w -= hess(i, j) * basis[i];
      }
      hess(j + 1, j) = std::sqrt((w * w).sum());
      const bool breakdown = hess(j + 1, j) <= 1e-14 * beta;
      if (!breakdown) basis.push_back(w / hess(j + 1, j));

      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * hess(i, j) + sn[i] * hess(i + 1, j);
        hess(i + 1, j) = -sn[i] * hess(i, j) + cs[i] * hess(i + 1, j);
        hess(i, j) = t;
      }
      const double denom = std::hypot(hess(j, j), hess(j + 1, j));
      cs[j] = denom == 0 ? 1.0 : hess(j, j) / denom;
      sn[j] = denom == 0 ? 0.0 : hess(j + 1, j) / denom;
      hess(j, j) = denom;
      hess(j + 1, j) = 0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];

      ++res.iterations;
      res.residual_history.push_back(std::abs(g[j + 1]) / beta0);
      if (std::abs(g[j + 1]) / beta0 <= opts.tol || breakdown) cycle_done = true;
    }

    // Back substitution over the j columns accumulated in this cycle.
    Eigen::VectorXd y = Eigen::VectorXd::Zero(j);
    for (int i = j - 1; i >= 0; --i) {
      double s = g[i];
      for (int l = i + 1; l < j; ++l) s -= hess(i, l) * y[l];
      y[i] = s / hess(i, i);
    }
    for (int i = 0; i < j; ++i) x += y[i] * basis[i];

    if (cycle_done && !res.residual_history.empty() &&
        res.residual_history.back() <= opts.tol) {
      res.converged = true;
      break;
    }
    if (j == 0) break;
  }

  x -= mean_of(x);
  res.solution = {grid, std::move(x)};
  return res;
}

NewtonState newton_step(const ConeFunction& f, const HermField& chi, const ScalarField& h,
                        const NewtonState& state, const LinearSolverOptions& lin,
                        const DampingOptions& damping, StepInfo* info, double forcing) {
  StateEval cur = evaluate_state(f, chi, state.phi, h, state.b);
  if (!cur.admissible)
    throw NotAdmissible("newton_step: state is not admissible", cur.margin_argmin);

  StepInfo local;
  local.sup_residual_before = cur.sup;

  LinearSolverOptions lopts = lin;
  if (forcing >= 0) lopts.tol = forcing;

  ScalarField rhs{state.phi.grid, -cur.residual.values};
  const HermField coeff = linearized_field(f, cur.g);
  KrylovResult kr = solve_linearized(coeff, rhs, lopts);
  local.linear_iters = kr.iterations;
  if (!kr.converged && !kr.residual_history.empty() && kr.residual_history.back() > 0.5)
    throw LinearSolveStalled("newton_step: linear residual stalled at " +
                             std::to_string(kr.residual_history.back()));

  const ScalarField& u = kr.solution;
  const double db = mean_of(cur.residual.values) + mean_of(apply_linearized(coeff, u).values);

  const double u_sup = u.sup_abs();
  if (u_sup <= 1e-14 * (1.0 + state.phi.sup_abs()) && std::abs(db) <= 1e-14 * (1.0 + std::abs(state.b))) {
    local.step_size = 1.0;
    local.sup_residual_after = cur.sup;
    local.margin_after = cur.margin;
    if (info) *info = local;
    return state;
  }

  for (double s = 1.0; s >= damping.min_step; s *= damping.shrink) {
    ScalarField trial{state.phi.grid, state.phi.values + s * u.values};
    const double trial_b = state.b + s * db;
    const StateEval ev = evaluate_state(f, chi, trial, h, trial_b);
    if (ev.admissible && ev.margin > damping.margin_keep * cur.margin && ev.sup < cur.sup) {
      local.step_size = s;
      local.sup_residual_after = ev.sup;
      local.margin_after = ev.margin;
      local.update_sup = s * u_sup;
      if (info) *info = local;
      return {std::move(trial), trial_b};
    }
  }
  throw LineSearchFailed("newton_step: no acceptable step above the floor");
}

namespace {

// Damped Newton iteration toward a fixed right-hand side. Appends accepted
// states to the report histories and mutates (phi, b) in place.
SolveStatus newton_loop(const ConeFunction& f, const HermField& chi, const ScalarField& h,
                        const SolverConfig& config, ScalarField& phi, double& b,
                        SolveReport& report) {
  StateEval cur = evaluate_state(f, chi, phi, h, b);
  if (!cur.admissible) return SolveStatus::NoAdmissibleStart;

  // Fold the mean defect into b so the fluctuation solve starts balanced.
  const double shift = mean_of(cur.residual.values);
  b += shift;
  cur.residual.values -= shift;
  cur.sup = cur.residual.sup_abs();

  report.residual_history.push_back(cur.sup);
  report.cone_margin_history.push_back(cur.margin);

  const DampingOptions damping{config.shrink, config.min_step, 0.1};
  for (int iter = 0; iter < config.max_newton; ++iter) {
    if (cur.sup <= config.tol_residual) return SolveStatus::Converged;

    // Inexact first. If the crude direction cannot make progress, pay for a
    // full-accuracy linear solve before giving up: near the cone boundary
    // the coefficients spike and the loose tolerance, adequate in the mean,
    // delivers directions that are useless at the residual's argmax.
    const double loose = std::max(config.linear.tol, std::min(0.1, 0.5 * cur.sup));
    const int tries = loose > config.linear.tol ? 2 : 1;
    StepInfo step;
    NewtonState next{phi, b};
    bool accepted = false;
    SolveStatus failure = SolveStatus::LineSearchFailed;
    for (int attempt = 0; attempt < tries; ++attempt) {
      const double forcing = attempt == 0 ? loose : config.linear.tol;
      try {
        next = newton_step(f, chi, h, {phi, b}, config.linear, damping, &step, forcing);
      } catch (const LineSearchFailed&) {
        failure = SolveStatus::LineSearchFailed;
        continue;
      } catch (const LinearSolveStalled&) {
        failure = SolveStatus::LinearSolveStalled;
        continue;
      }
      report.linear_iters += step.linear_iters;
      if (step.update_sup == 0 && step.sup_residual_after >= cur.sup &&
          cur.sup > config.tol_residual) {
        failure = SolveStatus::LineSearchFailed;  // linear model exhausted
        continue;
      }
      accepted = true;
      break;
    }
    if (!accepted) return failure;
    ++report.newton_iters;

    phi = std::move(next.phi);
    b = next.b;
    cur = evaluate_state(f, chi, phi, h, b);
    report.residual_history.push_back(cur.sup);
    report.cone_margin_history.push_back(cur.margin);
  }
  return cur.sup <= config.tol_residual ? SolveStatus::Converged
                                        : SolveStatus::MaxIterationsExceeded;
}

}  // namespace

SolveReport solve(const SolverConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!(config.tol_residual > 0)) throw ConfigError("solve: tol_residual must be positive");
  if (config.continuity_steps < 1) throw ConfigError("solve: continuity_steps must be >= 1");
  if (config.max_newton < 1) throw ConfigError("solve: max_newton must be >= 1");
  if (!(config.chi.grid == config.h.grid)) throw ShapeError("solve: chi and h grids differ");
  if (config.family.n() != config.chi.grid.n())
    throw ShapeError("solve: equation family dimension does not match the grid");

  ScalarField phi0 = config.initial_phi ? *config.initial_phi
                                        : ScalarField::zero(config.h.grid);
  if (!(phi0.grid == config.h.grid)) throw ShapeError("solve: initial phi grid differs");
  phi0.values -= phi0.mean();

  SolveReport report{phi0, 0.0, SolveStatus::MaxIterationsExceeded, 0, 0, {}, {}, 0.0};
  auto finish = [&](SolveStatus status, ScalarField phi, double b) {
    report.status = status;
    report.phi = std::move(phi);
    report.b = b;
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
  };

  ScalarField phi = phi0;
  double b = 0;
  SolveStatus status = newton_loop(config.family, config.chi, config.h, config, phi, b, report);
  if (status == SolveStatus::Converged || config.continuity_steps <= 1 ||
      status == SolveStatus::NoAdmissibleStart)
    return finish(status, std::move(phi), b);

  // Continuity path: walk h from the exactly solvable right-hand side
  // f(lambda(chi)) to the target, restarting from the initial state.
  EigenvalueField chi_ev = eigenvalue_field(config.chi);
  Eigen::VectorXd lam(chi_ev.lambda.cols());
  ScalarField f_chi = ScalarField::zero(config.h.grid);
  for (long p = 0; p < config.h.grid.points(); ++p) {
    lam = chi_ev.lambda.row(p);
    if (!(config.family.margin(lam) > 0)) return finish(status, std::move(phi), b);
    f_chi.values[p] = config.family.eval(lam);
  }

  phi = phi0;
  b = 0;
  for (int k = 1; k <= config.continuity_steps; ++k) {
    const double t = static_cast<double>(k) / config.continuity_steps;
    ScalarField ht{config.h.grid, (1.0 - t) * f_chi.values + t * config.h.values};
    status = newton_loop(config.family, config.chi, ht, config, phi, b, report);
    if (status != SolveStatus::Converged) return finish(status, std::move(phi), b);
  }
  return finish(SolveStatus::Converged, std::move(phi), b);
}

}  // namespace hkt
