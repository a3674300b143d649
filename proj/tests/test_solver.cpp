#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "hkt/cones.hpp"
#include "hkt/fields.hpp"
#include "hkt/solver.hpp"

using namespace hkt;
using Eigen::VectorXd;

namespace {

constexpr double kTau = 2.0 * M_PI;

ScalarField cos_x1(const TorusGrid& grid, double amplitude) {
  return ScalarField::sample(grid, [amplitude](const VectorXd& x) {
    return amplitude * std::cos(kTau * x[0]);
  });
}

ScalarField mean_zero_smooth(const TorusGrid& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, kTau);
  ScalarField f = ScalarField::sample(grid, [&](const VectorXd& x) {
    return std::cos(kTau * x[0] + phase(rng)) * 0.3 +
           std::sin(kTau * (x[1] + x[3]) + phase(rng)) * 0.2 +
           std::cos(kTau * x[2] + phase(rng)) * 0.1;
  });
  f.values -= f.values.mean();
  return f;
}

}  // namespace

TEST_CASE("residual vanishes at exact states and absorbs constants") {
  const TorusGrid g(1, {8, 8, 8, 8});
  const HermField chi = HermField::identity(g);
  const ConeFunction f = ConeFunction::qma(1);
  const ScalarField zero = ScalarField::zero(g);

  CHECK(residual_field(f, chi, zero, zero, 0.0).sup_abs() == 0.0);
  CHECK(residual_field(f, chi, zero, ScalarField::constant(g, 0.1), -0.1).sup_abs() <=
        1e-16);

  const ScalarField phi_star = cos_x1(g, 0.05);
  const ScalarField h = apply_operator(f, chi, phi_star);
  CHECK(residual_field(f, chi, phi_star, h, 0.0).sup_abs() <= 1e-12);

  const ScalarField wild = cos_x1(g, 0.5);  // spectrum dips below zero
  CHECK_THROWS_AS(residual_field(f, chi, wild, h, 0.0), NotAdmissible);
}

TEST_CASE("linearization is the derivative of the forward operator") {
  const double step = 1e-6;
  const double amp = 0.04;

  // quaternionic dimension one (closed-form coefficient path)
  {
    const TorusGrid g(1, {8, 8, 8, 8});
    const HermField chi = HermField::identity(g);
    const ConeFunction f = ConeFunction::qma(1);
    const ScalarField phi = cos_x1(g, amp);
    const ScalarField u = mean_zero_smooth(g, 301);

    const HermField coeff = linearized_field(f, assemble_g_phi(chi, phi));
    const ScalarField lin = apply_linearized(coeff, u);
    const ScalarField up = apply_operator(f, chi, {g, phi.values + step * u.values});
    const ScalarField dn = apply_operator(f, chi, {g, phi.values - step * u.values});
    const Eigen::ArrayXd fd = (up.values - dn.values) / (2 * step);
    CHECK((lin.values - fd).abs().maxCoeff() <= 1e-6);
  }

  // quaternionic dimension two (projector-sum coefficient path)
  {
    const TorusGrid g(2, {8, 1, 8, 1, 1, 1, 1, 1});
    const HermField chi = HermField::identity(g);
    const ConeFunction f = ConeFunction::qma(2);
    const ScalarField phi = ScalarField::sample(g, [&](const VectorXd& x) {
      return amp * (std::cos(kTau * x[0]) + 0.5 * std::sin(kTau * x[2]));
    });
    ScalarField u = ScalarField::sample(g, [&](const VectorXd& x) {
      return std::cos(kTau * x[0]) * std::sin(kTau * x[2]);
    });
    u.values -= u.values.mean();

    const HermField coeff = linearized_field(f, assemble_g_phi(chi, phi));
    const ScalarField lin = apply_linearized(coeff, u);
    const ScalarField up = apply_operator(f, chi, {g, phi.values + step * u.values});
    const ScalarField dn = apply_operator(f, chi, {g, phi.values - step * u.values});
    const Eigen::ArrayXd fd = (up.values - dn.values) / (2 * step);
    CHECK((lin.values - fd).abs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("frozen-coefficient linearized operator is symmetric and definite") {
  const TorusGrid g(1, {8, 8, 8, 8});
  // constant hyperhermitian PSD coefficients: a strictly elliptic multiplier
  Eigen::MatrixXcd f0(2, 2);
  f0 << 1.5, Complex(0.2, 0.1), Complex(0.2, -0.1), 0.9;
  f0 = 0.5 * (f0 + j_twist(f0));
  const HermField coeff = HermField::constant(g, f0);

  const ScalarField u = mean_zero_smooth(g, 401);
  const ScalarField v = mean_zero_smooth(g, 402);
  const ScalarField lu = apply_linearized(coeff, u);
  const ScalarField lv = apply_linearized(coeff, v);

  const double uv = (lu.values * v.values).sum();
  const double vu = (lv.values * u.values).sum();
  CHECK(std::abs(uv - vu) <= 1e-8 * (1 + std::abs(uv)));
  // elliptic sign: the quadratic form is negative on nonzero fluctuations
  CHECK((lu.values * u.values).sum() < 0.0);
}

TEST_CASE("preconditioned linear solve converges with monotone residuals") {
  const TorusGrid g(1, {8, 8, 8, 8});
  const HermField chi = HermField::identity(g);
  const ConeFunction f = ConeFunction::qma(1);
  const HermField coeff = linearized_field(f, assemble_g_phi(chi, cos_x1(g, 0.05)));

  ScalarField rhs = mean_zero_smooth(g, 403);
  LinearSolverOptions opts;
  const KrylovResult res = solve_linearized(coeff, rhs, opts);
  CHECK(res.converged);
  CHECK(res.iterations <= opts.max_iter);
  for (size_t i = 1; i < res.residual_history.size(); ++i)
    CHECK(res.residual_history[i] <= res.residual_history[i - 1] + 1e-10);
  CHECK(std::abs(res.solution.mean()) <= 1e-13);

  // the solution solves the equation on the modes the spectral
  // preconditioner acts on: fluctuations strictly below Nyquist
  const ScalarField back = apply_linearized(coeff, res.solution);
  Eigen::ArrayXcd spec = dft_forward(g, back.values - rhs.values);
  for (long p = 0; p < g.points(); ++p) {
    const std::vector<int> k = g.coords(p);
    bool zero_mode = true;
    bool nyquist = false;
    for (size_t a = 0; a < k.size(); ++a) {
      if (k[a] != 0) zero_mode = false;
      if (g.dims()[a] > 1 && 2 * k[a] == g.dims()[a]) nyquist = true;
    }
    if (zero_mode || nyquist) spec[p] = 0.0;
  }
  const double sup = dft_inverse_real(g, spec).abs().maxCoeff();
  CHECK(sup <= 1e-6 * (1 + rhs.sup_abs()));
}

TEST_CASE("newton step is idle at the solution and contracts nearby") {
  const TorusGrid g(1, {8, 8, 8, 8});
  const HermField chi = HermField::identity(g);
  const ConeFunction f = ConeFunction::qma(1);

  // exactly solved trivial state: the step is a no-op at full length
  const ScalarField h0 = apply_operator(f, chi, ScalarField::zero(g));
  StepInfo info;
  const NewtonState idle =
      newton_step(f, chi, h0, {ScalarField::zero(g), 0.0}, {}, {}, &info);
  CHECK(info.step_size == 1.0);
  CHECK(info.update_sup <= 1e-14);
  CHECK(idle.phi.sup_abs() == 0.0);
  CHECK(idle.b == 0.0);

  // small manufactured problem: one step reduces the sup residual >= 10x
  const ScalarField phi_star = cos_x1(g, 0.02);
  const ScalarField h = apply_operator(f, chi, phi_star);
  StepInfo step;
  const NewtonState next = newton_step(f, chi, h, {ScalarField::zero(g), 0.0}, {}, {}, &step);
  CHECK(step.sup_residual_before >= 10.0 * step.sup_residual_after);
  CHECK(step.margin_after > 0.0);
  CHECK(next.phi.mean() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("newton step shifts b to absorb a constant added to the data") {
  const TorusGrid g(1, {8, 8, 8, 8});
  const HermField chi = HermField::identity(g);
  const ConeFunction f = ConeFunction::qma(1);
  const ScalarField phi_star = cos_x1(g, 0.05);
  const ScalarField h = apply_operator(f, chi, phi_star);

  SolverConfig cfg{f, chi, h};
  cfg.tol_residual = 1e-11;
  const SolveReport solved = solve(cfg);
  REQUIRE(solved.status == SolveStatus::Converged);

  const double c = 0.01;
  const ScalarField shifted{g, h.values + c};
  StepInfo info;
  const NewtonState next =
      newton_step(f, chi, shifted, {solved.phi, solved.b}, {}, {}, &info);
  CHECK(next.b == doctest::Approx(solved.b - c).epsilon(1e-10));
}

TEST_CASE("trivial data solves with zero iterations") {
  const TorusGrid g(1, {8, 8, 8, 8});
  const HermField chi = HermField::identity(g);
  const ConeFunction f = ConeFunction::qma(1);
  const ScalarField h = ScalarField::zero(g);  // f(lambda(Id)) = 0

  SolverConfig cfg{f, chi, h};
  const SolveReport rep = solve(cfg);
  CHECK(rep.status == SolveStatus::Converged);
  CHECK(rep.newton_iters == 0);
  CHECK(rep.phi.sup_abs() == 0.0);
  CHECK(rep.b == 0.0);
  CHECK(rep.residual_history.size() == 1);
  CHECK(rep.cone_margin_history.front() == doctest::Approx(1.0));
}

TEST_CASE("constant data is absorbed by the gauge constant") {
  const TorusGrid g(1, {8, 8, 8, 8});
  const HermField chi = HermField::identity(g);
  const ConeFunction f = ConeFunction::qma(1);

  SolverConfig cfg{f, chi, ScalarField::constant(g, 0.1)};
  const SolveReport rep = solve(cfg);
  CHECK(rep.status == SolveStatus::Converged);
  CHECK(rep.phi.sup_abs() <= 1e-13);
  CHECK(rep.b == doctest::Approx(-0.1).epsilon(1e-12));
}

TEST_CASE("manufactured solution is recovered on the sixteen-point grid") {
  const TorusGrid g(1, {16, 16, 16, 16});
  const HermField chi = HermField::identity(g);
  const ConeFunction f = ConeFunction::qma(1);
  const ScalarField phi_star = cos_x1(g, 0.05);
  const ScalarField h = apply_operator(f, chi, phi_star);

  SolverConfig cfg{f, chi, h};
  const SolveReport rep = solve(cfg);
  CHECK(rep.status == SolveStatus::Converged);
  CHECK(rep.newton_iters <= 12);
  CHECK(rep.residual_history.back() <= 1e-9);
  CHECK(std::abs(rep.b) <= 1e-9);
  CHECK((rep.phi.values - phi_star.values).abs().maxCoeff() <= 1e-6);
  for (double m : rep.cone_margin_history) CHECK(m > 0.0);
}

TEST_CASE("solutions reach the spectral floor on both grid resolutions") {
  const ConeFunction f = ConeFunction::qma(1);
  for (int d : {8, 16}) {
    const TorusGrid g(1, {d, d, d, d});
    const HermField chi = HermField::identity(g);
    const ScalarField phi_star = cos_x1(g, 0.05);
    const ScalarField h = apply_operator(f, chi, phi_star);

    SolverConfig cfg{f, chi, h};
    cfg.tol_residual = 1e-11;
    const SolveReport rep = solve(cfg);
    CHECK(rep.status == SolveStatus::Converged);
    CHECK((rep.phi.values - phi_star.values).abs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("adding a constant to the data shifts b and nothing else") {
  const TorusGrid g(1, {8, 8, 8, 8});
  const HermField chi = HermField::identity(g);
  const ConeFunction f = ConeFunction::qma(1);
  const ScalarField phi_star = cos_x1(g, 0.05);
  const ScalarField h = apply_operator(f, chi, phi_star);

  SolverConfig cfg{f, chi, h};
  const SolveReport a = solve(cfg);
  cfg.h.values += 0.1;
  const SolveReport b = solve(cfg);
  REQUIRE(a.status == SolveStatus::Converged);
  REQUIRE(b.status == SolveStatus::Converged);
  CHECK((a.phi.values - b.phi.values).abs().maxCoeff() <= 1e-9);
  CHECK(std::abs((a.b - 0.1) - b.b) <= 1e-9);
}

TEST_CASE("inadmissible starting guesses are reported") {
  const TorusGrid g(1, {8, 8, 8, 8});
  const HermField chi = HermField::identity(g);
  const ConeFunction f = ConeFunction::qma(1);
  const ScalarField h = ScalarField::zero(g);

  SolverConfig cfg{f, chi, h};
  cfg.initial_phi = cos_x1(g, 0.5);  // pushes an eigenvalue negative
  const SolveReport rep = solve(cfg);
  CHECK(rep.status == SolveStatus::NoAdmissibleStart);
  CHECK(to_string(rep.status) == "no_admissible_start");
}

TEST_CASE("continuity path converges on a steep admissible target") {
  const TorusGrid g(1, {8, 8, 8, 8});
  const HermField chi = HermField::identity(g);
  const ConeFunction f = ConeFunction::qma(1);
  const ScalarField phi_star = cos_x1(g, 0.18);  // margin well below one
  const ScalarField h = apply_operator(f, chi, phi_star);

  SolverConfig cfg{f, chi, h};
  cfg.continuity_steps = 4;
  const SolveReport rep = solve(cfg);
  CHECK(rep.status == SolveStatus::Converged);
  CHECK((rep.phi.values - phi_star.values).abs().maxCoeff() <= 1e-6);
  for (double m : rep.cone_margin_history) CHECK(m > 0.0);
}

TEST_CASE("mis-sized configs are rejected before any work") {
  const TorusGrid g(1, {8, 8, 8, 8});
  const TorusGrid g2(1, {16, 8, 8, 8});
  const HermField chi = HermField::identity(g);
  const ConeFunction f = ConeFunction::qma(1);

  SolverConfig bad_tol{f, chi, ScalarField::zero(g)};
  bad_tol.tol_residual = 0.0;
  CHECK_THROWS_AS(solve(bad_tol), ConfigError);

  SolverConfig bad_grid{f, chi, ScalarField::zero(g2)};
  CHECK_THROWS_AS(solve(bad_grid), ShapeError);

  SolverConfig bad_fam{ConeFunction::qma(2), chi, ScalarField::zero(g)};
  CHECK_THROWS_AS(solve(bad_fam), ShapeError);
}
