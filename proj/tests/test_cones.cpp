#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "hkt/cones.hpp"
#include "hkt/quatlin.hpp"
#include "hkt/sampling.hpp"

using namespace hkt;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

double f_of_matrix(const ConeFunction& f, const MatrixXcd& h) {
  return f.eval(quaternionic_eigenvalues(h).lambda);
}

}  // namespace

TEST_CASE("log-determinant family evaluates and differentiates") {
  const ConeFunction f = ConeFunction::qma(2);
  CHECK(f.eval(vec2(1, 1)) == 0.0);
  CHECK(f.eval(vec2(2, 8)) == doctest::Approx(std::log(16.0)));
  CHECK(f.eval(vec2(8, 2)) == f.eval(vec2(2, 8)));

  const VectorXd g = f.grad(vec2(2, 8));
  CHECK(g[0] == doctest::Approx(0.5));
  CHECK(g[1] == doctest::Approx(0.125));
  CHECK(f.grad(vec2(1, 1)).isApprox(VectorXd::Ones(2)));

  CHECK(f.margin(vec2(2, 8)) == doctest::Approx(2.0));
  CHECK(f.margin(vec2(-1, 1)) < 0.0);
  CHECK_THROWS_AS(f.eval(vec2(-1, 1)), OutsideCone);
  CHECK_THROWS_AS(f.eval(VectorXd::Ones(3)), ShapeError);
}

TEST_CASE("sum-complement family matches the log-determinant one at n=2") {
  const ConeFunction f3 = ConeFunction::nminus1(3);
  CHECK(f3.eval(VectorXd::Ones(3)) == doctest::Approx(3.0 * std::log(2.0)));

  const ConeFunction a = ConeFunction::nminus1(2);
  const ConeFunction b = ConeFunction::qma(2);
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 100; ++rep) {
    const VectorXd lam = random_positive_spectrum(2, rng);
    CHECK(a.eval(lam) == doctest::Approx(b.eval(lam)).epsilon(1e-12));
    CHECK(max_abs(a.grad(lam) - b.grad(lam)) <= 1e-12);
  }

  CHECK_THROWS_AS(ConeFunction::nminus1(1), InvalidDimension);
}

TEST_CASE("hessian family margins follow the nested cone chain") {
  const ConeFunction f1 = ConeFunction::hessian(2, 1);
  CHECK(f1.eval(vec2(2, 8)) == doctest::Approx(std::log(10.0)));
  // sigma_1 cone contains points with one negative entry
  CHECK(f1.margin(vec2(-1, 3)) > 0.0);

  const ConeFunction f2 = ConeFunction::hessian(2, 2);
  CHECK(f2.eval(vec2(2, 8)) == doctest::Approx(std::log(16.0)));
  CHECK(f2.margin(vec2(-1, 3)) < 0.0);  // needs every sigma_l positive

  CHECK_THROWS_AS(ConeFunction::hessian(2, 3), InvalidIndex);
}

TEST_CASE("family parsing accepts the config spellings") {
  CHECK(ConeFunction::parse("qma", 2).name() == "qma");
  CHECK(ConeFunction::parse("nminus1", 2).name() == "nminus1");
  const ConeFunction h2 = ConeFunction::parse("hessian:2", 3);
  CHECK(h2.eval(VectorXd::Ones(3)) == doctest::Approx(std::log(3.0)));
  CHECK_THROWS_AS(ConeFunction::parse("hessian", 2), ConfigError);
  CHECK_THROWS_AS(ConeFunction::parse("monge", 2), ConfigError);
}

TEST_CASE("elementary symmetric polynomials") {
  const VectorXd sig = elementary_symmetric(vec2(2, 8));
  CHECK(sig.size() == 3);
  CHECK(sig[0] == 1.0);
  CHECK(sig[1] == 10.0);
  CHECK(sig[2] == 16.0);
}

TEST_CASE("gradients match central finite differences") {
  std::mt19937_64 rng(5);
  const std::vector<ConeFunction> families = {
      ConeFunction::qma(3), ConeFunction::hessian(3, 1), ConeFunction::hessian(3, 2),
      ConeFunction::nminus1(3)};
  const double h = 1e-5;
  for (const auto& f : families) {
    for (int rep = 0; rep < 100; ++rep) {
      const VectorXd lam = random_positive_spectrum(3, rng, 0.5, 5.0);
      const VectorXd g = f.grad(lam);
      for (int i = 0; i < 3; ++i) {
        VectorXd up = lam, dn = lam;
        up[i] += h;
        dn[i] -= h;
        const double fd = (f.eval(up) - f.eval(dn)) / (2 * h);
        CHECK(std::abs(g[i] - fd) <= 1e-6 * (1 + std::abs(fd)));
        CHECK(g[i] > 0.0);
      }
    }
  }
}

TEST_CASE("structural report confirms the defining conditions") {
  const StructureReport qma = check_structure(ConeFunction::qma(2), 200, 0.25, 4.0);
  CHECK(qma.all_ok());
  CHECK(qma.grads_positive);
  CHECK(qma.concave);
  CHECK(qma.boundary_below_h);
  CHECK(qma.rays_diverge);
  // log det drops to -inf toward the cone boundary
  CHECK(qma.sup_boundary_f < -10.0);

  const StructureReport h1 = check_structure(ConeFunction::hessian(2, 1), 200, 0.25, 4.0);
  CHECK(h1.all_ok());
  CHECK(h1.max_hessian_eigenvalue <= 1e-6);

  const StructureReport nm = check_structure(ConeFunction::nminus1(2), 200, 0.25, 4.0);
  CHECK(nm.all_ok());
}

TEST_CASE("linearized coefficients reproduce the diagonal formulas") {
  const ConeFunction f = ConeFunction::qma(2);

  const LinearizedCoeffs at_id = linearized_coeffs(f, MatrixXcd::Identity(4, 4));
  CHECK(max_abs(at_id.f_matrix - MatrixXcd::Identity(4, 4)) <= 1e-12);
  CHECK(at_id.trace_f == doctest::Approx(4.0));

  MatrixXcd d = MatrixXcd::Zero(4, 4);
  d.diagonal() << 2, 2, 1, 1;
  const LinearizedCoeffs at_d = linearized_coeffs(f, d);
  MatrixXcd want = MatrixXcd::Zero(4, 4);
  want.diagonal() << 0.5, 0.5, 1, 1;
  CHECK(max_abs(at_d.f_matrix - want) <= 1e-12);
  CHECK(at_d.trace_f == doctest::Approx(3.0));

  // trace identity: sum_k F^{kk} H_{kk} = 2 sum_j f_j lambda_j
  const double lhs = (at_d.f_matrix.diagonal().array() * d.diagonal().array()).sum().real();
  CHECK(lhs == doctest::Approx(4.0));
  CHECK(lhs == doctest::Approx(2.0 * at_d.f_j.dot(at_d.lambda)));
}

TEST_CASE("linearized coefficients are the derivative of the spectral map") {
  // d/dt f(lambda(H + t D)) = (1/2) Re tr(F D) for hyperhermitian D.
  std::mt19937_64 rng(13);
  const std::vector<ConeFunction> families = {ConeFunction::qma(2),
                                              ConeFunction::hessian(2, 1),
                                              ConeFunction::nminus1(2)};
  const double h = 1e-5;
  for (const auto& f : families) {
    for (int rep = 0; rep < 40; ++rep) {
      const MatrixXcd base =
          MatrixXcd::Identity(4, 4) * 3.0 + random_hyperhermitian(2, rng, 0.2);
      const MatrixXcd dir = random_hyperhermitian(2, rng);
      const LinearizedCoeffs lc = linearized_coeffs(f, base);

      CHECK(is_hyperhermitian(lc.f_matrix, 1e-10 * (1 + max_abs(lc.f_matrix))));
      Eigen::SelfAdjointEigenSolver<MatrixXcd> es(lc.f_matrix);
      CHECK(es.eigenvalues().minCoeff() >= -1e-12);

      const double fd =
          (f_of_matrix(f, base + h * dir) - f_of_matrix(f, base - h * dir)) / (2 * h);
      const double lin = 0.5 * (lc.f_matrix * dir).trace().real();
      CHECK(std::abs(lin - fd) <= 1e-6 * (1 + std::abs(fd)));
    }
  }
}

TEST_CASE("linearized coefficients merge eigenvalue clusters") {
  const ConeFunction f = ConeFunction::qma(2);
  // exactly repeated quaternionic eigenvalue: projectors merge, F = Id / 3
  const MatrixXcd h = MatrixXcd::Identity(4, 4) * 3.0;
  const LinearizedCoeffs lc = linearized_coeffs(f, h);
  CHECK(max_abs(lc.f_matrix - MatrixXcd::Identity(4, 4) / 3.0) <= 1e-12);

  // nearly repeated: still well-defined and close to the exact merge
  MatrixXcd near = h;
  near(0, 0) += 1e-12;
  near(1, 1) += 1e-12;
  const LinearizedCoeffs lc2 = linearized_coeffs(f, near);
  CHECK(max_abs(lc2.f_matrix - MatrixXcd::Identity(4, 4) / 3.0) <= 1e-9);
}

TEST_CASE("concavity trace gap is nonnegative and vanishes at ones") {
  const ConeFunction f = ConeFunction::qma(2);
  CHECK(concavity_trace_gap(f, VectorXd::Ones(2)) == 0.0);
  CHECK(concavity_trace_gap(f, vec2(2, 8)) == doctest::Approx(2.7951774).epsilon(1e-7));

  std::mt19937_64 rng(17);
  const std::vector<ConeFunction> families = {
      ConeFunction::qma(2), ConeFunction::hessian(2, 1), ConeFunction::hessian(2, 2),
      ConeFunction::nminus1(2)};
  for (const auto& fam : families)
    for (int rep = 0; rep < 200; ++rep)
      CHECK(concavity_trace_gap(fam, random_positive_spectrum(2, rng)) >= -1e-12);
}

TEST_CASE("subsolution checker accepts the unit spectrum and certifies a shift") {
  const ConeFunction f = ConeFunction::qma(2);
  const Eigen::MatrixXd ones_row = Eigen::MatrixXd::Ones(1, 2);
  const Eigen::ArrayXd h0 = Eigen::ArrayXd::Zero(1);

  const SubsolutionResult res = subsolution_check(f, ones_row, h0);
  CHECK(res.accepted);
  CHECK(res.delta > 0.0);
  CHECK(res.delta < 1.0);  // shifted spectrum must stay inside the cone
  CHECK(std::isfinite(res.radius));
  CHECK(res.radius > 0.0);
  CHECK(res.witness_point == -1);

  Eigen::MatrixXd bad(1, 2);
  bad << -1, 1;
  CHECK_THROWS_AS(subsolution_check(f, bad, h0), NotAdmissible);
  try {
    subsolution_check(f, bad, h0);
  } catch (const NotAdmissible& err) {
    CHECK(err.witness_index == 0);
  }
}

TEST_CASE("subsolution acceptance is monotone under enlargement") {
  const ConeFunction f = ConeFunction::qma(2);
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int rep = 0; rep < 100; ++rep) {
    const VectorXd lo = random_positive_spectrum(2, rng, 0.2, 4.0);
    VectorXd hi = lo;
    hi[0] += u(rng);
    hi[1] += u(rng);
    const Eigen::ArrayXd h = Eigen::ArrayXd::Constant(1, u(rng) - 1.0);
    const SubsolutionResult a = subsolution_check(f, lo.transpose(), h);
    const SubsolutionResult b = subsolution_check(f, hi.transpose(), h);
    CHECK(a.accepted);
    CHECK(b.accepted);
    CHECK(b.min_margin >= a.min_margin - 1e-9);
  }
}

TEST_CASE("dichotomy probe reports the diagonal alternative exactly at A=B") {
  const ConeFunction f = ConeFunction::qma(2);
  const double t = 100.0;
  MatrixXcd a = MatrixXcd::Zero(4, 4);
  a.diagonal() << t, t, 1 / t, 1 / t;  // log det = 0

  const DichotomyProbe same = dichotomy_probe(f, a, a, 0.0, 0.5, 10.0);
  const LinearizedCoeffs lc = linearized_coeffs(f, a);
  double min_diag = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) min_diag = std::min(min_diag, lc.f_matrix(i, i).real());
  CHECK(same.directional_term == 0.0);
  CHECK(same.kappa == min_diag / lc.trace_f);
  CHECK(same.kappa > 0.0);

  const MatrixXcd b = 2.0 * MatrixXcd::Identity(4, 4);
  const DichotomyProbe probe = dichotomy_probe(f, a, b, 0.0, 0.5, 10.0);
  CHECK(probe.kappa > 0.0);

  // kappa stays bounded away from zero as the state grows along the level set
  for (double s : {10.0, 100.0, 1000.0}) {
    MatrixXcd as = MatrixXcd::Zero(4, 4);
    as.diagonal() << s, s, 1 / s, 1 / s;
    const DichotomyProbe p = dichotomy_probe(f, as, b, 0.0, 0.5, 5.0);
    CHECK(p.kappa >= 0.5);
  }

  CHECK_THROWS_AS(dichotomy_probe(f, a, b, 1.0, 0.5, 10.0), PreconditionViolated);
  CHECK_THROWS_AS(dichotomy_probe(f, a, b, 0.0, 0.5, 1000.0), PreconditionViolated);
}
