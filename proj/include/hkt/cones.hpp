#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>

#include "hkt/errors.hpp"

// Symmetric concave equation families f(lambda) on open symmetric cones,
// together with the diagnostics the a priori theory asks of them: gradient
// positivity, concavity, boundary behaviour, radial limits, subsolution
// acceptance and the linearized coefficient matrices.

namespace hkt {

/// An equation family: a symmetric function on an open symmetric cone
/// containing the positive orthant. `margin` is positive exactly on the
/// cone and acts as the admissibility measure used everywhere else.
class ConeFunction {
 public:
  using Eval = std::function<double(const Eigen::VectorXd&)>;
  using Grad = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  ConeFunction(std::string name, int n, Eval eval, Grad grad, Eval margin);

  /// f(lambda) = sum_i log(lambda_i) on the positive orthant.
  static ConeFunction qma(int n);
  /// f(lambda) = log sigma_k(lambda) on the k-th Garding cone.
  static ConeFunction hessian(int n, int k);
  /// f(lambda) = sum_i log(sum_{j != i} lambda_j); needs n >= 2.
  static ConeFunction nminus1(int n);
  /// Accepts "qma", "hessian:<k>", "nminus1".
  static ConeFunction parse(const std::string& spec_name, int n);

  const std::string& name() const { return name_; }
  int n() const { return n_; }

  /// Throws OutsideCone when margin(lambda) <= 0, ShapeError on bad size.
  double eval(const Eigen::VectorXd& lambda) const;
  Eigen::VectorXd grad(const Eigen::VectorXd& lambda) const;
  /// Defined everywhere; positive exactly on the cone.
  double margin(const Eigen::VectorXd& lambda) const;

 private:
  void check_size(const Eigen::VectorXd& lambda) const;
  std::string name_;
  int n_;
  Eval eval_, margin_;
  Grad grad_;
};

/// sigma_0..sigma_n of the entries of lambda.
Eigen::VectorXd elementary_symmetric(const Eigen::VectorXd& lambda);

/// Structural report for an equation family: gradient positivity and
/// concavity at sampled interior points, boundary suprema along rays into
/// the cone boundary, and radial limits along scaling rays.
struct StructureReport {
  std::string family;
  int n = 0;
  int samples = 0;
  double min_grad_component = std::numeric_limits<double>::infinity();
  bool grads_positive = false;
  double max_hessian_eigenvalue = -std::numeric_limits<double>::infinity();
  bool concave = false;
  double sup_boundary_f = -std::numeric_limits<double>::infinity();
  bool boundary_below_h = false;  ///< sup_boundary_f < inf of the target range
  double min_ray_limit = std::numeric_limits<double>::infinity();
  bool rays_diverge = false;  ///< every sampled scaling ray increases without bound
  bool all_ok() const { return grads_positive && concave && boundary_below_h && rays_diverge; }
};

StructureReport check_structure(const ConeFunction& f, int sample_count, double h_min,
                                double h_max, std::uint64_t seed = 2024);

/// Coefficients of the linearization of lambda -> f at a hyperhermitian
/// point: F = sum_j f_j(lambda) P_j with P_j the rank-two orthogonal
/// projector onto the j-th quaternionic eigenspace. Eigenvalue clusters
/// closer than 1e-8 * ||H||_inf share one merged projector.
struct LinearizedCoeffs {
  Eigen::MatrixXcd f_matrix;  ///< 2n x 2n, hyperhermitian, PSD
  double trace_f = 0;         ///< = 2 * sum_j f_j(lambda), strictly positive
  Eigen::VectorXd lambda;     ///< quaternionic spectrum, descending
  Eigen::VectorXd f_j;        ///< gradient of f at lambda
};

LinearizedCoeffs linearized_coeffs(const ConeFunction& f, const Eigen::MatrixXcd& h);

/// [2 f(lambda) - 2 f(1) + trace_f] - 2 sum_j f_j lambda_j. Non-negative by
/// concavity; exactly zero at lambda = 1.
double concavity_trace_gap(const ConeFunction& f, const Eigen::VectorXd& lambda);

struct SubsolutionOptions {
  double margin_floor = 1e-6;  ///< directional limits must clear h by this much
  int direction_samples = 48;  ///< random cone directions per point for the radius
  long max_points = 4096;      ///< grid points examined (strided subsample beyond)
  std::uint64_t seed = 12345;
};

struct SubsolutionResult {
  bool accepted = false;
  double delta = 0;   ///< inward shift for which the level intersection stays bounded
  double radius = 0;  ///< bounding radius of the shifted level intersection
  double min_margin = std::numeric_limits<double>::infinity();
  long witness_point = -1;      ///< rejecting grid point, when rejected
  int witness_direction = -1;   ///< rejecting coordinate direction
};

/// Decides the subsolution property for per-point spectra `lambda_rows`
/// (one row per grid point, or a single broadcast row) against right-hand
/// values `h` (matching length or a single value): every coordinate
/// directional limit of f must exceed h with margin. On acceptance, returns
/// a (delta, radius) certificate found by bisection and ray sampling.
/// Throws NotAdmissible (with witness) when some row leaves the cone.
SubsolutionResult subsolution_check(const ConeFunction& f, const Eigen::MatrixXd& lambda_rows,
                                    const Eigen::ArrayXd& h,
                                    const SubsolutionOptions& opts = {});

/// Limit of f(lambda + t * dir) along a geometric ladder t = 1, 2, 4, ...;
/// +inf when still growing at the top, -inf when the ray never meets the
/// cone, a finite value when increments saturate.
double directional_limit(const ConeFunction& f, const Eigen::VectorXd& lambda,
                         const Eigen::VectorXd& dir);

struct DichotomyProbe {
  double kappa = 0;             ///< max of the two terms below
  double directional_term = 0;  ///< <F(A), B - A> / trace_f
  double diagonal_term = 0;     ///< min_j F_jj / trace_f
};

/// Probe of the two-branch alternative at a boundary-level point: A must lie
/// on the level set f = sigma (within 1e-8 * (1 + |sigma|)) with |lambda(A)|
/// > radius. Reports the larger of the normalized directional derivative
/// toward B and the normalized smallest diagonal coefficient.
DichotomyProbe dichotomy_probe(const ConeFunction& f, const Eigen::MatrixXcd& a,
                               const Eigen::MatrixXcd& b, double sigma, double delta,
                               double radius);

}  // namespace hkt
