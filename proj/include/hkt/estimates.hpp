#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hkt/solver.hpp"

// Measurement side of the a priori theory: norm and ratio reports for a
// solved state, amplitude sweeps tracking those ratios, contact-set
// diagnostics for the comparison function v = phi + eps |x|^2 on a ball,
// and the large-eigenvalue dichotomy scan.

namespace hkt {

/// Logarithmic gradient weight alpha(t) = -log(1 - t/(2N))/2, increasing
/// from 0 to log(2)/2 as t runs over [0, N].
double alpha_weight(double t, double n_const);

/// Quadratic potential weight beta(t) = -2 D t + t^2 / 2.
double beta_weight(double t, double d_const);

struct EstimateReport {
  double c0 = 0;        ///< sup |phi - sup phi|
  double grad_sup = 0;  ///< sup |grad phi|
  double lap_max = 0;   ///< max of the scalar laplacian
  double lap_ratio = 0; ///< lap_max / (grad_sup + 1)
  double lam1_max = 0;  ///< max top eigenvalue of the assembled state
  double lam1_ratio = 0;  ///< lam1_max / (grad_sup^2 + 1)
  std::array<double, 2> alpha_range{0, 0};  ///< subset of [0, log(2)/2]
  double n_const = 1;  ///< N = grad_sup^2 + 1
  double d_const = 1;  ///< D used by beta (default c0 + 1)
  double q_max = 0;    ///< max of 2 sqrt(lambda1) + alpha(|grad|^2) + beta(phi)
  long q_argmax = 0;   ///< grid point attaining q_max
};

/// Norms, ratios and the test quantity Q for a sup-normalized state.
/// `d_const` <= 0 selects the default sup|phi| + 1. All outputs are
/// invariant under adding a constant to phi. Throws NotAdmissible when the
/// assembled spectrum leaves the cone.
EstimateReport estimate_report(const ConeFunction& f, const ScalarField& phi,
                               const HermField& chi, double d_const = 0);

struct SweepRow {
  double amplitude = 0;
  double lap_ratio = 0;
  double lam1_ratio = 0;
  int resolution = 0;  ///< leading active axis size
  std::string status;
  int newton_iters = 0;
  double residual = 0;
  double alpha_min = 0;
  double alpha_max = 0;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  bool blow_up = false;  ///< some ratio exceeds 10x the column median
};

/// Manufacture h from phi* = s * base_shape for each amplitude, solve from
/// zero (warm-starting each row at the previous solution) and measure the
/// ratio columns. Rows whose solve fails carry the failure status and no
/// ratios; the table is still returned.
SweepTable laplacian_ratio_sweep(const ConeFunction& f, const HermField& chi,
                                 const ScalarField& base_shape,
                                 const std::vector<double>& amplitudes,
                                 const SolverConfig& proto);

/// CSV serialization with the header row
/// amplitude,lap_ratio,lam1_ratio,resolution.
std::string sweep_csv(const SweepTable& table);

/// Uniform grid over the cube [-1,1]^{4n}; fields on it are restricted to
/// the unit ball when analysed.
class BallGrid {
 public:
  BallGrid(int n, int points_per_axis);

  int n() const { return n_; }
  int axes() const { return 4 * n_; }
  int points_per_axis() const { return ppa_; }
  long points() const { return points_; }
  double spacing() const { return 2.0 / (ppa_ - 1); }

  long index(const std::vector<int>& coords) const;
  std::vector<int> coords(long flat) const;
  Eigen::VectorXd position(long flat) const;

 private:
  int n_;
  int ppa_;
  long points_;
};

struct BallField {
  BallGrid grid;
  Eigen::ArrayXd values;

  static BallField sample(const BallGrid& grid,
                          const std::function<double(const Eigen::VectorXd&)>& fn);
};

struct AbpDiagnostics {
  double epsilon = 0;
  double min_v = 0;              ///< interior minimum of v = phi + eps |x|^2
  long argmin = -1;
  std::vector<std::uint8_t> contact_mask;  ///< one flag per cube point
  long contact_count = 0;
  double measure_p = 0;          ///< contact_count * cell volume
  double min_gap_blocki = 0;     ///< over contact points; 0 when none
  double min_gap_sroka = 0;
  long gap_skipped = 0;          ///< contacts whose FD Hessian failed the PSD gate
  double ball_lhs = 0;           ///< omega_{4n} (eps/2)^{4n}
  double det_integral = 0;       ///< midpoint quadrature of det D^2 v over contacts
};

/// Contact set of v = phi + eps |x|^2 by brute force: a point is in contact
/// when its FD gradient is shorter than eps/2 and the tangent plane at it
/// supports v on the whole ball. Second derivatives are central FD, so
/// candidates stay two cells clear of the cube boundary. Throws
/// NoInteriorMin when v is minimized on the outer shell of the ball.
AbpDiagnostics abp_diagnostics(const BallField& phi_ball, double epsilon);

struct DichotomyRow {
  long point = -1;
  double kappa = 0;
  double directional_term = 0;
  double diagonal_term = 0;
};

struct DichotomyTable {
  std::vector<DichotomyRow> rows;
  double min_kappa = std::numeric_limits<double>::infinity();  ///< +inf when empty
};

/// Probe the dichotomy at every grid point of a solved state whose spectrum
/// norm exceeds the certificate radius, against the constant comparison
/// spectrum `lambda_lower`. Empty table when no point is that large.
DichotomyTable dichotomy_scan(const ConeFunction& f, const HermField& chi,
                              const ScalarField& h, const SolveReport& report,
                              const Eigen::VectorXd& lambda_lower,
                              const SubsolutionResult& cert);

}  // namespace hkt
