#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "hkt/cones.hpp"
#include "hkt/errors.hpp"
#include "hkt/quatlin.hpp"

// Fields on the flat torus [0,1)^{4n} with quaternionic coordinate grouping
// z^k = x^k + i x^{2n+k}. All differentiation is spectral; inputs are
// expected to be band-limited to a quarter of each axis resolution, and the
// Nyquist mode is annihilated by every derivative operator.

namespace hkt {

/// Uniform periodic grid. Axis sizes are powers of two; size 1 marks an
/// axis the fields do not vary along (used to embed separable problems in
/// higher quaternionic dimension), sizes below 4 other than 1 are rejected
/// for differentiation.
class TorusGrid {
 public:
  TorusGrid(int n, std::vector<int> dims);

  int n() const { return n_; }
  int axes() const { return static_cast<int>(dims_.size()); }
  const std::vector<int>& dims() const { return dims_; }
  long points() const { return points_; }
  double spacing(int axis) const { return 1.0 / dims_[axis]; }

  /// Row-major flattening, last axis fastest.
  long index(const std::vector<int>& coords) const;
  std::vector<int> coords(long flat) const;
  /// Coordinates of a grid point in [0,1)^{4n}.
  Eigen::VectorXd position(long flat) const;

  bool operator==(const TorusGrid& other) const {
    return n_ == other.n_ && dims_ == other.dims_;
  }

 private:
  int n_;
  std::vector<int> dims_;
  long points_;
};

/// Real scalar field over a torus grid.
struct ScalarField {
  TorusGrid grid;
  Eigen::ArrayXd values;

  static ScalarField zero(const TorusGrid& grid);
  static ScalarField constant(const TorusGrid& grid, double value);
  static ScalarField sample(const TorusGrid& grid,
                            const std::function<double(const Eigen::VectorXd&)>& fn);
  double mean() const { return values.mean(); }
  double sup_abs() const { return values.abs().maxCoeff(); }
};

/// Field of complex 2n x 2n Hermitian matrices; column p of `data` stores
/// the matrix at grid point p flattened column-major.
struct HermField {
  TorusGrid grid;
  Eigen::MatrixXcd data;

  static HermField zero(const TorusGrid& grid);
  static HermField identity(const TorusGrid& grid);
  static HermField constant(const TorusGrid& grid, const Eigen::MatrixXcd& m);

  int side() const { return 2 * grid.n(); }
  Eigen::Map<const Eigen::MatrixXcd> matrix(long p) const {
    return {data.col(p).data(), side(), side()};
  }
  Eigen::Map<Eigen::MatrixXcd> matrix(long p) {
    return {data.col(p).data(), side(), side()};
  }
};

// Spectral transforms. Forward transforms are unscaled coefficient sums;
// inverses carry the 1/N normalization so a round trip is the identity.

Eigen::ArrayXcd dft_forward(const TorusGrid& grid, const Eigen::ArrayXd& values);
Eigen::ArrayXcd dft_forward_complex(const TorusGrid& grid, const Eigen::ArrayXcd& values);
Eigen::ArrayXcd dft_inverse_complex(const TorusGrid& grid, const Eigen::ArrayXcd& coeffs);
Eigen::ArrayXd dft_inverse_real(const TorusGrid& grid, const Eigen::ArrayXcd& coeffs);

/// Angular frequency 2*pi*k of the signed wavenumber on `axis` for index
/// `idx`, zero at the Nyquist mode.
double signed_omega(const TorusGrid& grid, int axis, int idx);

/// Complex Hessian u_{a \bar b} = d^2 u / dz^a dz~b as a Hermitian field.
/// Throws GridError when any axis has 2 points.
HermField complex_hessian(const ScalarField& phi);

/// Squared Euclidean norm of the full spatial gradient, computed spectrally.
ScalarField grad_norm_sq(const ScalarField& phi);

/// 2 * sum_k u_{k kbar}; equals half the Euclidean Laplacian.
ScalarField laplacian(const ScalarField& phi);

/// chi + (Hc + twist(Hc))/2 with Hc the complex Hessian of phi. Validates
/// that chi is pointwise hyperhermitian (throws InvalidChi) and that the
/// grids agree (throws ShapeError).
HermField assemble_g_phi(const HermField& chi, const ScalarField& phi);

/// Per-point quaternionic spectra of a pointwise hyperhermitian field.
struct EigenvalueField {
  TorusGrid grid;
  Eigen::MatrixXd lambda;      ///< points x n, descending within each row
  double max_pairing_gap = 0;  ///< worst pair split across the grid
};

EigenvalueField eigenvalue_field(const HermField& a);

/// Admissibility margin of each spectrum row under the family `f`.
ScalarField margin_field(const ConeFunction& f, const EigenvalueField& ev);

/// Zero-pad the spectrum of `phi` onto a finer grid (axis sizes must not
/// shrink; the old Nyquist modes are dropped).
ScalarField spectral_upsample(const ScalarField& phi, const std::vector<int>& new_dims);

/// Evaluate the trigonometric interpolant of `phi` on a tensor-product cube
/// of `points_per_axis` samples spanning [center - halfwidth, center +
/// halfwidth] along every axis. Exact for band-limited fields.
Eigen::ArrayXd sample_on_cube(const ScalarField& phi, const Eigen::VectorXd& center,
                              double halfwidth, int points_per_axis);

}  // namespace hkt
