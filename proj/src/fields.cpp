#include "hkt/fields.hpp"

#include <unsupported/Eigen/FFT>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numeric>

namespace hkt {

namespace {

bool is_pow2(int v) { return v >= 1 && (v & (v - 1)) == 0; }

// Runs fn(flat_index, coords) over the grid in row-major order without
// per-point division, advancing an odometer instead.
template <typename Fn>
void for_each_point(const TorusGrid& grid, Fn&& fn) {
  std::vector<int> c(grid.axes(), 0);
  const long p = grid.points();
  for (long flat = 0; flat < p; ++flat) {
    fn(flat, c);
    for (int ax = grid.axes() - 1; ax >= 0; --ax) {
      if (++c[ax] < grid.dims()[ax]) break;
      c[ax] = 0;
    }
  }
}

// In-place 1-D FFT along one axis of the row-major array.
void axis_transform(const TorusGrid& grid, Eigen::ArrayXcd& a, int axis, bool inverse) {
  static thread_local Eigen::FFT<double> fft;
  const int len = grid.dims()[axis];
  if (len == 1) return;
  long inner = 1;
  for (int ax = axis + 1; ax < grid.axes(); ++ax) inner *= grid.dims()[ax];
  const long outer = grid.points() / (inner * len);
  std::vector<std::complex<double>> line(len), out(len);
  for (long o = 0; o < outer; ++o) {
    for (long i = 0; i < inner; ++i) {
      std::complex<double>* base = a.data() + o * inner * len + i;
      for (int k = 0; k < len; ++k) line[k] = base[static_cast<long>(k) * inner];
      if (inverse)
        fft.inv(out, line);
      else
        fft.fwd(out, line);
      for (int k = 0; k < len; ++k) base[static_cast<long>(k) * inner] = out[k];
    }
  }
}

void require_differentiable(const TorusGrid& grid, const char* who) {
  for (int d : grid.dims())
    if (d != 1 && d < 4)
      throw GridError(std::string(who) + ": axes need at least 4 points to differentiate");
}

}  // namespace

TorusGrid::TorusGrid(int n, std::vector<int> dims) : n_(n), dims_(std::move(dims)) {
  if (n_ < 1) throw InvalidDimension("TorusGrid: n must be >= 1");
  if (static_cast<int>(dims_.size()) != 4 * n_)
    throw GridError("TorusGrid: expected " + std::to_string(4 * n_) + " axis sizes");
  points_ = 1;
  for (int d : dims_) {
    if (!is_pow2(d)) throw GridError("TorusGrid: dims must be powers of two");
    if (d == 2) throw GridError("TorusGrid: axes need at least 4 points (or 1 when constant)");
    points_ *= d;
  }
}

long TorusGrid::index(const std::vector<int>& c) const {
  long flat = 0;
  for (int ax = 0; ax < axes(); ++ax) flat = flat * dims_[ax] + c[ax];
  return flat;
}

std::vector<int> TorusGrid::coords(long flat) const {
  std::vector<int> c(axes());
  for (int ax = axes() - 1; ax >= 0; --ax) {
    c[ax] = static_cast<int>(flat % dims_[ax]);
    flat /= dims_[ax];
  }
  return c;
}

Eigen::VectorXd TorusGrid::position(long flat) const {
  const std::vector<int> c = coords(flat);
  Eigen::VectorXd x(axes());
  for (int ax = 0; ax < axes(); ++ax) x[ax] = c[ax] * spacing(ax);
  return x;
}

ScalarField ScalarField::zero(const TorusGrid& grid) {
  return {grid, Eigen::ArrayXd::Zero(grid.points())};
}

ScalarField ScalarField::constant(const TorusGrid& grid, double value) {
  return {grid, Eigen::ArrayXd::Constant(grid.points(), value)};
}

ScalarField ScalarField::sample(const TorusGrid& grid,
                                const std::function<double(const Eigen::VectorXd&)>& fn) {
  ScalarField f = zero(grid);
  Eigen::VectorXd x(grid.axes());
  for_each_point(grid, [&](long flat, const std::vector<int>& c) {
    for (int ax = 0; ax < grid.axes(); ++ax) x[ax] = c[ax] * grid.spacing(ax);
    f.values[flat] = fn(x);
  });
  return f;
}

HermField HermField::zero(const TorusGrid& grid) {
  const int side = 2 * grid.n();
  return {grid, Eigen::MatrixXcd::Zero(side * side, grid.points())};
}

HermField HermField::identity(const TorusGrid& grid) {
  return constant(grid, Eigen::MatrixXcd::Identity(2 * grid.n(), 2 * grid.n()));
}

HermField HermField::constant(const TorusGrid& grid, const Eigen::MatrixXcd& m) {
  const int side = 2 * grid.n();
  if (m.rows() != side || m.cols() != side)
    throw ShapeError("HermField::constant: matrix side must be 2n");
  HermField f = zero(grid);
  const Eigen::Map<const Eigen::VectorXcd> flat(m.data(), side * side);
  f.data.colwise() = flat;
  return f;
}

Eigen::ArrayXcd dft_forward_complex(const TorusGrid& grid, const Eigen::ArrayXcd& values) {
  Eigen::ArrayXcd a = values;
  for (int ax = 0; ax < grid.axes(); ++ax) axis_transform(grid, a, ax, false);
  return a;
}

Eigen::ArrayXcd dft_forward(const TorusGrid& grid, const Eigen::ArrayXd& values) {
  return dft_forward_complex(grid, values.cast<std::complex<double>>());
}

Eigen::ArrayXcd dft_inverse_complex(const TorusGrid& grid, const Eigen::ArrayXcd& coeffs) {
  Eigen::ArrayXcd a = coeffs;
  for (int ax = 0; ax < grid.axes(); ++ax) axis_transform(grid, a, ax, true);
  return a;
}

Eigen::ArrayXd dft_inverse_real(const TorusGrid& grid, const Eigen::ArrayXcd& coeffs) {
  return dft_inverse_complex(grid, coeffs).real();
}

double signed_omega(const TorusGrid& grid, int axis, int idx) {
  const int d = grid.dims()[axis];
  if (d == 1 || 2 * idx == d) return 0.0;  // constant axis or Nyquist
  const int k = idx <= d / 2 ? idx : idx - d;
  return 2.0 * M_PI * k;
}

namespace {

// Per-axis tables of signed angular frequencies.
std::vector<Eigen::ArrayXd> omega_tables(const TorusGrid& grid) {
  std::vector<Eigen::ArrayXd> t(grid.axes());
  for (int ax = 0; ax < grid.axes(); ++ax) {
    t[ax].resize(grid.dims()[ax]);
    for (int k = 0; k < grid.dims()[ax]; ++k) t[ax][k] = signed_omega(grid, ax, k);
  }
  return t;
}

}  // namespace

HermField complex_hessian(const ScalarField& phi) {
  const TorusGrid& grid = phi.grid;
  require_differentiable(grid, "complex_hessian");
  const int n = grid.n();
  const int side = 2 * n;
  const auto omega = omega_tables(grid);
  const Eigen::ArrayXcd coeffs = dft_forward(grid, phi.values);

  HermField out = HermField::zero(grid);
  Eigen::ArrayXcd entry(grid.points());
  for (int a = 0; a < side; ++a) {
    for (int b = a; b < side; ++b) {
      // Symbol of d/dz^a d/dz~b: ((i w_a + w_{2n+a})/2) * ((i w_b - w_{2n+b})/2).
      for_each_point(grid, [&](long flat, const std::vector<int>& k) {
        const std::complex<double> sa(0.5 * omega[2 * n + a][k[2 * n + a]],
                                      0.5 * omega[a][k[a]]);
        const std::complex<double> tb(-0.5 * omega[2 * n + b][k[2 * n + b]],
                                      0.5 * omega[b][k[b]]);
        entry[flat] = sa * tb * coeffs[flat];
      });
      const Eigen::ArrayXcd vals = dft_inverse_complex(grid, entry);
      if (a == b) {
        for (long p = 0; p < grid.points(); ++p) out.data(a * side + a, p) = vals[p].real();
      } else {
        for (long p = 0; p < grid.points(); ++p) {
          out.data(b * side + a, p) = vals[p];            // entry (a, b)
          out.data(a * side + b, p) = std::conj(vals[p]);  // entry (b, a)
        }
      }
    }
  }
  return out;
}

ScalarField grad_norm_sq(const ScalarField& phi) {
  const TorusGrid& grid = phi.grid;
  require_differentiable(grid, "grad_norm_sq");
  const auto omega = omega_tables(grid);
  const Eigen::ArrayXcd coeffs = dft_forward(grid, phi.values);
  ScalarField out = ScalarField::zero(grid);
  Eigen::ArrayXcd deriv(grid.points());
  for (int ax = 0; ax < grid.axes(); ++ax) {
    if (grid.dims()[ax] == 1) continue;
    for_each_point(grid, [&](long flat, const std::vector<int>& k) {
      deriv[flat] = std::complex<double>(0.0, omega[ax][k[ax]]) * coeffs[flat];
    });
    out.values += dft_inverse_real(grid, deriv).square();
  }
  return out;
}

ScalarField laplacian(const ScalarField& phi) {
  const TorusGrid& grid = phi.grid;
  require_differentiable(grid, "laplacian");
  const auto omega = omega_tables(grid);
  Eigen::ArrayXcd coeffs = dft_forward(grid, phi.values);
  for_each_point(grid, [&](long flat, const std::vector<int>& k) {
    double w2 = 0;
    for (int ax = 0; ax < grid.axes(); ++ax) {
      const double w = omega[ax][k[ax]];
      w2 += w * w;
    }
    coeffs[flat] *= -0.5 * w2;
  });
  return {grid, dft_inverse_real(grid, coeffs)};
}

HermField assemble_g_phi(const HermField& chi, const ScalarField& phi) {
  if (!(chi.grid == phi.grid))
    throw ShapeError("assemble_g_phi: chi and phi live on different grids");
  const Eigen::MatrixXd j = standard_j(chi.grid.n());
  for (long p = 0; p < chi.grid.points(); ++p) {
    const Eigen::MatrixXcd m = chi.matrix(p);
    const double tol = 1e-10 * (1.0 + max_abs(m));
    if (max_abs(Eigen::MatrixXcd(m - m.adjoint())) > tol ||
        max_abs(Eigen::MatrixXcd(m - j_twist(m, j))) > tol)
      throw InvalidChi("assemble_g_phi: chi is not pointwise hyperhermitian (point " +
                       std::to_string(p) + ")");
  }
  HermField g = complex_hessian(phi);
  for (long p = 0; p < g.grid.points(); ++p) {
    const Eigen::MatrixXcd hc = g.matrix(p);
    g.matrix(p) = chi.matrix(p) + 0.5 * (hc + j_twist(hc, j));
  }
  return g;
}

EigenvalueField eigenvalue_field(const HermField& a) {
  const int n = a.grid.n();
  EigenvalueField out{a.grid, Eigen::MatrixXd(a.grid.points(), n), 0.0};
  if (n == 1) {
    // Hyperhermitian 2x2 matrices are scalar multiples of the identity; the
    // pair split is the full spread of the Hermitian eigenvalues.
    for (long p = 0; p < a.grid.points(); ++p) {
      const auto m = a.matrix(p);
      const double d00 = m(0, 0).real(), d11 = m(1, 1).real();
      out.lambda(p, 0) = 0.5 * (d00 + d11);
      const double gap =
          std::sqrt((d00 - d11) * (d00 - d11) + 4.0 * std::norm(m(0, 1)));
      out.max_pairing_gap = std::max(out.max_pairing_gap, gap);
      const double tol = 1e-8 * (1.0 + max_abs(m));
      if (gap > tol)
        throw NotQuaternionic("eigenvalue_field: pair split exceeds tolerance at point " +
                              std::to_string(p));
    }
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;
  for (long p = 0; p < a.grid.points(); ++p) {
    es.compute(a.matrix(p), Eigen::EigenvaluesOnly);
    const Eigen::VectorXd mu = es.eigenvalues().reverse();
    const double tol = 1e-8 * (1.0 + max_abs(a.matrix(p)));
    for (int j = 0; j < n; ++j) {
      out.lambda(p, j) = 0.5 * (mu[2 * j] + mu[2 * j + 1]);
      const double gap = std::abs(mu[2 * j] - mu[2 * j + 1]);
      out.max_pairing_gap = std::max(out.max_pairing_gap, gap);
      if (gap > tol)
        throw NotQuaternionic("eigenvalue_field: pair split exceeds tolerance at point " +
                              std::to_string(p));
    }
  }
  return out;
}

ScalarField margin_field(const ConeFunction& f, const EigenvalueField& ev) {
  ScalarField out = ScalarField::zero(ev.grid);
  for (long p = 0; p < ev.grid.points(); ++p)
    out.values[p] = f.margin(ev.lambda.row(p).transpose());
  return out;
}

ScalarField spectral_upsample(const ScalarField& phi, const std::vector<int>& new_dims) {
  const TorusGrid& old_grid = phi.grid;
  TorusGrid new_grid(old_grid.n(), new_dims);
  for (int ax = 0; ax < old_grid.axes(); ++ax)
    if (new_dims[ax] < old_grid.dims()[ax])
      throw GridError("spectral_upsample: axis sizes must not shrink");
  const Eigen::ArrayXcd coeffs = dft_forward(old_grid, phi.values);
  Eigen::ArrayXcd up = Eigen::ArrayXcd::Zero(new_grid.points());
  const double scale = static_cast<double>(new_grid.points()) / old_grid.points();
  std::vector<int> nc(old_grid.axes());
  for_each_point(old_grid, [&](long flat, const std::vector<int>& k) {
    for (int ax = 0; ax < old_grid.axes(); ++ax) {
      const int d = old_grid.dims()[ax];
      if (d > 1 && 2 * k[ax] == d) return;  // drop the old Nyquist modes
      const int signed_k = (d == 1 || k[ax] <= d / 2) ? k[ax] : k[ax] - d;
      nc[ax] = signed_k >= 0 ? signed_k : signed_k + new_dims[ax];
    }
    up[new_grid.index(nc)] = scale * coeffs[flat];
  });
  return {new_grid, dft_inverse_real(new_grid, up)};
}

Eigen::ArrayXd sample_on_cube(const ScalarField& phi, const Eigen::VectorXd& center,
                              double halfwidth, int points_per_axis) {
  const TorusGrid& grid = phi.grid;
  if (center.size() != grid.axes())
    throw ShapeError("sample_on_cube: center has wrong dimension");
  if (points_per_axis < 2) throw GridError("sample_on_cube: need at least 2 points per axis");
  const int m = points_per_axis;

  // True Fourier coefficients, so evaluation is a plain exponential sum.
  Eigen::ArrayXcd data = dft_forward(grid, phi.values) / static_cast<double>(grid.points());

  // Contract one axis at a time against its evaluation matrix.
  std::vector<int> shape(grid.dims());
  for (int ax = 0; ax < grid.axes(); ++ax) {
    const int d = shape[ax];
    Eigen::MatrixXcd eval(m, d);
    for (int p = 0; p < m; ++p) {
      const double x = center[ax] - halfwidth + 2.0 * halfwidth * p / (m - 1);
      for (int k = 0; k < d; ++k) {
        if (d > 1 && 2 * k == d) {
          eval(p, k) = std::cos(M_PI * d * x);  // Nyquist as a cosine
        } else {
          const int sk = (d == 1 || k <= d / 2) ? k : k - d;
          eval(p, k) = std::polar(1.0, 2.0 * M_PI * sk * x);
        }
      }
    }
    long inner = 1;
    for (size_t j = ax + 1; j < shape.size(); ++j) inner *= shape[j];
    long outer = static_cast<long>(data.size()) / (inner * d);
    Eigen::ArrayXcd next(outer * m * inner);
    for (long o = 0; o < outer; ++o)
      for (int p = 0; p < m; ++p)
        for (long i = 0; i < inner; ++i) {
          std::complex<double> acc = 0;
          for (int k = 0; k < d; ++k) acc += eval(p, k) * data[(o * d + k) * inner + i];
          next[(o * m + p) * inner + i] = acc;
        }
    data.swap(next);
    shape[ax] = m;
  }
  return data.real();
}

}  // namespace hkt
