#pragma once

#include <Eigen/Dense>
#include <random>

#include "hkt/quatlin.hpp"

// Seeded random generators for the sampling suites. Twist-averaging a
// Hermitian (resp. PSD) matrix keeps it Hermitian (resp. PSD) and lands it
// on the hyperhermitian subspace, so these draws cover the whole space the
// lemmas quantify over.

namespace hkt {

inline Eigen::MatrixXcd random_complex_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Eigen::MatrixXcd m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = Complex(gauss(rng), gauss(rng));
  return m;
}

inline Eigen::MatrixXcd random_hyperhermitian(int n, std::mt19937_64& rng,
                                              double scale = 1.0) {
  Eigen::MatrixXcd a = random_complex_matrix(2 * n, 2 * n, rng);
  Eigen::MatrixXcd h = 0.5 * (a + a.adjoint());
  return scale * 0.5 * (h + j_twist(h));
}

inline Eigen::MatrixXcd random_psd_hyperhermitian(int n, std::mt19937_64& rng,
                                                  double scale = 1.0) {
  Eigen::MatrixXcd m = random_complex_matrix(2 * n, 2 * n, rng);
  Eigen::MatrixXcd g = m * m.adjoint();
  return scale * 0.5 * (g + j_twist(g));
}

/// Real symmetric PSD matrix of the given side, Wishart style.
inline Eigen::MatrixXd random_psd_symmetric(int side, std::mt19937_64& rng,
                                            double scale = 1.0) {
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd m(side, side);
  for (int c = 0; c < side; ++c)
    for (int r = 0; r < side; ++r) m(r, c) = gauss(rng);
  return scale * (m * m.transpose());
}

/// Strictly positive spectrum drawn log-uniformly from [lo, hi].
inline Eigen::VectorXd random_positive_spectrum(int n, std::mt19937_64& rng,
                                                double lo = 0.1, double hi = 10.0) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = std::exp(u(rng));
  return v;
}

/// Paired diagonal diag(l1,l1,...,ln,ln) with consecutive gaps of at least
/// `min_gap`, the regime where the top-eigenvalue closed forms are exact.
inline Eigen::MatrixXd random_separated_diagonal(int n, std::mt19937_64& rng,
                                                 double min_gap = 1.2) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd l(n);
  double top = 5.0 * u(rng) + n * (min_gap + 1.0);
  l[0] = top;
  for (int i = 1; i < n; ++i) l[i] = l[i - 1] - min_gap - u(rng);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) a(2 * i, 2 * i) = a(2 * i + 1, 2 * i + 1) = l[i];
  return a;
}

}  // namespace hkt
