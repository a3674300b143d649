#include "hkt/quatlin.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace hkt {

namespace {

void require_square_even(const Eigen::MatrixXcd& h, const char* who) {
  if (h.rows() != h.cols())
    throw ShapeError(std::string(who) + ": matrix must be square");
  if (h.rows() % 2 != 0)
    throw ShapeError(std::string(who) + ": matrix side must be even");
}

// Diagonal of the form diag(l1,l1,l2,l2,...) with strictly decreasing li.
// Returns the n pair values, throwing when the shape assumptions fail.
Eigen::VectorXd paired_diagonal(const Eigen::MatrixXd& a, const char* who) {
  if (a.rows() != a.cols() || a.rows() % 2 != 0)
    throw ShapeError(std::string(who) + ": need a square even-sided matrix");
  const int n = static_cast<int>(a.rows()) / 2;
  const double scale = 1.0 + max_abs(a);
  const double tol = 1e-12 * scale;
  Eigen::MatrixXd off = a;
  off.diagonal().setZero();
  if (max_abs(off) > tol)
    throw PreconditionViolated(std::string(who) + ": matrix is not diagonal");
  Eigen::VectorXd lambda(n);
  for (int j = 0; j < n; ++j) {
    const double lo = a(2 * j, 2 * j);
    const double hi = a(2 * j + 1, 2 * j + 1);
    if (std::abs(lo - hi) > tol)
      throw PreconditionViolated(std::string(who) + ": diagonal entries are not paired");
    lambda[j] = 0.5 * (lo + hi);
    if (j > 0 && lambda[j] > lambda[j - 1] + tol)
      throw PreconditionViolated(std::string(who) + ": diagonal pairs are not sorted descending");
  }
  if (n > 1 && lambda[0] - lambda[1] <= tol)
    throw DegenerateTopEigenvalue(std::string(who) + ": top eigenvalue is repeated");
  return lambda;
}

void check_e_basis_index(int n, const EBasisIndex& idx, const char* who) {
  if (n < 1) throw InvalidDimension(std::string(who) + ": n must be >= 1");
  if (idx.r < 1 || idx.r > n || idx.s < 1 || idx.s > n)
    throw InvalidIndex(std::string(who) + ": block index out of range");
  if (idx.kind == EBasisKind::Diag) {
    if (idx.r != idx.s)
      throw InvalidIndex(std::string(who) + ": Diag requires r == s");
  } else if (idx.r >= idx.s) {
    throw InvalidIndex(std::string(who) + ": coupling elements require r < s");
  }
}

}  // namespace

Eigen::MatrixXd standard_j(int n) {
  if (n < 1) throw InvalidDimension("standard_j: n must be >= 1");
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int r = 0; r < n; ++r) {
    j(2 * r, 2 * r + 1) = -1.0;
    j(2 * r + 1, 2 * r) = 1.0;
  }
  return j;
}

Eigen::MatrixXcd j_twist(const Eigen::MatrixXcd& h, const Eigen::MatrixXd& j) {
  require_square_even(h, "j_twist");
  if (j.rows() != h.rows() || j.cols() != h.cols())
    throw ShapeError("j_twist: structure matrix shape does not match operand");
  return j * h.conjugate() * j.transpose();
}

Eigen::MatrixXcd j_twist(const Eigen::MatrixXcd& h) {
  require_square_even(h, "j_twist");
  return j_twist(h, standard_j(static_cast<int>(h.rows()) / 2));
}

bool is_hyperhermitian(const Eigen::MatrixXcd& h, double tol) {
  require_square_even(h, "is_hyperhermitian");
  if (max_abs(Eigen::MatrixXcd(h - h.adjoint())) > tol) return false;
  return max_abs(Eigen::MatrixXcd(h - j_twist(h))) <= tol;
}

QuatSpectrum quaternionic_eigenvalues(const Eigen::MatrixXcd& h, double tol_pair) {
  require_square_even(h, "quaternionic_eigenvalues");
  const double scale = 1.0 + max_abs(h);
  if (tol_pair < 0) tol_pair = 1e-8 * scale;
  if (max_abs(Eigen::MatrixXcd(h - h.adjoint())) > 1e-8 * scale)
    throw NotQuaternionic("quaternionic_eigenvalues: input is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NotQuaternionic("quaternionic_eigenvalues: eigensolver failed");
  Eigen::VectorXd mu = es.eigenvalues().reverse();  // descending
  const int n = static_cast<int>(mu.size()) / 2;
  QuatSpectrum out;
  out.lambda.resize(n);
  for (int j = 0; j < n; ++j) {
    out.lambda[j] = 0.5 * (mu[2 * j] + mu[2 * j + 1]);
    out.pairing_gap = std::max(out.pairing_gap, std::abs(mu[2 * j] - mu[2 * j + 1]));
  }
  if (out.pairing_gap > tol_pair)
    throw NotQuaternionic("quaternionic_eigenvalues: spectrum does not pair within tolerance");
  return out;
}

Eigen::MatrixXd e_basis(int n, const EBasisIndex& idx) {
  check_e_basis_index(n, idx, "e_basis");
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  const int r = idx.r, s = idx.s;
  switch (idx.kind) {
    case EBasisKind::Diag:
      e(2 * r - 2, 2 * r - 2) = 1.0;
      e(2 * r - 1, 2 * r - 1) = 1.0;
      break;
    case EBasisKind::OddEven:
      // +1 at (2r-1, 2s), (2s, 2r-1); -1 at (2r, 2s-1), (2s-1, 2r), 1-based.
      e(2 * r - 2, 2 * s - 1) = 1.0;
      e(2 * s - 1, 2 * r - 2) = 1.0;
      e(2 * r - 1, 2 * s - 2) = -1.0;
      e(2 * s - 2, 2 * r - 1) = -1.0;
      break;
    case EBasisKind::EvenEven:
      // +1 at (2r, 2s), (2s, 2r), (2r-1, 2s-1), (2s-1, 2r-1), 1-based.
      e(2 * r - 1, 2 * s - 1) = 1.0;
      e(2 * s - 1, 2 * r - 1) = 1.0;
      e(2 * r - 2, 2 * s - 2) = 1.0;
      e(2 * s - 2, 2 * r - 2) = 1.0;
      break;
  }
  return e;
}

double lambda1_perturbed(const Eigen::MatrixXd& a, double t, const EBasisIndex& idx) {
  const Eigen::VectorXd lambda = paired_diagonal(a, "lambda1_perturbed");
  check_e_basis_index(static_cast<int>(lambda.size()), idx, "lambda1_perturbed");
  const double l1 = lambda[0];
  if (idx.kind == EBasisKind::Diag)
    return idx.r == 1 ? l1 + t : l1;
  if (idx.r != 1) return l1;
  const double ls = lambda[idx.s - 1];
  const double half_gap = 0.5 * (l1 - ls);
  return 0.5 * (l1 + ls) + std::sqrt(half_gap * half_gap + t * t);
}

Eigen::MatrixXd lambda1_gradient(const Eigen::MatrixXd& a) {
  paired_diagonal(a, "lambda1_gradient");
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  g(0, 0) = 1.0;
  g(1, 1) = 1.0;
  return g;
}

double lambda1_hessian_coeff(const Eigen::MatrixXd& a, int i, int j, int k, int l) {
  const Eigen::VectorXd lambda = paired_diagonal(a, "lambda1_hessian_coeff");
  const int side = static_cast<int>(a.rows());
  for (int idx : {i, j, k, l})
    if (idx < 0 || idx >= side)
      throw InvalidIndex("lambda1_hessian_coeff: entry index out of range");
  if (i != k || j != l) return 0.0;
  if (i >= 2 || j < 2) return 0.0;
  const double ls = lambda[j / 2];
  return 2.0 / (lambda[0] - ls);
}

Eigen::MatrixXd iota(const Eigen::MatrixXcd& h) {
  require_square_even(h, "iota");
  const long m = h.rows();
  Eigen::MatrixXd out(2 * m, 2 * m);
  out.topLeftCorner(m, m) = h.real();
  out.topRightCorner(m, m) = h.imag();
  out.bottomLeftCorner(m, m) = -h.imag();
  out.bottomRightCorner(m, m) = h.real();
  return out;
}

Eigen::MatrixXcd iota_inv(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols() || m.rows() % 2 != 0)
    throw ShapeError("iota_inv: need a square even-sided matrix");
  const long half = m.rows() / 2;
  const double scale = 1.0 + max_abs(m);
  if (max_abs(Eigen::MatrixXd(m.topLeftCorner(half, half) - m.bottomRightCorner(half, half))) >
          tol * scale ||
      max_abs(Eigen::MatrixXd(m.topRightCorner(half, half) + m.bottomLeftCorner(half, half))) >
          tol * scale)
    throw ShapeError("iota_inv: input is not in the image of iota");
  Eigen::MatrixXcd h(half, half);
  h.real() = 0.5 * (m.topLeftCorner(half, half) + m.bottomRightCorner(half, half));
  h.imag() = 0.5 * (m.topRightCorner(half, half) - m.bottomLeftCorner(half, half));
  return h;
}

Eigen::MatrixXd proj_p(const Eigen::MatrixXd& n_mat) {
  if (n_mat.rows() != n_mat.cols() || n_mat.rows() % 2 != 0)
    throw ShapeError("proj_p: need a square even-sided matrix");
  if (max_abs(Eigen::MatrixXd(n_mat - n_mat.transpose())) > 1e-10 * (1.0 + max_abs(n_mat)))
    throw PreconditionViolated("proj_p: matrix is not symmetric");
  const long half = n_mat.rows() / 2;
  // I sends (x, y) -> (y, -x) in the split coordinates; conjugation by it
  // swaps the diagonal blocks and flips the off-diagonal ones.
  Eigen::MatrixXd rot(n_mat.rows(), n_mat.cols());
  rot.topLeftCorner(half, half) = n_mat.bottomRightCorner(half, half);
  rot.bottomRightCorner(half, half) = n_mat.topLeftCorner(half, half);
  rot.topRightCorner(half, half) = -n_mat.bottomLeftCorner(half, half);
  rot.bottomLeftCorner(half, half) = -n_mat.topRightCorner(half, half);
  return 0.5 * (n_mat + rot);
}

Eigen::MatrixXd proj_t(const Eigen::MatrixXd& n_mat) {
  if (n_mat.rows() != n_mat.cols() || n_mat.rows() % 4 != 0)
    throw ShapeError("proj_t: matrix side must be a multiple of 4");
  const int n = static_cast<int>(n_mat.rows()) / 4;
  const long half = n_mat.rows() / 2;
  const Eigen::MatrixXd p = proj_p(n_mat);
  // Real representation of the anti-linear quaternionic structure: it acts
  // as v -> J conj(v), i.e. block diagonal (J, -J) in split coordinates.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_mat.rows(), n_mat.cols());
  const Eigen::MatrixXd j = standard_j(n);
  a.topLeftCorner(half, half) = j;
  a.bottomRightCorner(half, half) = -j;
  return 0.25 * (p + a.transpose() * p * a);
}

namespace {

void require_psd_symmetric(const Eigen::MatrixXd& n_mat, const char* who) {
  if (n_mat.rows() != n_mat.cols())
    throw ShapeError(std::string(who) + ": matrix must be square");
  const double scale = 1.0 + max_abs(n_mat);
  if (max_abs(Eigen::MatrixXd(n_mat - n_mat.transpose())) > 1e-10 * scale)
    throw PreconditionViolated(std::string(who) + ": matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(n_mat, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9 * scale)
    throw PreconditionViolated(std::string(who) + ": matrix is not positive semidefinite");
}

void require_psd_hermitian(const Eigen::MatrixXcd& h, const char* who) {
  require_square_even(h, who);
  const double scale = 1.0 + max_abs(h);
  if (max_abs(Eigen::MatrixXcd(h - h.adjoint())) > 1e-10 * scale)
    throw PreconditionViolated(std::string(who) + ": matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9 * scale)
    throw PreconditionViolated(std::string(who) + ": matrix is not positive semidefinite");
}

}  // namespace

double blocki_gap(const Eigen::MatrixXd& n_mat) {
  if (n_mat.rows() % 4 != 0)
    throw ShapeError("blocki_gap: matrix side must be a multiple of 4");
  require_psd_symmetric(n_mat, "blocki_gap");
  const int n = static_cast<int>(n_mat.rows()) / 4;
  const Eigen::MatrixXcd hc = iota_inv(Eigen::MatrixXd(0.5 * proj_p(n_mat)));
  const double det_c = hc.determinant().real();
  return std::ldexp(det_c * det_c, 4 * n) - n_mat.determinant();
}

double sroka_gap(const Eigen::MatrixXcd& hc) {
  require_psd_hermitian(hc, "sroka_gap");
  const int n = static_cast<int>(hc.rows()) / 2;
  const Eigen::MatrixXcd avg = 0.5 * (hc + j_twist(hc));
  return std::ldexp(avg.determinant().real(), 2 * n) - hc.determinant().real();
}

}  // namespace hkt
