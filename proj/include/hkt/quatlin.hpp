#pragma once

#include <Eigen/Dense>
#include <complex>

#include "hkt/errors.hpp"

// Linear algebra of hyperhermitian matrices.
//
// A complex 2n x 2n Hermitian matrix H is hyperhermitian when it is fixed by
// the twist H -> J * conj(H) * J^T, where J is the standard quaternionic
// structure (block diagonal with n copies of [[0,-1],[1,0]]). Such matrices
// represent n x n quaternionic Hermitian matrices; their complex spectrum
// consists of n real eigenvalues, each of multiplicity two.

namespace hkt {

using Complex = std::complex<double>;

/// Standard quaternionic structure: 2n x 2n, block diagonal [[0,-1],[1,0]].
Eigen::MatrixXd standard_j(int n);

/// Twist H -> J * conj(H) * J^T. An involution that preserves hermiticity.
Eigen::MatrixXcd j_twist(const Eigen::MatrixXcd& h, const Eigen::MatrixXd& j);

/// Twist against the standard structure of matching dimension.
Eigen::MatrixXcd j_twist(const Eigen::MatrixXcd& h);

/// Entrywise max-abs norm used by every tolerance in this header.
template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.derived().cwiseAbs().maxCoeff();
}

/// True when ||H - H^*||_inf <= tol and ||H - twist(H)||_inf <= tol.
/// Throws ShapeError on odd or non-square input.
bool is_hyperhermitian(const Eigen::MatrixXcd& h, double tol);

/// Spectrum of a hyperhermitian matrix, reported once per quaternionic
/// eigenvalue: the 2n complex eigenvalues are sorted descending and paired
/// consecutively; `lambda[j]` is the mean of pair j.
struct QuatSpectrum {
  Eigen::VectorXd lambda;  ///< n values, non-increasing
  double pairing_gap = 0;  ///< max |difference| inside any pair
};

/// Eigenvalues via a dense Hermitian solve plus pair collapse.
/// `tol_pair` < 0 selects the default 1e-8 * (1 + ||H||_inf).
/// Throws NotQuaternionic when some pair is split wider than the tolerance.
QuatSpectrum quaternionic_eigenvalues(const Eigen::MatrixXcd& h, double tol_pair = -1.0);

/// Kinds of real basis elements of the hyperhermitian space.
/// Block indices r, s are 1-based and refer to 2x2 blocks; OddEven and
/// EvenEven couple blocks r < s, Diag is the identity inside block r.
enum class EBasisKind { OddEven, EvenEven, Diag };

struct EBasisIndex {
  EBasisKind kind;
  int r = 1;
  int s = 1;
};

/// Real hyperhermitian basis element. With rows/columns numbered from 1:
///   OddEven(r,s):  +1 at (2r-1,2s),(2s,2r-1); -1 at (2r,2s-1),(2s-1,2r)
///   EvenEven(r,s): +1 at (2r,2s),(2s,2r),(2r-1,2s-1),(2s-1,2r-1)
///   Diag(r):       identity in block r
/// Every output passes is_hyperhermitian with tolerance zero.
Eigen::MatrixXd e_basis(int n, const EBasisIndex& idx);

// First-eigenvalue calculus at a diagonal matrix with strictly separated
// paired entries diag(l1,l1,l2,l2,...), l1 > l2 > ... The perturbed top
// eigenvalue lambda1(A + t E) has the closed forms below; derivatives are
// exact, not numerical.
//
// Contraction convention: the gradient and Hessian arrays are contracted
// against a direction E as (1/2) * sum_{ij} G_ij E_ij, the factor accounting
// for each quaternionic degree of freedom occupying two complex slots.

/// Closed form of lambda1(A + t * e_basis(idx)):
///   Diag(1):                    l1 + t
///   OddEven/EvenEven(1, s):     (l1+ls)/2 + sqrt(((l1-ls)/2)^2 + t^2)
///   anything not touching block 1: l1
/// Throws PreconditionViolated if `a` is not diagonal with equal pairs,
/// DegenerateTopEigenvalue if l1 is not simple as a quaternionic eigenvalue.
double lambda1_perturbed(const Eigen::MatrixXd& a, double t, const EBasisIndex& idx);

/// Gradient array of lambda1 at a diagonal point: ones at entries (0,0) and
/// (1,1), zero elsewhere.
Eigen::MatrixXd lambda1_gradient(const Eigen::MatrixXd& a);

/// Second-derivative array entry for the pair of entry positions (i,j) and
/// (k,l), all zero-based: equals 2/(l1 - l_s) when (i,j) == (k,l), i < 2,
/// j >= 2 with s = block of j, and zero otherwise.
double lambda1_hessian_coeff(const Eigen::MatrixXd& a, int i, int j, int k, int l);

// Real representations. iota embeds complex 2n x 2n matrices into real
// 4n x 4n ones as [[Re, Im], [-Im, Re]]; it is an algebra homomorphism and
// sends Hermitian matrices to symmetric ones. The complex structure acts on
// real coordinates (x^1..x^2n, x^{2n+1}..x^{4n}) with z^k = x^k + i x^{2n+k}.

Eigen::MatrixXd iota(const Eigen::MatrixXcd& h);

/// Inverse of iota. Throws ShapeError when the blocks of the input are not
/// of the form [[R, M], [-M, R]] within `tol`.
Eigen::MatrixXcd iota_inv(const Eigen::MatrixXd& m, double tol = 1e-12);

/// Projection of a symmetric 4n x 4n matrix onto the complex-structure
/// invariant part: p(N) = (N + I^T N I)/2. Idempotent; its image is exactly
/// the image of iota on Hermitian matrices.
Eigen::MatrixXd proj_p(const Eigen::MatrixXd& n_mat);

/// Projection onto the image of iota on hyperhermitian matrices:
/// T(N) = (p(N) + A^T p(N) A)/4 where A is the real representation of the
/// (anti-linear) quaternionic structure. Satisfies, for the Hessian N of any
/// C^2 function u, T(N) = iota((Hc + twist(Hc))/2) with Hc the complex
/// Hessian of u.
Eigen::MatrixXd proj_t(const Eigen::MatrixXd& n_mat);

/// det(N) vs its quaternionic bound: 2^{4n} det(Hc)^2 - det(N) with
/// Hc = iota_inv(p(N)/2). Non-negative (up to roundoff) whenever N is
/// positive semidefinite. Throws PreconditionViolated if N is not symmetric
/// PSD within tolerance.
double blocki_gap(const Eigen::MatrixXd& n_mat);

/// det(Hc) vs the determinant of its twist average:
/// 2^{2n} det((Hc + twist(Hc))/2) - det(Hc), non-negative for Hermitian
/// PSD input. Throws PreconditionViolated on non-PSD input.
double sroka_gap(const Eigen::MatrixXcd& hc);

}  // namespace hkt
