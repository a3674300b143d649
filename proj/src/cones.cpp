#include "hkt/cones.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>

#include "hkt/quatlin.hpp"

namespace hkt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// sigma_{k}(lambda restricted to entries != skip); skip < 0 keeps all.
double sigma_without(const Eigen::VectorXd& lambda, int k, int skip) {
  if (k < 0) return 0.0;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(k + 1);
  e[0] = 1.0;
  int used = 0;
  for (int i = 0; i < lambda.size(); ++i) {
    if (i == skip) continue;
    ++used;
    for (int l = std::min(k, used); l >= 1; --l) e[l] += lambda[i] * e[l - 1];
  }
  return e[k];
}

}  // namespace

Eigen::VectorXd elementary_symmetric(const Eigen::VectorXd& lambda) {
  const int n = static_cast<int>(lambda.size());
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n + 1);
  e[0] = 1.0;
  for (int i = 0; i < n; ++i)
    for (int l = std::min(i + 1, n); l >= 1; --l) e[l] += lambda[i] * e[l - 1];
  return e;
}

ConeFunction::ConeFunction(std::string name, int n, Eval eval, Grad grad, Eval margin)
    : name_(std::move(name)),
      n_(n),
      eval_(std::move(eval)),
      margin_(std::move(margin)),
      grad_(std::move(grad)) {
  if (n_ < 1) throw InvalidDimension("ConeFunction: n must be >= 1");
}

void ConeFunction::check_size(const Eigen::VectorXd& lambda) const {
  if (lambda.size() != n_)
    throw ShapeError("ConeFunction(" + name_ + "): expected " + std::to_string(n_) +
                     " eigenvalues, got " + std::to_string(lambda.size()));
}

double ConeFunction::margin(const Eigen::VectorXd& lambda) const {
  check_size(lambda);
  return margin_(lambda);
}

double ConeFunction::eval(const Eigen::VectorXd& lambda) const {
  check_size(lambda);
  if (margin_(lambda) <= 0)
    throw OutsideCone("ConeFunction(" + name_ + "): spectrum outside the admissibility cone");
  return eval_(lambda);
}

Eigen::VectorXd ConeFunction::grad(const Eigen::VectorXd& lambda) const {
  check_size(lambda);
  if (margin_(lambda) <= 0)
    throw OutsideCone("ConeFunction(" + name_ + "): spectrum outside the admissibility cone");
  return grad_(lambda);
}

ConeFunction ConeFunction::qma(int n) {
  if (n < 1) throw InvalidDimension("qma: n must be >= 1");
  return ConeFunction(
      "qma", n,
      [](const Eigen::VectorXd& l) {
        double s = 0;
        for (int i = 0; i < l.size(); ++i) s += std::log(l[i]);
        return s;
      },
      [](const Eigen::VectorXd& l) { return Eigen::VectorXd(l.cwiseInverse()); },
      [](const Eigen::VectorXd& l) { return l.minCoeff(); });
}

ConeFunction ConeFunction::hessian(int n, int k) {
  if (n < 1) throw InvalidDimension("hessian: n must be >= 1");
  if (k < 1 || k > n) throw InvalidIndex("hessian: need 1 <= k <= n");
  return ConeFunction(
      "hessian:" + std::to_string(k), n,
      [k](const Eigen::VectorXd& l) { return std::log(elementary_symmetric(l)[k]); },
      [k](const Eigen::VectorXd& l) {
        const double sk = elementary_symmetric(l)[k];
        Eigen::VectorXd g(l.size());
        for (int i = 0; i < l.size(); ++i) g[i] = sigma_without(l, k - 1, i) / sk;
        return g;
      },
      [k](const Eigen::VectorXd& l) {
        const Eigen::VectorXd e = elementary_symmetric(l);
        return e.segment(1, k).minCoeff();
      });
}

ConeFunction ConeFunction::nminus1(int n) {
  if (n < 2) throw InvalidDimension("nminus1: needs n >= 2");
  return ConeFunction(
      "nminus1", n,
      [](const Eigen::VectorXd& l) {
        const double total = l.sum();
        double s = 0;
        for (int i = 0; i < l.size(); ++i) s += std::log(total - l[i]);
        return s;
      },
      [](const Eigen::VectorXd& l) {
        const double total = l.sum();
        double inv_sum = 0;
        for (int i = 0; i < l.size(); ++i) inv_sum += 1.0 / (total - l[i]);
        Eigen::VectorXd g(l.size());
        for (int i = 0; i < l.size(); ++i) g[i] = inv_sum - 1.0 / (total - l[i]);
        return g;
      },
      [](const Eigen::VectorXd& l) {
        const double total = l.sum();
        return (total - l.array()).minCoeff();
      });
}

ConeFunction ConeFunction::parse(const std::string& spec_name, int n) {
  if (spec_name == "qma") return qma(n);
  if (spec_name == "nminus1") return nminus1(n);
  if (spec_name.rfind("hessian:", 0) == 0) {
    const std::string tail = spec_name.substr(8);
    size_t used = 0;
    int k = 0;
    try {
      k = std::stoi(tail, &used);
    } catch (const std::exception&) {
      throw ConfigError("unknown equation family '" + spec_name + "'");
    }
    if (used != tail.size()) throw ConfigError("unknown equation family '" + spec_name + "'");
    return hessian(n, k);
  }
  throw ConfigError("unknown equation family '" + spec_name + "'");
}

double directional_limit(const ConeFunction& f, const Eigen::VectorXd& lambda,
                         const Eigen::VectorXd& dir) {
  double prev = -kInf;
  double cur = -kInf;
  for (int m = 0; m <= 30; ++m) {
    const double t = std::ldexp(1.0, m);
    const Eigen::VectorXd probe = lambda + t * dir;
    prev = cur;
    cur = f.margin(probe) > 0 ? f.eval(probe) : -kInf;
    if (std::isfinite(cur) && std::isfinite(prev)) {
      if (std::abs(cur - prev) < 1e-12 * std::max(1.0, std::abs(cur))) return cur;
    }
  }
  if (!std::isfinite(cur)) return -kInf;
  return cur > prev ? kInf : -kInf;
}

StructureReport check_structure(const ConeFunction& f, int sample_count, double h_min,
                                double h_max, std::uint64_t seed) {
  StructureReport rep;
  rep.family = f.name();
  rep.n = f.n();
  rep.samples = sample_count;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.2, 1.5);

  bool grads_ok = true;
  bool rays_diverge = true;
  double sup_boundary = -kInf;

  for (int s = 0; s < sample_count; ++s) {
    Eigen::VectorXd lambda(f.n());
    for (int i = 0; i < f.n(); ++i) lambda[i] = std::exp(unif(rng));

    const Eigen::VectorXd g = f.grad(lambda);
    rep.min_grad_component = std::min(rep.min_grad_component, g.minCoeff());
    if (g.minCoeff() <= 0) grads_ok = false;

    // Concavity: numerical Hessian by central differences.
    Eigen::MatrixXd hess(f.n(), f.n());
    for (int i = 0; i < f.n(); ++i) {
      const double hi = 1e-4 * (1.0 + std::abs(lambda[i]));
      for (int j = i; j < f.n(); ++j) {
        const double hj = 1e-4 * (1.0 + std::abs(lambda[j]));
        Eigen::VectorXd pp = lambda, pm = lambda, mp = lambda, mm = lambda;
        pp[i] += hi; pp[j] += hj;
        pm[i] += hi; pm[j] -= hj;
        mp[i] -= hi; mp[j] += hj;
        mm[i] -= hi; mm[j] -= hj;
        hess(i, j) = hess(j, i) =
            (f.eval(pp) - f.eval(pm) - f.eval(mp) + f.eval(mm)) / (4 * hi * hj);
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess, Eigen::EigenvaluesOnly);
    rep.max_hessian_eigenvalue = std::max(rep.max_hessian_eigenvalue, es.eigenvalues().maxCoeff());

    // Boundary approach: shrink toward the cone apex and push one coordinate
    // down until the margin crosses zero, then follow f into the crossing.
    for (int ray = 0; ray < 2; ++ray) {
      Eigen::VectorXd dir;
      if (ray == 0) {
        dir = -lambda;  // toward the apex
      } else {
        dir = Eigen::VectorXd::Zero(f.n());
        dir[s % f.n()] = -lambda[s % f.n()];
      }
      double t_cross = 1.0;
      while (f.margin(lambda + t_cross * dir) > 0 && t_cross < 1e6) t_cross *= 2;
      if (f.margin(lambda + t_cross * dir) > 0) continue;  // never exits this way
      double lo = 0, hi = t_cross;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f.margin(lambda + mid * dir) > 0 ? lo : hi) = mid;
      }
      double prev = f.eval(lambda), cur = prev;
      bool diverged_down = false;
      for (int m = 1; m <= 40; ++m) {
        const double t = lo * (1.0 - std::ldexp(1.0, -m));
        const Eigen::VectorXd probe = lambda + t * dir;
        if (f.margin(probe) <= 0) break;
        prev = cur;
        cur = f.eval(probe);
        if (cur < -300) {
          diverged_down = true;
          break;
        }
        if (std::abs(cur - prev) < 1e-9 * std::max(1.0, std::abs(cur))) break;
      }
      if (!diverged_down) sup_boundary = std::max(sup_boundary, cur);
    }

    // Radial behaviour along the scaling ray t * lambda.
    const double lim = directional_limit(f, Eigen::VectorXd::Zero(f.n()), lambda);
    if (std::isfinite(lim)) {
      rays_diverge = false;
      rep.min_ray_limit = std::min(rep.min_ray_limit, lim);
    } else if (lim < 0) {
      rays_diverge = false;
      rep.min_ray_limit = -kInf;
    }
  }

  rep.grads_positive = grads_ok;
  rep.concave = rep.max_hessian_eigenvalue <= 1e-6;
  rep.sup_boundary_f = sup_boundary;
  rep.boundary_below_h = sup_boundary < h_min;
  rep.rays_diverge = rays_diverge;
  (void)h_max;
  return rep;
}

LinearizedCoeffs linearized_coeffs(const ConeFunction& f, const Eigen::MatrixXcd& h) {
  if (h.rows() != h.cols() || h.rows() != 2 * f.n())
    throw ShapeError("linearized_coeffs: matrix side must be 2n");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  if (es.info() != Eigen::Success)
    throw NotQuaternionic("linearized_coeffs: eigensolver failed");

  const int n = f.n();
  const double scale = std::max(max_abs(h), 1e-300);
  const double tol_pair = 1e-8 * (1.0 + max_abs(h));

  // Descending complex spectrum with eigenvectors.
  Eigen::VectorXd mu = es.eigenvalues().reverse();
  Eigen::MatrixXcd vec = es.eigenvectors().rowwise().reverse();

  LinearizedCoeffs out;
  out.lambda.resize(n);
  for (int j = 0; j < n; ++j) {
    if (std::abs(mu[2 * j] - mu[2 * j + 1]) > tol_pair)
      throw NotQuaternionic("linearized_coeffs: spectrum does not pair within tolerance");
    out.lambda[j] = 0.5 * (mu[2 * j] + mu[2 * j + 1]);
  }
  out.f_j = f.grad(out.lambda);

  // Merge clusters of coincident quaternionic eigenvalues; the projector of a
  // cluster is well conditioned even when individual eigenvectors are not.
  const double cluster_tol = 1e-8 * scale;
  Eigen::MatrixXcd f_mat = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
  int j = 0;
  while (j < n) {
    int jend = j;
    while (jend + 1 < n && out.lambda[jend] - out.lambda[jend + 1] <= cluster_tol) ++jend;
    double f_mean = 0;
    for (int m = j; m <= jend; ++m) f_mean += out.f_j[m];
    f_mean /= (jend - j + 1);
    const auto block = vec.middleCols(2 * j, 2 * (jend - j + 1));
    f_mat += f_mean * (block * block.adjoint());
    j = jend + 1;
  }
  // Tighten the structural invariants: Hermitian, twist-fixed.
  f_mat = 0.5 * (f_mat + f_mat.adjoint()).eval();
  f_mat = 0.5 * (f_mat + j_twist(f_mat)).eval();
  out.f_matrix = f_mat;
  out.trace_f = f_mat.trace().real();
  return out;
}

double concavity_trace_gap(const ConeFunction& f, const Eigen::VectorXd& lambda) {
  const Eigen::VectorXd g = f.grad(lambda);
  double sum_f = 0, sum_fl = 0;
  for (int j = 0; j < g.size(); ++j) {
    sum_f += g[j];
    sum_fl += g[j] * lambda[j];
  }
  const double trace_f = 2.0 * sum_f;
  const double value = f.eval(lambda);
  const double at_one = f.eval(Eigen::VectorXd::Ones(lambda.size()));
  return (2.0 * value - 2.0 * at_one + trace_f) - 2.0 * sum_fl;
}

namespace {

// Largest t with f(base + t * dir) <= level, assuming f increases along dir
// once inside the cone and eventually exceeds level.
double crossing_norm(const ConeFunction& f, const Eigen::VectorXd& base,
                     const Eigen::VectorXd& dir, double level) {
  double hi = 1.0;
  auto above = [&](double t) {
    const Eigen::VectorXd probe = base + t * dir;
    return f.margin(probe) > 0 && f.eval(probe) > level;
  };
  int guard = 0;
  while (!above(hi) && guard++ < 60) hi *= 2;
  if (!above(hi)) return kInf;
  double lo = 0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (above(mid) ? hi : lo) = mid;
  }
  return (base + hi * dir).norm();
}

}  // namespace

SubsolutionResult subsolution_check(const ConeFunction& f, const Eigen::MatrixXd& lambda_rows,
                                    const Eigen::ArrayXd& h, const SubsolutionOptions& opts) {
  const long p = lambda_rows.rows();
  if (lambda_rows.cols() != f.n())
    throw ShapeError("subsolution_check: rows must have n entries");
  if (h.size() != p && h.size() != 1 && p != 1)
    throw ShapeError("subsolution_check: h length does not match the spectrum rows");
  const long points = std::max<long>(p, h.size());
  auto row_at = [&](long i) -> Eigen::VectorXd {
    return lambda_rows.row(p == 1 ? 0 : i).transpose();
  };
  auto h_at = [&](long i) { return h.size() == 1 ? h[0] : h[i]; };

  for (long i = 0; i < p; ++i)
    if (f.margin(lambda_rows.row(i).transpose()) <= 0)
      throw NotAdmissible("subsolution_check: spectrum leaves the cone", i);

  const long stride = std::max<long>(1, points / opts.max_points);

  SubsolutionResult res;
  auto limits_clear = [&](double delta) {
    for (long i = 0; i < points; i += stride) {
      const Eigen::VectorXd shifted =
          row_at(i) - delta * Eigen::VectorXd::Ones(f.n());
      for (int d = 0; d < f.n(); ++d) {
        const double lim = directional_limit(f, shifted, Eigen::VectorXd::Unit(f.n(), d));
        if (delta == 0 && std::isfinite(lim))
          res.min_margin = std::min(res.min_margin, lim - h_at(i));
        if (!(lim > h_at(i) + opts.margin_floor)) {
          res.witness_point = i;
          res.witness_direction = d;
          return false;
        }
      }
    }
    return true;
  };

  if (!limits_clear(0.0)) {
    res.accepted = false;
    return res;
  }
  res.accepted = true;
  res.witness_point = -1;
  res.witness_direction = -1;

  // Largest inward shift that keeps every directional limit above h.
  double lo = 0.0, hi = 1.0;
  for (long i = 0; i < points; i += stride) hi = std::min(hi, 0.5 * f.margin(row_at(i)));
  hi = std::max(hi, 1e-8);
  if (limits_clear(hi)) {
    lo = hi;
  } else {
    for (int it = 0; it < 30; ++it) {
      const double mid = 0.5 * (lo + hi);
      (limits_clear(mid) ? lo : hi) = mid;
    }
  }
  res.delta = lo;

  // Bounding radius of the shifted sets' level crossings, probed along the
  // coordinate axes and a seeded bundle of interior directions.
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  std::vector<Eigen::VectorXd> dirs;
  for (int d = 0; d < f.n(); ++d) {
    Eigen::VectorXd e = Eigen::VectorXd::Constant(f.n(), 1e-4);
    e[d] = 1.0;
    dirs.push_back(e.normalized());
  }
  for (int s = 0; s < opts.direction_samples; ++s) {
    Eigen::VectorXd d(f.n());
    for (int i = 0; i < f.n(); ++i) d[i] = unif(rng);
    dirs.push_back(d.normalized());
  }
  for (int attempt = 0; attempt < 60; ++attempt) {
    double radius = 0;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(f.n());
    for (long i = 0; i < points && std::isfinite(radius); i += stride) {
      const Eigen::VectorXd shifted = row_at(i) - res.delta * ones;
      for (const auto& d : dirs) {
        radius = std::max(radius, crossing_norm(f, shifted, d, h_at(i)));
        if (!std::isfinite(radius)) break;
      }
    }
    if (std::isfinite(radius)) {
      res.radius = 1.02 * std::max(radius, 1e-12);
      return res;
    }
    res.delta *= 0.5;  // shrink the shift until the sampled crossings close up
  }
  res.radius = kInf;
  return res;
}

DichotomyProbe dichotomy_probe(const ConeFunction& f, const Eigen::MatrixXcd& a,
                               const Eigen::MatrixXcd& b, double sigma, double delta,
                               double radius) {
  if (b.rows() != a.rows() || b.cols() != a.cols())
    throw ShapeError("dichotomy_probe: operands must share shape");
  const LinearizedCoeffs lc = linearized_coeffs(f, a);
  const double level = f.eval(lc.lambda);
  if (std::abs(level - sigma) > 1e-8 * (1.0 + std::abs(sigma)))
    throw PreconditionViolated("dichotomy_probe: A is not on the level set f = sigma");
  if (!(lc.lambda.norm() > radius))
    throw PreconditionViolated("dichotomy_probe: |lambda(A)| must exceed the certificate radius");
  (void)delta;

  DichotomyProbe probe;
  const Eigen::MatrixXcd diff = b - a;
  probe.directional_term = (lc.f_matrix.conjugate().cwiseProduct(diff)).sum().real() / lc.trace_f;
  probe.diagonal_term = lc.f_matrix.diagonal().real().minCoeff() / lc.trace_f;
  probe.kappa = std::max(probe.directional_term, probe.diagonal_term);
  return probe;
}

}  // namespace hkt
