#include "hkt/estimates.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace hkt {

double alpha_weight(double t, double n_const) {
  return -0.5 * std::log(1.0 - t / (2.0 * n_const));
}

double beta_weight(double t, double d_const) { return -2.0 * d_const * t + 0.5 * t * t; }

EstimateReport estimate_report(const ConeFunction& f, const ScalarField& phi,
                               const HermField& chi, double d_const) {
  ScalarField hat{phi.grid, phi.values - phi.values.maxCoeff()};

  EstimateReport rep;
  rep.c0 = hat.sup_abs();
  const ScalarField gn2 = grad_norm_sq(hat);
  rep.grad_sup = std::sqrt(gn2.values.maxCoeff());
  rep.lap_max = laplacian(hat).values.maxCoeff();
  rep.lap_ratio = rep.lap_max / (rep.grad_sup + 1.0);
  rep.n_const = gn2.values.maxCoeff() + 1.0;
  rep.d_const = d_const > 0 ? d_const : rep.c0 + 1.0;

  const HermField g = assemble_g_phi(chi, hat);
  const EigenvalueField ev = eigenvalue_field(g);
  Eigen::VectorXd lam(ev.lambda.cols());
  for (long p = 0; p < phi.grid.points(); ++p) {
    lam = ev.lambda.row(p);
    if (!(f.margin(lam) > 0))
      throw NotAdmissible("estimate_report: spectrum leaves the cone", p);
  }
  rep.lam1_max = ev.lambda.col(0).maxCoeff();
  rep.lam1_ratio = rep.lam1_max / (rep.grad_sup * rep.grad_sup + 1.0);

  rep.alpha_range = {alpha_weight(gn2.values.minCoeff(), rep.n_const),
                     alpha_weight(gn2.values.maxCoeff(), rep.n_const)};

  rep.q_max = -std::numeric_limits<double>::infinity();
  for (long p = 0; p < phi.grid.points(); ++p) {
    const double q = 2.0 * std::sqrt(ev.lambda(p, 0)) +
                     alpha_weight(gn2.values[p], rep.n_const) +
                     beta_weight(hat.values[p], rep.d_const);
    if (q > rep.q_max) {
      rep.q_max = q;
      rep.q_argmax = p;
    }
  }
  return rep;
}

namespace {

double column_median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

SweepTable laplacian_ratio_sweep(const ConeFunction& f, const HermField& chi,
                                 const ScalarField& base_shape,
                                 const std::vector<double>& amplitudes,
                                 const SolverConfig& proto) {
  SweepTable table;
  const int resolution = *std::max_element(base_shape.grid.dims().begin(),
                                           base_shape.grid.dims().end());
  ScalarField warm = ScalarField::zero(base_shape.grid);

  for (double s : amplitudes) {
    SweepRow row;
    row.amplitude = s;
    row.resolution = resolution;
    row.lap_ratio = row.lam1_ratio = std::numeric_limits<double>::quiet_NaN();
    try {
      const ScalarField phi_star{base_shape.grid, s * base_shape.values};
      SolverConfig config = proto;
      config.family = f;
      config.chi = chi;
      config.h = apply_operator(f, chi, phi_star);
      config.initial_phi = warm;
      const SolveReport rep = solve(config);
      row.status = to_string(rep.status);
      row.newton_iters = rep.newton_iters;
      row.residual = rep.residual_history.empty() ? 0 : rep.residual_history.back();
      if (rep.status == SolveStatus::Converged) {
        const EstimateReport er = estimate_report(f, rep.phi, chi);
        row.lap_ratio = er.lap_ratio;
        row.lam1_ratio = er.lam1_ratio;
        row.alpha_min = er.alpha_range[0];
        row.alpha_max = er.alpha_range[1];
        warm = rep.phi;
      }
    } catch (const Error& err) {
      row.status = err.what();
    }
    table.rows.push_back(std::move(row));
  }

  for (auto column : {&SweepRow::lap_ratio, &SweepRow::lam1_ratio}) {
    std::vector<double> vals;
    for (const auto& row : table.rows)
      if (std::isfinite(row.*column)) vals.push_back(row.*column);
    if (vals.empty()) continue;
    const double med = column_median(vals);
    const double top = *std::max_element(vals.begin(), vals.end());
    if (top > 10.0 * med) table.blow_up = true;
  }
  return table;
}

std::string sweep_csv(const SweepTable& table) {
  std::ostringstream out;
  out.precision(17);
  out << "amplitude,lap_ratio,lam1_ratio,resolution\n";
  for (const auto& row : table.rows)
    out << row.amplitude << ',' << row.lap_ratio << ',' << row.lam1_ratio << ','
        << row.resolution << '\n';
  return out.str();
}

BallGrid::BallGrid(int n, int points_per_axis) : n_(n), ppa_(points_per_axis) {
  if (n_ < 1) throw InvalidDimension("BallGrid: n must be >= 1");
  if (ppa_ < 5) throw InvalidDimension("BallGrid: need at least 5 points per axis");
  points_ = 1;
  for (int ax = 0; ax < axes(); ++ax) {
    points_ *= ppa_;
    if (points_ > (1L << 28)) throw InvalidDimension("BallGrid: grid too large");
  }
}

long BallGrid::index(const std::vector<int>& coords) const {
  long flat = 0;
  for (int ax = 0; ax < axes(); ++ax) flat = flat * ppa_ + coords[ax];
  return flat;
}

std::vector<int> BallGrid::coords(long flat) const {
  std::vector<int> c(axes());
  for (int ax = axes() - 1; ax >= 0; --ax) {
    c[ax] = static_cast<int>(flat % ppa_);
    flat /= ppa_;
  }
  return c;
}

Eigen::VectorXd BallGrid::position(long flat) const {
  const std::vector<int> c = coords(flat);
  Eigen::VectorXd x(axes());
  for (int ax = 0; ax < axes(); ++ax) x[ax] = -1.0 + c[ax] * spacing();
  return x;
}

BallField BallField::sample(const BallGrid& grid,
                            const std::function<double(const Eigen::VectorXd&)>& fn) {
  BallField f{grid, Eigen::ArrayXd(grid.points())};
  for (long p = 0; p < grid.points(); ++p) f.values[p] = fn(grid.position(p));
  return f;
}

AbpDiagnostics abp_diagnostics(const BallField& phi_ball, double epsilon) {
  if (!(epsilon > 0)) throw PreconditionViolated("abp_diagnostics: epsilon must be positive");
  const BallGrid& grid = phi_ball.grid;
  const int d = grid.axes();
  const double h = grid.spacing();
  const long points = grid.points();

  Eigen::ArrayXd v(points);
  Eigen::ArrayXd radius2(points);
  for (long p = 0; p < points; ++p) {
    const Eigen::VectorXd x = grid.position(p);
    radius2[p] = x.squaredNorm();
    v[p] = phi_ball.values[p] + epsilon * radius2[p];
  }

  AbpDiagnostics diag;
  diag.epsilon = epsilon;
  diag.min_v = std::numeric_limits<double>::infinity();
  for (long p = 0; p < points; ++p) {
    if (radius2[p] < 1.0 && v[p] < diag.min_v) {
      diag.min_v = v[p];
      diag.argmin = p;
    }
  }
  if (diag.argmin < 0 || std::sqrt(radius2[diag.argmin]) >= 1.0 - 2.0 * h)
    throw NoInteriorMin("abp_diagnostics: v is minimized on the boundary shell");

  // Strides for single-axis steps in the flattened cube.
  std::vector<long> stride(d, 1);
  for (int ax = d - 2; ax >= 0; --ax) stride[ax] = stride[ax + 1] * grid.points_per_axis();

  std::vector<long> ball_points;
  for (long p = 0; p < points; ++p)
    if (radius2[p] < 1.0) ball_points.push_back(p);

  const double plane_tol = 1e-12 * std::max(1.0, v.abs().maxCoeff());
  const double vol_cell = std::pow(h, d);

  diag.contact_mask.assign(points, 0);
  diag.min_gap_blocki = std::numeric_limits<double>::infinity();
  diag.min_gap_sroka = std::numeric_limits<double>::infinity();

  Eigen::VectorXd gradient(d);
  Eigen::MatrixXd hess(d, d);
  for (long p = 0; p < points; ++p) {
    if (!(radius2[p] < (1.0 - 2.0 * h) * (1.0 - 2.0 * h))) continue;

    for (int ax = 0; ax < d; ++ax)
      gradient[ax] = (v[p + stride[ax]] - v[p - stride[ax]]) / (2.0 * h);
    if (!(gradient.norm() < 0.5 * epsilon)) continue;

    const Eigen::VectorXd x = grid.position(p);
    bool supporting = true;
    for (long q : ball_points) {
      const Eigen::VectorXd y = grid.position(q);
      if (v[q] - v[p] - gradient.dot(y - x) < -plane_tol) {
        supporting = false;
        break;
      }
    }
    if (!supporting) continue;

    diag.contact_mask[p] = 1;
    ++diag.contact_count;

    for (int a = 0; a < d; ++a) {
      hess(a, a) = (v[p + stride[a]] - 2.0 * v[p] + v[p - stride[a]]) / (h * h);
      for (int bx = a + 1; bx < d; ++bx) {
        hess(a, bx) = hess(bx, a) =
            (v[p + stride[a] + stride[bx]] - v[p + stride[a] - stride[bx]] -
             v[p - stride[a] + stride[bx]] + v[p - stride[a] - stride[bx]]) /
            (4.0 * h * h);
      }
    }
    try {
      const double blocki = blocki_gap(hess);
      const Eigen::MatrixXcd hc = iota_inv(Eigen::MatrixXd(0.5 * proj_p(hess)));
      const double sroka = sroka_gap(hc);
      diag.min_gap_blocki = std::min(diag.min_gap_blocki, blocki);
      diag.min_gap_sroka = std::min(diag.min_gap_sroka, sroka);
      diag.det_integral += hess.determinant() * vol_cell;
    } catch (const PreconditionViolated&) {
      ++diag.gap_skipped;  // FD noise pushed the Hessian off the PSD cone
    }
  }
  if (!std::isfinite(diag.min_gap_blocki)) diag.min_gap_blocki = 0;
  if (!std::isfinite(diag.min_gap_sroka)) diag.min_gap_sroka = 0;

  diag.measure_p = static_cast<double>(diag.contact_count) * vol_cell;
  const int half_dim = d / 2;  // 2n
  diag.ball_lhs = std::pow(M_PI, half_dim) / std::tgamma(half_dim + 1) *
                  std::pow(0.5 * epsilon, d);
  return diag;
}

DichotomyTable dichotomy_scan(const ConeFunction& f, const HermField& chi,
                              const ScalarField& h, const SolveReport& report,
                              const Eigen::VectorXd& lambda_lower,
                              const SubsolutionResult& cert) {
  if (lambda_lower.size() != f.n())
    throw ShapeError("dichotomy_scan: comparison spectrum has wrong length");
  const int side = 2 * f.n();
  Eigen::MatrixXcd b_mat = Eigen::MatrixXcd::Zero(side, side);
  for (int j = 0; j < f.n(); ++j) {
    b_mat(2 * j, 2 * j) = lambda_lower[j];
    b_mat(2 * j + 1, 2 * j + 1) = lambda_lower[j];
  }

  const HermField g = assemble_g_phi(chi, report.phi);
  const EigenvalueField ev = eigenvalue_field(g);

  DichotomyTable table;
  for (long p = 0; p < g.grid.points(); ++p) {
    if (!(ev.lambda.row(p).norm() > cert.radius)) continue;
    const double sigma = h.values[p] + report.b;
    const DichotomyProbe probe =
        dichotomy_probe(f, g.matrix(p), b_mat, sigma, cert.delta, cert.radius);
    table.rows.push_back({p, probe.kappa, probe.directional_term, probe.diagonal_term});
    table.min_kappa = std::min(table.min_kappa, probe.kappa);
  }
  return table;
}

}  // namespace hkt
