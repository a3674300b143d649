// Batch front door: solve / verify / lemmas / sweep / structure commands
// driven by a plain-text config, emitting JSON/CSV/HKTG artifacts into an
// output directory. Reports are byte-identical across reruns of the same
// config and seed; wall time and timestamps go to run_meta.json only.

#include <fcntl.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "hkt/cones.hpp"
#include "hkt/estimates.hpp"
#include "hkt/fields.hpp"
#include "hkt/hktg_io.hpp"
#include "hkt/quatlin.hpp"
#include "hkt/runconfig.hpp"
#include "hkt/sampling.hpp"
#include "hkt/solver.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Exclusive ownership of an output directory for the duration of a run.
class OutputLock {
 public:
  explicit OutputLock(const std::string& dir) : path_(dir + "/.lock") {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) {
      if (errno == EEXIST)
        throw hkt::OutputLocked("output directory '" + dir +
                                "' is locked by another run (remove " + path_ +
                                " if that run is dead)");
      throw hkt::ConfigError("cannot create lock file '" + path_ + "'");
    }
  }
  ~OutputLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      ::unlink(path_.c_str());
    }
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::string path_;
  int fd_ = -1;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw hkt::ConfigError("cannot write '" + path + "'");
}

void write_json(const std::string& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

std::string iso_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_run_meta(const hkt::RunConfig& cfg, const std::string& command, double wall_s) {
  json meta;
  meta["command"] = command;
  meta["config_hash"] = hkt::hash_hex(cfg.config_hash);
  meta["timestamp"] = iso_timestamp();
  meta["wall_time_s"] = wall_s;
  write_json(cfg.output_dir + "/run_meta.json", meta);
}

hkt::ScalarField shape_field(const hkt::TorusGrid& grid, double amplitude) {
  return hkt::ScalarField::sample(grid, [amplitude](const Eigen::VectorXd& x) {
    return amplitude * std::cos(2.0 * M_PI * x[0]);
  });
}

// Everything a command needs: the equation family and the discrete data.
struct Problem {
  hkt::ConeFunction f;
  hkt::TorusGrid grid;
  hkt::HermField chi;
  hkt::ScalarField h;
  std::optional<hkt::ScalarField> phi_star;  // manufactured target, when any
};

Problem build_problem(const hkt::RunConfig& cfg,
                      const std::optional<hkt::TorusGrid>& grid_override = {}) {
  hkt::ConeFunction f = hkt::ConeFunction::parse(cfg.family, cfg.n);
  hkt::TorusGrid grid = grid_override ? *grid_override : hkt::TorusGrid(cfg.n, cfg.dims);

  hkt::HermField chi = hkt::HermField::identity(grid);
  if (cfg.chi != "identity") {
    hkt::HktgData data = hkt::read_hktg(cfg.chi);
    if (!data.herm)
      throw hkt::ConfigError("problem.chi: '" + cfg.chi + "' is not a matrix field");
    if (!(data.herm->grid == grid))
      throw hkt::ConfigError("problem.chi: grid of '" + cfg.chi + "' does not match the run");
    chi = std::move(*data.herm);
  }

  std::optional<hkt::ScalarField> phi_star;
  hkt::ScalarField h = hkt::ScalarField::zero(grid);
  if (cfg.h_mode == "constant") {
    h = hkt::ScalarField::constant(grid, cfg.h_value);
  } else if (cfg.h_mode == "file") {
    hkt::HktgData data = hkt::read_hktg(cfg.h_file);
    if (!data.scalar)
      throw hkt::ConfigError("data.h_file: '" + cfg.h_file + "' is not a scalar field");
    if (!(data.scalar->grid == grid))
      throw hkt::ConfigError("data.h_file: grid of '" + cfg.h_file + "' does not match the run");
    h = std::move(*data.scalar);
  } else {  // manufactured
    phi_star = shape_field(grid, cfg.amplitude);
    h = hkt::apply_operator(f, chi, *phi_star);
  }
  return Problem{std::move(f), grid, std::move(chi), std::move(h), std::move(phi_star)};
}

hkt::SolverConfig solver_config(const hkt::RunConfig& cfg, const Problem& prob) {
  hkt::SolverConfig sc{prob.f, prob.chi, prob.h};
  sc.tol_residual = cfg.tol_residual;
  sc.max_newton = cfg.max_newton;
  sc.continuity_steps = cfg.continuity_steps;
  sc.linear.max_iter = cfg.linear_max_iter;
  sc.linear.tol = cfg.linear_tol;
  sc.seed = cfg.seed;
  return sc;
}

int cmd_solve(const hkt::RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  Problem prob = build_problem(cfg);
  hkt::SolveReport rep = hkt::solve(solver_config(cfg, prob));

  json report;
  report["b"] = rep.b;
  report["cone_margin_history"] = rep.cone_margin_history;
  report["config_hash"] = hkt::hash_hex(cfg.config_hash);
  report["dims"] = cfg.dims;
  report["family"] = cfg.family;
  report["linear_iters"] = rep.linear_iters;
  report["n"] = cfg.n;
  report["newton_iters"] = rep.newton_iters;
  report["residual_history"] = rep.residual_history;
  report["status"] = hkt::to_string(rep.status);
  write_json(cfg.output_dir + "/solve_report.json", report);
  hkt::write_scalar_hktg(cfg.output_dir + "/phi.hktg", rep.phi);

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_run_meta(cfg, "solve", wall);
  if (rep.status != hkt::SolveStatus::Converged) {
    std::cerr << "solve: " << hkt::to_string(rep.status) << "\n";
    return 3;
  }
  return 0;
}

int cmd_verify(const hkt::RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string phi_path =
      cfg.input_phi.empty() ? cfg.output_dir + "/phi.hktg" : cfg.input_phi;
  hkt::HktgData data = hkt::read_hktg(phi_path);
  if (!data.scalar)
    throw hkt::ConfigError("verify: '" + phi_path + "' is not a scalar field");
  const hkt::ScalarField phi = std::move(*data.scalar);
  if (phi.grid.n() != cfg.n)
    throw hkt::ConfigError("verify: '" + phi_path + "' was produced for a different n");

  Problem prob = build_problem(cfg, phi.grid);
  const double b = (hkt::apply_operator(prob.f, prob.chi, phi).values - prob.h.values).mean();

  const hkt::EstimateReport er = hkt::estimate_report(prob.f, phi, prob.chi);

  const Eigen::MatrixXd lambda_lower = Eigen::MatrixXd::Ones(1, cfg.n);
  Eigen::ArrayXd levels = prob.h.values + b;
  const hkt::SubsolutionResult cert =
      hkt::subsolution_check(prob.f, lambda_lower, levels);

  json ej;
  ej["alpha_range"] = {er.alpha_range[0], er.alpha_range[1]};
  ej["b_estimate"] = b;
  ej["c0"] = er.c0;
  ej["config_hash"] = hkt::hash_hex(cfg.config_hash);
  ej["d_const"] = er.d_const;
  ej["family"] = cfg.family;
  ej["grad_sup"] = er.grad_sup;
  ej["lam1_max"] = er.lam1_max;
  ej["lam1_ratio"] = er.lam1_ratio;
  ej["lap_max"] = er.lap_max;
  ej["lap_ratio"] = er.lap_ratio;
  ej["n"] = cfg.n;
  ej["n_const"] = er.n_const;
  ej["q_argmax"] = er.q_argmax;
  ej["q_max"] = er.q_max;
  ej["subsolution"] = {{"accepted", cert.accepted},
                       {"delta", cert.delta},
                       {"min_margin", cert.min_margin},
                       {"radius", cert.radius}};
  write_json(cfg.output_dir + "/estimate_report.json", ej);

  // Contact-set diagnostics on a cube around the minimizer of phi.
  const Eigen::ArrayXd::Index argmin_phi =
      std::min_element(phi.values.data(), phi.values.data() + phi.values.size()) -
      phi.values.data();
  const Eigen::VectorXd center = phi.grid.position(argmin_phi);
  const hkt::BallGrid ball(cfg.n, cfg.ball_points);
  const hkt::BallField phi_ball{
      ball, hkt::sample_on_cube(phi, center, cfg.ball_halfwidth, cfg.ball_points)};
  const hkt::AbpDiagnostics abp = hkt::abp_diagnostics(phi_ball, cfg.ball_epsilon);

  json aj;
  aj["argmin"] = abp.argmin;
  aj["ball_lhs"] = abp.ball_lhs;
  aj["ball_points"] = cfg.ball_points;
  aj["config_hash"] = hkt::hash_hex(cfg.config_hash);
  aj["contact_count"] = abp.contact_count;
  aj["det_integral"] = abp.det_integral;
  aj["epsilon"] = abp.epsilon;
  aj["gap_skipped"] = abp.gap_skipped;
  aj["measure_p"] = abp.measure_p;
  aj["min_gap_blocki"] = abp.min_gap_blocki;
  aj["min_gap_sroka"] = abp.min_gap_sroka;
  aj["min_v"] = abp.min_v;
  write_json(cfg.output_dir + "/abp.json", aj);

  hkt::SolveReport pseudo{phi, b};
  const hkt::DichotomyTable table =
      hkt::dichotomy_scan(prob.f, prob.chi, prob.h, pseudo, lambda_lower.row(0), cert);
  std::ostringstream csv;
  csv.precision(17);
  csv << "point,kappa,directional_term,diagonal_term\n";
  for (const auto& row : table.rows)
    csv << row.point << ',' << row.kappa << ',' << row.directional_term << ','
        << row.diagonal_term << '\n';
  csv << "# min_kappa=";
  if (table.rows.empty())
    csv << "inf";
  else
    csv << table.min_kappa;
  csv << "\n# config_hash=" << hkt::hash_hex(cfg.config_hash) << "\n";
  write_text(cfg.output_dir + "/dichotomy.csv", csv.str());

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_run_meta(cfg, "verify", wall);

  bool ok = er.alpha_range[0] >= -1e-12 &&
            er.alpha_range[1] <= 0.5 * std::log(2.0) + 1e-12;
  if (abp.contact_count > abp.gap_skipped)
    ok = ok && abp.min_gap_blocki >= -1e-9 && abp.min_gap_sroka >= -1e-9;
  if (!table.rows.empty()) ok = ok && table.min_kappa > 0;
  if (!ok) {
    std::cerr << "verify: an invariant check failed; see the reports\n";
    return 4;
  }
  return 0;
}

int cmd_lemmas(const hkt::RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(cfg.seed);
  const long samples = cfg.lemma_samples;

  double max_pairing_rel = 0;
  for (int n : {1, 2, 3})
    for (long i = 0; i < samples; ++i) {
      const Eigen::MatrixXcd h = hkt::random_hyperhermitian(n, rng);
      const hkt::QuatSpectrum spec = hkt::quaternionic_eigenvalues(h);
      max_pairing_rel = std::max(max_pairing_rel,
                                 spec.pairing_gap / (1.0 + hkt::max_abs(h)));
    }

  double min_blocki = std::numeric_limits<double>::infinity();
  double min_sroka = std::numeric_limits<double>::infinity();
  for (int n : {1, 2})
    for (long i = 0; i < samples; ++i) {
      min_blocki = std::min(min_blocki, hkt::blocki_gap(hkt::random_psd_symmetric(4 * n, rng)));
      const Eigen::MatrixXcd m = hkt::random_complex_matrix(2 * n, 2 * n, rng);
      min_sroka = std::min(min_sroka, hkt::sroka_gap(m * m.adjoint()));
    }

  double min_concavity = std::numeric_limits<double>::infinity();
  const std::vector<std::string> families = {"qma", "hessian:1", "hessian:2", "nminus1"};
  for (const std::string& name : families) {
    const hkt::ConeFunction f = hkt::ConeFunction::parse(name, 2);
    for (long i = 0; i < samples; ++i)
      min_concavity =
          std::min(min_concavity,
                   hkt::concavity_trace_gap(f, hkt::random_positive_spectrum(2, rng)));
  }

  // Top-eigenvalue closed forms against a dense eigensolver.
  double max_closed_form = 0;
  const long instances = std::min<long>(samples, 200);
  for (long i = 0; i < instances; ++i) {
    const int n = 2 + static_cast<int>(i % 2);
    const Eigen::MatrixXd a = hkt::random_separated_diagonal(n, rng);
    std::vector<hkt::EBasisIndex> idxs;
    for (int r = 1; r <= n; ++r) idxs.push_back({hkt::EBasisKind::Diag, r, r});
    for (int s = 2; s <= n; ++s) {
      idxs.push_back({hkt::EBasisKind::OddEven, 1, s});
      idxs.push_back({hkt::EBasisKind::EvenEven, 1, s});
    }
    if (n == 3) idxs.push_back({hkt::EBasisKind::OddEven, 2, 3});
    for (const auto& idx : idxs) {
      const Eigen::MatrixXd e = hkt::e_basis(n, idx);
      for (double t : {-0.5, -0.25, 0.25, 0.5}) {
        const double closed = hkt::lambda1_perturbed(a, t, idx);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a + t * e);
        const double exact = es.eigenvalues().maxCoeff();
        max_closed_form =
            std::max(max_closed_form, std::abs(closed - exact) / (1.0 + std::abs(exact)));
      }
    }
  }

  json report;
  report["config_hash"] = hkt::hash_hex(cfg.config_hash);
  report["families"] = families;
  report["max_closed_form_error"] = max_closed_form;
  report["max_pairing_gap_rel"] = max_pairing_rel;
  report["min_blocki_gap"] = min_blocki;
  report["min_concavity_gap"] = min_concavity;
  report["min_sroka_gap"] = min_sroka;
  report["samples"] = samples;
  report["seed"] = cfg.seed;
  report["tol"] = cfg.lemma_tol;
  write_json(cfg.output_dir + "/lemmas_report.json", report);

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_run_meta(cfg, "lemmas", wall);

  const bool ok = max_pairing_rel <= cfg.lemma_tol && min_blocki >= -cfg.lemma_tol &&
                  min_sroka >= -cfg.lemma_tol && min_concavity >= -1e-12 &&
                  max_closed_form <= cfg.lemma_tol;
  if (!ok) {
    std::cerr << "lemmas: a sampled inequality fell below tolerance\n";
    return 4;
  }
  return 0;
}

int cmd_sweep(const hkt::RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.chi != "identity")
    throw hkt::ConfigError("sweep: only problem.chi = identity can be refined across grids");

  hkt::ConeFunction f = hkt::ConeFunction::parse(cfg.family, cfg.n);
  std::vector<hkt::TorusGrid> grids;
  grids.emplace_back(cfg.n, cfg.dims);
  if (cfg.sweep_double) {
    std::vector<int> doubled = cfg.dims;
    for (int& d : doubled)
      if (d > 1) d *= 2;
    grids.emplace_back(cfg.n, doubled);
  }

  hkt::SweepTable merged;
  bool all_converged = true;
  for (const hkt::TorusGrid& grid : grids) {
    const hkt::HermField chi = hkt::HermField::identity(grid);
    const hkt::ScalarField base = shape_field(grid, 1.0);
    Problem prob{f, grid, chi, hkt::ScalarField::zero(grid), {}};
    const hkt::SweepTable table =
        hkt::laplacian_ratio_sweep(f, chi, base, cfg.amplitudes, solver_config(cfg, prob));
    merged.blow_up = merged.blow_up || table.blow_up;
    for (const auto& row : table.rows) {
      all_converged = all_converged && row.status == "converged";
      merged.rows.push_back(row);
    }
  }

  std::string csv = hkt::sweep_csv(merged);
  csv += "# config_hash=" + hkt::hash_hex(cfg.config_hash) + "\n";
  write_text(cfg.output_dir + "/sweep.csv", csv);

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_run_meta(cfg, "sweep", wall);

  if (!all_converged) {
    std::cerr << "sweep: some rows did not converge; see sweep.csv\n";
    return 3;
  }
  if (merged.blow_up) {
    std::cerr << "sweep: a ratio column exceeds 10x its median\n";
    return 4;
  }
  return 0;
}

int cmd_structure(const hkt::RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const hkt::ConeFunction f = hkt::ConeFunction::parse(cfg.family, cfg.n);
  const hkt::StructureReport rep =
      hkt::check_structure(f, static_cast<int>(cfg.structure_samples), cfg.structure_h_min,
                           cfg.structure_h_max, cfg.seed);

  json j;
  j["all_ok"] = rep.all_ok();
  j["boundary_below_h"] = rep.boundary_below_h;
  j["concave"] = rep.concave;
  j["config_hash"] = hkt::hash_hex(cfg.config_hash);
  j["family"] = rep.family;
  j["grads_positive"] = rep.grads_positive;
  j["h_max"] = cfg.structure_h_max;
  j["h_min"] = cfg.structure_h_min;
  j["max_hessian_eigenvalue"] = rep.max_hessian_eigenvalue;
  j["min_grad_component"] = rep.min_grad_component;
  j["min_ray_limit"] = rep.min_ray_limit;
  j["n"] = rep.n;
  j["rays_diverge"] = rep.rays_diverge;
  j["samples"] = rep.samples;
  j["sup_boundary_f"] = rep.sup_boundary_f;
  write_json(cfg.output_dir + "/structure_report.json", j);

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_run_meta(cfg, "structure", wall);

  if (!rep.all_ok()) {
    std::cerr << "structure: a structural property failed; see structure_report.json\n";
    return 4;
  }
  return 0;
}

int exit_code_for(const hkt::Error& err) {
  if (dynamic_cast<const hkt::ConfigError*>(&err) || dynamic_cast<const hkt::GridError*>(&err) ||
      dynamic_cast<const hkt::OutputLocked*>(&err) || dynamic_cast<const hkt::InvalidChi*>(&err) ||
      dynamic_cast<const hkt::ShapeError*>(&err) ||
      dynamic_cast<const hkt::InvalidDimension*>(&err) ||
      dynamic_cast<const hkt::InvalidIndex*>(&err))
    return 2;
  if (dynamic_cast<const hkt::NotAdmissible*>(&err) ||
      dynamic_cast<const hkt::OutsideCone*>(&err) ||
      dynamic_cast<const hkt::LineSearchFailed*>(&err) ||
      dynamic_cast<const hkt::LinearSolveStalled*>(&err))
    return 3;
  return 4;  // violated numerical property (pairing, PSD gate, interior min, ...)
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* env = std::getenv("HKT_THREADS")) {
    const int k = std::atoi(env);
    if (k >= 1) Eigen::setNbThreads(k);
  }

  CLI::App app{"Solver and verification laboratory for quaternionic "
               "Monge-Ampere type equations on the flat torus"};
  app.require_subcommand(1);

  std::string config_path;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"solve", "Run the damped Newton solver and dump (phi, b)"},
      {"verify", "Measure estimate ratios, contact sets and the dichotomy on a solved state"},
      {"lemmas", "Sample the matrix inequalities underlying the estimates"},
      {"sweep", "Amplitude sweep of the estimate ratios across grids"},
      {"structure", "Check gradient positivity, concavity and cone structure of a family"},
  };
  for (const auto& [name, desc] : commands)
    app.add_subcommand(name, desc)
        ->add_option("--config", config_path, "Path to the run configuration")
        ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const hkt::RunConfig cfg = hkt::load_run_config(config_path);
    fs::create_directories(cfg.output_dir);
    OutputLock lock(cfg.output_dir);
    if (command == "solve") return cmd_solve(cfg);
    if (command == "verify") return cmd_verify(cfg);
    if (command == "lemmas") return cmd_lemmas(cfg);
    if (command == "sweep") return cmd_sweep(cfg);
    return cmd_structure(cfg);
  } catch (const hkt::Error& err) {
    std::cerr << command << ": " << err.what() << "\n";
    return exit_code_for(err);
  } catch (const std::exception& err) {
    std::cerr << command << ": unexpected error: " << err.what() << "\n";
    return 1;
  }
}
