#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

// End-to-end runs of the installed binary. HKT_CLI_PATH is injected by the
// build so the suite always exercises the executable it was built with.

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = HKT_CLI_PATH;

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

RunResult run_cli(const std::string& args, const fs::path& scratch) {
  const fs::path out = scratch / "stdout.txt";
  const fs::path err = scratch / "stderr.txt";
  const std::string cmd =
      kCli + " " + args + " > " + out.string() + " 2> " + err.string();
  const int raw = std::system(cmd.c_str());
  RunResult res;
  res.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  res.out = slurp(out);
  res.err = slurp(err);
  return res;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path("cli_scratch") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  return json::parse(in);
}

std::string trivial_config(const fs::path& out_dir) {
  return "[problem]\n"
         "family = qma\n"
         "n = 1\n"
         "dims = 8\n"
         "[data]\n"
         "h = constant\n"
         "h_value = 0\n"
         "[output]\n"
         "dir = " +
         out_dir.string() + "\n";
}

}  // namespace

TEST_CASE("missing subcommand or config file is a usage error") {
  const fs::path dir = fresh_dir("usage");
  CHECK(run_cli("", dir).code == 2);
  CHECK(run_cli("solve", dir).code == 2);
  CHECK(run_cli("solve --config " + (dir / "nope.cfg").string(), dir).code == 2);
}

TEST_CASE("solve on constant data writes the full artifact set") {
  const fs::path dir = fresh_dir("solve_trivial");
  const fs::path cfg = dir / "run.cfg";
  write_file(cfg, trivial_config(dir / "out"));

  const RunResult res = run_cli("solve --config " + cfg.string(), dir);
  CHECK(res.code == 0);

  const json report = read_json(dir / "out" / "solve_report.json");
  CHECK(report.at("status") == "converged");
  CHECK(report.at("newton_iters") == 0);
  CHECK(report.at("b").get<double>() == 0.0);
  CHECK(report.at("family") == "qma");
  CHECK(report.at("n") == 1);
  CHECK(report.at("dims") == json::array({8, 8, 8, 8}));
  const std::string hash = report.at("config_hash");
  CHECK(hash.size() == 16);
  CHECK(hash.find_first_not_of("0123456789abcdef") == std::string::npos);

  CHECK(fs::exists(dir / "out" / "phi.hktg"));
  const json meta = read_json(dir / "out" / "run_meta.json");
  CHECK(meta.at("command") == "solve");
  CHECK(meta.at("config_hash") == hash);
  CHECK_FALSE(fs::exists(dir / "out" / ".lock"));  // released on exit
}

TEST_CASE("identical configs reproduce byte-identical artifacts") {
  const fs::path dir = fresh_dir("solve_repeat");
  const fs::path cfg = dir / "run.cfg";
  write_file(cfg, trivial_config(dir / "out"));

  REQUIRE(run_cli("solve --config " + cfg.string(), dir).code == 0);
  fs::rename(dir / "out", dir / "first");
  REQUIRE(run_cli("solve --config " + cfg.string(), dir).code == 0);

  CHECK(slurp(dir / "first" / "solve_report.json") ==
        slurp(dir / "out" / "solve_report.json"));
  CHECK(slurp(dir / "first" / "phi.hktg") == slurp(dir / "out" / "phi.hktg"));
}

TEST_CASE("config validation failures exit with the usage code") {
  const fs::path dir = fresh_dir("bad_config");

  const fs::path odd = dir / "odd.cfg";
  write_file(odd, "[problem]\nfamily = qma\nn = 1\ndims = 17\n[output]\ndir = " +
                      (dir / "out").string() + "\n");
  RunResult res = run_cli("solve --config " + odd.string(), dir);
  CHECK(res.code == 2);
  CHECK(res.err.find("dims must be powers of two") != std::string::npos);

  const fs::path unknown = dir / "unknown.cfg";
  write_file(unknown, "[problem]\nfamily = qma\nwibble = 3\n");
  res = run_cli("solve --config " + unknown.string(), dir);
  CHECK(res.code == 2);
  CHECK(res.err.find("unknown config key") != std::string::npos);
}

TEST_CASE("a held lock blocks concurrent runs on the same directory") {
  const fs::path dir = fresh_dir("locked");
  const fs::path cfg = dir / "run.cfg";
  write_file(cfg, trivial_config(dir / "out"));
  fs::create_directories(dir / "out");
  write_file(dir / "out" / ".lock", "");

  const RunResult res = run_cli("solve --config " + cfg.string(), dir);
  CHECK(res.code == 2);
  CHECK(res.err.find("locked") != std::string::npos);
  CHECK(fs::exists(dir / "out" / ".lock"));  // a foreign lock is never removed
}

TEST_CASE("verify recomputes reports and certificates from the stored field") {
  const fs::path dir = fresh_dir("verify");
  const fs::path cfg = dir / "run.cfg";
  write_file(cfg, trivial_config(dir / "out"));
  REQUIRE(run_cli("solve --config " + cfg.string(), dir).code == 0);

  const RunResult res = run_cli("verify --config " + cfg.string(), dir);
  CHECK(res.code == 0);

  const json est = read_json(dir / "out" / "estimate_report.json");
  CHECK(std::abs(est.at("b_estimate").get<double>()) <= 1e-12);
  CHECK(est.at("alpha_range")[0].get<double>() == 0.0);
  CHECK(est.at("alpha_range")[1].get<double>() == 0.0);
  CHECK(est.at("subsolution").at("accepted") == true);

  const json abp = read_json(dir / "out" / "abp.json");
  CHECK(abp.at("contact_count").get<long>() > 0);
  CHECK(abp.at("min_gap_blocki").get<double>() >= -1e-9);
  CHECK(abp.at("min_gap_sroka").get<double>() >= -1e-9);

  const std::string csv = slurp(dir / "out" / "dichotomy.csv");
  CHECK(csv.rfind("point,kappa,directional_term,diagonal_term\n", 0) == 0);
  CHECK(csv.find("# min_kappa=") != std::string::npos);
  CHECK(csv.find("# config_hash=") != std::string::npos);
}

TEST_CASE("a corrupted field file fails verification loudly") {
  const fs::path dir = fresh_dir("tamper");
  const fs::path cfg = dir / "run.cfg";
  write_file(cfg, trivial_config(dir / "out"));
  REQUIRE(run_cli("solve --config " + cfg.string(), dir).code == 0);

  std::fstream f(dir / "out" / "phi.hktg",
                 std::ios::in | std::ios::out | std::ios::binary);
  REQUIRE(f.good());
  f.put('X');
  f.close();

  CHECK(run_cli("verify --config " + cfg.string(), dir).code == 2);
}

TEST_CASE("lemma sampling run stays within tolerance and records margins") {
  const fs::path dir = fresh_dir("lemmas");
  const fs::path cfg = dir / "run.cfg";
  write_file(cfg,
             "[problem]\nfamily = qma\nn = 1\ndims = 8\n"
             "[lemmas]\nsamples = 150\n"
             "[solver]\nseed = 42\n"
             "[output]\ndir = " +
                 (dir / "out").string() + "\n");

  const RunResult res = run_cli("lemmas --config " + cfg.string(), dir);
  CHECK(res.code == 0);

  const json rep = read_json(dir / "out" / "lemmas_report.json");
  CHECK(rep.at("samples") == 150);
  CHECK(rep.at("seed") == 42);
  CHECK(rep.at("families").size() == 4);
  CHECK(rep.at("max_pairing_gap_rel").get<double>() <= 1e-9);
  CHECK(rep.at("max_closed_form_error").get<double>() <= 1e-9);
  CHECK(rep.at("min_blocki_gap").get<double>() >= -1e-9);
  CHECK(rep.at("min_sroka_gap").get<double>() >= -1e-9);
  CHECK(rep.at("min_concavity_gap").get<double>() >= -1e-12);
}

TEST_CASE("amplitude sweep emits the csv table") {
  const fs::path dir = fresh_dir("sweep");
  const fs::path cfg = dir / "run.cfg";
  write_file(cfg,
             "[problem]\nfamily = qma\nn = 1\ndims = 8\n"
             "[sweep]\namplitudes = 0.02, 0.05\ndouble_grid = false\n"
             "[output]\ndir = " +
                 (dir / "out").string() + "\n");

  const RunResult res = run_cli("sweep --config " + cfg.string(), dir);
  CHECK(res.code == 0);

  std::istringstream csv(slurp(dir / "out" / "sweep.csv"));
  std::string line;
  REQUIRE(std::getline(csv, line));
  CHECK(line == "amplitude,lap_ratio,lam1_ratio,resolution");
  int data_rows = 0;
  bool saw_hash = false;
  while (std::getline(csv, line)) {
    if (line.rfind("#", 0) == 0) {
      saw_hash = saw_hash || line.find("config_hash=") != std::string::npos;
      continue;
    }
    if (line.empty()) continue;
    ++data_rows;
    CHECK(line.back() == '8');  // resolution column
  }
  CHECK(data_rows == 2);
  CHECK(saw_hash);
}

TEST_CASE("structure audit accepts the stock families") {
  const fs::path dir = fresh_dir("structure");
  const fs::path cfg = dir / "run.cfg";
  write_file(cfg,
             "[problem]\nfamily = qma\nn = 2\ndims = 8\n"
             "[structure]\nsamples = 60\n"
             "[output]\ndir = " +
                 (dir / "out").string() + "\n");

  const RunResult res = run_cli("structure --config " + cfg.string(), dir);
  CHECK(res.code == 0);

  const json rep = read_json(dir / "out" / "structure_report.json");
  CHECK(rep.at("all_ok") == true);
  CHECK(rep.at("family") == "qma");
  CHECK(rep.at("n") == 2);
  CHECK(rep.at("samples") == 60);
  CHECK(rep.at("concave") == true);
  CHECK(rep.at("grads_positive") == true);
  CHECK(rep.at("rays_diverge") == true);
}
