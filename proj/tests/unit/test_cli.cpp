#include "helpers.hpp"
#include "oracles.hpp"
#include "stlhr/cli.hpp"
#include "stlhr/io.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace stlhr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("stlhr_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run(std::vector<std::string> args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

double cell(const csv::Table& t, std::size_t row, const std::string& col) {
  double v = 0.0;
  REQUIRE(csv::parse_double(t.rows[row][t.column(col)], v));
  return v;
}

}  // namespace

TEST_CASE("km on the four-record example") {
  const auto dir = scratch("km");
  write_text((dir / "in.csv").string(), "time,status\n1,0\n2,1\n3,0\n4,1\n");
  REQUIRE(run({"km", "-i", (dir / "in.csv").string(), "-o", dir.string()}) == exit_ok);
  const auto t = csv::read_file((dir / "km.csv").string());
  std::vector<double> values;
  for (std::size_t r = 0; r < t.rows.size(); ++r) values.push_back(cell(t, r, "value"));
  REQUIRE(values.size() == 3);
  CHECK(values[0] == 1.0);
  CHECK(values[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(values[2] == 0.0);
  CHECK(cell(t, 1, "time") == 2.0);
  CHECK(cell(t, 2, "time") == 4.0);
}

TEST_CASE("fit --constraint ph matches the Cox oracle") {
  const auto dir = scratch("ph");
  const Dataset d = testing::scenario_dataset("d", 200, 21);
  const auto in = (dir / "in.csv").string();
  write_text(in, dataset_to_csv(d));
  const std::string before = slurp(in);
  REQUIRE(run({"fit", "-i", in, "--covariates", "x1", "--constraint", "ph", "--no-center", "-o", dir.string()}) ==
          exit_ok);
  CHECK(slurp(in) == before);
  const auto cox = oracle::cox_newton(d);
  REQUIRE(cox.converged);
  const auto est = csv::read_file((dir / "estimates.csv").string());
  REQUIRE(est.rows.size() == 1);
  CHECK(std::abs(cell(est, 0, "estimate") - cox.beta(0)) < 1e-6);
  const auto base = csv::read_file((dir / "baseline.csv").string());
  REQUIRE(base.rows.size() == cox.jumps.size());
  for (std::size_t k = 0; k < cox.jumps.size(); ++k) {
    CHECK(cell(base, k, "time") == cox.times[k]);
    CHECK(std::abs(cell(base, k, "jump") / cox.jumps[k] - 1.0) < 1e-6);
  }
  const std::string report = slurp(dir / "report.txt");
  CHECK(report.find("config_hash=") != std::string::npos);
  CHECK(report.find("seed=1\n") != std::string::npos);
  CHECK(report.find("version=" + library_version()) != std::string::npos);
  CHECK(report.find("begin_csv estimates") != std::string::npos);

  // Centering changes only the baseline scale, never the Cox slope.
  const auto dir2 = scratch("ph_centered");
  REQUIRE(run({"fit", "-i", in, "--covariates", "x1", "--constraint", "ph", "-o", dir2.string()}) == exit_ok);
  CHECK(std::abs(cell(csv::read_file((dir2 / "estimates.csv").string()), 0, "estimate") - cox.beta(0)) < 1e-6);
}

TEST_CASE("config file with flag override") {
  const auto dir = scratch("config");
  const auto in = (dir / "in.csv").string();
  write_text(in, dataset_to_csv(testing::scenario_dataset("a", 120, 5)));
  const auto cfg = (dir / "run.ini").string();
  write_text(cfg, "input=\"" + in + "\"\ncovariates=\"x1\"\nconstraint=\"po\"\noutput-dir=\"" + dir.string() +
                      "\"\nseed=9\n");
  REQUIRE(run({"fit", "--config", cfg}) == exit_ok);
  CHECK(slurp(dir / "report.txt").find("constraint=po") != std::string::npos);
  CHECK(slurp(dir / "report.txt").find("seed=9\n") != std::string::npos);
  const std::string hash_po = slurp(dir / "report.txt").substr(slurp(dir / "report.txt").find("config_hash="), 28);
  REQUIRE(run({"fit", "--config", cfg, "--constraint", "ph"}) == exit_ok);
  CHECK(slurp(dir / "report.txt").find("constraint=ph") != std::string::npos);
  CHECK(slurp(dir / "report.txt").find(hash_po) == std::string::npos);
}

TEST_CASE("test and diagnose subcommands write their tables") {
  const auto dir = scratch("td");
  const auto in = (dir / "in.csv").string();
  write_text(in, dataset_to_csv(testing::mixed_dataset(120, 8)));
  REQUIRE(run({"test", "-i", in, "--long", "--covariates", "x1", "--tests", "H1,H4,H5,LRT-H4,LRT-H2", "-o",
               dir.string()}) == exit_ok);
  const auto tests = csv::read_file((dir / "tests.csv").string());
  CHECK(tests.rows.size() == 5);
  for (std::size_t r = 0; r < tests.rows.size(); ++r) {
    const double pv = cell(tests, r, "p_value");
    CHECK(pv >= 0.0);
    CHECK(pv <= 1.0);
  }
  REQUIRE(run({"diagnose", "-i", in, "--long", "--covariates", "x1", "--resamples", "200", "-o", dir.string()}) ==
          exit_ok);
  for (const char* f : {"residuals.csv", "score_process.csv", "kj.csv", "curves.csv", "report.txt"}) {
    CHECK(fs::exists(dir / f));
  }
  CHECK(csv::read_file((dir / "residuals.csv").string()).rows.size() == 120);
}

TEST_CASE("exit codes") {
  const auto dir = scratch("codes");
  std::string err;
  CHECK(run({}, &err) == exit_usage);
  CHECK(run({"frobnicate"}, &err) == exit_usage);
  CHECK(run({"fit"}, &err) == exit_usage);
  CHECK(run({"fit", "-i", "x.csv", "--constraint", "bogus"}, &err) == exit_usage);
  const auto bad = (dir / "bad.csv").string();
  write_text(bad, "time,status,x\n1,1,0\n2,1,oops\n");
  const std::string before = slurp(bad);
  CHECK(run({"fit", "-i", bad, "--covariates", "x", "-o", dir.string()}, &err) == exit_data);
  CHECK(err.find("row 2, column 'x'") != std::string::npos);
  CHECK(slurp(bad) == before);
  CHECK(run({"fit", "-i", (dir / "missing.csv").string(), "--covariates", "x"}, &err) == exit_data);

  // A dataset where the unconstrained NPMLE diverges: all events for x = 1 precede every x = 0 time.
  const auto sep = (dir / "sep.csv").string();
  write_text(sep, "time,status,x\n0.1,1,1\n0.2,1,1\n0.3,1,1\n1,1,0\n2,1,0\n3,0,0\n");
  const int code = run({"fit", "-i", sep, "--covariates", "x", "-o", dir.string()}, &err);
  CHECK(code == exit_convergence);
  CHECK(fs::exists(dir / "report.txt"));
  CHECK(slurp(dir / "report.txt").find("converged=false") != std::string::npos);
}

TEST_CASE("executable reports exit codes to the shell") {
  const std::string exe = STLHR_CLI_PATH;
  const auto dir = scratch("exe");
  const auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  CHECK(status(exe + " --help") == 0);
  CHECK(status(exe + " fit") == 1);
  write_text((dir / "in.csv").string(), "time,status\n1,0\n2,1\n");
  CHECK(status(exe + " km -i " + (dir / "in.csv").string() + " -o " + dir.string()) == 0);
  CHECK(status(exe + " km -i " + (dir / "nope.csv").string()) == 2);
}

TEST_CASE("simulate is byte-for-byte reproducible") {
  const auto a = scratch("sim_a"), b = scratch("sim_b");
  const std::vector<std::string> base{"simulate", "--scenario", "a", "--n", "200", "--reps", "1000", "--seed", "7"};
  auto with = [&](const fs::path& dir, const std::string& threads) {
    auto v = base;
    v.insert(v.end(), {"-o", dir.string(), "--threads", threads});
    return v;
  };
  REQUIRE(run(with(a, "1")) == exit_ok);
  REQUIRE(run(with(b, "4")) == exit_ok);
  CHECK(slurp(a / "summary.csv") == slurp(b / "summary.csv"));
  CHECK(slurp(a / "rejections.csv") == slurp(b / "rejections.csv"));
  CHECK_FALSE(slurp(a / "summary.csv").empty());
}
