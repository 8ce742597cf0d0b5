#include "stlhr/cli.hpp"

#include "stlhr/error.hpp"
#include "stlhr/io.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace stlhr {

namespace {

struct Options {
  AnalysisConfig config;
  std::string covariates;  // comma-separated
  std::string tests = "H1,H2,H3,H4,H5";
  std::string coordinates;  // 1-based, comma-separated; empty = each separately
  std::string group;
  double level = 0.95;
  double tau = -1.0;
  int threads = 0;
  // diagnose
  double delta = -1.0;
  std::size_t resamples = 1000;
  // simulate
  std::string scenario = "a";
  std::string beta, gamma;
  std::size_t n = 200;
  std::size_t reps = 1000;
  std::string law = "uniform";
  std::string targets = "table1,table2,table3";
  double test_level = 0.05;
};

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Vector parse_vector(const std::string& s, const std::string& what) {
  const auto items = split(s);
  Vector v(static_cast<Eigen::Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!csv::parse_double(items[i], v(static_cast<Eigen::Index>(i)))) {
      throw CLI::ValidationError(what, "not a number: " + items[i]);
    }
  }
  return v;
}

Constraint parse_constraint(const std::string& s) {
  if (s == "none") return Constraint::none();
  if (s == "ph") return Constraint::proportional_hazards();
  if (s == "po") return Constraint::proportional_odds();
  throw CLI::ValidationError("--constraint", "expected none, ph or po");
}

std::string path_in(const Options& o, const std::string& file) {
  return (std::filesystem::path(o.config.output_dir) / file).string();
}

void add_table(Report& report, const std::string& name, const csv::Table& t) {
  report.add_table(name, t.header, t.rows);
}

struct Loaded {
  csv::Table table;
  Dataset raw;
  Dataset data;  // centered if requested
};

Loaded load(const Options& o) {
  if (o.config.input.empty()) throw CLI::RequiredError("--input");
  DataLayout layout = o.config.layout;
  layout.covariates = split(o.covariates);
  if (o.tau > 0.0) layout.tau = o.tau;
  csv::Table table = csv::read_file(o.config.input);
  Dataset raw = parse_dataset(table, layout);
  Dataset data = o.config.centering ? raw.centered() : raw;
  return {std::move(table), std::move(raw), std::move(data)};
}

void provenance(Report& report, const Options& o, const std::string& command, const std::string& canonical) {
  report.set("command", command);
  report.set("version", library_version());
  report.set("config_hash", config_hash(command + "\n" + canonical));
  report.set("seed", std::to_string(o.config.seed));
}

void describe_fit(Report& report, const FitResult& f, const Dataset& data) {
  report.set("constraint", f.constraint.name());
  report.set("n", std::to_string(data.size()));
  report.set("events", std::to_string(static_cast<std::size_t>(
                           std::count_if(data.records().begin(), data.records().end(),
                                         [](const SurvivalRecord& r) { return r.event; }))));
  report.set("tau", data.tau());
  report.set("loglik", f.loglik);
  report.set("converged", f.converged ? "true" : "false");
  report.set("iterations", std::to_string(f.iterations));
  report.set("gradient_norm", f.gradient_norm);
  report.set("clamp_count", std::to_string(f.clamp_count));
  report.set("covariance_source",
             f.covariance_source == CovarianceSource::profile_likelihood ? "profile" : "information");
  if (!f.message.empty()) report.set("message", f.message);
  if (!f.covariance_error.empty()) report.set("covariance_error", f.covariance_error);
  std::ostringstream offsets;
  const auto& off = data.centering_offsets();
  for (Eigen::Index j = 0; j < off.size(); ++j) offsets << (j ? "," : "") << csv::format(off(j));
  report.set("centering_offsets", offsets.str());
}

FitResult fit_with_covariance(const Dataset& data, const Constraint& c, const Options& o) {
  FitResult f = fit(data, c);
  if (o.config.covariance == "profile" && f.converged && c.kind != Constraint::Kind::fixed_theta) {
    f.covariance_theta = profile_covariance(data, f);
    f.covariance_source = CovarianceSource::profile_likelihood;
  }
  return f;
}

int cmd_fit(const Options& o, const std::string& canonical, std::ostream& out) {
  const Loaded in = load(o);
  const FitResult f = fit_with_covariance(in.data, parse_constraint(o.config.constraint), o);
  const auto names = split(o.covariates);
  const csv::Table est = estimates_table(f, names, o.level);
  const csv::Table base = baseline_table(f);
  Report report;
  provenance(report, o, "fit", canonical);
  describe_fit(report, f, in.data);
  add_table(report, "estimates", est);
  add_table(report, "baseline", base);
  std::filesystem::create_directories(o.config.output_dir);
  write_text(path_in(o, "estimates.csv"), table_to_csv(est));
  write_text(path_in(o, "baseline.csv"), table_to_csv(base));
  report.write(path_in(o, "report.txt"));
  out << table_to_csv(est);
  return f.converged ? exit_ok : exit_convergence;
}

int cmd_test(const Options& o, const std::string& canonical, std::ostream& out) {
  const Loaded in = load(o);
  const auto p = in.data.dimension();
  std::vector<std::vector<std::size_t>> coordinate_sets;
  if (o.coordinates.empty()) {
    for (std::size_t j = 0; j < p; ++j) coordinate_sets.push_back({j});
  } else {
    std::vector<std::size_t> set;
    for (const auto& item : split(o.coordinates)) {
      double v = 0.0;
      if (!csv::parse_double(item, v) || v < 1.0 || v > static_cast<double>(p) || v != std::floor(v)) {
        throw CLI::ValidationError("--coordinates", "index out of range: " + item);
      }
      set.push_back(static_cast<std::size_t>(v) - 1);
    }
    coordinate_sets.push_back(set);
  }
  const auto wanted = split(o.tests);
  const FitResult full = fit_with_covariance(in.data, Constraint::none(), o);
  std::map<std::string, FitResult> sub;
  auto sub_fit = [&](const std::string& key, const Constraint& c) -> const FitResult& {
    auto it = sub.find(key);
    if (it == sub.end()) it = sub.emplace(key, fit_with_covariance(in.data, c, o)).first;
    return it->second;
  };
  bool converged = full.converged;
  std::vector<TestResult> results;
  for (const auto& name : wanted) {
    if (name == "LRT-H4" || name == "LRT-H2") {
      const FitResult& c = name == "LRT-H4" ? sub_fit("ph", Constraint::proportional_hazards())
                                            : sub_fit("po", Constraint::proportional_odds());
      converged = converged && c.converged;
      if (full.converged && c.converged) results.push_back(likelihood_ratio_test(full, c, static_cast<int>(p)));
      continue;
    }
    const auto kind = Hypothesis::parse_kind(name);
    const FitResult& f = kind == Hypothesis::Kind::H5 ? sub_fit("ph", Constraint::proportional_hazards()) : full;
    converged = converged && f.converged;
    if (!f.converged) continue;
    for (const auto& set : coordinate_sets) results.push_back(wald_test(f, Hypothesis{kind, set}));
  }
  const csv::Table t = tests_table(results);
  Report report;
  provenance(report, o, "test", canonical);
  describe_fit(report, full, in.data);
  add_table(report, "tests", t);
  std::filesystem::create_directories(o.config.output_dir);
  write_text(path_in(o, "tests.csv"), table_to_csv(t));
  report.write(path_in(o, "report.txt"));
  out << table_to_csv(t);
  return converged ? exit_ok : exit_convergence;
}

std::vector<std::string> group_labels(const Loaded& in, const std::string& column) {
  std::vector<std::string> labels(in.raw.size());
  if (column.empty()) return labels;
  const auto col = in.table.column(column);
  if (in.table.rows.size() != in.raw.size()) throw DataError("--group requires wide-format input");
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = in.table.rows[i][col];
  return labels;
}

void append(csv::Table& into, const csv::Table& more) {
  if (into.header.empty()) into.header = more.header;
  into.rows.insert(into.rows.end(), more.rows.begin(), more.rows.end());
}

int cmd_diagnose(const Options& o, const std::string& canonical, std::ostream& out) {
  const Loaded in = load(o);
  const FitResult f = fit(in.data, Constraint::none());
  Report report;
  provenance(report, o, "diagnose", canonical);
  describe_fit(report, f, in.data);
  std::filesystem::create_directories(o.config.output_dir);
  if (!f.converged) {
    report.write(path_in(o, "report.txt"));
    return exit_convergence;
  }
  const auto names = split(o.covariates);
  const auto p = in.data.dimension();

  csv::Table resid;
  resid.header = {"index", "time", "status", "residual"};
  const Vector m = martingale_residuals(f, in.data, in.data.tau());
  for (std::size_t i = 0; i < in.data.size(); ++i) {
    const auto& r = in.data.records()[i];
    resid.rows.push_back({std::to_string(i + 1), csv::format(r.time), r.event ? "1" : "0",
                          csv::format(m(static_cast<Eigen::Index>(i)))});
  }

  const auto times = f.lambda_hat.times();
  const std::vector<double> grid(times.begin(), times.end());
  const auto U = score_process(f, in.data, grid);
  csv::Table score;
  score.header = {"time"};
  for (std::size_t j = 0; j < p; ++j) score.header.push_back("U_beta_" + names[j]);
  for (std::size_t j = 0; j < p; ++j) score.header.push_back("U_gamma_" + names[j]);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    std::vector<std::string> row{csv::format(grid[k])};
    for (Eigen::Index c = 0; c < U[k].size(); ++c) row.push_back(csv::format(U[k](c)));
    score.rows.push_back(std::move(row));
  }

  csv::Table kj;
  kj.header = {"covariate", "statistic", "p_value", "grid_points", "skipped", "resamples"};
  KjOptions kopt;
  kopt.delta = o.delta;
  kopt.resamples = o.resamples;
  kopt.seed = o.config.seed;
  for (std::size_t j = 0; j < p; ++j) {
    const auto r = kj_statistic(f, in.data, j, kopt);
    kj.rows.push_back({names[j], csv::format(r.statistic), csv::format(r.p_value), std::to_string(r.grid_points),
                       std::to_string(r.skipped), std::to_string(r.resamples)});
  }

  const auto labels = group_labels(in, o.group);
  std::vector<std::string> groups = labels;
  std::sort(groups.begin(), groups.end());
  groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
  std::vector<double> curve_grid{0.0};
  curve_grid.insert(curve_grid.end(), grid.begin(), grid.end());
  csv::Table curves;
  for (const auto& g : groups) {
    std::vector<CovariatePath> paths;
    std::vector<SurvivalRecord> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != g) continue;
      paths.push_back(in.data.records()[i].covariates);
      members.push_back(in.data.records()[i]);
    }
    std::vector<std::pair<double, bool>> km_input;
    for (const auto& r : members) km_input.emplace_back(r.time, r.event);
    const std::string suffix = g.empty() ? "" : ":" + g;
    append(curves, curve_table(kaplan_meier(km_input), "km" + suffix));
    append(curves, curve_table(model_fitted_curve(f, paths, curve_grid), "fitted" + suffix));
  }

  add_table(report, "kj", kj);
  write_text(path_in(o, "residuals.csv"), table_to_csv(resid));
  write_text(path_in(o, "score_process.csv"), table_to_csv(score));
  write_text(path_in(o, "kj.csv"), table_to_csv(kj));
  write_text(path_in(o, "curves.csv"), table_to_csv(curves));
  report.write(path_in(o, "report.txt"));
  out << table_to_csv(kj);
  return exit_ok;
}

int cmd_simulate(const Options& o, const std::string& canonical, std::ostream& out) {
  ScenarioSpec spec;
  if (!o.beta.empty() || !o.gamma.empty()) {
    spec.beta = parse_vector(o.beta, "--beta");
    spec.gamma = parse_vector(o.gamma, "--gamma");
  } else {
    spec = ScenarioSpec::named(o.scenario);
  }
  spec.n = o.n;
  spec.replicates = o.reps;
  spec.seed = o.config.seed;
  if (o.law == "uniform") {
    spec.covariate_law = CovariateLaw::uniform;
  } else if (o.law == "binary") {
    spec.covariate_law = CovariateLaw::binary;
  } else {
    throw CLI::ValidationError("--law", "expected uniform or binary");
  }
  StudyTargets targets{false, false, false};
  for (const auto& t : split(o.targets)) {
    if (t == "table1") {
      targets.table1 = true;
    } else if (t == "table2") {
      targets.table2 = true;
    } else if (t == "table3") {
      targets.table3_mse = true;
    } else {
      throw CLI::ValidationError("--targets", "unknown target " + t);
    }
  }
  const ReplicationSummary s = run_replication_study(spec, targets, o.test_level);
  const csv::Table summary = summary_table(s);
  const csv::Table rejections = rejection_table(s);
  Report report;
  provenance(report, o, "simulate", canonical);
  report.set("n", std::to_string(spec.n));
  report.set("replicates", std::to_string(spec.replicates));
  report.set("completed", std::to_string(s.completed));
  report.set("failures", std::to_string(s.failures));
  add_table(report, "summary", summary);
  add_table(report, "rejections", rejections);
  std::filesystem::create_directories(o.config.output_dir);
  write_text(path_in(o, "summary.csv"), table_to_csv(summary));
  write_text(path_in(o, "rejections.csv"), table_to_csv(rejections));
  report.write(path_in(o, "report.txt"));
  out << table_to_csv(summary);
  if (!rejections.rows.empty()) out << table_to_csv(rejections);
  return exit_ok;
}

int cmd_km(const Options& o, std::ostream& out) {
  if (o.config.input.empty()) throw CLI::RequiredError("--input");
  const csv::Table table = csv::read_file(o.config.input);
  const auto tcol = table.column(o.config.layout.time_column);
  const auto scol = table.column(o.config.layout.status_column);
  const auto gcol = o.group.empty() ? std::size_t(-1) : table.column(o.group);
  std::map<std::string, std::vector<std::pair<double, bool>>> groups;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    double t = 0.0, s = 0.0;
    if (!csv::parse_double(table.rows[r][tcol], t) || t < 0.0) {
      throw DataError("row " + std::to_string(r + 1) + ", column '" + table.header[tcol] + "': invalid time");
    }
    if (!csv::parse_double(table.rows[r][scol], s) || (s != 0.0 && s != 1.0)) {
      throw DataError("row " + std::to_string(r + 1) + ", column '" + table.header[scol] + "': status must be 0 or 1");
    }
    groups[gcol == std::size_t(-1) ? std::string() : table.rows[r][gcol]].emplace_back(t, s == 1.0);
  }
  if (groups.empty()) throw DataError("input has no data rows");
  csv::Table curves;
  for (const auto& [g, recs] : groups) append(curves, curve_table(kaplan_meier(recs), g));
  std::filesystem::create_directories(o.config.output_dir);
  write_text(path_in(o, "km.csv"), table_to_csv(curves));
  out << table_to_csv(curves);
  return exit_ok;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Short-term/long-term hazard ratio model: fitting, tests, diagnostics and simulation", "stlhr"};
  app.set_config("--config", "", "key=value / TOML configuration file; command-line flags take precedence");
  app.set_version_flag("--version", library_version());
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  auto& c = o.config;
  app.add_option("-i,--input", c.input, "input CSV");
  app.add_option("--covariates", o.covariates, "comma-separated covariate columns");
  app.add_option("--time", c.layout.time_column, "follow-up time column (wide format)");
  app.add_option("--status", c.layout.status_column, "event indicator column (1 event, 0 censored)");
  app.add_flag("--long", c.layout.long_format, "long format: one row per (id, start, stop) interval");
  app.add_option("--id", c.layout.id_column, "subject id column (long format)");
  app.add_option("--start", c.layout.start_column, "interval start column (long format)");
  app.add_option("--stop", c.layout.stop_column, "interval stop column (long format)");
  app.add_option("--tau", o.tau, "end of study (default: largest observed time)");
  app.add_option("--constraint", c.constraint, "none, ph or po")->check(CLI::IsMember({"none", "ph", "po"}));
  app.add_flag("--center,!--no-center", c.centering, "center covariates at their time-0 means (default on)");
  app.add_option("--covariance", c.covariance, "information or profile")
      ->check(CLI::IsMember({"information", "profile"}));
  app.add_option("--tests", o.tests, "hypotheses: H1..H5, LRT-H2, LRT-H4");
  app.add_option("--coordinates", o.coordinates, "1-based covariate indices tested jointly");
  app.add_option("--group", o.group, "grouping column for km/diagnose curves");
  app.add_option("--level", o.level, "confidence level")->check(CLI::Range(0.0, 1.0));
  app.add_option("-o,--output-dir", c.output_dir, "directory for output files");
  app.add_option("--seed", c.seed, "random seed");
  app.add_option("--threads", o.threads, "worker threads (default: STLHR_THREADS or all cores)");
  app.add_option("--delta", o.delta, "K_j trimming (default 5% of tau)");
  app.add_option("--resamples", o.resamples, "K_j multiplier realizations");
  app.add_option("--scenario", o.scenario, "simulation scenario a, b, c or d");
  app.add_option("--beta", o.beta, "simulation truth beta (comma-separated)");
  app.add_option("--gamma", o.gamma, "simulation truth gamma (comma-separated)");
  app.add_option("--n", o.n, "simulation sample size");
  app.add_option("--reps", o.reps, "simulation replicates");
  app.add_option("--law", o.law, "covariate law: uniform or binary");
  app.add_option("--targets", o.targets, "simulation targets: table1, table2, table3");
  app.add_option("--test-level", o.test_level, "significance level for rejection rates");

  auto* fit_cmd = app.add_subcommand("fit", "fit the model and write estimates, baseline and report");
  auto* test_cmd = app.add_subcommand("test", "Wald and likelihood-ratio tests");
  auto* diag_cmd = app.add_subcommand("diagnose", "residuals, score process, K_j and survival curves");
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo replication study");
  auto* km_cmd = app.add_subcommand("km", "Kaplan-Meier curves per group");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  const int threads = o.threads > 0 ? o.threads : threads_from_environment();
  if (threads > 0) omp_set_num_threads(threads);
  const std::string canonical = app.config_to_str(true, false);

  try {
    if (*fit_cmd) return cmd_fit(o, canonical, out);
    if (*test_cmd) return cmd_test(o, canonical, out);
    if (*diag_cmd) return cmd_diagnose(o, canonical, out);
    if (*sim_cmd) return cmd_simulate(o, canonical, out);
    if (*km_cmd) return cmd_km(o, out);
  } catch (const CLI::Error& e) {
    err << "usage error: " << e.what() << '\n';
    return exit_usage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return exit_data;
  } catch (const StructuralError& e) {
    err << "data error: " << e.what() << '\n';
    return exit_data;
  } catch (const ConvergenceError& e) {
    err << "convergence failure: " << e.what() << '\n';
    return exit_convergence;
  } catch (const SingularMatrixError& e) {
    err << "convergence failure: " << e.what() << '\n';
    return exit_convergence;
  } catch (const EvaluationError& e) {
    err << "convergence failure: " << e.what() << '\n';
    return exit_convergence;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return exit_data;
  }
  return exit_usage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace stlhr
