#include "stlhr/io.hpp"

#include "stlhr/error.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace stlhr {

std::string library_version() { return STLHR_VERSION; }

namespace {

double numeric_cell(const csv::Table& t, std::size_t row, std::size_t col) {
  const auto& cell = t.rows[row][col];
  double v = 0.0;
  if (cell.empty()) {
    throw DataError("row " + std::to_string(row + 1) + ", column '" + t.header[col] + "': missing value");
  }
  if (!csv::parse_double(cell, v)) {
    throw DataError("row " + std::to_string(row + 1) + ", column '" + t.header[col] + "': malformed number '" +
                    cell + "'");
  }
  return v;
}

bool status_cell(const csv::Table& t, std::size_t row, std::size_t col) {
  const double v = numeric_cell(t, row, col);
  if (v != 0.0 && v != 1.0) {
    throw DataError("row " + std::to_string(row + 1) + ", column '" + t.header[col] + "': status must be 0 or 1");
  }
  return v == 1.0;
}

double time_cell(const csv::Table& t, std::size_t row, std::size_t col) {
  const double v = numeric_cell(t, row, col);
  if (v < 0.0) throw DataError("row " + std::to_string(row + 1) + ", column '" + t.header[col] + "': negative time");
  return v;
}

Vector covariate_row(const csv::Table& t, std::size_t row, const std::vector<std::size_t>& cols) {
  Vector x(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) x(static_cast<Eigen::Index>(j)) = numeric_cell(t, row, cols[j]);
  return x;
}

std::vector<std::string> cells(const std::vector<double>& values) {
  std::vector<std::string> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(csv::format(v));
  return out;
}

}  // namespace

Dataset parse_dataset(const csv::Table& table, const DataLayout& layout) {
  if (layout.covariates.empty()) throw DataError("no covariate columns selected");
  std::vector<std::size_t> cov_cols;
  for (const auto& name : layout.covariates) cov_cols.push_back(table.column(name));
  const auto status_col = table.column(layout.status_column);
  if (table.rows.empty()) throw DataError("input has no data rows");

  std::vector<SurvivalRecord> records;
  if (!layout.long_format) {
    const auto time_col = table.column(layout.time_column);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      records.push_back({time_cell(table, r, time_col), status_cell(table, r, status_col),
                         CovariatePath::constant(covariate_row(table, r, cov_cols))});
    }
  } else {
    const auto id_col = table.column(layout.id_column);
    const auto start_col = table.column(layout.start_column);
    const auto stop_col = table.column(layout.stop_column);
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::size_t>> rows_of;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const auto& id = table.rows[r][id_col];
      if (id.empty()) throw DataError("row " + std::to_string(r + 1) + ": missing id");
      auto [it, inserted] = rows_of.try_emplace(id);
      if (inserted) order.push_back(id);
      it->second.push_back(r);
    }
    for (const auto& id : order) {
      auto rows = rows_of[id];
      std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
        return time_cell(table, a, start_col) < time_cell(table, b, start_col);
      });
      std::vector<double> breaks;
      std::vector<Vector> values;
      double expected = 0.0;
      bool event = false;
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto r = rows[k];
        const double start = time_cell(table, r, start_col);
        const double stop = time_cell(table, r, stop_col);
        const std::string where = "subject '" + id + "', row " + std::to_string(r + 1);
        if (!(stop > start)) throw DataError(where + ": interval stop must exceed start");
        if (start < expected) throw DataError(where + ": overlapping intervals");
        if (start > expected) throw DataError(where + ": gap between intervals");
        const bool s = status_cell(table, r, status_col);
        if (s && k + 1 != rows.size()) throw DataError(where + ": event status on a non-final interval");
        event = s;
        breaks.push_back(start);
        values.push_back(covariate_row(table, r, cov_cols));
        expected = stop;
      }
      records.push_back({expected, event, CovariatePath(std::move(breaks), std::move(values))});
    }
  }
  try {
    return Dataset(std::move(records), layout.tau);
  } catch (const StructuralError& e) {
    throw DataError(e.what());
  }
}

Dataset parse_dataset(const std::string& path, const DataLayout& layout) {
  return parse_dataset(csv::read_file(path), layout);
}

DataLayout default_layout(const Dataset& data) {
  DataLayout layout;
  for (std::size_t j = 0; j < data.dimension(); ++j) layout.covariates.push_back("x" + std::to_string(j + 1));
  layout.long_format = false;
  for (const auto& r : data.records()) layout.long_format = layout.long_format || !r.covariates.time_invariant();
  return layout;
}

std::string dataset_to_csv(const Dataset& data) {
  const DataLayout layout = default_layout(data);
  std::ostringstream os;
  std::vector<std::string> header;
  if (layout.long_format) {
    header = {"id", "start", "stop", "status"};
  } else {
    header = {"time", "status"};
  }
  header.insert(header.end(), layout.covariates.begin(), layout.covariates.end());
  csv::write_row(os, header);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& rec = data.records()[i];
    const auto breaks = rec.covariates.breakpoints();
    const auto& values = rec.covariates.values();
    if (!layout.long_format) {
      std::vector<std::string> row{csv::format(rec.time), rec.event ? "1" : "0"};
      for (Eigen::Index j = 0; j < values[0].size(); ++j) row.push_back(csv::format(values[0](j)));
      csv::write_row(os, row);
      continue;
    }
    // Pieces starting at or after the follow-up time carry no information.
    std::size_t used = 1;
    while (used < breaks.size() && breaks[used] < rec.time) ++used;
    for (std::size_t k = 0; k < used; ++k) {
      const double stop = k + 1 < used ? breaks[k + 1] : rec.time;
      const bool last = k + 1 == used;
      std::vector<std::string> row{std::to_string(i + 1), csv::format(breaks[k]), csv::format(stop),
                                   last && rec.event ? "1" : "0"};
      for (Eigen::Index j = 0; j < values[k].size(); ++j) row.push_back(csv::format(values[k](j)));
      csv::write_row(os, row);
    }
  }
  return os.str();
}

std::string config_hash(const std::string& canonical_config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_config) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void Report::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void Report::set(const std::string& key, double value) { set(key, csv::format(value)); }

void Report::add_table(const std::string& name, std::vector<std::string> header,
                       std::vector<std::vector<std::string>> rows) {
  blocks_.push_back({name, std::move(header), std::move(rows)});
}

std::string Report::str() const {
  std::ostringstream os;
  for (const auto& [k, v] : entries_) os << k << '=' << v << '\n';
  for (const auto& b : blocks_) {
    os << "begin_csv " << b.name << '\n';
    csv::write_row(os, b.header);
    for (const auto& r : b.rows) csv::write_row(os, r);
    os << "end_csv\n";
  }
  return os.str();
}

void Report::write(const std::string& path) const { write_text(path, str()); }

csv::Table estimates_table(const FitResult& fit, const std::vector<std::string>& names, double level) {
  csv::Table t;
  t.header = {"parameter", "estimate", "se", "low", "high", "ratio", "ratio_low", "ratio_high"};
  const auto p = fit.theta_hat.dimension();
  std::vector<std::string> labels;
  auto label = [&](std::size_t j) { return j < names.size() ? names[j] : "x" + std::to_string(j + 1); };
  switch (fit.constraint.kind) {
    case Constraint::Kind::none:
      for (std::size_t j = 0; j < p; ++j) labels.push_back("beta_" + label(j));
      for (std::size_t j = 0; j < p; ++j) labels.push_back("gamma_" + label(j));
      break;
    case Constraint::Kind::proportional_hazards:
    case Constraint::Kind::proportional_odds:
      for (std::size_t j = 0; j < p; ++j) labels.push_back("beta_" + label(j));
      break;
    case Constraint::Kind::fixed_theta:
      break;
  }
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const bool have_cov = fit.covariance_theta.rows() == static_cast<Eigen::Index>(labels.size());
    const auto ci = have_cov ? confidence_interval(fit, k, level)
                             : confidence_interval(fit.free_theta()(static_cast<Eigen::Index>(k)),
                                                   std::numeric_limits<double>::quiet_NaN(), level);
    t.rows.push_back({labels[k], csv::format(ci.estimate), csv::format(ci.se), csv::format(ci.low),
                      csv::format(ci.high), csv::format(ci.ratio), csv::format(ci.ratio_low),
                      csv::format(ci.ratio_high)});
  }
  return t;
}

csv::Table baseline_table(const FitResult& fit) {
  csv::Table t;
  t.header = {"time", "jump", "cumulative"};
  const auto times = fit.lambda_hat.times();
  const auto jumps = fit.lambda_hat.jumps();
  double cum = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    cum += jumps[k];
    t.rows.push_back(cells({times[k], jumps[k], cum}));
  }
  return t;
}

csv::Table tests_table(const std::vector<TestResult>& results) {
  csv::Table t;
  t.header = {"hypothesis", "method", "statistic", "dof", "p_value"};
  for (const auto& r : results) {
    t.rows.push_back({r.hypothesis.name(), r.method, csv::format(r.statistic), std::to_string(r.dof),
                      csv::format(r.p_value)});
  }
  return t;
}

csv::Table curve_table(const StepCurve& curve, const std::string& group) {
  csv::Table t;
  t.header = {"time", "value"};
  if (!group.empty()) t.header.push_back("group");
  for (std::size_t k = 0; k < curve.times.size(); ++k) {
    std::vector<std::string> row{csv::format(curve.times[k]), csv::format(curve.values[k])};
    if (!group.empty()) row.push_back(group);
    t.rows.push_back(std::move(row));
  }
  return t;
}

csv::Table summary_table(const ReplicationSummary& s) {
  csv::Table t;
  t.header = {"parameter", "truth", "est", "se", "see", "cp", "bias", "variance", "mse"};
  for (const auto& p : s.parameters) {
    std::vector<std::string> row{p.name};
    auto more = cells({p.truth, p.mean, p.sd, p.mean_se, p.coverage, p.bias, p.variance, p.mse});
    row.insert(row.end(), more.begin(), more.end());
    t.rows.push_back(std::move(row));
  }
  return t;
}

csv::Table rejection_table(const ReplicationSummary& s) {
  csv::Table t;
  t.header = {"hypothesis", "rejection_rate"};
  for (const auto& r : s.rejections) t.rows.push_back({r.hypothesis, csv::format(r.rate)});
  return t;
}

std::string table_to_csv(const csv::Table& table) {
  std::ostringstream os;
  csv::write_row(os, table.header);
  for (const auto& r : table.rows) csv::write_row(os, r);
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
  if (!out) throw DataError("write to '" + path + "' failed");
}

int threads_from_environment() {
  const char* v = std::getenv("STLHR_THREADS");
  if (!v || !*v) return 0;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n <= 0 || n > 4096) return 0;
  return static_cast<int>(n);
}

}  // namespace stlhr
