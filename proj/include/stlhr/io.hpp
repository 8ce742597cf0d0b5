#pragma once

#include "stlhr/csv.hpp"
#include "stlhr/diagnostics.hpp"
#include "stlhr/estimation.hpp"
#include "stlhr/inference.hpp"
#include "stlhr/simulation.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace stlhr {

std::string library_version();

/// How an input CSV maps onto a Dataset.
struct DataLayout {
  std::vector<std::string> covariates;  // covariate columns, in order
  std::string time_column = "time";
  std::string status_column = "status";
  bool long_format = false;  // (id, start, stop, status, covariates) rows
  std::string id_column = "id";
  std::string start_column = "start";
  std::string stop_column = "stop";
  std::optional<double> tau;
};

struct AnalysisConfig {
  std::string input;
  DataLayout layout;
  std::string constraint = "none";  // none | ph | po
  bool centering = true;
  std::string covariance = "information";  // information | profile
  std::vector<std::string> tests;           // e.g. H1, H4, LRT-H4
  std::string output_dir = ".";
  std::uint64_t seed = 1;
};

Dataset parse_dataset(const csv::Table& table, const DataLayout& layout);
Dataset parse_dataset(const std::string& path, const DataLayout& layout);

/// CSV text for a dataset: wide when every path is constant, long otherwise.
/// Covariate columns are named x1..xp.
std::string dataset_to_csv(const Dataset& data);
DataLayout default_layout(const Dataset& data);

/// FNV-1a 64-bit hash, printed as 16 hex digits.
std::string config_hash(const std::string& canonical_config);

/// Line-oriented report: key=value lines and named CSV blocks delimited by
/// "begin_csv <name>" / "end_csv".
class Report {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void add_table(const std::string& name, std::vector<std::string> header,
                 std::vector<std::vector<std::string>> rows);
  std::string str() const;
  void write(const std::string& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  struct Block {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
  };
  std::vector<Block> blocks_;
};

/// Report blocks shared by the CLI and tests.
csv::Table estimates_table(const FitResult& fit, const std::vector<std::string>& covariate_names, double level);
csv::Table baseline_table(const FitResult& fit);
csv::Table tests_table(const std::vector<TestResult>& results);
csv::Table curve_table(const StepCurve& curve, const std::string& group = {});
csv::Table summary_table(const ReplicationSummary& summary);
csv::Table rejection_table(const ReplicationSummary& summary);

std::string table_to_csv(const csv::Table& table);
void write_text(const std::string& path, const std::string& text);

/// Thread count from STLHR_THREADS; 0 when unset or invalid.
int threads_from_environment();

}  // namespace stlhr
