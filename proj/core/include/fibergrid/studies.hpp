#pragma once

// Built-in studies: patch tests, spatial convergence and the penalty sweep.
// Each case is written as a deck, read back and solved through the same path
// as `fibergrid run`, so re-running an emitted deck reproduces its row.

#include "fibergrid/postprocess.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace fibergrid {

/// String-valued study parameters with fixed keys. Lists are comma separated.
class StudyParams {
 public:
  StudyParams() = default;
  explicit StudyParams(std::map<std::string, std::string> defaults) : values_(std::move(defaults)) {}

  /// Throws InputError for an unknown key.
  void set(const std::string& key, const std::string& value);
  /// Applies "key=value" overrides in order.
  void apply(const std::vector<std::string>& overrides);

  double number(const std::string& key) const;
  int integer(const std::string& key) const;
  std::vector<double> list(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

struct CaseResult {
  std::string name;
  bool converged = false;
  std::string message;   // failure diagnostics when not converged
  double runtime = 0.0;  // wall time of setup + solve + export (s)
  SolutionSummary summary;
  std::shared_ptr<const Problem> problem;
  SolveResult solution;
};

/// Loads, solves and exports one deck into `out_dir`. InputError propagates;
/// NonConvergence and SingularSystem are recorded in the result.
CaseResult run_deck_file(const std::filesystem::path& deck, const std::filesystem::path& out_dir);

/// One CSV table plus named scalar results.
struct StudyResult {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::string> failures;  // names of non-converged cases

  double metric(const std::string& key) const;
  void write_csv(const std::filesystem::path& path) const;
  void write_metrics_csv(const std::filesystem::path& path) const;
};

/// patch, patch-helix, patch-discontinuity, convergence, penalty-sweep.
const std::vector<std::string>& study_names();

/// Default parameters of a study. Throws InputError for an unknown name.
StudyParams study_defaults(const std::string& name);

/// Runs every case of a study. Decks go to out/decks, per-case fields to
/// out/cases/<case>, the table to out/<name>.csv and scalar results to
/// out/<name>_metrics.csv.
StudyResult run_study(const std::string& name, const StudyParams& params, const std::filesystem::path& out);

}  // namespace fibergrid
