#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "abstain_al/core.hpp"
#include "abstain_al/finite_bayes.hpp"
#include "abstain_al/sim.hpp"

namespace abstain_al {

/// Parses `<label> <idx>:<val> ...` lines; label 1..l, or -1 for a redundant
/// example. Blank lines and lines starting with '#' are skipped. The label
/// count is `num_labels` when given, else max(2, largest label seen).
Dataset parse_dataset(std::istream& in, std::optional<int> num_labels = std::nullopt);
Dataset load_dataset(const std::string& path, std::optional<int> num_labels = std::nullopt);
void write_dataset(std::ostream& out, const Dataset& data);

/// 100 x mean accuracy. Throws on an empty curve.
double auac(std::span<const double> accuracies);

struct SyntheticSpec {
  int train_targets = 1500;
  int train_redundant = 1500;
  int test = 500;
  int dimension = 20;
  /// Distance between the two class means.
  double separation = 2.5;
  /// Offset of the redundant cloud along a direction orthogonal to the class axis.
  double redundant_offset = 4.0;
  std::uint64_t seed = 0;
};

/// Two unit-variance Gaussian classes along feature 0 plus a redundant cloud
/// centred on their boundary but shifted along feature 1. Returns (train, test);
/// the test split holds target examples only.
std::pair<Dataset, Dataset> make_two_gaussians(const SyntheticSpec& spec);

struct ExperimentConfig {
  std::string train_path;
  std::string test_path;
  std::string redundant_path;
  /// Synthetic data is generated when no train path is given.
  std::optional<SyntheticSpec> synthetic;
  std::vector<std::string> policies{"pl", "alg", "ala", "alw"};
  ScenarioKind scenario = ScenarioKind::unrelated;
  std::vector<double> fractions{0.5};
  int budget = 300;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  /// 0 keeps every eligible example.
  int pool_size = 0;
  double label_prior_variance = 0.5;
  double abstain_prior_variance = 0.5;
  double generator_prior_variance = 0.5;
  std::string output = "results";
  bool write_curves = true;
  /// "plugin" (MAP logistic models) or "finite" (exact posterior over `instance`).
  std::string belief = "plugin";
  std::string instance_path;
};

/// Line-oriented `key = value` pairs; '#' starts a comment. Unknown keys and
/// out-of-range values throw Error("bad_config").
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Pool for one grid cell. The unrelated scenario mixes ceil(q m) redundant
/// examples with m - ceil(q m) targets, sampled with `seed`, keeping the pool
/// size m fixed; other scenarios sample m targets.
Dataset assemble_pool(const Dataset& train, const Dataset* redundant, ScenarioKind scenario,
                      double fraction, int pool_size, std::uint64_t seed);

struct ResultRow {
  std::string policy;
  std::string scenario;
  double fraction = 0.0;
  std::uint64_t seed = 0;
  double auac = 0.0;
  std::vector<double> curve;
};

struct AggregateRow {
  std::string policy;
  std::string scenario;
  double fraction = 0.0;
  double mean_auac = 0.0;
  double stddev_auac = 0.0;
  int runs = 0;
};

struct CellError {
  std::string policy;
  double fraction = 0.0;
  std::uint64_t seed = 0;
  std::string message;
};

struct GridResult {
  std::vector<ResultRow> rows;
  std::vector<AggregateRow> aggregates;
  std::vector<CellError> errors;
};

/// Runs every (policy, fraction, seed) cell. Cells are independent; up to
/// `threads` run at once (0 or 1 = sequential). Output order is fixed.
GridResult run_grid(const ExperimentConfig& config, int threads = 0);

/// Reads ABSTAIN_AL_THREADS (unset or 0 = sequential).
int threads_from_env();

void write_rows_csv(std::ostream& out, const GridResult& result);
void write_aggregate_csv(std::ostream& out, const GridResult& result);
void write_curves_csv(std::ostream& out, const GridResult& result);

/// Writes <output>.csv, <output>_summary.csv, <output>_curves.csv and
/// <output>_manifest.json. Returns the written paths.
std::vector<std::string> write_results(const ExperimentConfig& config, const std::string& config_text,
                                       const GridResult& result);

/// Exact-posterior run on a finite instance. The truth (f, k) is drawn from the
/// induced prior with `seed`; the pool has one featureless example per
/// instance position and doubles as the test set.
RunTrace run_finite_demo(const FiniteBelief& instance, const Policy& policy, int budget, std::uint64_t seed);

/// FNV-1a 64-bit content hash, hex encoded.
std::string content_hash(std::string_view bytes);

}  // namespace abstain_al
