#pragma once

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "irtrank/irt.hpp"
#include "irtrank/response_matrix.hpp"

namespace irtrank {

// Per-dataset aggregates of the fitted item parameters.
// Rows loaded from the parameter fixture carry means only: item_level is false and the
// spread fields are NaN.
struct DatasetSummary {
  std::string dataset_id;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double mean_c = 0.0;
  double std_a = 0.0;
  double std_b = 0.0;
  double std_c = 0.0;
  double pct_negative_a = 0.0;
  bool item_level = true;
};

struct BenchmarkTable {
  std::vector<DatasetSummary> summaries;
  std::map<std::string, DatasetMeta> metadata;

  // Throws DuplicateRespondent on repeated ids, NotFound for metadata without a summary.
  void validate() const;
  const DatasetSummary& summary(const std::string& dataset_id) const;
};

// Columns bin,dataset,difficulty,discrimination,guessing. Throws ShapeError / DomainError.
BenchmarkTable load_parameter_fixture(std::istream& source);

// Means and population standard deviations over items; pct_negative_a counts a < 0.
// Throws EmptyInput for a model without items.
DatasetSummary summarize_dataset(const IrtModel& model);

enum class SummaryKey { mean_a, mean_b, mean_c, std_a, std_b, std_c };
SummaryKey parse_summary_key(const std::string& name);  // throws DomainError
std::string to_string(SummaryKey key);
double summary_value(const DatasetSummary& s, SummaryKey key);

// Sizes of n items split into n_bins contiguous chunks; the last n % n_bins chunks get
// one extra. Throws DomainError when n_bins < 1 or n_bins > n.
std::vector<std::size_t> chunk_sizes(std::size_t n, int n_bins);

struct Bin {
  int index = 0;  // 1-based
  std::vector<std::string> dataset_ids;
  double mean_key = 0.0;
  double mean_b = 0.0;
  double mean_a = 0.0;
};

// Stable sort by key (ties keep table order), then chunk. Spread keys require
// item-level summaries (DomainError otherwise).
std::vector<Bin> make_bins(const BenchmarkTable& table, SummaryKey key, int n_bins,
                           bool descending);

struct BenchmarkPercentages {
  double pct_b_above_0 = 0.0;
  double pct_b_above_1 = 0.0;
  double pct_positive_a = 0.0;
};

// Strict inequalities on mean_b and mean_a. Throws EmptyInput.
BenchmarkPercentages benchmark_percentages(const BenchmarkTable& table);

enum class SubsetStrategy {
  difficulty_asc,
  discrimination_asc,
  low_std_b,
  high_std_b,
  low_std_a,
  high_std_a
};
SubsetStrategy parse_subset_strategy(const std::string& name);  // throws DomainError
std::string to_string(SubsetStrategy strategy);
const std::vector<SubsetStrategy>& all_subset_strategies();

// Dataset ids in ascending key order, ties by id. The std strategies keep the
// floor(N/2) smallest (low) or the remaining largest (high) deviations.
std::vector<std::string> subset_strategy(const BenchmarkTable& table, SubsetStrategy strategy);

// Pearson r, or nullopt when fewer than 2 points or either column is constant.
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);

struct CorrelationMatrix {
  std::vector<std::string> fields;      // metadata rows
  std::vector<std::string> aggregates;  // mean_a ... std_c
  std::vector<std::vector<std::optional<double>>> r;
  std::vector<std::string> warnings;
  std::size_t datasets = 0;
};

// Uses the datasets that have metadata. Throws DomainError below 3 such datasets.
CorrelationMatrix correlate_metadata(const BenchmarkTable& table);
// Undefined entries are written as NA.
void write_correlation_csv(std::ostream& out, const CorrelationMatrix& m);

struct ProbabilityBin {
  int index = 0;
  std::vector<std::string> dataset_ids;
  double mean_key = 0.0;
  std::map<std::string, double> probability;  // classifier -> mean correct probability
};

// Datasets ordered ascending by a metadata field (ties by id) and chunked; each entry is
// the mean over the bin's datasets of the classifier's mean ICC probability over items.
// Throws NotFound for missing metadata, model or classifier.
std::vector<ProbabilityBin> bin_probability(const BenchmarkTable& table,
                                            const std::map<std::string, IrtModel>& models,
                                            const std::string& metadata_field, int n_bins,
                                            const std::vector<std::string>& classifiers);

// Bin discrimination means quoted in the source text for the 6 difficulty bins of the
// parameter fixture. They cannot be reproduced from the table itself.
inline constexpr double kQuotedHardestBinDiscrimination = -2.44;
inline constexpr double kQuotedEasiestBinDiscrimination = 20.09;
std::string discrimination_discrepancy_note(const std::vector<Bin>& bins);

}  // namespace irtrank
