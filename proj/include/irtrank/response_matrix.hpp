#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace irtrank {

enum class MatrixFormat { csv, json };

// Respondent-by-item table of dichotomous outcomes for one dataset.
// Rows are respondents (classifiers), columns are items (test instances).
class ResponseMatrix {
 public:
  ResponseMatrix() = default;

  // Validates on construction; throws ShapeError, DuplicateRespondent or MalformedCell.
  ResponseMatrix(std::string dataset_id, std::vector<std::string> respondents,
                 std::vector<std::string> item_ids, std::vector<std::vector<int>> rows,
                 std::optional<std::vector<std::string>> true_labels = std::nullopt,
                 std::optional<std::map<std::string, double>> class_counts = std::nullopt);

  const std::string& dataset_id() const { return dataset_id_; }
  const std::vector<std::string>& respondents() const { return respondents_; }
  const std::vector<std::string>& item_ids() const { return item_ids_; }
  std::size_t respondent_count() const { return respondents_.size(); }
  std::size_t item_count() const { return item_ids_.size(); }

  std::uint8_t at(std::size_t respondent, std::size_t item) const {
    return cells_[respondent * item_ids_.size() + item];
  }
  std::span<const std::uint8_t> row(std::size_t respondent) const {
    return {cells_.data() + respondent * item_ids_.size(), item_ids_.size()};
  }
  std::vector<std::uint8_t> column(std::size_t item) const;

  // Throws NotFound.
  std::size_t index_of(const std::string& respondent) const;
  bool contains(const std::string& respondent) const;

  const std::optional<std::vector<std::string>>& true_labels() const { return true_labels_; }
  const std::optional<std::map<std::string, double>>& class_counts() const {
    return class_counts_;
  }

  // Returns a copy with extra rows appended; names must not collide.
  ResponseMatrix with_rows(const std::vector<std::pair<std::string, std::vector<int>>>& rows) const;

  friend bool operator==(const ResponseMatrix&, const ResponseMatrix&) = default;

 private:
  std::string dataset_id_;
  std::vector<std::string> respondents_;
  std::vector<std::string> item_ids_;
  std::vector<std::uint8_t> cells_;
  std::optional<std::vector<std::string>> true_labels_;
  std::optional<std::map<std::string, double>> class_counts_;
};

// Dataset-level descriptors used for correlation and metadata binning.
struct DatasetMeta {
  std::string dataset_id;
  long number_of_classes = 0;
  long number_of_instances = 0;
  long number_of_features = 0;
  double class_entropy = 0.0;
  double dimensionality = 0.0;
  double pct_missing_instances = 0.0;
  double majority_class_pct = 0.0;
  double minority_class_pct = 0.0;

  // Throws DomainError when a percentage leaves [0,100] or minority > majority.
  void validate() const;

  friend bool operator==(const DatasetMeta&, const DatasetMeta&) = default;
};

// Names of the numeric metadata fields, in canonical order.
const std::vector<std::string>& metadata_field_names();
// Throws NotFound for an unknown field name.
double metadata_value(const DatasetMeta& meta, const std::string& field);

// CSV layout: header `respondent,<item ids...>`; one row per respondent. An
// optional row whose respondent cell is `label` carries the per-item true labels.
// JSON layout: {"dataset_id", "respondents", "items", "responses", "true_labels"?,
// "class_counts"?}. `dataset_id` overrides whatever the stream carries when non-empty.
ResponseMatrix parse_response_matrix(std::istream& source, MatrixFormat format,
                                     const std::string& dataset_id = "");
void write_response_matrix(std::ostream& out, const ResponseMatrix& matrix, MatrixFormat format);

std::map<std::string, DatasetMeta> parse_metadata_json(std::istream& source);

// Fraction of 1-cells in the respondent's row. Throws NotFound.
double accuracy(const ResponseMatrix& matrix, const std::string& respondent);

struct ArtificialRow {
  std::string name;
  std::vector<int> responses;
};

struct ArtificialOptions {
  std::array<std::uint64_t, 3> seeds{1, 2, 3};
  // Break arg-max/arg-min ties by the lexicographically smallest label instead of throwing.
  bool lexicographic_tie_break = false;
};

// The seven baseline respondents: optimal, pessimal, majority, minority, rand1..rand3.
std::vector<ArtificialRow> synthesize_artificial(const std::vector<std::string>& true_labels,
                                                 const std::map<std::string, double>& class_counts,
                                                 const ArtificialOptions& options = {});

struct ConventionWarning {
  enum class Kind { cap_exceeded };
  Kind kind;
  std::size_t value;
  std::string message;
};

inline constexpr std::size_t kRecommendedItemCap = 500;
inline constexpr std::size_t kMaxEstimableItems = 1000;

// Warns above 500 items; throws TooManyItems at 1000 or more.
std::vector<ConventionWarning> validate_benchmark_conventions(const ResponseMatrix& matrix);

}  // namespace irtrank
