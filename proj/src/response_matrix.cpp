#include "irtrank/response_matrix.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "irtrank/errors.hpp"
#include "irtrank/format.hpp"
#include "irtrank/rng.hpp"
#include "json.hpp"

namespace irtrank {

namespace {

constexpr const char* kLabelRow = "label";

int parse_cell(const std::string& text, std::size_t row, std::size_t col) {
  if (text == "0") {
    return 0;
  }
  if (text == "1") {
    return 1;
  }
  throw MalformedCell(row, col, text);
}

ResponseMatrix parse_csv(std::istream& source, const std::string& dataset_id) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(source, line)) {
    if (!trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.size() < 2) {
    throw ShapeError("response matrix header must name at least one item");
  }
  std::vector<std::string> item_ids(header.begin() + 1, header.end());

  std::vector<std::string> names;
  std::vector<std::vector<int>> rows;
  std::optional<std::vector<std::string>> labels;
  while (std::getline(source, line)) {
    if (trim(line).empty()) {
      continue;
    }
    auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ShapeError("row " + std::to_string(rows.size()) + " has " +
                       std::to_string(fields.size()) + " fields; header has " +
                       std::to_string(header.size()));
    }
    if (fields[0] == kLabelRow) {
      if (labels) {
        throw ShapeError("more than one label row");
      }
      labels.emplace(fields.begin() + 1, fields.end());
      continue;
    }
    std::vector<int> cells;
    cells.reserve(item_ids.size());
    for (std::size_t c = 1; c < fields.size(); ++c) {
      cells.push_back(parse_cell(fields[c], rows.size(), c - 1));
    }
    names.push_back(fields[0]);
    rows.push_back(std::move(cells));
  }
  return ResponseMatrix(dataset_id, std::move(names), std::move(item_ids), std::move(rows),
                        std::move(labels));
}

ResponseMatrix parse_json(std::istream& source, const std::string& dataset_id) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(source);
  } catch (const nlohmann::json::parse_error& e) {
    throw ShapeError(std::string("invalid JSON response matrix: ") + e.what());
  }
  std::string id = dataset_id.empty() ? doc.value("dataset_id", std::string{}) : dataset_id;
  const auto names = doc.at("respondents").get<std::vector<std::string>>();
  const auto& responses = doc.at("responses");
  if (!responses.is_array() || responses.size() != names.size()) {
    throw ShapeError("'responses' must hold one row per respondent");
  }
  std::vector<std::vector<int>> rows;
  for (std::size_t r = 0; r < responses.size(); ++r) {
    const auto& row = responses[r];
    if (!row.is_array()) {
      throw ShapeError("response row " + std::to_string(r) + " is not an array");
    }
    std::vector<int> cells;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const auto& cell = row[c];
      if (!cell.is_number_integer() || (cell.get<long>() != 0 && cell.get<long>() != 1)) {
        throw MalformedCell(r, c, cell.dump());
      }
      cells.push_back(cell.get<int>());
    }
    rows.push_back(std::move(cells));
  }
  std::vector<std::string> item_ids;
  if (doc.contains("items")) {
    item_ids = doc.at("items").get<std::vector<std::string>>();
  } else if (!rows.empty()) {
    for (std::size_t c = 0; c < rows.front().size(); ++c) {
      item_ids.push_back(std::to_string(c));
    }
  }
  std::optional<std::vector<std::string>> labels;
  if (doc.contains("true_labels") && !doc.at("true_labels").is_null()) {
    labels = doc.at("true_labels").get<std::vector<std::string>>();
  }
  std::optional<std::map<std::string, double>> counts;
  if (doc.contains("class_counts") && !doc.at("class_counts").is_null()) {
    counts = doc.at("class_counts").get<std::map<std::string, double>>();
  }
  return ResponseMatrix(std::move(id), names, std::move(item_ids), std::move(rows),
                        std::move(labels), std::move(counts));
}

}  // namespace

ResponseMatrix::ResponseMatrix(std::string dataset_id, std::vector<std::string> respondents,
                               std::vector<std::string> item_ids,
                               std::vector<std::vector<int>> rows,
                               std::optional<std::vector<std::string>> true_labels,
                               std::optional<std::map<std::string, double>> class_counts)
    : dataset_id_(std::move(dataset_id)),
      respondents_(std::move(respondents)),
      item_ids_(std::move(item_ids)),
      true_labels_(std::move(true_labels)),
      class_counts_(std::move(class_counts)) {
  if (item_ids_.empty()) {
    throw ShapeError("response matrix needs at least one item");
  }
  if (rows.size() != respondents_.size()) {
    throw ShapeError("respondent names and rows differ in count");
  }
  std::set<std::string> seen;
  for (const auto& name : respondents_) {
    if (!seen.insert(name).second) {
      throw DuplicateRespondent(name);
    }
  }
  cells_.reserve(rows.size() * item_ids_.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != item_ids_.size()) {
      throw ShapeError("row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
                       " cells; expected " + std::to_string(item_ids_.size()));
    }
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      const int v = rows[r][c];
      if (v != 0 && v != 1) {
        throw MalformedCell(r, c, std::to_string(v));
      }
      cells_.push_back(static_cast<std::uint8_t>(v));
    }
  }
  if (true_labels_ && true_labels_->size() != item_ids_.size()) {
    throw ShapeError("true_labels length " + std::to_string(true_labels_->size()) +
                     " does not match item count " + std::to_string(item_ids_.size()));
  }
}

std::vector<std::uint8_t> ResponseMatrix::column(std::size_t item) const {
  std::vector<std::uint8_t> out(respondents_.size());
  for (std::size_t r = 0; r < respondents_.size(); ++r) {
    out[r] = at(r, item);
  }
  return out;
}

std::size_t ResponseMatrix::index_of(const std::string& respondent) const {
  const auto it = std::find(respondents_.begin(), respondents_.end(), respondent);
  if (it == respondents_.end()) {
    throw NotFound("respondent '" + respondent + "' not in dataset '" + dataset_id_ + "'");
  }
  return static_cast<std::size_t>(it - respondents_.begin());
}

bool ResponseMatrix::contains(const std::string& respondent) const {
  return std::find(respondents_.begin(), respondents_.end(), respondent) != respondents_.end();
}

ResponseMatrix ResponseMatrix::with_rows(
    const std::vector<std::pair<std::string, std::vector<int>>>& rows) const {
  std::vector<std::string> names = respondents_;
  std::vector<std::vector<int>> all;
  all.reserve(respondents_.size() + rows.size());
  for (std::size_t r = 0; r < respondents_.size(); ++r) {
    const auto cells = row(r);
    all.emplace_back(cells.begin(), cells.end());
  }
  for (const auto& [name, cells] : rows) {
    names.push_back(name);
    all.push_back(cells);
  }
  return ResponseMatrix(dataset_id_, std::move(names), item_ids_, std::move(all), true_labels_,
                        class_counts_);
}

void DatasetMeta::validate() const {
  auto check_pct = [&](double v, const char* field) {
    if (!(v >= 0.0 && v <= 100.0)) {
      throw DomainError("dataset '" + dataset_id + "': " + field + " outside [0,100]");
    }
  };
  check_pct(pct_missing_instances, "pct_missing_instances");
  check_pct(majority_class_pct, "majority_class_pct");
  check_pct(minority_class_pct, "minority_class_pct");
  if (minority_class_pct > majority_class_pct) {
    throw DomainError("dataset '" + dataset_id + "': minority_class_pct exceeds majority_class_pct");
  }
}

const std::vector<std::string>& metadata_field_names() {
  static const std::vector<std::string> names = {
      "number_of_classes",     "number_of_instances", "number_of_features",
      "class_entropy",         "dimensionality",      "pct_missing_instances",
      "majority_class_pct",    "minority_class_pct"};
  return names;
}

double metadata_value(const DatasetMeta& meta, const std::string& field) {
  if (field == "number_of_classes") return static_cast<double>(meta.number_of_classes);
  if (field == "number_of_instances") return static_cast<double>(meta.number_of_instances);
  if (field == "number_of_features") return static_cast<double>(meta.number_of_features);
  if (field == "class_entropy") return meta.class_entropy;
  if (field == "dimensionality") return meta.dimensionality;
  if (field == "pct_missing_instances") return meta.pct_missing_instances;
  if (field == "majority_class_pct") return meta.majority_class_pct;
  if (field == "minority_class_pct") return meta.minority_class_pct;
  throw NotFound("unknown metadata field '" + field + "'");
}

ResponseMatrix parse_response_matrix(std::istream& source, MatrixFormat format,
                                     const std::string& dataset_id) {
  if (format == MatrixFormat::csv) {
    return parse_csv(source, dataset_id);
  }
  try {
    return parse_json(source, dataset_id);
  } catch (const nlohmann::json::exception& e) {
    throw ShapeError(std::string("invalid JSON response matrix: ") + e.what());
  }
}

void write_response_matrix(std::ostream& out, const ResponseMatrix& matrix, MatrixFormat format) {
  if (format == MatrixFormat::json) {
    nlohmann::json doc;
    doc["dataset_id"] = matrix.dataset_id();
    doc["respondents"] = matrix.respondents();
    doc["items"] = matrix.item_ids();
    auto rows = nlohmann::json::array();
    for (std::size_t r = 0; r < matrix.respondent_count(); ++r) {
      const auto cells = matrix.row(r);
      rows.push_back(std::vector<int>(cells.begin(), cells.end()));
    }
    doc["responses"] = std::move(rows);
    if (matrix.true_labels()) {
      doc["true_labels"] = *matrix.true_labels();
    }
    if (matrix.class_counts()) {
      doc["class_counts"] = *matrix.class_counts();
    }
    out << doc.dump(2) << '\n';
    return;
  }
  out << "respondent";
  for (const auto& id : matrix.item_ids()) {
    out << ',' << csv_field(id);
  }
  out << '\n';
  for (std::size_t r = 0; r < matrix.respondent_count(); ++r) {
    out << csv_field(matrix.respondents()[r]);
    for (auto cell : matrix.row(r)) {
      out << ',' << static_cast<int>(cell);
    }
    out << '\n';
  }
  if (matrix.true_labels()) {
    out << kLabelRow;
    for (const auto& label : *matrix.true_labels()) {
      out << ',' << csv_field(label);
    }
    out << '\n';
  }
}

std::map<std::string, DatasetMeta> parse_metadata_json(std::istream& source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(source);
  } catch (const nlohmann::json::parse_error& e) {
    throw ShapeError(std::string("invalid metadata JSON: ") + e.what());
  }
  std::vector<nlohmann::json> entries;
  if (doc.is_array()) {
    entries.assign(doc.begin(), doc.end());
  } else if (doc.is_object()) {
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      auto entry = it.value();
      if (!entry.contains("dataset_id")) {
        entry["dataset_id"] = it.key();
      }
      entries.push_back(std::move(entry));
    }
  } else {
    throw ShapeError("metadata JSON must be an array or an object of objects");
  }
  std::map<std::string, DatasetMeta> out;
  for (const auto& e : entries) {
    DatasetMeta m;
    try {
      m.dataset_id = e.at("dataset_id").get<std::string>();
      m.number_of_classes = e.at("number_of_classes").get<long>();
      m.number_of_instances = e.at("number_of_instances").get<long>();
      m.number_of_features = e.at("number_of_features").get<long>();
      m.class_entropy = e.at("class_entropy").get<double>();
      m.dimensionality = e.at("dimensionality").get<double>();
      m.pct_missing_instances = e.at("pct_missing_instances").get<double>();
      m.majority_class_pct = e.at("majority_class_pct").get<double>();
      m.minority_class_pct = e.at("minority_class_pct").get<double>();
    } catch (const nlohmann::json::exception& ex) {
      throw ShapeError(std::string("invalid metadata entry: ") + ex.what());
    }
    m.validate();
    if (!out.emplace(m.dataset_id, m).second) {
      throw ShapeError("duplicate metadata entry for '" + m.dataset_id + "'");
    }
  }
  return out;
}

double accuracy(const ResponseMatrix& matrix, const std::string& respondent) {
  const auto cells = matrix.row(matrix.index_of(respondent));
  const auto hits = std::count(cells.begin(), cells.end(), std::uint8_t{1});
  return static_cast<double>(hits) / static_cast<double>(cells.size());
}

namespace {

std::string extreme_class(const std::map<std::string, double>& counts, bool want_max,
                          bool lexicographic) {
  const auto best = want_max
                        ? std::max_element(counts.begin(), counts.end(),
                                           [](auto& l, auto& r) { return l.second < r.second; })
                        : std::min_element(counts.begin(), counts.end(),
                                           [](auto& l, auto& r) { return l.second < r.second; });
  const auto ties = std::count_if(counts.begin(), counts.end(),
                                  [&](auto& kv) { return kv.second == best->second; });
  if (ties > 1 && !lexicographic) {
    throw TieError(std::string("class_counts ") + (want_max ? "arg-max" : "arg-min") +
                   " is tied at count " + std::to_string(best->second));
  }
  // std::map iterates in key order, so max/min_element already return the smallest tied label.
  return best->first;
}

}  // namespace

std::vector<ArtificialRow> synthesize_artificial(const std::vector<std::string>& true_labels,
                                                 const std::map<std::string, double>& class_counts,
                                                 const ArtificialOptions& options) {
  if (true_labels.empty()) {
    throw EmptyInput("true_labels is empty");
  }
  if (class_counts.empty()) {
    throw EmptyInput("class_counts is empty");
  }
  for (const auto& label : true_labels) {
    if (!class_counts.contains(label)) {
      throw DomainError("class_counts has no entry for label '" + label + "'");
    }
  }
  const std::string majority = extreme_class(class_counts, true, options.lexicographic_tie_break);
  const std::string minority = extreme_class(class_counts, false, options.lexicographic_tie_break);

  const std::size_t n = true_labels.size();
  std::vector<ArtificialRow> rows;
  rows.push_back({"optimal", std::vector<int>(n, 1)});
  rows.push_back({"pessimal", std::vector<int>(n, 0)});
  ArtificialRow maj{"majority", std::vector<int>(n, 0)};
  ArtificialRow min{"minority", std::vector<int>(n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    maj.responses[i] = true_labels[i] == majority ? 1 : 0;
    min.responses[i] = true_labels[i] == minority ? 1 : 0;
  }
  rows.push_back(std::move(maj));
  rows.push_back(std::move(min));

  const double hit_probability = 1.0 / static_cast<double>(class_counts.size());
  for (std::size_t k = 0; k < options.seeds.size(); ++k) {
    std::mt19937_64 engine(options.seeds[k]);
    ArtificialRow rand{"rand" + std::to_string(k + 1), std::vector<int>(n, 0)};
    for (std::size_t i = 0; i < n; ++i) {
      rand.responses[i] = uniform01(engine) < hit_probability ? 1 : 0;
    }
    rows.push_back(std::move(rand));
  }
  return rows;
}

std::vector<ConventionWarning> validate_benchmark_conventions(const ResponseMatrix& matrix) {
  const std::size_t items = matrix.item_count();
  if (items >= kMaxEstimableItems) {
    throw TooManyItems(items);
  }
  std::vector<ConventionWarning> warnings;
  if (items > kRecommendedItemCap) {
    warnings.push_back({ConventionWarning::Kind::cap_exceeded, items,
                        "CapExceeded(" + std::to_string(items) + "): more than " +
                            std::to_string(kRecommendedItemCap) + " test instances"});
  }
  return warnings;
}

}  // namespace irtrank
