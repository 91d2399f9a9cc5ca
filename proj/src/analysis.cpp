#include "irtrank/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "irtrank/errors.hpp"
#include "irtrank/format.hpp"

namespace irtrank {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double parse_number(const std::string& text, std::size_t line, const char* column) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (text.empty() || res.ec != std::errc() || res.ptr != last || !std::isfinite(value)) {
    throw DomainError("fixture line " + std::to_string(line) + ": " + column + " '" + text +
                      "' is not a number");
  }
  return value;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

bool is_spread(SummaryKey key) {
  return key == SummaryKey::std_a || key == SummaryKey::std_b || key == SummaryKey::std_c;
}

void require_item_level(const BenchmarkTable& table, const std::string& what) {
  for (const auto& s : table.summaries) {
    if (!s.item_level) {
      throw DomainError(what + " needs item-level spreads; dataset '" + s.dataset_id +
                        "' only has means");
    }
  }
}

// Ascending by value, ties by id.
std::vector<std::string> ordered_ids(std::vector<std::pair<double, std::string>> keyed) {
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::string> ids;
  ids.reserve(keyed.size());
  for (auto& [v, id] : keyed) ids.push_back(std::move(id));
  return ids;
}

}  // namespace

void BenchmarkTable::validate() const {
  std::set<std::string> ids;
  for (const auto& s : summaries) {
    if (!ids.insert(s.dataset_id).second) throw DuplicateRespondent(s.dataset_id);
  }
  for (const auto& [id, meta] : metadata) {
    if (!ids.count(id)) throw NotFound("metadata for unknown dataset '" + id + "'");
    meta.validate();
  }
}

const DatasetSummary& BenchmarkTable::summary(const std::string& dataset_id) const {
  for (const auto& s : summaries) {
    if (s.dataset_id == dataset_id) return s;
  }
  throw NotFound("no summary for dataset '" + dataset_id + "'");
}

BenchmarkTable load_parameter_fixture(std::istream& source) {
  static const std::vector<std::string> kHeader{"bin", "dataset", "difficulty", "discrimination",
                                                "guessing"};
  std::string line;
  std::size_t line_no = 0;
  BenchmarkTable table;
  bool header_seen = false;
  while (std::getline(source, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (!header_seen) {
      if (fields != kHeader) {
        throw ShapeError("fixture header must be bin,dataset,difficulty,discrimination,guessing");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != kHeader.size()) {
      throw ShapeError("fixture line " + std::to_string(line_no) + " has " +
                       std::to_string(fields.size()) + " fields");
    }
    DatasetSummary s;
    s.dataset_id = fields[1];
    s.mean_b = parse_number(fields[2], line_no, "difficulty");
    s.mean_a = parse_number(fields[3], line_no, "discrimination");
    s.mean_c = parse_number(fields[4], line_no, "guessing");
    s.std_a = s.std_b = s.std_c = s.pct_negative_a = kNaN;
    s.item_level = false;
    table.summaries.push_back(std::move(s));
  }
  if (!header_seen) throw ShapeError("fixture is empty");
  table.validate();
  return table;
}

DatasetSummary summarize_dataset(const IrtModel& model) {
  if (model.items.empty()) throw EmptyInput("model '" + model.dataset_id + "' has no items");
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> c;
  std::size_t negative = 0;
  for (const auto& item : model.items) {
    a.push_back(item.a);
    b.push_back(item.b);
    c.push_back(item.c);
    if (item.a < 0.0) ++negative;
  }
  DatasetSummary s;
  s.dataset_id = model.dataset_id;
  s.mean_a = mean_of(a);
  s.mean_b = mean_of(b);
  s.mean_c = mean_of(c);
  s.std_a = population_std(a, s.mean_a);
  s.std_b = population_std(b, s.mean_b);
  s.std_c = population_std(c, s.mean_c);
  s.pct_negative_a = static_cast<double>(negative) / static_cast<double>(model.items.size());
  return s;
}

SummaryKey parse_summary_key(const std::string& name) {
  static const std::map<std::string, SummaryKey> kKeys{
      {"mean_a", SummaryKey::mean_a}, {"mean_b", SummaryKey::mean_b},
      {"mean_c", SummaryKey::mean_c}, {"std_a", SummaryKey::std_a},
      {"std_b", SummaryKey::std_b},   {"std_c", SummaryKey::std_c}};
  const auto it = kKeys.find(name);
  if (it == kKeys.end()) throw DomainError("unknown summary key '" + name + "'");
  return it->second;
}

std::string to_string(SummaryKey key) {
  switch (key) {
    case SummaryKey::mean_a: return "mean_a";
    case SummaryKey::mean_b: return "mean_b";
    case SummaryKey::mean_c: return "mean_c";
    case SummaryKey::std_a: return "std_a";
    case SummaryKey::std_b: return "std_b";
    case SummaryKey::std_c: return "std_c";
  }
  return "";
}

double summary_value(const DatasetSummary& s, SummaryKey key) {
  switch (key) {
    case SummaryKey::mean_a: return s.mean_a;
    case SummaryKey::mean_b: return s.mean_b;
    case SummaryKey::mean_c: return s.mean_c;
    case SummaryKey::std_a: return s.std_a;
    case SummaryKey::std_b: return s.std_b;
    case SummaryKey::std_c: return s.std_c;
  }
  return kNaN;
}

std::vector<std::size_t> chunk_sizes(std::size_t n, int n_bins) {
  if (n_bins < 1) throw DomainError("bin count must be at least 1");
  const auto bins = static_cast<std::size_t>(n_bins);
  if (bins > n) {
    throw DomainError("cannot split " + std::to_string(n) + " datasets into " +
                      std::to_string(bins) + " bins");
  }
  std::vector<std::size_t> sizes(bins, n / bins);
  for (std::size_t k = bins - n % bins; k < bins; ++k) ++sizes[k];
  return sizes;
}

std::vector<Bin> make_bins(const BenchmarkTable& table, SummaryKey key, int n_bins,
                           bool descending) {
  if (is_spread(key)) require_item_level(table, "binning by " + to_string(key));
  const auto sizes = chunk_sizes(table.summaries.size(), n_bins);
  std::vector<const DatasetSummary*> order;
  for (const auto& s : table.summaries) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(), [&](const auto* x, const auto* y) {
    const double vx = summary_value(*x, key);
    const double vy = summary_value(*y, key);
    return descending ? vx > vy : vx < vy;
  });

  std::vector<Bin> bins;
  std::size_t pos = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    Bin bin;
    bin.index = static_cast<int>(k) + 1;
    double sk = 0.0;
    double sb = 0.0;
    double sa = 0.0;
    for (std::size_t i = 0; i < sizes[k]; ++i, ++pos) {
      const auto& s = *order[pos];
      bin.dataset_ids.push_back(s.dataset_id);
      sk += summary_value(s, key);
      sb += s.mean_b;
      sa += s.mean_a;
    }
    const auto n = static_cast<double>(sizes[k]);
    bin.mean_key = sk / n;
    bin.mean_b = sb / n;
    bin.mean_a = sa / n;
    bins.push_back(std::move(bin));
  }
  return bins;
}

BenchmarkPercentages benchmark_percentages(const BenchmarkTable& table) {
  if (table.summaries.empty()) throw EmptyInput("benchmark table is empty");
  std::size_t above0 = 0;
  std::size_t above1 = 0;
  std::size_t positive = 0;
  for (const auto& s : table.summaries) {
    if (s.mean_b > 0.0) ++above0;
    if (s.mean_b > 1.0) ++above1;
    if (s.mean_a > 0.0) ++positive;
  }
  const auto n = static_cast<double>(table.summaries.size());
  return {static_cast<double>(above0) / n, static_cast<double>(above1) / n,
          static_cast<double>(positive) / n};
}

SubsetStrategy parse_subset_strategy(const std::string& name) {
  for (auto s : all_subset_strategies()) {
    if (to_string(s) == name) return s;
  }
  throw DomainError("unknown subset strategy '" + name + "'");
}

std::string to_string(SubsetStrategy strategy) {
  switch (strategy) {
    case SubsetStrategy::difficulty_asc: return "difficulty_asc";
    case SubsetStrategy::discrimination_asc: return "discrimination_asc";
    case SubsetStrategy::low_std_b: return "low_std_b";
    case SubsetStrategy::high_std_b: return "high_std_b";
    case SubsetStrategy::low_std_a: return "low_std_a";
    case SubsetStrategy::high_std_a: return "high_std_a";
  }
  return "";
}

const std::vector<SubsetStrategy>& all_subset_strategies() {
  static const std::vector<SubsetStrategy> kAll{
      SubsetStrategy::difficulty_asc, SubsetStrategy::discrimination_asc,
      SubsetStrategy::low_std_b,      SubsetStrategy::high_std_b,
      SubsetStrategy::low_std_a,      SubsetStrategy::high_std_a};
  return kAll;
}

std::vector<std::string> subset_strategy(const BenchmarkTable& table, SubsetStrategy strategy) {
  SummaryKey key = SummaryKey::mean_b;
  switch (strategy) {
    case SubsetStrategy::difficulty_asc: key = SummaryKey::mean_b; break;
    case SubsetStrategy::discrimination_asc: key = SummaryKey::mean_a; break;
    case SubsetStrategy::low_std_b:
    case SubsetStrategy::high_std_b: key = SummaryKey::std_b; break;
    case SubsetStrategy::low_std_a:
    case SubsetStrategy::high_std_a: key = SummaryKey::std_a; break;
  }
  if (is_spread(key)) require_item_level(table, "strategy " + to_string(strategy));

  std::vector<std::pair<double, std::string>> keyed;
  for (const auto& s : table.summaries) keyed.emplace_back(summary_value(s, key), s.dataset_id);
  auto ids = ordered_ids(std::move(keyed));
  const auto half = static_cast<std::ptrdiff_t>(ids.size() / 2);
  if (strategy == SubsetStrategy::low_std_b || strategy == SubsetStrategy::low_std_a) {
    ids.erase(ids.begin() + half, ids.end());
  } else if (strategy == SubsetStrategy::high_std_b || strategy == SubsetStrategy::high_std_a) {
    ids.erase(ids.begin(), ids.begin() + half);
  }
  return ids;
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ShapeError("pearson needs equal-length columns");
  if (x.size() < 2) return std::nullopt;
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0 || !std::isfinite(sxx) || !std::isfinite(syy)) {
    return std::nullopt;
  }
  return std::clamp(sxy / (std::sqrt(sxx) * std::sqrt(syy)), -1.0, 1.0);
}

CorrelationMatrix correlate_metadata(const BenchmarkTable& table) {
  std::vector<const DatasetSummary*> rows;
  for (const auto& s : table.summaries) {
    if (table.metadata.count(s.dataset_id)) rows.push_back(&s);
  }
  if (rows.size() < 3) {
    throw DomainError("metadata correlation needs at least 3 datasets with metadata, got " +
                      std::to_string(rows.size()));
  }

  CorrelationMatrix m;
  m.datasets = rows.size();
  m.fields = metadata_field_names();
  const std::vector<SummaryKey> keys{SummaryKey::mean_a, SummaryKey::mean_b, SummaryKey::mean_c,
                                     SummaryKey::std_a,  SummaryKey::std_b,  SummaryKey::std_c};
  for (auto k : keys) m.aggregates.push_back(to_string(k));

  std::vector<std::vector<double>> columns;
  for (auto k : keys) {
    std::vector<double> col;
    bool complete = true;
    for (const auto* s : rows) {
      const double v = summary_value(*s, k);
      complete = complete && std::isfinite(v);
      col.push_back(v);
    }
    if (!complete) {
      m.warnings.push_back("aggregate " + to_string(k) + " unavailable for some datasets");
      col.clear();
    } else if (!pearson(col, col)) {
      m.warnings.push_back("aggregate " + to_string(k) + " is constant");
    }
    columns.push_back(std::move(col));
  }

  for (const auto& field : m.fields) {
    std::vector<double> meta;
    for (const auto* s : rows) meta.push_back(metadata_value(table.metadata.at(s->dataset_id), field));
    if (!pearson(meta, meta)) m.warnings.push_back("metadata field " + field + " is constant");
    std::vector<std::optional<double>> line;
    for (const auto& col : columns) {
      line.push_back(col.empty() ? std::nullopt : pearson(meta, col));
    }
    m.r.push_back(std::move(line));
  }
  return m;
}

void write_correlation_csv(std::ostream& out, const CorrelationMatrix& m) {
  out << "field";
  for (const auto& a : m.aggregates) out << ',' << a;
  out << '\n';
  for (std::size_t i = 0; i < m.fields.size(); ++i) {
    out << m.fields[i];
    for (const auto& v : m.r[i]) out << ',' << (v ? format_double(*v) : "NA");
    out << '\n';
  }
}

std::vector<ProbabilityBin> bin_probability(const BenchmarkTable& table,
                                            const std::map<std::string, IrtModel>& models,
                                            const std::string& metadata_field, int n_bins,
                                            const std::vector<std::string>& classifiers) {
  std::vector<std::pair<double, std::string>> keyed;
  for (const auto& s : table.summaries) {
    const auto meta = table.metadata.find(s.dataset_id);
    if (meta == table.metadata.end()) {
      throw NotFound("no metadata for dataset '" + s.dataset_id + "'");
    }
    if (!models.count(s.dataset_id)) throw NotFound("no model for dataset '" + s.dataset_id + "'");
    keyed.emplace_back(metadata_value(meta->second, metadata_field), s.dataset_id);
  }
  const auto sizes = chunk_sizes(keyed.size(), n_bins);
  std::sort(keyed.begin(), keyed.end());

  std::vector<ProbabilityBin> bins;
  std::size_t pos = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    ProbabilityBin bin;
    bin.index = static_cast<int>(k) + 1;
    double key_sum = 0.0;
    std::map<std::string, double> sums;
    for (std::size_t i = 0; i < sizes[k]; ++i, ++pos) {
      const auto& [value, id] = keyed[pos];
      bin.dataset_ids.push_back(id);
      key_sum += value;
      const auto& model = models.at(id);
      for (const auto& name : classifiers) {
        const double theta = model.ability(name);
        double p = 0.0;
        for (const auto& item : model.items) p += icc_probability(theta, item);
        sums[name] += p / static_cast<double>(model.items.size());
      }
    }
    const auto n = static_cast<double>(sizes[k]);
    bin.mean_key = key_sum / n;
    for (const auto& [name, total] : sums) bin.probability[name] = total / n;
    bins.push_back(std::move(bin));
  }
  return bins;
}

std::string discrimination_discrepancy_note(const std::vector<Bin>& bins) {
  if (bins.empty()) return "";
  return "bin discrimination means recomputed from the dataset table are " +
         format_fixed(bins.front().mean_a) + " (most difficult bin) and " +
         format_fixed(bins.back().mean_a, 2) + " (easiest bin); the quoted figures " +
         format_fixed(kQuotedHardestBinDiscrimination, 2) + " and " +
         format_fixed(kQuotedEasiestBinDiscrimination, 2) +
         " cannot be reproduced from the table and are not used";
}

}  // namespace irtrank
