#include "irtrank/report.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "irtrank/analysis.hpp"
#include "irtrank/errors.hpp"
#include "irtrank/format.hpp"
#include "irtrank/json_io.hpp"
#include "irtrank/response_matrix.hpp"
#include "irtrank/tournament.hpp"

namespace irtrank {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

void write_json(const fs::path& path, const ordered_json& j) { write_file(path, j.dump(2) + "\n"); }

MatrixFormat matrix_format(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return MatrixFormat::csv;
  if (ext == ".json") return MatrixFormat::json;
  throw DomainError("matrix '" + path.string() + "' must end in .csv or .json");
}

ResponseMatrix load_matrix(const fs::path& path) {
  const auto format = matrix_format(path);
  std::istringstream in(read_file(path));
  auto m = parse_response_matrix(in, format, format == MatrixFormat::csv ? path.stem().string() : "");
  if (m.dataset_id().empty()) {
    std::istringstream again(read_file(path));
    m = parse_response_matrix(again, format, path.stem().string());
  }
  return m;
}

fs::path models_dir(const RunConfig& c) { return c.out / "models"; }
fs::path model_path(const RunConfig& c, const std::string& id) {
  return models_dir(c) / (id + ".json");
}

IrtModel load_model(const RunConfig& c, const std::string& id) {
  const auto path = model_path(c, id);
  if (!fs::exists(path)) throw NotFound("no fitted model for dataset '" + id + "'");
  try {
    return model_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ShapeError("model for dataset '" + id + "' is not valid JSON: " + e.what());
  }
}

std::vector<std::string> matrix_ids(const RunConfig& c) {
  std::vector<std::string> ids;
  for (const auto& p : c.matrices) ids.push_back(load_matrix(p).dataset_id());
  return ids;
}

std::map<std::string, IrtModel> load_models(const RunConfig& c, const std::vector<std::string>& ids) {
  std::map<std::string, IrtModel> models;
  for (const auto& id : ids) models.emplace(id, load_model(c, id));
  return models;
}

BenchmarkTable load_fixture(const fs::path& path) {
  std::istringstream in(read_file(path));
  return load_parameter_fixture(in);
}

BenchmarkTable table_from_models(const std::map<std::string, IrtModel>& models,
                                 const std::vector<std::string>& ids) {
  BenchmarkTable table;
  for (const auto& id : ids) table.summaries.push_back(summarize_dataset(models.at(id)));
  table.validate();
  return table;
}

int guarded(const char* name, std::ostream& log, const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    log << name << ": " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    log << name << ": internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

std::string fit_summary_csv(const std::vector<ordered_json>& rows) {
  std::ostringstream out;
  out << "dataset,status,respondents,items,iterations,log_likelihood,converged,degenerate_items\n";
  for (const auto& r : rows) {
    out << csv_field(r["dataset"].get<std::string>()) << ',' << r["status"].get<std::string>();
    if (r["status"] == "fitted") {
      out << ',' << r["respondents"].get<std::size_t>() << ',' << r["items"].get<std::size_t>()
          << ',' << r["iterations"].get<int>() << ','
          << format_double(r["log_likelihood"].get<double>()) << ','
          << (r["converged"].get<bool>() ? "true" : "false") << ','
          << r["degenerate_items"].get<std::size_t>();
    } else {
      out << ",,,,,,";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace

void RunConfig::validate() const {
  if (!(tau > 0.0)) throw DomainError("tau must be positive");
  if (n_bins < 1) throw DomainError("bins must be at least 1");
  if (!(draw_epsilon >= 0.0)) throw DomainError("draw epsilon must be non-negative");
  if (out.empty()) throw DomainError("output directory is empty");
  if (strategy) parse_subset_strategy(*strategy);
  for (const auto& p : matrices) {
    if (!fs::exists(p)) throw NotFound("matrix '" + p.string() + "' does not exist");
    matrix_format(p);
  }
  if (metadata && !fs::exists(*metadata)) {
    throw NotFound("metadata '" + metadata->string() + "' does not exist");
  }
  if (fixture && !fs::exists(*fixture)) {
    throw NotFound("fixture '" + fixture->string() + "' does not exist");
  }
}

fs::path default_output_dir() {
  const char* env = std::getenv(kOutputDirEnv);
  if (env && *env) return fs::path(env);
  return fs::path(kFallbackOutputDir);
}

OutputFormat parse_output_format(const std::string& name) {
  if (name == "json") return OutputFormat::json;
  if (name == "csv") return OutputFormat::csv;
  throw DomainError("unknown format '" + name + "' (expected json or csv)");
}

RunConfig load_config(const fs::path& file) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(file));
  } catch (const nlohmann::json::exception& e) {
    throw ShapeError("config '" + file.string() + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ShapeError("config must be a JSON object");
  const auto base = file.parent_path();
  auto resolve = [&](const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
  };

  RunConfig c;
  c.out = default_output_dir();
  try {
    for (const auto& m : j.value("matrices", std::vector<std::string>{})) {
      c.matrices.push_back(resolve(m));
    }
    if (j.contains("metadata")) c.metadata = resolve(j["metadata"].get<std::string>());
    if (j.contains("fixture")) c.fixture = resolve(j["fixture"].get<std::string>());
    c.dataset_order = j.value("dataset_order", c.dataset_order);
    if (j.contains("strategy")) c.strategy = j["strategy"].get<std::string>();
    c.n_bins = j.value("bins", c.n_bins);
    c.tau = j.value("tau", c.tau);
    if (j.contains("seeds")) {
      const auto seeds = j["seeds"].get<std::vector<std::uint64_t>>();
      if (seeds.size() != 3) throw ShapeError("config seeds must list exactly 3 integers");
      std::copy(seeds.begin(), seeds.end(), c.seeds.begin());
    }
    c.exclude_negative_discrimination =
        j.value("exclude_negative_discrimination", c.exclude_negative_discrimination);
    c.draw_epsilon = j.value("draw_epsilon", c.draw_epsilon);
    if (j.contains("out")) c.out = resolve(j["out"].get<std::string>());
    if (j.contains("format")) c.format = parse_output_format(j["format"].get<std::string>());
    c.artificial = j.value("artificial", c.artificial);
    c.lexicographic_tie_break = j.value("lexicographic_tie_break", c.lexicographic_tie_break);
    c.classifiers = j.value("classifiers", c.classifiers);
    c.probability_key = j.value("probability_key", c.probability_key);
    c.threads = j.value("threads", c.threads);
  } catch (const nlohmann::json::exception& e) {
    throw ShapeError("config '" + file.string() + "': " + e.what());
  }
  return c;
}

int cmd_fit(const RunConfig& config, std::ostream& log) {
  return guarded("fit", log, [&] {
    config.validate();
    if (config.matrices.empty()) throw EmptyInput("no matrices configured");
    FitOptions options;
    options.threads = config.threads;

    std::vector<ordered_json> rows;
    std::size_t fitted = 0;
    std::size_t failed = 0;
    std::size_t unconverged = 0;
    std::set<std::string> seen;
    for (const auto& path : config.matrices) {
      ordered_json row{{"dataset", path.stem().string()}};
      try {
        auto matrix = load_matrix(path);
        row["dataset"] = matrix.dataset_id();
        if (!seen.insert(matrix.dataset_id()).second) {
          throw DuplicateRespondent(matrix.dataset_id());
        }
        for (const auto& w : validate_benchmark_conventions(matrix)) {
          log << "fit: " << matrix.dataset_id() << ": " << w.message << "\n";
        }
        if (config.artificial && matrix.true_labels() && matrix.class_counts()) {
          ArtificialOptions ao;
          ao.seeds = config.seeds;
          ao.lexicographic_tie_break = config.lexicographic_tie_break;
          std::vector<std::pair<std::string, std::vector<int>>> extra;
          for (auto& r : synthesize_artificial(*matrix.true_labels(), *matrix.class_counts(), ao)) {
            extra.emplace_back(std::move(r.name), std::move(r.responses));
          }
          matrix = matrix.with_rows(extra);
        }
        const auto model = birnbaum_fit(matrix, options);
        write_json(model_path(config, model.dataset_id), to_json(model));
        row["status"] = "fitted";
        row["respondents"] = matrix.respondent_count();
        row["items"] = matrix.item_count();
        row["iterations"] = model.fit_report.iterations;
        row["log_likelihood"] = model.fit_report.log_likelihood;
        row["converged"] = model.fit_report.converged;
        row["degenerate_items"] = model.fit_report.degenerate_items.size();
        ++fitted;
        if (!model.fit_report.converged) {
          ++unconverged;
          log << "fit: " << model.dataset_id << ": did not converge in "
              << model.fit_report.iterations << " rounds\n";
        }
      } catch (const Error& e) {
        ++failed;
        row["status"] = "failed";
        row["error"] = e.what();
        log << "fit: " << row["dataset"].get<std::string>() << ": " << e.what() << "\n";
      }
      rows.push_back(std::move(row));
    }

    if (config.format == OutputFormat::json) {
      write_json(config.out / "fit_summary.json", ordered_json(rows));
    } else {
      write_file(config.out / "fit_summary.csv", fit_summary_csv(rows));
    }
    if (fitted == 0) return static_cast<int>(kExitValidation);
    return failed + unconverged > 0 ? static_cast<int>(kExitPartial) : static_cast<int>(kExitOk);
  });
}

int cmd_tournament(const RunConfig& config, std::ostream& log) {
  return guarded("tournament", log, [&] {
    config.validate();
    std::vector<std::string> order;
    std::map<std::string, IrtModel> models;
    if (config.strategy) {
      const auto strategy = parse_subset_strategy(*config.strategy);
      BenchmarkTable table;
      if (config.fixture) {
        table = load_fixture(*config.fixture);
      } else {
        const auto ids = matrix_ids(config);
        models = load_models(config, ids);
        table = table_from_models(models, ids);
      }
      order = subset_strategy(table, strategy);
    } else {
      order = config.dataset_order.empty() ? matrix_ids(config) : config.dataset_order;
    }
    if (order.empty()) throw EmptyInput("no datasets to play");
    for (const auto& id : order) {
      if (!models.count(id)) models.emplace(id, load_model(config, id));
    }

    std::vector<std::string> classifiers = config.classifiers;
    if (classifiers.empty()) {
      std::set<std::string> all;
      for (const auto& id : order) {
        for (const auto& [name, theta] : models.at(id).abilities) all.insert(name);
      }
      classifiers.assign(all.begin(), all.end());
    }

    TournamentOptions options;
    options.exclude_negative_discrimination = config.exclude_negative_discrimination;
    options.draw_epsilon = config.draw_epsilon;
    options.tau = config.tau;
    const auto history = run_tournament(order, models, classifiers, options);
    for (const auto& p : history.periods) {
      if (!p.absent.empty()) {
        log << "tournament: " << p.dataset_id << ": " << p.absent.size()
            << " classifier(s) absent, inactivity update applied\n";
      }
    }

    const auto dir = config.out / "tournament";
    write_json(dir / "history.json", to_json(history));
    std::ostringstream bump;
    write_bump_csv(bump, bump_chart_data(history));
    write_file(dir / "bump_chart.csv", bump.str());

    if (config.format == OutputFormat::csv) {
      std::ostringstream out;
      out << "Rank,Classifier,Rating,RD,Volatility\n";
      for (std::size_t k = 0; k < history.final_ranking.size(); ++k) {
        const auto& [name, r] = history.final_ranking[k];
        out << k + 1 << ',' << csv_field(name) << ',' << format_fixed(r.rating) << ','
            << format_fixed(r.rd) << ',' << format_fixed(r.volatility) << '\n';
      }
      write_file(dir / "ranking.csv", out.str());
    } else {
      ordered_json rows = ordered_json::array();
      for (std::size_t k = 0; k < history.final_ranking.size(); ++k) {
        const auto& [name, r] = history.final_ranking[k];
        rows.push_back(ordered_json{{"Rank", k + 1},
                                    {"Classifier", name},
                                    {"Rating", format_fixed(r.rating)},
                                    {"RD", format_fixed(r.rd)},
                                    {"Volatility", format_fixed(r.volatility)}});
      }
      write_json(dir / "ranking.json", rows);
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_analyze(const RunConfig& config, std::ostream& log) {
  return guarded("analyze", log, [&] {
    config.validate();
    BenchmarkTable table;
    std::map<std::string, IrtModel> models;
    std::string source;
    if (config.fixture) {
      table = load_fixture(*config.fixture);
      source = "fixture";
    } else {
      const auto ids = matrix_ids(config);
      if (ids.empty()) throw EmptyInput("analyze needs a fixture or fitted matrices");
      models = load_models(config, ids);
      table = table_from_models(models, ids);
      source = "models";
    }

    ordered_json warnings = ordered_json::array();
    if (config.metadata) {
      std::istringstream in(read_file(*config.metadata));
      for (auto& [id, meta] : parse_metadata_json(in)) {
        bool known = false;
        for (const auto& s : table.summaries) known = known || s.dataset_id == id;
        if (known) {
          table.metadata.emplace(id, meta);
        } else {
          warnings.push_back("metadata for unknown dataset '" + id + "' ignored");
        }
      }
      table.validate();
    }

    ordered_json report{{"source", source}, {"datasets", table.summaries.size()}};
    const auto pct = benchmark_percentages(table);
    report["percentages"] = {{"pct_b_above_0", pct.pct_b_above_0},
                             {"pct_b_above_1", pct.pct_b_above_1},
                             {"pct_positive_a", pct.pct_positive_a}};

    ordered_json summaries = ordered_json::array();
    for (const auto& s : table.summaries) summaries.push_back(to_json(s));
    report["summaries"] = summaries;

    std::vector<Bin> bins;
    if (static_cast<std::size_t>(config.n_bins) <= table.summaries.size()) {
      bins = make_bins(table, SummaryKey::mean_b, config.n_bins, true);
      ordered_json list = ordered_json::array();
      for (const auto& b : bins) list.push_back(to_json(b));
      report["bins"] = {{"key", "mean_b"}, {"descending", true}, {"bins", list}};
    } else {
      report["bins"] = {{"warning", "fewer datasets than bins"}};
    }

    ordered_json subsets = ordered_json::object();
    for (auto s : all_subset_strategies()) {
      try {
        subsets[to_string(s)] = subset_strategy(table, s);
      } catch (const DomainError& e) {
        subsets[to_string(s)] = {{"warning", e.what()}};
      }
    }
    report["subsets"] = subsets;

    std::optional<CorrelationMatrix> corr;
    if (table.metadata.empty()) {
      report["correlation"] = {{"warning", "no dataset metadata; correlation skipped"}};
    } else {
      try {
        corr = correlate_metadata(table);
        report["correlation"] = to_json(*corr);
      } catch (const DomainError& e) {
        report["correlation"] = {{"warning", e.what()}};
      }
    }

    if (source == "models" && table.metadata.size() == table.summaries.size()) {
      std::vector<std::string> classifiers = config.classifiers;
      if (classifiers.empty()) {
        std::map<std::string, std::size_t> seen;
        for (const auto& [id, m] : models) {
          for (const auto& [name, theta] : m.abilities) ++seen[name];
        }
        for (const auto& [name, n] : seen) {
          if (n == models.size()) classifiers.push_back(name);
        }
      }
      try {
        ordered_json list = ordered_json::array();
        for (const auto& b :
             bin_probability(table, models, config.probability_key, config.n_bins, classifiers)) {
          list.push_back(to_json(b));
        }
        report["bin_probability"] = {{"key", config.probability_key}, {"bins", list}};
      } catch (const Error& e) {
        report["bin_probability"] = {{"warning", e.what()}};
      }
    } else {
      report["bin_probability"] = {
          {"warning", "needs fitted models and metadata for every dataset"}};
    }

    ordered_json notes = ordered_json::array();
    if (source == "fixture" && config.n_bins == 6 && !bins.empty()) {
      notes.push_back(discrimination_discrepancy_note(bins));
    }
    report["notes"] = notes;
    report["warnings"] = warnings;

    const auto dir = config.out / "analysis";
    write_json(dir / "report.json", report);
    if (config.format == OutputFormat::csv) {
      std::ostringstream b;
      b << "bin,datasets,mean_b,mean_a\n";
      for (const auto& bin : bins) {
        b << bin.index << ',' << bin.dataset_ids.size() << ',' << format_double(bin.mean_b) << ','
          << format_double(bin.mean_a) << '\n';
      }
      write_file(dir / "bins.csv", b.str());
      std::ostringstream s;
      s << "dataset,mean_a,mean_b,mean_c,std_a,std_b,std_c,pct_negative_a\n";
      for (const auto& x : table.summaries) {
        s << csv_field(x.dataset_id) << ',' << format_double(x.mean_a) << ','
          << format_double(x.mean_b) << ',' << format_double(x.mean_c);
        if (x.item_level) {
          s << ',' << format_double(x.std_a) << ',' << format_double(x.std_b) << ','
            << format_double(x.std_c) << ',' << format_double(x.pct_negative_a);
        } else {
          s << ",NA,NA,NA,NA";
        }
        s << '\n';
      }
      write_file(dir / "summaries.csv", s.str());
      if (corr) {
        std::ostringstream c;
        write_correlation_csv(c, *corr);
        write_file(dir / "correlation.csv", c.str());
      }
    }
    for (const auto& w : warnings) log << "analyze: " << w.get<std::string>() << "\n";
    return static_cast<int>(kExitOk);
  });
}

int cmd_report(const RunConfig& config, std::ostream& log) {
  const int fit = cmd_fit(config, log);
  if (fit == kExitValidation || fit == kExitInternal) return fit;
  const int tournament = cmd_tournament(config, log);
  const int analyze = cmd_analyze(config, log);
  int worst = fit;
  for (int code : {tournament, analyze}) {
    if (code == kExitInternal || (code == kExitValidation && worst != kExitInternal)) {
      worst = code;
    } else if (code == kExitPartial && worst == kExitOk) {
      worst = code;
    }
  }
  return worst;
}

}  // namespace irtrank
