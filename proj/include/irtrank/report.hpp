#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace irtrank {

enum class OutputFormat { json, csv };

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitPartial = 2, kExitInternal = 3 };

inline constexpr const char* kOutputDirEnv = "IRTRANK_OUT";
inline constexpr const char* kFallbackOutputDir = "irtrank-out";

struct RunConfig {
  std::vector<std::filesystem::path> matrices;  // .csv or .json
  std::optional<std::filesystem::path> metadata;
  std::optional<std::filesystem::path> fixture;
  std::vector<std::string> dataset_order;  // tournament order when no strategy is set
  std::optional<std::string> strategy;
  int n_bins = 6;
  double tau = 0.5;
  std::array<std::uint64_t, 3> seeds{1, 2, 3};
  bool exclude_negative_discrimination = false;
  double draw_epsilon = 0.0;
  std::filesystem::path out;
  OutputFormat format = OutputFormat::json;
  // Append the seven artificial respondents when a matrix has labels and class counts.
  bool artificial = true;
  bool lexicographic_tie_break = false;
  std::vector<std::string> classifiers;  // empty: every respondent
  std::string probability_key = "number_of_instances";
  unsigned threads = 0;

  // Throws DomainError / NotFound.
  void validate() const;
};

// IRTRANK_OUT when set and non-empty, otherwise ./irtrank-out.
std::filesystem::path default_output_dir();

// JSON document; relative paths resolve against the file's directory. Missing keys keep
// their defaults. Throws ShapeError on malformed documents.
RunConfig load_config(const std::filesystem::path& file);

OutputFormat parse_output_format(const std::string& name);  // throws DomainError

// Each command writes under config.out and returns an ExitCode. Diagnostics go to log;
// nothing time- or host-dependent reaches the output tree.
int cmd_fit(const RunConfig& config, std::ostream& log);
int cmd_tournament(const RunConfig& config, std::ostream& log);
int cmd_analyze(const RunConfig& config, std::ostream& log);
// fit, then tournament, then analyze. Stops after a failed fit.
int cmd_report(const RunConfig& config, std::ostream& log);

}  // namespace irtrank
