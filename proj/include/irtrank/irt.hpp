#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "irtrank/response_matrix.hpp"

namespace irtrank {

// 3PL item: discrimination a, difficulty b, guessing c.
struct ItemParams {
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;

  friend bool operator==(const ItemParams&, const ItemParams&) = default;
};

struct ParamBounds {
  double lo;
  double hi;
};

inline constexpr ParamBounds kDiscriminationBounds{-50.0, 50.0};
inline constexpr ParamBounds kDifficultyBounds{-10.0, 10.0};
inline constexpr ParamBounds kGuessingBounds{0.0, 0.5};
inline constexpr ParamBounds kAbilityBounds{-6.0, 6.0};
inline constexpr double kProbabilityFloor = 1e-9;

// Multi-start points for item estimation; the negative-a start lets the optimizer
// reach items that favour low-ability respondents.
inline constexpr std::array<ItemParams, 4> kItemStarts{{
    {1.0, 0.0, 0.1},
    {2.0, -1.0, 0.2},
    {0.5, 1.0, 0.05},
    {-1.0, 0.0, 0.1},
}};

// P(U=1 | theta) = c + (1-c) / (1 + exp(-a (theta - b))). Throws DomainError on non-finite input.
double icc_probability(double theta, const ItemParams& item);

// Sum over respondents of u ln P + (1-u) ln(1-P), P clamped to [1e-9, 1-1e-9].
// Throws ShapeError on length mismatch or empty input.
double item_log_likelihood(const ItemParams& item, std::span<const std::uint8_t> responses,
                           std::span<const double> thetas);

struct ItemGradient {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

// Analytic gradient of item_log_likelihood w.r.t. (a, b, c). Zero contribution where P is clamped.
ItemGradient item_log_likelihood_gradient(const ItemParams& item,
                                          std::span<const std::uint8_t> responses,
                                          std::span<const double> thetas);

// Log-likelihood of one respondent's row as a function of ability, plus its derivatives.
double ability_log_likelihood(std::span<const ItemParams> items,
                              std::span<const std::uint8_t> responses, double theta);
double ability_log_likelihood_derivative(std::span<const ItemParams> items,
                                         std::span<const std::uint8_t> responses, double theta);
double ability_log_likelihood_second_derivative(std::span<const ItemParams> items,
                                                std::span<const std::uint8_t> responses,
                                                double theta);

struct ItemFit {
  ItemParams params;
  double log_likelihood = 0.0;
  bool degenerate = false;
  int iterations = 0;
};

// Bounded quasi-Newton maximum likelihood for one item given fixed abilities.
// An all-correct or all-wrong column is returned as a flagged degenerate item.
ItemFit fit_item(std::span<const std::uint8_t> responses, std::span<const double> thetas);
// Same, with one extra start appended after the fixed ones (the joint fit passes the
// previous round's estimate so the item step never loses likelihood).
ItemFit fit_item(std::span<const std::uint8_t> responses, std::span<const double> thetas,
                 std::optional<ItemParams> warm_start);

// Items are sorted by (b, index), split into 10 near-equal groups, and theta is refined
// by bounded MLE after each cumulative group starting from theta0. Throws EmptyInput.
double estimate_ability(std::span<const ItemParams> items, std::span<const std::uint8_t> responses,
                        double theta0);

// Maximizes the ability likelihood over kAbilityBounds from a warm start.
double maximize_ability(std::span<const ItemParams> items, std::span<const std::uint8_t> responses,
                        double theta0);

struct FitReport {
  int iterations = 0;
  double log_likelihood = 0.0;
  bool converged = false;
  double max_theta_change = 0.0;
  double relative_ll_change = 0.0;
  std::vector<std::size_t> degenerate_items;
};

struct IrtModel {
  std::string dataset_id;
  std::vector<ItemParams> items;
  std::map<std::string, double> abilities;
  FitReport fit_report;

  // Throws NotFound.
  double ability(const std::string& respondent) const;
};

struct FitOptions {
  int max_rounds = 50;
  double theta_tolerance = 1e-3;
  double relative_ll_tolerance = 1e-5;
  // Rescale abilities to mean 0 / unit spread after each round (items transformed to match).
  bool standardize_abilities = true;
  // 0 picks the hardware concurrency. Results do not depend on this value.
  unsigned threads = 0;
};

// Joint (Birnbaum) alternation: abilities start at raw accuracy, then item and ability
// steps alternate until both tolerances hold or max_rounds is reached. Never throws on
// non-convergence; the best model seen is returned with converged = false.
IrtModel birnbaum_fit(const ResponseMatrix& matrix, const FitOptions& options = {});

// Total log-likelihood of the matrix under a model (respondents looked up by name).
double model_log_likelihood(const ResponseMatrix& matrix, const IrtModel& model);

// Sum of icc_probability over retained items; retained means a > 0 when the flag is set.
double true_score(double theta, std::span<const ItemParams> items,
                  bool exclude_negative_discrimination);
std::size_t retained_item_count(std::span<const ItemParams> items,
                                bool exclude_negative_discrimination);

}  // namespace irtrank
