#pragma once

#include <utility>
#include <vector>

namespace irtrank {

inline constexpr double kGlickoScale = 173.7178;
inline constexpr double kDefaultTau = 0.5;
inline constexpr double kVolatilityEpsilon = 1e-6;
inline constexpr int kMaxVolatilitySteps = 100;

struct Rating {
  double rating = 1500.0;
  double rd = 350.0;
  double volatility = 0.06;

  friend bool operator==(const Rating&, const Rating&) = default;
};

struct MatchOutcome {
  Rating opponent;
  double score = 0.0;  // 0, 0.5 or 1
};

// [R - 2 RD, R + 2 RD]
std::pair<double, double> confidence_interval(const Rating& r);

// Win probability of player against opponent on the internal scale.
double expected_score(const Rating& player, const Rating& opponent);

// One bracket of the volatility root search: (A, B, f(A), f(B)).
struct VolatilityStep {
  double a;
  double b;
  double fa;
  double fb;
};

// One rating-period update. Empty outcomes only inflate RD.
// Throws DomainError on tau <= 0 or a score outside {0, 0.5, 1};
// ConvergenceError if the volatility search needs more than 100 steps.
// When trace is non-null, every bracket visited is appended to it.
Rating update_rating(const Rating& player, const std::vector<MatchOutcome>& outcomes,
                     double tau = kDefaultTau, std::vector<VolatilityStep>* trace = nullptr);

}  // namespace irtrank
