#pragma once

#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "irtrank/glicko2.hpp"
#include "irtrank/irt.hpp"

namespace irtrank {

using Standings = std::vector<std::pair<std::string, Rating>>;

struct PeriodResult {
  std::string dataset_id;
  std::map<std::string, double> true_scores;
  // Points earned this period; sums to n(n-1)/2 over the n classifiers that played.
  std::map<std::string, double> scores;
  Standings standings_after;
  // Classifiers with no ability in this dataset's model; they only drift.
  std::vector<std::string> absent;
};

struct RatingHistory {
  std::vector<PeriodResult> periods;
  Standings final_ranking;
};

struct TournamentOptions {
  bool exclude_negative_discrimination = false;
  // True-Scores within this distance are a draw. 0 means exact equality.
  double draw_epsilon = 0.0;
  double tau = kDefaultTau;
};

// Every unordered pair meets once: 1/0 on the larger True-Score, 0.5 each on a draw.
// Opponents enter with their rating from `ratings` (default rating when missing).
// Throws TooFewPlayers below 2 classifiers.
std::map<std::string, std::vector<MatchOutcome>> round_robin_scores(
    const std::map<std::string, double>& true_scores,
    const std::map<std::string, Rating>& ratings = {}, double draw_epsilon = 0.0);

// Total points per classifier from a round robin.
std::map<std::string, double> points(const std::map<std::string, std::vector<MatchOutcome>>& games);

struct PeriodScores {
  std::string dataset_id;
  std::map<std::string, double> true_scores;
};

// Sorted by rating descending, then lower RD, then name.
Standings rank_standings(const std::map<std::string, Rating>& ratings);

// Rating periods over precomputed True-Scores. A classifier missing from a period's
// scores gets the inactivity update. Throws EmptyInput when classifiers is empty.
RatingHistory run_score_tournament(const std::vector<PeriodScores>& periods,
                                   const std::vector<std::string>& classifiers,
                                   const TournamentOptions& options = {});

// One period per dataset in order; True-Scores come from each dataset's model.
// Throws NotFound for a dataset without a model, EmptyInput when classifiers is empty.
RatingHistory run_tournament(const std::vector<std::string>& dataset_order,
                             const std::map<std::string, IrtModel>& models,
                             const std::vector<std::string>& classifiers,
                             const TournamentOptions& options = {});

struct BumpRow {
  std::size_t period;  // 1-based
  std::string classifier;
  std::size_t rank;  // dense, 1 = highest rating
  double rating;
  double rd;
};

std::vector<BumpRow> bump_chart_data(const RatingHistory& history);
// Header: period,classifier,rank,rating,rd
void write_bump_csv(std::ostream& out, const std::vector<BumpRow>& rows);

}  // namespace irtrank
