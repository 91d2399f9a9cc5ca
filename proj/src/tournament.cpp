#include "irtrank/tournament.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "irtrank/errors.hpp"
#include "irtrank/format.hpp"

namespace irtrank {

std::map<std::string, std::vector<MatchOutcome>> round_robin_scores(
    const std::map<std::string, double>& true_scores, const std::map<std::string, Rating>& ratings,
    double draw_epsilon) {
  if (true_scores.size() < 2) {
    throw TooFewPlayers("a round robin needs at least 2 classifiers, got " +
                        std::to_string(true_scores.size()));
  }
  if (!(draw_epsilon >= 0.0)) throw DomainError("draw epsilon must be non-negative");
  auto rating_of = [&](const std::string& name) {
    const auto it = ratings.find(name);
    return it == ratings.end() ? Rating{} : it->second;
  };

  std::map<std::string, std::vector<MatchOutcome>> games;
  for (auto i = true_scores.begin(); i != true_scores.end(); ++i) {
    for (auto j = std::next(i); j != true_scores.end(); ++j) {
      const double diff = i->second - j->second;
      double si = 0.5;
      if (std::abs(diff) > draw_epsilon) si = diff > 0.0 ? 1.0 : 0.0;
      games[i->first].push_back({rating_of(j->first), si});
      games[j->first].push_back({rating_of(i->first), 1.0 - si});
    }
  }
  return games;
}

std::map<std::string, double> points(const std::map<std::string, std::vector<MatchOutcome>>& games) {
  std::map<std::string, double> out;
  for (const auto& [name, list] : games) {
    double total = 0.0;
    for (const auto& o : list) total += o.score;
    out[name] = total;
  }
  return out;
}

Standings rank_standings(const std::map<std::string, Rating>& ratings) {
  Standings out(ratings.begin(), ratings.end());
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    if (x.second.rating != y.second.rating) return x.second.rating > y.second.rating;
    if (x.second.rd != y.second.rd) return x.second.rd < y.second.rd;
    return x.first < y.first;
  });
  return out;
}

RatingHistory run_score_tournament(const std::vector<PeriodScores>& periods,
                                   const std::vector<std::string>& classifiers,
                                   const TournamentOptions& options) {
  if (classifiers.empty()) throw EmptyInput("tournament has no classifiers");
  if (!(options.tau > 0.0)) throw DomainError("tau must be positive");
  std::map<std::string, Rating> ratings;
  for (const auto& name : classifiers) {
    if (!ratings.emplace(name, Rating{}).second) throw DuplicateRespondent(name);
  }

  RatingHistory history;
  for (const auto& period : periods) {
    PeriodResult result;
    result.dataset_id = period.dataset_id;
    for (const auto& name : classifiers) {
      const auto it = period.true_scores.find(name);
      if (it == period.true_scores.end()) {
        result.absent.push_back(name);
      } else {
        result.true_scores[name] = it->second;
      }
    }
    std::sort(result.absent.begin(), result.absent.end());

    std::map<std::string, std::vector<MatchOutcome>> games;
    if (result.true_scores.size() >= 2) {
      games = round_robin_scores(result.true_scores, ratings, options.draw_epsilon);
      result.scores = points(games);
    } else {
      for (const auto& [name, ts] : result.true_scores) result.scores[name] = 0.0;
    }

    // All updates read the pre-period table.
    std::map<std::string, Rating> next;
    for (const auto& [name, rating] : ratings) {
      const auto it = games.find(name);
      next[name] = update_rating(rating, it == games.end() ? std::vector<MatchOutcome>{}
                                                           : it->second,
                                 options.tau);
    }
    ratings = std::move(next);
    result.standings_after = rank_standings(ratings);
    history.periods.push_back(std::move(result));
  }
  history.final_ranking = rank_standings(ratings);
  return history;
}

RatingHistory run_tournament(const std::vector<std::string>& dataset_order,
                             const std::map<std::string, IrtModel>& models,
                             const std::vector<std::string>& classifiers,
                             const TournamentOptions& options) {
  std::vector<PeriodScores> periods;
  periods.reserve(dataset_order.size());
  for (const auto& id : dataset_order) {
    const auto it = models.find(id);
    if (it == models.end()) throw NotFound("no fitted model for dataset '" + id + "'");
    const auto& model = it->second;
    PeriodScores p{id, {}};
    for (const auto& name : classifiers) {
      const auto ab = model.abilities.find(name);
      if (ab == model.abilities.end()) continue;
      p.true_scores[name] =
          true_score(ab->second, model.items, options.exclude_negative_discrimination);
    }
    periods.push_back(std::move(p));
  }
  return run_score_tournament(periods, classifiers, options);
}

std::vector<BumpRow> bump_chart_data(const RatingHistory& history) {
  std::vector<BumpRow> rows;
  for (std::size_t p = 0; p < history.periods.size(); ++p) {
    const auto& standings = history.periods[p].standings_after;
    std::size_t rank = 0;
    for (std::size_t k = 0; k < standings.size(); ++k) {
      if (k == 0 || standings[k].second.rating != standings[k - 1].second.rating) ++rank;
      rows.push_back({p + 1, standings[k].first, rank, standings[k].second.rating,
                      standings[k].second.rd});
    }
  }
  return rows;
}

void write_bump_csv(std::ostream& out, const std::vector<BumpRow>& rows) {
  out << "period,classifier,rank,rating,rd\n";
  for (const auto& r : rows) {
    out << r.period << ',' << csv_field(r.classifier) << ',' << r.rank << ','
        << format_double(r.rating) << ',' << format_double(r.rd) << '\n';
  }
}

}  // namespace irtrank
