#include <cmath>
#include <limits>

#include "doctest.h"
#include "irtrank/errors.hpp"
#include "irtrank/irt.hpp"
#include "test_support.hpp"

using namespace irtrank;

namespace {

std::vector<std::uint8_t> bits(std::initializer_list<int> v) {
  return std::vector<std::uint8_t>(v.begin(), v.end());
}

// Brute-force maximum of the item likelihood over a lattice, independent of the optimizer.
struct GridBest {
  double ll = -std::numeric_limits<double>::infinity();
  ItemParams at;
};

GridBest grid_search(const std::vector<std::uint8_t>& u, const std::vector<double>& th) {
  GridBest best;
  for (double a = -50.0; a <= 50.0; a += 0.5) {
    for (double b = -3.0; b <= 3.0; b += 0.05) {
      for (double c = 0.0; c <= 0.5; c += 0.05) {
        double ll = 0;
        for (std::size_t j = 0; j < u.size(); ++j) {
          const double p = std::clamp(testing::icc_oracle(th[j], a, b, c), 1e-9, 1 - 1e-9);
          ll += u[j] ? std::log(p) : std::log(1 - p);
        }
        if (ll > best.ll) best = {ll, {a, b, c}};
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("icc midpoint and asymptotes") {
  const ItemParams item{1.199, 0.3, 0.242};
  CHECK(icc_probability(0.3, item) == doctest::Approx(0.621).epsilon(1e-12));
  CHECK(icc_probability(5.0, {0.0, 1.0, 0.2}) == doctest::Approx(0.6));
  CHECK(icc_probability(-5.0, {0.0, 1.0, 0.2}) == doctest::Approx(0.6));
  const ItemParams flat{1.0, 0.0, 0.242};
  CHECK(std::abs(icc_probability(1000.0, flat) - 1.0) < 1e-12);
  CHECK(std::abs(icc_probability(-1000.0, flat) - 0.242) < 1e-12);
  CHECK(std::isfinite(icc_probability(0.0, {50.0, 10.0, 0.0})));
  CHECK_THROWS_AS(icc_probability(std::nan(""), flat), DomainError);
  CHECK_THROWS_AS(icc_probability(0.0, {std::numeric_limits<double>::infinity(), 0, 0}),
                  DomainError);
}

TEST_CASE("icc properties over random items") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 500; ++k) {
    const ItemParams item{testing::uniform(rng, -50, 50), testing::uniform(rng, -10, 10),
                          testing::uniform(rng, 0, 0.5)};
    CHECK(std::abs(icc_probability(item.b, item) - (1 + item.c) / 2) <= 1e-12);
    const double t = testing::uniform(rng, -6, 6);
    const double p = icc_probability(t, item);
    CHECK(p >= item.c);
    CHECK(p <= 1.0);
    CHECK(p == doctest::Approx(testing::icc_oracle(t, item.a, item.b, item.c)).epsilon(1e-12));
  }
}

TEST_CASE("icc is monotone in theta with the sign of a") {
  std::mt19937_64 rng(12);
  for (int k = 0; k < 200; ++k) {
    const double a = testing::uniform(rng, 0.1, 3.0);
    const double b = testing::uniform(rng, -2, 2);
    const double c = testing::uniform(rng, 0, 0.5);
    const double t1 = testing::uniform(rng, -3, 3);
    const double t2 = t1 + testing::uniform(rng, 0.01, 1.0);
    CHECK(icc_probability(t2, {a, b, c}) > icc_probability(t1, {a, b, c}));
    CHECK(icc_probability(t2, {-a, b, c}) < icc_probability(t1, {-a, b, c}));
  }
}

TEST_CASE("item log-likelihood") {
  const ItemParams half{1.0, 0.0, 0.0};
  const std::vector<double> zero{0.0};
  CHECK(item_log_likelihood(half, bits({1}), zero) == doctest::Approx(std::log(0.5)));
  const ItemParams item{1.3, 0.2, 0.1};
  const double p = icc_probability(0.7, item);
  const std::vector<double> two{0.7, 0.7};
  CHECK(item_log_likelihood(item, bits({1, 0}), two) ==
        doctest::Approx(std::log(p) + std::log(1 - p)));
  const std::vector<double> high{6.0};
  CHECK(std::abs(item_log_likelihood({5.0, -2.0, 0.0}, bits({1}), high)) < 1e-9);
  CHECK_THROWS_AS(item_log_likelihood(item, bits({1, 0}), zero), ShapeError);
  CHECK_THROWS_AS(item_log_likelihood(item, bits({}), std::vector<double>{}), ShapeError);
  // clamping keeps certain misses finite
  const std::vector<double> far{6.0};
  CHECK(item_log_likelihood({50.0, -10.0, 0.0}, bits({0}), far) == doctest::Approx(std::log(1e-9)));
}

TEST_CASE("degenerate columns") {
  const std::vector<double> th{-1, 0, 1, 2};
  const auto right = fit_item(bits({1, 1, 1, 1}), th);
  CHECK(right.degenerate);
  CHECK(right.params == ItemParams{0.0, -10.0, 0.0});
  const auto wrong = fit_item(bits({0, 0, 0, 0}), th);
  CHECK(wrong.degenerate);
  CHECK(wrong.params == ItemParams{0.0, 0.0, 0.0});
  CHECK(std::isfinite(right.log_likelihood));
  CHECK(std::isfinite(wrong.log_likelihood));
}

TEST_CASE("guttman column matches the lattice oracle") {
  const auto u = bits({0, 0, 1, 1});
  const std::vector<double> th{-2, -1, 1, 2};
  const auto fit = fit_item(u, th);
  const auto grid = grid_search(u, th);
  // lattice best sits in the steep, centred region
  CHECK(grid.at.a > 5.0);
  CHECK(grid.at.b > -1.0);
  CHECK(grid.at.b < 1.0);
  CHECK(fit.params.a > 5.0);
  CHECK(fit.params.b > -1.0);
  CHECK(fit.params.b < 1.0);
  CHECK(fit.log_likelihood >= grid.ll - 1e-9);
}

TEST_CASE("fit_item respects bounds and beats every fixed start") {
  std::mt19937_64 rng(21);
  for (int k = 0; k < 30; ++k) {
    std::vector<double> th;
    std::vector<std::uint8_t> u;
    const ItemParams truth{testing::uniform(rng, -3, 3), testing::uniform(rng, -2, 2),
                           testing::uniform(rng, 0, 0.3)};
    for (int j = 0; j < 60; ++j) {
      th.push_back(testing::normal(rng));
      u.push_back(static_cast<std::uint8_t>(testing::draw(rng, icc_probability(th.back(), truth))));
    }
    const auto fit = fit_item(u, th);
    if (fit.degenerate) continue;
    CHECK(fit.params.a >= kDiscriminationBounds.lo);
    CHECK(fit.params.a <= kDiscriminationBounds.hi);
    CHECK(fit.params.b >= kDifficultyBounds.lo);
    CHECK(fit.params.b <= kDifficultyBounds.hi);
    CHECK(fit.params.c >= kGuessingBounds.lo);
    CHECK(fit.params.c <= kGuessingBounds.hi);
    for (const auto& s : kItemStarts) CHECK(fit.log_likelihood >= item_log_likelihood(s, u, th) - 1e-9);
    CHECK(fit.log_likelihood == doctest::Approx(item_log_likelihood(fit.params, u, th)));
    const auto again = fit_item(u, th);
    CHECK(again.params == fit.params);
  }
}

TEST_CASE("fit_item recovers a known item over 20 seeds") {
  const ItemParams truth{1.2, 0.5, 0.2};
  double sum_b = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> th;
    std::vector<std::uint8_t> u;
    for (int j = 0; j < 500; ++j) {
      th.push_back(testing::normal(rng));
      u.push_back(static_cast<std::uint8_t>(testing::draw(rng, icc_probability(th.back(), truth))));
    }
    sum_b += fit_item(u, th).params.b;
  }
  CHECK(std::abs(sum_b / 20 - 0.5) <= 0.3);
}

TEST_CASE("warm start never loses likelihood") {
  std::mt19937_64 rng(5);
  std::vector<double> th;
  std::vector<std::uint8_t> u;
  for (int j = 0; j < 40; ++j) {
    th.push_back(testing::normal(rng));
    u.push_back(static_cast<std::uint8_t>(testing::draw(rng, 0.6)));
  }
  const auto cold = fit_item(u, th);
  const auto warm = fit_item(u, th, ItemParams{-3.0, 2.0, 0.4});
  CHECK(warm.log_likelihood >= cold.log_likelihood - 1e-12);
  CHECK(fit_item(u, th, cold.params).log_likelihood >= cold.log_likelihood - 1e-12);
}

TEST_CASE("ability at the bounds") {
  std::vector<ItemParams> items;
  for (int i = 0; i < 20; ++i) items.push_back({1.0 + 0.05 * i, -2.0 + 0.2 * i, 0.0});
  const std::vector<std::uint8_t> ones(20, 1);
  const std::vector<std::uint8_t> zeros(20, 0);
  CHECK(estimate_ability(items, ones, 0.5) == doctest::Approx(kAbilityBounds.hi));
  CHECK(estimate_ability(items, zeros, 0.5) == doctest::Approx(kAbilityBounds.lo));
  CHECK_THROWS_AS(estimate_ability({}, {}, 0.0), EmptyInput);
  CHECK_THROWS_AS(estimate_ability(items, std::vector<std::uint8_t>(3, 1), 0.0), ShapeError);
}

TEST_CASE("ability recovery over 20 seeds") {
  double total_error = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed * 101);
    std::vector<ItemParams> items;
    std::vector<std::uint8_t> u;
    for (int i = 0; i < 200; ++i) {
      items.push_back({testing::uniform(rng, 0.5, 2.5), testing::uniform(rng, -2, 2),
                       testing::uniform(rng, 0, 0.3)});
      u.push_back(static_cast<std::uint8_t>(testing::draw(rng, icc_probability(1.0, items.back()))));
    }
    const double est = estimate_ability(items, u, 0.5);
    CHECK(std::abs(est - 1.0) <= 0.4);
    total_error += est - 1.0;
  }
  CHECK(std::abs(total_error / 20) <= 0.15);
}

TEST_CASE("staged estimate agrees with the direct maximum") {
  std::mt19937_64 rng(77);
  for (int k = 0; k < 20; ++k) {
    std::vector<ItemParams> items;
    std::vector<std::uint8_t> u;
    const double theta = testing::uniform(rng, -2, 2);
    for (int i = 0; i < 50; ++i) {
      items.push_back({testing::uniform(rng, 0.5, 2.0), testing::uniform(rng, -2, 2), 0.0});
      u.push_back(static_cast<std::uint8_t>(testing::draw(rng, icc_probability(theta, items.back()))));
    }
    const double staged = estimate_ability(items, u, 0.0);
    // c = 0 and a > 0 make the ability likelihood concave, so the maximum is unique
    double best = -6;
    for (double t = -6; t <= 6; t += 1e-3) {
      if (ability_log_likelihood(items, u, t) > ability_log_likelihood(items, u, best)) best = t;
    }
    CHECK(std::abs(staged - best) <= 2e-3);
  }
}

TEST_CASE("consistent order is preferred") {
  // two respondents, equal totals; the one answering the easier items never scores lower
  const std::vector<ItemParams> items{{1.5, -1.5, 0.1}, {1.2, -0.5, 0.1}, {1.0, 0.5, 0.1},
                                      {1.4, 1.5, 0.1}};
  const std::vector<std::vector<std::uint8_t>> patterns{
      {1, 1, 0, 0}, {1, 0, 1, 0}, {1, 0, 0, 1}, {0, 1, 1, 0}, {0, 1, 0, 1}, {0, 0, 1, 1}};
  for (std::size_t x = 0; x < patterns.size(); ++x) {
    for (std::size_t y = x + 1; y < patterns.size(); ++y) {
      // x dominates y when its correct answers sit on items at least as easy
      int sx = 0, sy = 0;
      bool dominated = true;
      for (std::size_t i = 0; i < 4; ++i) {
        sx += patterns[x][i];
        sy += patterns[y][i];
        dominated = dominated && sx >= sy;
      }
      if (!dominated) continue;
      CHECK(maximize_ability(items, patterns[x], 0.0) >=
            maximize_ability(items, patterns[y], 0.0) - 1e-9);
    }
  }
}

TEST_CASE("ability log-likelihood derivatives") {
  std::mt19937_64 rng(31);
  std::vector<ItemParams> items;
  std::vector<std::uint8_t> u;
  for (int i = 0; i < 15; ++i) {
    items.push_back({testing::uniform(rng, -2, 2), testing::uniform(rng, -2, 2),
                     testing::uniform(rng, 0, 0.3)});
    u.push_back(static_cast<std::uint8_t>(testing::draw(rng, 0.5)));
  }
  for (double t : {-2.0, -0.3, 0.0, 1.1, 2.5}) {
    const double h = 1e-5;
    const double fd = (ability_log_likelihood(items, u, t + h) - ability_log_likelihood(items, u, t - h)) / (2 * h);
    CHECK(ability_log_likelihood_derivative(items, u, t) == doctest::Approx(fd).epsilon(1e-5));
    const double fd2 = (ability_log_likelihood_derivative(items, u, t + h) -
                        ability_log_likelihood_derivative(items, u, t - h)) / (2 * h);
    CHECK(ability_log_likelihood_second_derivative(items, u, t) == doctest::Approx(fd2).epsilon(1e-4));
  }
}

TEST_CASE("five-by-five fit puts item 2 hardest") {
  const auto model = birnbaum_fit(testing::five_by_five_matrix());
  CHECK(model.fit_report.converged);
  CHECK(model.items.size() == 5);
  CHECK(model.abilities.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    if (i != 1) CHECK(model.items[1].b > model.items[i].b);
  }
  CHECK(std::isfinite(model.fit_report.log_likelihood));
  CHECK(model.fit_report.log_likelihood ==
        doctest::Approx(model_log_likelihood(testing::five_by_five_matrix(), model)));
}

TEST_CASE("dominant respondent gets the top ability") {
  std::mt19937_64 rng(8);
  std::vector<std::vector<int>> rows;
  std::vector<std::string> names;
  for (int j = 0; j < 12; ++j) {
    std::vector<int> row;
    const double p = 0.2 + 0.05 * j;
    for (int i = 0; i < 20; ++i) row.push_back(testing::draw(rng, p));
    rows.push_back(row);
    names.push_back("r" + std::to_string(j));
  }
  // cell-wise maximum over every other row
  std::vector<int> top(20, 0);
  for (const auto& r : rows) {
    for (int i = 0; i < 20; ++i) top[static_cast<std::size_t>(i)] |= r[static_cast<std::size_t>(i)];
  }
  top[0] = 1;
  rows.push_back(top);
  names.push_back("top");
  std::vector<std::string> ids;
  for (int i = 0; i < 20; ++i) ids.push_back(std::to_string(i));
  const auto model = birnbaum_fit(ResponseMatrix("dom", names, ids, rows));
  std::size_t positive = 0;
  for (const auto& it : model.items) positive += it.a > 0;
  REQUIRE(positive * 2 > model.items.size());
  for (const auto& [name, theta] : model.abilities) CHECK(model.ability("top") >= theta);
  CHECK_THROWS_AS(model.ability("nobody"), NotFound);
}

TEST_CASE("joint fit is deterministic across thread counts") {
  const auto s = testing::synthetic_3pl(60, 25, 4);
  FitOptions one;
  one.threads = 1;
  FitOptions four;
  four.threads = 4;
  const auto x = birnbaum_fit(s.matrix, one);
  const auto y = birnbaum_fit(s.matrix, four);
  CHECK(x.items == y.items);
  CHECK(x.abilities == y.abilities);
  CHECK(x.fit_report.iterations == y.fit_report.iterations);
}

TEST_CASE("non-convergence is reported, not thrown") {
  const auto s = testing::synthetic_3pl(40, 15, 9);
  FitOptions tight;
  tight.max_rounds = 2;
  tight.relative_ll_tolerance = 0;
  tight.theta_tolerance = 0;
  const auto model = birnbaum_fit(s.matrix, tight);
  CHECK_FALSE(model.fit_report.converged);
  CHECK(model.fit_report.iterations <= 2);
  CHECK(std::isfinite(model.fit_report.log_likelihood));
  CHECK(model.abilities.size() == 40);
}

TEST_CASE("fit flags degenerate items") {
  const ResponseMatrix m("deg", {"a", "b", "c", "d"}, {"1", "2", "3"},
                         {{1, 0, 1}, {1, 0, 0}, {1, 0, 1}, {1, 0, 0}});
  const auto model = birnbaum_fit(m);
  CHECK(model.fit_report.degenerate_items == std::vector<std::size_t>{0, 1});
  CHECK(model.items[0] == ItemParams{0.0, -10.0, 0.0});
  CHECK(model.items[1] == ItemParams{0.0, 0.0, 0.0});
  CHECK(std::isfinite(model.fit_report.log_likelihood));
}

TEST_CASE("true score") {
  const auto items = testing::reference_items();
  long double oracle = 0;
  for (const auto& it : items) oracle += testing::icc_oracle(3.0, it.a, it.b, it.c);
  // frozen from the oracle above
  CHECK(static_cast<double>(oracle) == doctest::Approx(4.932312690).epsilon(1e-9));
  CHECK(std::abs(true_score(3.0, items, false) - 4.9323) <= 0.01);
  CHECK(true_score(3.0, items, false) == doctest::Approx(static_cast<double>(oracle)));
  CHECK(true_score(0.4, std::vector<ItemParams>{{2.0, 0.4, 0.0}}, false) == doctest::Approx(0.5));
  CHECK(true_score(0.0, std::vector<ItemParams>{}, false) == 0.0);
  const std::vector<ItemParams> negative{{-1.0, 0.0, 0.1}, {-2.0, 1.0, 0.0}};
  CHECK(true_score(1.0, negative, true) == 0.0);
  CHECK(retained_item_count(negative, true) == 0);
  CHECK(retained_item_count(negative, false) == 2);
  CHECK(retained_item_count(std::vector<ItemParams>{{0.0, 0.0, 0.0}}, true) == 0);
}

TEST_CASE("true score rises with ability on positive items") {
  std::mt19937_64 rng(17);
  std::vector<ItemParams> items;
  for (int i = 0; i < 30; ++i) {
    items.push_back({testing::uniform(rng, 0.1, 3), testing::uniform(rng, -3, 3),
                     testing::uniform(rng, 0, 0.4)});
  }
  double prev = true_score(-6.0, items, false);
  for (double t = -5.9; t <= 6.0; t += 0.1) {
    const double cur = true_score(t, items, false);
    CHECK(cur > prev);
    prev = cur;
  }
}
