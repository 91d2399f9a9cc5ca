#include <cmath>

#include "doctest.h"
#include "irtrank/errors.hpp"
#include "irtrank/glicko2.hpp"
#include "test_support.hpp"

using namespace irtrank;

namespace {

// Independent period update: long double throughout, plain bisection for the volatility root.
struct OracleResult {
  long double v, delta, sigma, rating, rd;
};

OracleResult oracle_update(long double r, long double rd, long double sigma,
                           const std::vector<std::pair<std::pair<long double, long double>, long double>>& games,
                           long double tau) {
  const long double s = 173.7178L;
  const long double pi = 3.141592653589793238462643383279502884L;
  const long double mu = (r - 1500) / s;
  const long double phi = rd / s;
  long double inv_v = 0, sum = 0;
  for (const auto& [opp, score] : games) {
    const long double mj = (opp.first - 1500) / s;
    const long double pj = opp.second / s;
    const long double g = 1 / std::sqrt(1 + 3 * pj * pj / (pi * pi));
    const long double e = 1 / (1 + std::exp(-g * (mu - mj)));
    inv_v += g * g * e * (1 - e);
    sum += g * (score - e);
  }
  const long double v = 1 / inv_v;
  const long double delta = v * sum;
  const long double a = std::log(sigma * sigma);
  auto f = [&](long double x) {
    const long double ex = std::exp(x);
    const long double d = phi * phi + v + ex;
    return ex * (delta * delta - phi * phi - v - ex) / (2 * d * d) - (x - a) / (tau * tau);
  };
  // f is decreasing; bracket then bisect
  long double lo = a - 20, hi = a + 20;
  for (int k = 0; k < 200; ++k) {
    const long double mid = (lo + hi) / 2;
    (f(mid) > 0 ? lo : hi) = mid;
  }
  const long double sigma_new = std::exp((lo + hi) / 4);
  const long double phi_star = std::sqrt(phi * phi + sigma_new * sigma_new);
  const long double phi_new = 1 / std::sqrt(1 / (phi_star * phi_star) + 1 / v);
  const long double mu_new = mu + phi_new * phi_new * sum;
  return {v, delta, sigma_new, s * mu_new + 1500, s * phi_new};
}

const std::vector<MatchOutcome> kExampleGames{
    {{1400, 30, 0.06}, 1.0}, {{1550, 100, 0.06}, 0.0}, {{1700, 300, 0.06}, 0.0}};

}  // namespace

TEST_CASE("confidence interval") {
  const auto [lo, hi] = confidence_interval(Rating{});
  CHECK(lo == 800.0);
  CHECK(hi == 2200.0);
  const auto [l2, h2] = confidence_interval({1500, 0.0001, 0.06});
  CHECK(h2 - l2 == doctest::Approx(0.0004));
  const auto [l3, h3] = confidence_interval({1464.06, 151.52, 0.06});
  CHECK(l3 == doctest::Approx(1161.02));
  CHECK(h3 == doctest::Approx(1767.10));
}

TEST_CASE("oracle reproduces the frozen worked example") {
  const auto o = oracle_update(1500, 200, 0.06, {{{1400, 30}, 1}, {{1550, 100}, 0}, {{1700, 300}, 0}},
                               0.5);
  CHECK(static_cast<double>(o.v) == doctest::Approx(1.77898).epsilon(1e-5));
  CHECK(static_cast<double>(o.delta) == doctest::Approx(-0.48393).epsilon(1e-4));
  CHECK(std::abs(static_cast<double>(o.rating) - 1464.0507) < 1e-3);
  CHECK(std::abs(static_cast<double>(o.rd) - 151.5165) < 1e-3);
  CHECK(std::abs(static_cast<double>(o.sigma) - 0.0599960) < 1e-7);
}

TEST_CASE("worked example") {
  const auto r = update_rating({1500, 200, 0.06}, kExampleGames, 0.5);
  CHECK(std::abs(r.rating - 1464.06) <= 0.05);
  CHECK(std::abs(r.rd - 151.52) <= 0.05);
  CHECK(std::abs(r.volatility - 0.05999) <= 1e-4);
  const auto o = oracle_update(1500, 200, 0.06, {{{1400, 30}, 1}, {{1550, 100}, 0}, {{1700, 300}, 0}},
                               0.5);
  CHECK(r.rating == doctest::Approx(static_cast<double>(o.rating)).epsilon(1e-9));
  CHECK(r.rd == doctest::Approx(static_cast<double>(o.rd)).epsilon(1e-9));
  CHECK(r.volatility == doctest::Approx(static_cast<double>(o.sigma)).epsilon(1e-7));
}

TEST_CASE("library matches the oracle on random periods") {
  std::mt19937_64 rng(99);
  for (int k = 0; k < 200; ++k) {
    const Rating p{testing::uniform(rng, 1000, 2000), testing::uniform(rng, 30, 350),
                   testing::uniform(rng, 0.03, 0.1)};
    std::vector<MatchOutcome> games;
    std::vector<std::pair<std::pair<long double, long double>, long double>> og;
    const int n = 1 + static_cast<int>(testing::uniform(rng, 0, 8));
    for (int g = 0; g < n; ++g) {
      const Rating o{testing::uniform(rng, 1000, 2000), testing::uniform(rng, 30, 350), 0.06};
      const double score = std::floor(testing::uniform(rng, 0, 3)) / 2.0;
      games.push_back({o, score});
      og.push_back({{o.rating, o.rd}, score});
    }
    const double tau = testing::uniform(rng, 0.3, 1.2);
    const auto r = update_rating(p, games, tau);
    const auto o = oracle_update(p.rating, p.rd, p.volatility, og, tau);
    CHECK(r.rating == doctest::Approx(static_cast<double>(o.rating)).epsilon(1e-8));
    // the volatility root stops at 1e-6 in log(sigma^2), which reaches RD through phi*
    CHECK(r.rd == doctest::Approx(static_cast<double>(o.rd)).epsilon(1e-6));
    CHECK(r.volatility == doctest::Approx(static_cast<double>(o.sigma)).epsilon(1e-6));
  }
}

TEST_CASE("inactivity") {
  const auto r = update_rating(Rating{}, {});
  CHECK(r.rating == 1500.0);
  CHECK(r.volatility == 0.06);
  CHECK(std::abs(r.rd - 350.155) <= 0.01);
  CHECK(r.rd == doctest::Approx(std::sqrt(350.0 * 350.0 + std::pow(0.06 * kGlickoScale, 2))));
  // no games and no drift: the scale round trip is exact
  const Rating p{1623.25, 87.5, 1e-300};
  const auto q = update_rating(p, {});
  CHECK(std::abs(q.rating - p.rating) <= 1e-9);
  CHECK(std::abs(q.rd - p.rd) <= 1e-9);
}

TEST_CASE("argument checks") {
  CHECK_THROWS_AS(update_rating(Rating{}, {}, 0.0), DomainError);
  CHECK_THROWS_AS(update_rating(Rating{}, {}, -1.0), DomainError);
  CHECK_THROWS_AS(update_rating(Rating{}, {{Rating{}, 0.3}}), DomainError);
  CHECK_THROWS_AS(update_rating({1500, 0, 0.06}, {}), DomainError);
}

TEST_CASE("symmetric draws and zero-sum wins") {
  const auto d = update_rating(Rating{}, {{Rating{}, 0.5}});
  CHECK(d.rating == 1500.0);
  const auto win = update_rating(Rating{}, {{Rating{}, 1.0}});
  const auto loss = update_rating(Rating{}, {{Rating{}, 0.0}});
  CHECK(std::abs((win.rating - 1500) + (loss.rating - 1500)) <= 1e-9);
  CHECK(win.rd == loss.rd);
  CHECK(win.volatility == loss.volatility);
}

TEST_CASE("expected score") {
  CHECK(expected_score({1500, 350, 0.06}, {1500, 30, 0.06}) == 0.5);
  CHECK(expected_score({1700, 50, 0.06}, {1700, 300, 0.06}) == 0.5);
  CHECK(expected_score({1e9, 50, 0.06}, {1500, 50, 0.06}) == doctest::Approx(1.0));
  const double e = expected_score({1500, 350, 0.06}, {1700, 300, 0.06});
  CHECK(e > 0.0);
  CHECK(e < 0.5);
}

TEST_CASE("period properties") {
  std::mt19937_64 rng(123);
  for (int k = 0; k < 300; ++k) {
    const Rating p{testing::uniform(rng, 1200, 1800), testing::uniform(rng, 40, 350),
                   testing::uniform(rng, 0.04, 0.09)};
    std::vector<MatchOutcome> games;
    const int n = 1 + static_cast<int>(testing::uniform(rng, 0, 6));
    for (int g = 0; g < n; ++g) {
      games.push_back({{testing::uniform(rng, 1200, 1800), testing::uniform(rng, 40, 350), 0.06},
                       std::floor(testing::uniform(rng, 0, 3)) / 2.0});
    }
    std::vector<VolatilityStep> trace;
    const auto r = update_rating(p, games, 0.5, &trace);

    // playing never inflates uncertainty past the drift
    const double phi = p.rd / kGlickoScale;
    const double sig = r.volatility;
    CHECK(r.rd / kGlickoScale < std::sqrt(phi * phi + sig * sig));

    // the root stays bracketed at every step
    REQUIRE_FALSE(trace.empty());
    for (const auto& s : trace) CHECK(s.fa * s.fb <= 0.0);
    CHECK(std::abs(trace.back().b - trace.back().a) <= kVolatilityEpsilon);

    // a loss turned into a win never lowers the rating
    for (std::size_t g = 0; g < games.size(); ++g) {
      if (games[g].score != 0.0) continue;
      auto better = games;
      better[g].score = 1.0;
      CHECK(update_rating(p, better, 0.5).rating >= r.rating);
    }

    CHECK(update_rating(p, games, 0.5) == r);
  }
}
