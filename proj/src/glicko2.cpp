#include "irtrank/glicko2.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "irtrank/errors.hpp"

namespace irtrank {
namespace {

double to_mu(double rating) { return (rating - 1500.0) / kGlickoScale; }
double to_phi(double rd) { return rd / kGlickoScale; }

double g(double phi) {
  return 1.0 / std::sqrt(1.0 + 3.0 * phi * phi / (std::numbers::pi * std::numbers::pi));
}

double expectation(double mu, double mu_j, double phi_j) {
  return 1.0 / (1.0 + std::exp(-g(phi_j) * (mu - mu_j)));
}

void check_rating(const Rating& r) {
  if (!std::isfinite(r.rating) || !std::isfinite(r.rd) || !std::isfinite(r.volatility) ||
      r.rd <= 0.0 || r.volatility <= 0.0) {
    throw DomainError("rating requires finite R, RD > 0 and volatility > 0");
  }
}

double new_volatility(double sigma, double phi, double v, double delta, double tau,
                      std::vector<VolatilityStep>* trace) {
  const double a = std::log(sigma * sigma);
  auto f = [&](double x) {
    const double ex = std::exp(x);
    const double d = phi * phi + v + ex;
    return ex * (delta * delta - phi * phi - v - ex) / (2.0 * d * d) - (x - a) / (tau * tau);
  };

  double A = a;
  double B = 0.0;
  if (delta * delta > phi * phi + v) {
    B = std::log(delta * delta - phi * phi - v);
  } else {
    int k = 1;
    while (f(a - k * tau) < 0.0) {
      if (k > kMaxVolatilitySteps) {
        throw ConvergenceError("volatility bracket not found in 100 steps");
      }
      ++k;
    }
    B = a - k * tau;
  }

  double fA = f(A);
  double fB = f(B);
  if (trace) trace->push_back({A, B, fA, fB});
  int steps = 0;
  while (std::abs(B - A) > kVolatilityEpsilon) {
    if (++steps > kMaxVolatilitySteps) {
      throw ConvergenceError("volatility iteration exceeded " +
                             std::to_string(kMaxVolatilitySteps) + " steps");
    }
    const double C = A + (A - B) * fA / (fB - fA);
    const double fC = f(C);
    if (fC * fB <= 0.0) {
      A = B;
      fA = fB;
    } else {
      fA /= 2.0;
    }
    B = C;
    fB = fC;
    if (trace) trace->push_back({A, B, fA, fB});
  }
  return std::exp(A / 2.0);
}

}  // namespace

std::pair<double, double> confidence_interval(const Rating& r) {
  return {r.rating - 2.0 * r.rd, r.rating + 2.0 * r.rd};
}

double expected_score(const Rating& player, const Rating& opponent) {
  return expectation(to_mu(player.rating), to_mu(opponent.rating), to_phi(opponent.rd));
}

Rating update_rating(const Rating& player, const std::vector<MatchOutcome>& outcomes, double tau,
                     std::vector<VolatilityStep>* trace) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("tau must be positive");
  check_rating(player);
  const double mu = to_mu(player.rating);
  const double phi = to_phi(player.rd);
  const double sigma = player.volatility;

  if (outcomes.empty()) {
    return {player.rating, kGlickoScale * std::sqrt(phi * phi + sigma * sigma), sigma};
  }

  double inv_v = 0.0;
  double score_sum = 0.0;
  for (const auto& o : outcomes) {
    check_rating(o.opponent);
    if (o.score != 0.0 && o.score != 0.5 && o.score != 1.0) {
      throw DomainError("match score must be 0, 0.5 or 1");
    }
    const double mu_j = to_mu(o.opponent.rating);
    const double g_j = g(to_phi(o.opponent.rd));
    const double e = expectation(mu, mu_j, to_phi(o.opponent.rd));
    inv_v += g_j * g_j * e * (1.0 - e);
    score_sum += g_j * (o.score - e);
  }
  const double v = 1.0 / inv_v;
  const double delta = v * score_sum;

  const double sigma_new = new_volatility(sigma, phi, v, delta, tau, trace);
  const double phi_star = std::sqrt(phi * phi + sigma_new * sigma_new);
  const double phi_new = 1.0 / std::sqrt(1.0 / (phi_star * phi_star) + 1.0 / v);
  const double mu_new = mu + phi_new * phi_new * score_sum;
  return {kGlickoScale * mu_new + 1500.0, kGlickoScale * phi_new, sigma_new};
}

}  // namespace irtrank
