#include "irtrank/irt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "irtrank/errors.hpp"

namespace irtrank {

namespace {

struct Logistic {
  double value;       // sigma(z)
  double complement;  // 1 - sigma(z), computed without cancellation
};

Logistic logistic(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return {1.0 / (1.0 + e), e / (1.0 + e)};
  }
  const double e = std::exp(z);
  return {e / (1.0 + e), 1.0 / (1.0 + e)};
}

// Per-observation pieces shared by the likelihood and its derivatives.
struct Observation {
  double p;      // clamped probability of a correct answer
  double dp_dz;  // zero when clamped
  double dp_dc;  // zero when clamped
  double d2p_dz2;
};

Observation observe(double theta, const ItemParams& item) {
  const double z = item.a * (theta - item.b);
  const auto s = logistic(z);
  const double p = item.c + (1.0 - item.c) * s.value;
  if (p < kProbabilityFloor) {
    return {kProbabilityFloor, 0.0, 0.0, 0.0};
  }
  if (p > 1.0 - kProbabilityFloor) {
    return {1.0 - kProbabilityFloor, 0.0, 0.0, 0.0};
  }
  const double slope = s.value * s.complement;
  return {p, (1.0 - item.c) * slope, s.complement,
          (1.0 - item.c) * slope * (s.complement - s.value)};
}

double observation_ll(std::uint8_t u, double p) {
  return u ? std::log(p) : std::log1p(-p);
}

// d/dp of the observation log-likelihood.
double observation_weight(std::uint8_t u, double p) {
  return u ? 1.0 / p : -1.0 / (1.0 - p);
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw DomainError(std::string("non-finite ") + what);
  }
}

void check_lengths(std::size_t responses, std::size_t thetas) {
  if (responses != thetas) {
    throw ShapeError("responses (" + std::to_string(responses) + ") and abilities (" +
                     std::to_string(thetas) + ") differ in length");
  }
  if (responses == 0) {
    throw ShapeError("item log-likelihood needs at least one respondent");
  }
}

double clamp_to(double v, ParamBounds bounds) { return std::clamp(v, bounds.lo, bounds.hi); }

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

struct BoxMinimum {
  Vec3 x;
  double value;
  int iterations;
};

// Solves (m + damping * diag(m)) d = rhs restricted to the free coordinates.
// Returns false when the reduced system is singular.
bool solve_damped(const Mat3& m, const Vec3& rhs, const std::array<bool, 3>& free,
                  double damping, Vec3& d) {
  std::array<int, 3> idx{};
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    if (free[i]) idx[n++] = i;
  }
  double a[3][4] = {};
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      a[r][c] = m[idx[r]][idx[c]];
    }
    a[r][r] += damping * std::max(m[idx[r]][idx[r]], 1e-8);
    a[r][n] = rhs[idx[r]];
  }
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-300) return false;
    for (int c = 0; c <= n; ++c) std::swap(a[col][c], a[pivot][c]);
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double factor = a[r][col] / a[col][col];
      for (int c = col; c <= n; ++c) a[r][c] -= factor * a[col][c];
    }
  }
  d = {0.0, 0.0, 0.0};
  for (int r = 0; r < n; ++r) {
    d[idx[r]] = a[r][n] / a[r][r];
  }
  return std::isfinite(d[0]) && std::isfinite(d[1]) && std::isfinite(d[2]);
}

// Damped quasi-Newton descent on a box. The objective fills the gradient and a positive
// semi-definite curvature approximation; coordinates pinned at a bound with the gradient
// pointing outward are frozen for the step, and the damping grows until the projected
// step satisfies the Armijo condition.
template <class Objective>
BoxMinimum minimize_in_box(Objective&& objective, Vec3 x, const Vec3& lo, const Vec3& hi,
                           int max_iterations = 200) {
  for (int i = 0; i < 3; ++i) {
    x[i] = std::clamp(x[i], lo[i], hi[i]);
  }
  Vec3 g{};
  Mat3 curvature{};
  double f = objective(x, g, curvature);
  double damping = 1e-3;
  int it = 0;
  for (; it < max_iterations; ++it) {
    std::array<bool, 3> free{};
    double pg = 0.0;
    for (int i = 0; i < 3; ++i) {
      free[i] = !((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0));
      if (free[i]) pg = std::max(pg, std::abs(g[i]));
    }
    if (pg < 1e-9 * (1.0 + std::abs(f))) {
      break;
    }
    bool accepted = false;
    Vec3 xn{}, gn{};
    Mat3 cn{};
    double fn = f;
    double change = 0.0;
    for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
      Vec3 d{};
      const Vec3 rhs{-g[0], -g[1], -g[2]};
      if (!solve_damped(curvature, rhs, free, damping, d)) {
        damping *= 10.0;
        continue;
      }
      Vec3 s{};
      for (int i = 0; i < 3; ++i) {
        xn[i] = std::clamp(x[i] + d[i], lo[i], hi[i]);
        s[i] = xn[i] - x[i];
      }
      change = std::max({std::abs(s[0]), std::abs(s[1]), std::abs(s[2])});
      if (change == 0.0) {
        break;
      }
      fn = objective(xn, gn, cn);
      const double predicted = g[0] * s[0] + g[1] * s[1] + g[2] * s[2];
      if (fn <= f + 1e-4 * std::min(predicted, 0.0) && fn <= f) {
        accepted = true;
        damping = std::max(damping * 0.1, 1e-12);
      } else {
        damping *= 10.0;
      }
    }
    if (!accepted) {
      break;
    }
    const double drop = f - fn;
    x = xn;
    f = fn;
    g = gn;
    curvature = cn;
    if (drop <= 1e-14 * (1.0 + std::abs(f)) && change < 1e-9) {
      ++it;
      break;
    }
  }
  return {x, f, it};
}

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) {
    threads = std::max(1u, std::thread::hardware_concurrency());
  }
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      for (std::size_t i = t; i < count; i += threads) fn(i);
    });
  }
}

}  // namespace

double icc_probability(double theta, const ItemParams& item) {
  check_finite(theta, "ability");
  check_finite(item.a, "discrimination");
  check_finite(item.b, "difficulty");
  check_finite(item.c, "guessing");
  return item.c + (1.0 - item.c) * logistic(item.a * (theta - item.b)).value;
}

double item_log_likelihood(const ItemParams& item, std::span<const std::uint8_t> responses,
                           std::span<const double> thetas) {
  check_lengths(responses.size(), thetas.size());
  double ll = 0.0;
  for (std::size_t j = 0; j < responses.size(); ++j) {
    ll += observation_ll(responses[j], observe(thetas[j], item).p);
  }
  return ll;
}

ItemGradient item_log_likelihood_gradient(const ItemParams& item,
                                          std::span<const std::uint8_t> responses,
                                          std::span<const double> thetas) {
  check_lengths(responses.size(), thetas.size());
  ItemGradient grad;
  for (std::size_t j = 0; j < responses.size(); ++j) {
    const auto obs = observe(thetas[j], item);
    const double w = observation_weight(responses[j], obs.p);
    grad.a += w * obs.dp_dz * (thetas[j] - item.b);
    grad.b -= w * obs.dp_dz * item.a;
    grad.c += w * obs.dp_dc;
  }
  return grad;
}

double ability_log_likelihood(std::span<const ItemParams> items,
                              std::span<const std::uint8_t> responses, double theta) {
  if (items.size() != responses.size()) {
    throw ShapeError("items and responses differ in length");
  }
  double ll = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    ll += observation_ll(responses[i], observe(theta, items[i]).p);
  }
  return ll;
}

double ability_log_likelihood_derivative(std::span<const ItemParams> items,
                                         std::span<const std::uint8_t> responses, double theta) {
  if (items.size() != responses.size()) {
    throw ShapeError("items and responses differ in length");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto obs = observe(theta, items[i]);
    d += observation_weight(responses[i], obs.p) * obs.dp_dz * items[i].a;
  }
  return d;
}

double ability_log_likelihood_second_derivative(std::span<const ItemParams> items,
                                                std::span<const std::uint8_t> responses,
                                                double theta) {
  if (items.size() != responses.size()) {
    throw ShapeError("items and responses differ in length");
  }
  double d2 = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto obs = observe(theta, items[i]);
    const double a = items[i].a;
    const double dp = obs.dp_dz * a;
    const double d2p = obs.d2p_dz2 * a * a;
    const double u = responses[i];
    const double curvature = u / (obs.p * obs.p) + (1.0 - u) / ((1.0 - obs.p) * (1.0 - obs.p));
    d2 += -curvature * dp * dp + observation_weight(responses[i], obs.p) * d2p;
  }
  return d2;
}

ItemFit fit_item(std::span<const std::uint8_t> responses, std::span<const double> thetas) {
  return fit_item(responses, thetas, std::nullopt);
}

ItemFit fit_item(std::span<const std::uint8_t> responses, std::span<const double> thetas,
                 std::optional<ItemParams> warm_start) {
  check_lengths(responses.size(), thetas.size());
  for (double t : thetas) {
    check_finite(t, "ability");
  }
  const auto hits = std::count(responses.begin(), responses.end(), std::uint8_t{1});
  if (hits == 0 || static_cast<std::size_t>(hits) == responses.size()) {
    ItemFit fit;
    fit.params = hits == 0 ? ItemParams{0.0, 0.0, 0.0} : ItemParams{0.0, kDifficultyBounds.lo, 0.0};
    fit.log_likelihood = item_log_likelihood(fit.params, responses, thetas);
    fit.degenerate = true;
    return fit;
  }

  const Vec3 lo{kDiscriminationBounds.lo, kDifficultyBounds.lo, kGuessingBounds.lo};
  const Vec3 hi{kDiscriminationBounds.hi, kDifficultyBounds.hi, kGuessingBounds.hi};
  auto negative_ll = [&](const Vec3& x, Vec3& grad, Mat3& information) {
    const ItemParams item{x[0], x[1], x[2]};
    double ll = 0.0;
    Vec3 g{};
    information = Mat3{};
    for (std::size_t j = 0; j < responses.size(); ++j) {
      const auto obs = observe(thetas[j], item);
      ll += observation_ll(responses[j], obs.p);
      const Vec3 dp{obs.dp_dz * (thetas[j] - item.b), -obs.dp_dz * item.a, obs.dp_dc};
      const double w = observation_weight(responses[j], obs.p);
      const double fisher = 1.0 / (obs.p * (1.0 - obs.p));
      for (int r = 0; r < 3; ++r) {
        g[r] += w * dp[r];
        for (int c = 0; c < 3; ++c) information[r][c] += fisher * dp[r] * dp[c];
      }
    }
    grad = {-g[0], -g[1], -g[2]};
    return -ll;
  };

  ItemFit best;
  best.log_likelihood = -std::numeric_limits<double>::infinity();
  std::vector<ItemParams> starts(kItemStarts.begin(), kItemStarts.end());
  if (warm_start) {
    starts.push_back(*warm_start);
  }
  for (const auto& start : starts) {
    const auto result = minimize_in_box(negative_ll, Vec3{start.a, start.b, start.c}, lo, hi);
    best.iterations += result.iterations;
    if (-result.value > best.log_likelihood) {
      best.log_likelihood = -result.value;
      best.params = {result.x[0], result.x[1], result.x[2]};
    }
  }
  return best;
}

double maximize_ability(std::span<const ItemParams> items, std::span<const std::uint8_t> responses,
                        double theta0) {
  double theta = clamp_to(theta0, kAbilityBounds);
  double ll = ability_log_likelihood(items, responses, theta);
  for (int it = 0; it < 200; ++it) {
    const double g = ability_log_likelihood_derivative(items, responses, theta);
    if ((theta >= kAbilityBounds.hi && g >= 0.0) || (theta <= kAbilityBounds.lo && g <= 0.0) ||
        std::abs(g) < 1e-10) {
      break;
    }
    const double h = ability_log_likelihood_second_derivative(items, responses, theta);
    double step = h < 0.0 ? -g / h : (g > 0.0 ? 1.0 : -1.0);
    step = std::clamp(step, -2.0, 2.0);
    bool moved = false;
    double next = theta;
    for (int ls = 0; ls < 60; ++ls) {
      next = clamp_to(theta + step, kAbilityBounds);
      const double candidate = ability_log_likelihood(items, responses, next);
      if (candidate >= ll) {
        moved = next != theta;
        ll = candidate;
        break;
      }
      step *= 0.5;
    }
    if (!moved) {
      break;
    }
    const double change = std::abs(next - theta);
    theta = next;
    if (change < 1e-10) {
      break;
    }
  }
  return theta;
}

double estimate_ability(std::span<const ItemParams> items, std::span<const std::uint8_t> responses,
                        double theta0) {
  if (items.empty()) {
    throw EmptyInput("ability estimation needs at least one item");
  }
  if (items.size() != responses.size()) {
    throw ShapeError("items and responses differ in length");
  }
  check_finite(theta0, "initial ability");

  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return items[l].b < items[r].b; });

  constexpr std::size_t kGroups = 10;
  const std::size_t n = items.size();
  std::vector<ItemParams> stage_items;
  std::vector<std::uint8_t> stage_responses;
  stage_items.reserve(n);
  stage_responses.reserve(n);
  double theta = clamp_to(theta0, kAbilityBounds);
  for (std::size_t g = 0; g < kGroups; ++g) {
    const std::size_t begin = g * n / kGroups;
    const std::size_t end = (g + 1) * n / kGroups;
    if (begin == end) {
      continue;
    }
    for (std::size_t k = begin; k < end; ++k) {
      stage_items.push_back(items[order[k]]);
      stage_responses.push_back(responses[order[k]]);
    }
    theta = maximize_ability(stage_items, stage_responses, theta);
  }
  return theta;
}

double IrtModel::ability(const std::string& respondent) const {
  const auto it = abilities.find(respondent);
  if (it == abilities.end()) {
    throw NotFound("respondent '" + respondent + "' has no ability in dataset '" + dataset_id +
                   "'");
  }
  return it->second;
}

namespace {

double total_log_likelihood(const std::vector<std::vector<std::uint8_t>>& columns,
                            const std::vector<ItemParams>& items,
                            const std::vector<double>& thetas) {
  double ll = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    ll += item_log_likelihood(items[i], columns[i], thetas);
  }
  return ll;
}

// Fixes the two invariances of the joint likelihood: the affine scale of theta and its
// reflection (theta, a, b) -> (-theta, -a, -b). Interior abilities are rescaled to mean 0
// and unit population spread, oriented to correlate positively with raw accuracy, and the
// item parameters follow the same map so a(theta - b) is unchanged up to bound clamping.
void standardize(std::vector<double>& thetas, std::vector<ItemParams>& items,
                 const std::vector<bool>& degenerate, const std::vector<double>& accuracies) {
  auto interior = [](double t) { return t > kAbilityBounds.lo && t < kAbilityBounds.hi; };
  double sum = 0.0;
  std::size_t count = 0;
  for (double t : thetas) {
    if (interior(t)) {
      sum += t;
      ++count;
    }
  }
  double mean = 0.0;
  double spread = 1.0;
  if (count >= 2) {
    mean = sum / static_cast<double>(count);
    double ss = 0.0;
    for (double t : thetas) {
      if (interior(t)) ss += (t - mean) * (t - mean);
    }
    spread = std::sqrt(ss / static_cast<double>(count));
    if (spread < 1e-6) {
      mean = 0.0;
      spread = 1.0;
    }
  }

  double acc_mean = 0.0;
  double theta_mean = 0.0;
  for (std::size_t j = 0; j < thetas.size(); ++j) {
    acc_mean += accuracies[j];
    theta_mean += thetas[j];
  }
  acc_mean /= static_cast<double>(thetas.size());
  theta_mean /= static_cast<double>(thetas.size());
  double covariance = 0.0;
  for (std::size_t j = 0; j < thetas.size(); ++j) {
    covariance += (thetas[j] - theta_mean) * (accuracies[j] - acc_mean);
  }
  const double sign = covariance < 0.0 ? -1.0 : 1.0;

  for (double& t : thetas) {
    t = clamp_to(sign * (t - mean) / spread, kAbilityBounds);
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (degenerate[i]) continue;
    items[i].a = clamp_to(sign * items[i].a * spread, kDiscriminationBounds);
    items[i].b = clamp_to(sign * (items[i].b - mean) / spread, kDifficultyBounds);
  }
}

}  // namespace

IrtModel birnbaum_fit(const ResponseMatrix& matrix, const FitOptions& options) {
  const std::size_t n_items = matrix.item_count();
  const std::size_t n_resp = matrix.respondent_count();
  if (n_items >= kMaxEstimableItems) {
    throw TooManyItems(n_items);
  }
  if (n_resp == 0) {
    throw EmptyInput("response matrix has no respondents");
  }

  std::vector<std::vector<std::uint8_t>> columns(n_items);
  for (std::size_t i = 0; i < n_items; ++i) {
    columns[i] = matrix.column(i);
  }
  std::vector<double> accuracies(n_resp);
  for (std::size_t j = 0; j < n_resp; ++j) {
    accuracies[j] = accuracy(matrix, matrix.respondents()[j]);
  }
  std::vector<double> thetas = accuracies;

  std::vector<ItemParams> items(n_items);
  std::vector<bool> degenerate(n_items, false);
  struct Snapshot {
    std::vector<ItemParams> items;
    std::vector<double> thetas;
    double ll = -std::numeric_limits<double>::infinity();
    int round = 0;
  } best;

  FitReport report;
  double previous_ll = std::numeric_limits<double>::quiet_NaN();
  int round = 0;
  for (round = 1; round <= options.max_rounds; ++round) {
    parallel_for(n_items, options.threads, [&](std::size_t i) {
      const auto warm = round > 1 ? std::optional<ItemParams>(items[i]) : std::nullopt;
      const auto fit = fit_item(columns[i], thetas, warm);
      items[i] = fit.params;
      degenerate[i] = fit.degenerate;
    });

    std::vector<double> next(n_resp);
    parallel_for(n_resp, options.threads, [&](std::size_t j) {
      const auto row = matrix.row(j);
      const double staged = estimate_ability(items, row, thetas[j]);
      if (round == 1) {
        next[j] = staged;
        return;
      }
      // The staged path may settle in a poorer local optimum than the current ability.
      const double local = maximize_ability(items, row, thetas[j]);
      next[j] = ability_log_likelihood(items, row, local) > ability_log_likelihood(items, row, staged)
                    ? local
                    : staged;
    });
    if (options.standardize_abilities) {
      standardize(next, items, degenerate, accuracies);
    }

    const double ll = total_log_likelihood(columns, items, next);
    double max_change = 0.0;
    for (std::size_t j = 0; j < n_resp; ++j) {
      max_change = std::max(max_change, std::abs(next[j] - thetas[j]));
    }
    const double rel = std::isnan(previous_ll)
                           ? std::numeric_limits<double>::infinity()
                           : std::abs(ll - previous_ll) / std::max(std::abs(previous_ll), 1e-12);
    thetas = std::move(next);
    previous_ll = ll;
    report.max_theta_change = max_change;
    report.relative_ll_change = rel;

    if (ll > best.ll) {
      best = {items, thetas, ll, round};
    }
    if (max_change < options.theta_tolerance && rel < options.relative_ll_tolerance) {
      report.converged = true;
      break;
    }
  }

  IrtModel model;
  model.dataset_id = matrix.dataset_id();
  if (report.converged) {
    model.items = items;
  } else {
    model.items = best.items;
    thetas = best.thetas;
  }
  for (std::size_t j = 0; j < n_resp; ++j) {
    model.abilities.emplace(matrix.respondents()[j], thetas[j]);
  }
  report.iterations = std::min(round, options.max_rounds);
  report.log_likelihood = total_log_likelihood(columns, model.items, thetas);
  for (std::size_t i = 0; i < n_items; ++i) {
    if (degenerate[i]) report.degenerate_items.push_back(i);
  }
  model.fit_report = report;
  return model;
}

double model_log_likelihood(const ResponseMatrix& matrix, const IrtModel& model) {
  if (model.items.size() != matrix.item_count()) {
    throw ShapeError("model and matrix differ in item count");
  }
  std::vector<double> thetas(matrix.respondent_count());
  for (std::size_t j = 0; j < thetas.size(); ++j) {
    thetas[j] = model.ability(matrix.respondents()[j]);
  }
  double ll = 0.0;
  for (std::size_t i = 0; i < matrix.item_count(); ++i) {
    ll += item_log_likelihood(model.items[i], matrix.column(i), thetas);
  }
  return ll;
}

double true_score(double theta, std::span<const ItemParams> items,
                  bool exclude_negative_discrimination) {
  double total = 0.0;
  for (const auto& item : items) {
    if (exclude_negative_discrimination && !(item.a > 0.0)) {
      continue;
    }
    total += icc_probability(theta, item);
  }
  return total;
}

std::size_t retained_item_count(std::span<const ItemParams> items,
                                bool exclude_negative_discrimination) {
  if (!exclude_negative_discrimination) {
    return items.size();
  }
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [](const ItemParams& it) { return it.a > 0.0; }));
}

}  // namespace irtrank
