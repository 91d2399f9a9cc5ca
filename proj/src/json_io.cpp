#include "irtrank/json_io.hpp"

#include "irtrank/errors.hpp"

namespace irtrank {

using nlohmann::ordered_json;

ordered_json to_json(const ItemParams& item) {
  return ordered_json{{"a", item.a}, {"b", item.b}, {"c", item.c}};
}

ordered_json to_json(const IrtModel& model) {
  ordered_json items = ordered_json::array();
  for (const auto& item : model.items) items.push_back(to_json(item));
  ordered_json abilities = ordered_json::object();
  for (const auto& [name, theta] : model.abilities) abilities[name] = theta;
  const auto& r = model.fit_report;
  return ordered_json{{"dataset_id", model.dataset_id},
                      {"items", std::move(items)},
                      {"abilities", std::move(abilities)},
                      {"fit_report",
                       {{"iterations", r.iterations},
                        {"log_likelihood", r.log_likelihood},
                        {"converged", r.converged},
                        {"max_theta_change", r.max_theta_change},
                        {"relative_ll_change", r.relative_ll_change},
                        {"degenerate_items", r.degenerate_items}}}};
}

ordered_json to_json(const Rating& rating) {
  return ordered_json{
      {"rating", rating.rating}, {"rd", rating.rd}, {"volatility", rating.volatility}};
}

ordered_json to_json(const Standings& standings) {
  ordered_json out = ordered_json::array();
  for (const auto& [name, rating] : standings) {
    auto entry = ordered_json{{"classifier", name}};
    entry.update(to_json(rating));
    out.push_back(std::move(entry));
  }
  return out;
}

ordered_json to_json(const RatingHistory& history) {
  ordered_json periods = ordered_json::array();
  for (const auto& p : history.periods) {
    ordered_json ts = ordered_json::object();
    for (const auto& [name, v] : p.true_scores) ts[name] = v;
    ordered_json scores = ordered_json::object();
    for (const auto& [name, v] : p.scores) scores[name] = v;
    periods.push_back(ordered_json{{"dataset_id", p.dataset_id},
                                   {"true_scores", std::move(ts)},
                                   {"scores", std::move(scores)},
                                   {"absent", p.absent},
                                   {"standings_after", to_json(p.standings_after)}});
  }
  return ordered_json{{"periods", std::move(periods)},
                      {"final_ranking", to_json(history.final_ranking)}};
}

ordered_json to_json(const DatasetSummary& s) {
  ordered_json out{{"dataset_id", s.dataset_id},
                   {"mean_a", s.mean_a},
                   {"mean_b", s.mean_b},
                   {"mean_c", s.mean_c}};
  if (s.item_level) {
    out["std_a"] = s.std_a;
    out["std_b"] = s.std_b;
    out["std_c"] = s.std_c;
    out["pct_negative_a"] = s.pct_negative_a;
  }
  return out;
}

ordered_json to_json(const Bin& bin) {
  return ordered_json{{"bin", bin.index},
                      {"datasets", bin.dataset_ids},
                      {"mean_key", bin.mean_key},
                      {"mean_b", bin.mean_b},
                      {"mean_a", bin.mean_a}};
}

ordered_json to_json(const CorrelationMatrix& m) {
  ordered_json rows = ordered_json::object();
  for (std::size_t i = 0; i < m.fields.size(); ++i) {
    ordered_json row = ordered_json::object();
    for (std::size_t k = 0; k < m.aggregates.size(); ++k) {
      row[m.aggregates[k]] = m.r[i][k] ? ordered_json(*m.r[i][k]) : ordered_json(nullptr);
    }
    rows[m.fields[i]] = std::move(row);
  }
  return ordered_json{{"datasets", m.datasets}, {"r", std::move(rows)}, {"warnings", m.warnings}};
}

ordered_json to_json(const ProbabilityBin& bin) {
  ordered_json probability = ordered_json::object();
  for (const auto& [name, p] : bin.probability) probability[name] = p;
  return ordered_json{{"bin", bin.index},
                      {"datasets", bin.dataset_ids},
                      {"mean_key", bin.mean_key},
                      {"probability", std::move(probability)}};
}

IrtModel model_from_json(const nlohmann::json& j) {
  try {
    IrtModel model;
    model.dataset_id = j.at("dataset_id").get<std::string>();
    for (const auto& item : j.at("items")) {
      model.items.push_back(
          {item.at("a").get<double>(), item.at("b").get<double>(), item.at("c").get<double>()});
    }
    for (const auto& [name, theta] : j.at("abilities").items()) {
      model.abilities[name] = theta.get<double>();
    }
    const auto& r = j.at("fit_report");
    model.fit_report.iterations = r.at("iterations").get<int>();
    model.fit_report.log_likelihood = r.at("log_likelihood").get<double>();
    model.fit_report.converged = r.at("converged").get<bool>();
    model.fit_report.max_theta_change = r.value("max_theta_change", 0.0);
    model.fit_report.relative_ll_change = r.value("relative_ll_change", 0.0);
    model.fit_report.degenerate_items =
        r.value("degenerate_items", std::vector<std::size_t>{});
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ShapeError(std::string("invalid model document: ") + e.what());
  }
}

}  // namespace irtrank
