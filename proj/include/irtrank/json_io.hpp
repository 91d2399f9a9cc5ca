#pragma once

#include "irtrank/analysis.hpp"
#include "irtrank/glicko2.hpp"
#include "irtrank/irt.hpp"
#include "irtrank/tournament.hpp"
#include "json.hpp"

namespace irtrank {

nlohmann::ordered_json to_json(const ItemParams& item);
nlohmann::ordered_json to_json(const IrtModel& model);
nlohmann::ordered_json to_json(const Rating& rating);
nlohmann::ordered_json to_json(const Standings& standings);
nlohmann::ordered_json to_json(const RatingHistory& history);
nlohmann::ordered_json to_json(const DatasetSummary& summary);
nlohmann::ordered_json to_json(const Bin& bin);
nlohmann::ordered_json to_json(const CorrelationMatrix& m);
nlohmann::ordered_json to_json(const ProbabilityBin& bin);

// Inverse of to_json(IrtModel). Throws ShapeError on missing or mistyped fields.
IrtModel model_from_json(const nlohmann::json& j);

}  // namespace irtrank
