#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "saferoute/evaluate.hpp"
#include "saferoute/graph.hpp"
#include "saferoute/ingest.hpp"
#include "saferoute/linear_models.hpp"
#include "saferoute/recurrent.hpp"
#include "saferoute/routing.hpp"

namespace saferoute {

using Json = nlohmann::ordered_json;  // insertion order keeps output stable

// ---------------------------------------------------------------------------
// Per-station series artifact (cmd_ingest output, cmd_fit/evaluate input).

struct SeriesFile {
    Bucket bucket = Bucket::Monthly;
    std::chrono::year_month_day from;
    std::chrono::year_month_day to;
    double radius_km = 0.0;
    std::map<std::string, IncidentSeries> series;
};

Json series_to_json(const SeriesFile& f);
SeriesFile series_from_json(const Json& j);  // DataError on malformed documents

// ---------------------------------------------------------------------------
// Fitted models. Linear coefficients carry {model_kind, lambda, theta,
// diagnostics}; recurrent models carry {kind, hidden_size, window,
// normalization bounds, flattened weights}.

Json coefficients_to_json(const ModelCoefficients& m);
ModelCoefficients coefficients_from_json(const Json& j);

Json recurrent_to_json(const RecurrentModel& m);
RecurrentModel recurrent_from_json(const Json& j);

// One fitted model per station under a shared model kind.
struct ModelFile {
    ModelKind kind = ModelKind::Ols;
    std::map<std::string, ModelCoefficients> linear;   // used for the four GLMs
    std::map<std::string, RecurrentModel> recurrent;   // used for lstm/gru
    std::map<std::string, std::string> failures;       // station -> message
};

Json model_file_to_json(const ModelFile& f);
ModelFile model_file_from_json(const Json& j);

// ---------------------------------------------------------------------------
// Evaluation and routing artifacts.

Json report_to_json(const ComparisonReport& report);

Json route_to_json(const ShortestPathResult& r);

// ---------------------------------------------------------------------------
// Raw weighted digraphs, for routing on arbitrary (possibly negative) weights
// outside the station/safety pipeline: {"nodes": [...], "arcs": [{from, to,
// weight}]}.

Json weighted_to_json(const WeightedDigraph& g);
WeightedDigraph weighted_from_json(const Json& j);

// ---------------------------------------------------------------------------
// File helpers. read_text throws DataError naming the path; parse_json_file
// wraps nlohmann parse errors in DataError with the path and position.

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
Json parse_json_file(const std::string& path);

}  // namespace saferoute
