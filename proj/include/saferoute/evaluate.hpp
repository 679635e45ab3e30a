#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "saferoute/ingest.hpp"
#include "saferoute/model_kind.hpp"
#include "saferoute/recurrent.hpp"

namespace saferoute {

// sqrt(mean squared error). Throws DomainError on empty or mismatched inputs.
double rmse(std::span<const double> pred, std::span<const double> actual);

struct EvaluationRow {
    std::string station_id;
    ModelKind model;
    double rmse = 0.0;
};

// A (station, model) pair whose fit failed; recorded instead of aborting.
struct EvaluationGap {
    std::string station_id;
    ModelKind model;
    std::string message;
};

struct ComparisonReport {
    std::vector<EvaluationRow> rows;
    std::map<ModelKind, double> per_model_average;  // mean over that model's rows
    std::vector<EvaluationGap> gaps;
};

struct EvalConfig {
    double lambda = 0.1;        // ridge/lasso penalty
    TrainConfig recurrent;      // lstm/gru hyperparameters (seed included)
    double poisson_pseudocount = 0.0;
};

// Forecasts the holdout horizon for one station with one model, fitting on
// the train split only. Linear models extrapolate the (1, normalized index)
// time features; recurrent models roll forward on their own predictions.
std::vector<double> forecast_with_model(ModelKind kind, const IncidentSeries& train,
                                        std::size_t horizon, const EvalConfig& cfg);

// Runs every model over every station's split: one row per (station, model)
// with the RMSE of the 5-point holdout forecast, failures logged as gaps.
// Deterministic for a fixed cfg.recurrent.seed.
ComparisonReport evaluate_all(const std::map<std::string, SplitSeries>& splits,
                              const EvalConfig& cfg);

std::string report_to_csv(const ComparisonReport& report);

}  // namespace saferoute
