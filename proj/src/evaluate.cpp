#include "saferoute/evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "saferoute/errors.hpp"
#include "saferoute/linear_models.hpp"

namespace saferoute {

double rmse(std::span<const double> pred, std::span<const double> actual) {
    if (pred.size() != actual.size()) {
        throw DomainError("rmse: prediction length " + std::to_string(pred.size()) +
                          " does not match actual length " + std::to_string(actual.size()));
    }
    if (pred.empty()) {
        throw DomainError("rmse: empty input");
    }
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - actual[i];
        sum_sq += d * d;
    }
    return std::sqrt(sum_sq / static_cast<double>(pred.size()));
}

namespace {

std::vector<double> as_doubles(const std::vector<std::uint64_t>& counts) {
    return {counts.begin(), counts.end()};
}

std::vector<double> linear_forecast(ModelKind kind, const std::vector<std::uint64_t>& train,
                                    std::size_t horizon, const EvalConfig& cfg) {
    const DesignMatrix d = time_design(train);
    ModelCoefficients coef;
    switch (kind) {
        case ModelKind::Poisson:
            coef = fit_poisson(d, cfg.poisson_pseudocount);
            break;
        case ModelKind::Ols:
            coef = fit_ols(d);
            break;
        case ModelKind::Ridge:
            coef = fit_ridge(d, cfg.lambda);
            break;
        case ModelKind::Lasso:
            coef = fit_lasso(d, cfg.lambda);
            break;
        default:
            throw DomainError("linear_forecast: not a linear model");
    }
    std::vector<double> out;
    out.reserve(horizon);
    for (std::size_t k = 0; k < horizon; ++k) {
        out.push_back(predict(coef, time_features(train.size() + k, train.size())));
    }
    return out;
}

}  // namespace

std::vector<double> forecast_with_model(ModelKind kind, const IncidentSeries& train,
                                        std::size_t horizon, const EvalConfig& cfg) {
    switch (kind) {
        case ModelKind::Lstm:
        case ModelKind::Gru: {
            const CellKind cell = kind == ModelKind::Lstm ? CellKind::Lstm : CellKind::Gru;
            const TrainedRecurrent trained = train_recurrent(train.counts, cfg.recurrent, cell);
            return forecast(trained.model, train.counts, horizon);
        }
        default:
            return linear_forecast(kind, train.counts, horizon, cfg);
    }
}

ComparisonReport evaluate_all(const std::map<std::string, SplitSeries>& splits,
                              const EvalConfig& cfg) {
    if (splits.empty()) {
        throw DataError("evaluate_all: no station series to evaluate");
    }
    ComparisonReport report;
    std::map<ModelKind, double> sums;
    std::map<ModelKind, std::size_t> counts;

    std::uint64_t station_index = 0;
    for (const auto& [station_id, split] : splits) {  // std::map: sorted, stable
        EvalConfig station_cfg = cfg;
        // Stations draw distinct but reproducible initializations.
        station_cfg.recurrent.seed = cfg.recurrent.seed + station_index;
        ++station_index;

        const std::size_t horizon = split.test.size();
        const std::vector<double> actual = as_doubles(split.test.counts);
        for (ModelKind kind : kAllModelKinds) {
            try {
                const std::vector<double> pred =
                    forecast_with_model(kind, split.train, horizon, station_cfg);
                report.rows.push_back({station_id, kind, rmse(pred, actual)});
                sums[kind] += report.rows.back().rmse;
                counts[kind] += 1;
            } catch (const std::exception& e) {
                report.gaps.push_back({station_id, kind, e.what()});
            }
        }
    }
    for (const auto& [kind, total] : sums) {
        report.per_model_average[kind] = total / static_cast<double>(counts[kind]);
    }
    return report;
}

std::string report_to_csv(const ComparisonReport& report) {
    std::ostringstream out;
    char buf[64];
    out << "station,model,rmse\n";
    for (const auto& row : report.rows) {
        std::snprintf(buf, sizeof(buf), "%.12g", row.rmse);
        out << row.station_id << ',' << model_kind_name(row.model) << ',' << buf << '\n';
    }
    for (const auto& [kind, avg] : report.per_model_average) {
        std::snprintf(buf, sizeof(buf), "%.12g", avg);
        out << "average," << model_kind_name(kind) << ',' << buf << '\n';
    }
    return out.str();
}

}  // namespace saferoute
