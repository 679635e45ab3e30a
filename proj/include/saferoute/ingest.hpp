#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "saferoute/dates.hpp"
#include "saferoute/graph.hpp"

namespace saferoute {

struct IncidentRecord {
    Timestamp occurred_at;
    double lat = 0.0;
    double lon = 0.0;
};

struct ParsedIncidents {
    std::vector<IncidentRecord> records;
    std::size_t malformed_rows = 0;  // skipped, not fatal
};

// Per-station time-bucketed incident counts.
struct IncidentSeries {
    std::string station_id;
    std::vector<std::chrono::year_month_day> bucket_start;  // ascending, uniform stride
    std::vector<std::uint64_t> counts;                      // same length

    std::size_t size() const { return counts.size(); }
};

struct SplitSeries {
    IncidentSeries train;
    IncidentSeries test;  // always the last kHoldout buckets
};

// Holdout length: the final time points of every series form the test set.
inline constexpr std::size_t kHoldout = 5;
// A split needs at least 3 training points on top of the holdout.
inline constexpr std::size_t kMinSeriesLength = kHoldout + 3;

// Incident CSV: header `occurred_at,latitude,longitude`, ISO-8601 timestamps.
// Malformed rows (bad timestamp, coordinates out of range, non-numeric) are
// counted and skipped. A missing required column is fatal (DataError).
ParsedIncidents parse_incidents(std::string_view text);

// Station connectivity CSV: header `station,train,prev_stop,next_stop,time_min`.
// Rows with a malformed time on a connecting row are rejected by build_graph;
// here they parse into StationRow with time_min unset when non-numeric.
std::vector<StationRow> parse_station_rows(std::string_view text);

// Station coordinates CSV: header `station,latitude,longitude`.
std::map<std::string, std::pair<double, double>> parse_station_coords(std::string_view text);

// Great-circle distance in km (Earth radius 6371.0 km).
double haversine_km(double lat_a, double lon_a, double lat_b, double lon_b);

// Counts incidents within radius_km of the station (closed ball: distance
// exactly on the boundary is in) per bucket of the grid. Buckets with no
// incidents are present with count 0.
// Throws DomainError for radius <= 0 or a station without coordinates, and
// DataError for an empty/uneven range (via BucketGrid).
IncidentSeries aggregate_series(const std::vector<IncidentRecord>& incidents,
                                const Station& station, double radius_km,
                                const BucketGrid& grid);

// Last kHoldout buckets become the test set, everything before them trains.
// Throws DataError when the series is shorter than kMinSeriesLength.
SplitSeries split_train_test(const IncidentSeries& series);

// One forecast per station -> normalized safety coefficients. Each forecast
// is clamped to at least `floor` first, then divided by the fleet mean of the
// clamped values so the average station sits at 1.0.
// Throws DomainError naming the model and station for a non-finite forecast.
std::map<std::string, double> safety_coefficients(
    const std::map<std::string, double>& forecasts, const std::string& model_name,
    double floor = 0.1);

}  // namespace saferoute
