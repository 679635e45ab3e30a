#include "saferoute/ingest.hpp"

#include <charconv>
#include <cmath>
#include <numbers>

#include "saferoute/csv.hpp"
#include "saferoute/errors.hpp"

namespace saferoute {

namespace {

std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double v;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

bool valid_coords(double lat, double lon) {
    return lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0;
}

}  // namespace

ParsedIncidents parse_incidents(std::string_view text) {
    CsvTable table = parse_csv(text);
    std::size_t c_time = table.column("occurred_at");
    std::size_t c_lat = table.column("latitude");
    std::size_t c_lon = table.column("longitude");

    ParsedIncidents out;
    for (const auto& row : table.rows) {
        auto ts = parse_timestamp(row[c_time]);
        auto lat = parse_double(row[c_lat]);
        auto lon = parse_double(row[c_lon]);
        if (!ts || !lat || !lon || !valid_coords(*lat, *lon)) {
            ++out.malformed_rows;
            continue;
        }
        out.records.push_back(IncidentRecord{*ts, *lat, *lon});
    }
    return out;
}

std::vector<StationRow> parse_station_rows(std::string_view text) {
    CsvTable table = parse_csv(text);
    std::size_t c_station = table.column("station");
    std::size_t c_train = table.column("train");
    std::size_t c_prev = table.column("prev_stop");
    std::size_t c_next = table.column("next_stop");
    std::size_t c_time = table.column("time_min");

    std::vector<StationRow> rows;
    rows.reserve(table.rows.size());
    for (const auto& r : table.rows) {
        StationRow row;
        row.station = r[c_station];
        row.train = r[c_train];
        row.prev_stop = r[c_prev];
        row.next_stop = r[c_next];
        row.time_min = parse_double(r[c_time]);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::map<std::string, std::pair<double, double>> parse_station_coords(std::string_view text) {
    CsvTable table = parse_csv(text);
    std::size_t c_station = table.column("station");
    std::size_t c_lat = table.column("latitude");
    std::size_t c_lon = table.column("longitude");

    std::map<std::string, std::pair<double, double>> coords;
    for (const auto& r : table.rows) {
        auto lat = parse_double(r[c_lat]);
        auto lon = parse_double(r[c_lon]);
        if (r[c_station].empty() || !lat || !lon || !valid_coords(*lat, *lon))
            throw DataError("bad station coordinate row for '" + r[c_station] + "'");
        coords[r[c_station]] = {*lat, *lon};
    }
    return coords;
}

double haversine_km(double lat_a, double lon_a, double lat_b, double lon_b) {
    constexpr double kEarthRadiusKm = 6371.0;
    constexpr double kDegToRad = std::numbers::pi / 180.0;

    double phi1 = lat_a * kDegToRad;
    double phi2 = lat_b * kDegToRad;
    double dphi = (lat_b - lat_a) * kDegToRad;
    double dlambda = (lon_b - lon_a) * kDegToRad;

    double a = std::sin(dphi / 2) * std::sin(dphi / 2) +
               std::cos(phi1) * std::cos(phi2) * std::sin(dlambda / 2) * std::sin(dlambda / 2);
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

IncidentSeries aggregate_series(const std::vector<IncidentRecord>& incidents,
                                const Station& station, double radius_km,
                                const BucketGrid& grid) {
    if (!(radius_km > 0.0))
        throw DomainError("radius must be > 0 km, got " + std::to_string(radius_km));
    if (!station.has_coords)
        throw DomainError("station '" + station.id + "' has no coordinates to aggregate around");

    std::size_t n = grid.size();  // validates the range
    IncidentSeries series;
    series.station_id = station.id;
    series.counts.assign(n, 0);
    series.bucket_start.reserve(n);
    for (std::size_t k = 0; k < n; ++k) series.bucket_start.push_back(grid.bucket_start(k));

    for (const auto& rec : incidents) {
        auto k = grid.index_of(rec.occurred_at);
        if (!k) continue;
        if (haversine_km(station.lat, station.lon, rec.lat, rec.lon) <= radius_km)
            ++series.counts[*k];
    }
    return series;
}

SplitSeries split_train_test(const IncidentSeries& series) {
    if (series.size() < kMinSeriesLength)
        throw DataError("series for '" + series.station_id + "' has " +
                        std::to_string(series.size()) + " buckets; need at least " +
                        std::to_string(kMinSeriesLength) +
                        " (widen the date range or use a coarser bucket)");

    std::size_t cut = series.size() - kHoldout;
    SplitSeries split;
    split.train.station_id = series.station_id;
    split.test.station_id = series.station_id;
    split.train.bucket_start.assign(series.bucket_start.begin(), series.bucket_start.begin() + cut);
    split.train.counts.assign(series.counts.begin(), series.counts.begin() + cut);
    split.test.bucket_start.assign(series.bucket_start.begin() + cut, series.bucket_start.end());
    split.test.counts.assign(series.counts.begin() + cut, series.counts.end());
    return split;
}

std::map<std::string, double> safety_coefficients(
    const std::map<std::string, double>& forecasts, const std::string& model_name,
    double floor) {
    if (forecasts.empty()) return {};

    std::map<std::string, double> clamped;
    double sum = 0.0;
    for (const auto& [id, pred] : forecasts) {
        if (!std::isfinite(pred))
            throw DomainError("model '" + model_name + "' produced a non-finite forecast for station '" +
                              id + "'");
        double c = std::max(pred, floor);
        clamped[id] = c;
        sum += c;
    }
    double mean = sum / static_cast<double>(clamped.size());

    std::map<std::string, double> coeffs;
    for (const auto& [id, c] : clamped) coeffs[id] = c / mean;
    return coeffs;
}

}  // namespace saferoute
