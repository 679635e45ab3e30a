#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace saferoute {

struct Station {
    std::string id;            // unique key, also the display name
    std::string name;
    std::set<std::string> lines;
    double lat = 0.0;
    double lon = 0.0;
    bool has_coords = false;   // stations may ship without coordinates
};

struct TrackSegment {
    std::string from;
    std::string to;
    double travel_time_min = 0.0;  // strictly positive
};

// One parsed row of the station connectivity CSV
// (station,train,prev_stop,next_stop,time_min).
struct StationRow {
    std::string station;
    std::string train;
    std::string prev_stop;  // may be empty
    std::string next_stop;  // may be empty
    std::optional<double> time_min;
};

// Which station's safety coefficient an edge picks up. The forecasting
// pipeline produces per-station coefficients; edges are attributed to the
// station you arrive at by default.
enum class SafetyAttribution { Source, Destination, Mean };

std::optional<SafetyAttribution> parse_attribution(std::string_view name);

// Combined edge cost: safety coefficient times travel minutes.
// Throws DomainError if s < 0 or t <= 0.
double edge_weight(double safety, double travel_time_min);

// Directed weighted graph the routing engines run on. Kept independent of
// the transit-specific types so crafted graphs (including negative-weight
// what-if experiments) can be routed directly.
struct WeightedDigraph {
    struct Arc {
        std::string to;
        double weight;
    };

    // Adjacency; arcs are kept sorted by destination id.
    std::map<std::string, std::vector<Arc>> adjacency;

    void add_node(const std::string& id);
    // Parallel arcs collapse to the minimum weight.
    void add_arc(const std::string& from, const std::string& to, double weight);

    bool has_node(const std::string& id) const;
    std::size_t node_count() const { return adjacency.size(); }
    std::vector<std::string> node_ids() const;
    const std::vector<Arc>& arcs_from(const std::string& id) const;  // LookupError if unknown
    std::optional<double> arc_weight(const std::string& from, const std::string& to) const;
    bool has_negative_arc() const;
};

// The subway network: stations, track segments, per-station safety.
// Immutable once built and safety is applied; routing queries only read it.
class RouteGraph {
public:
    const std::map<std::string, Station>& stations() const { return stations_; }
    const std::map<std::string, std::vector<TrackSegment>>& segments() const { return segments_; }
    const std::map<std::string, double>& safety() const { return safety_; }

    bool has_station(const std::string& id) const { return stations_.count(id) > 0; }
    const Station& station(const std::string& id) const;  // LookupError if unknown

    // Safety coefficient for a station; stations absent from the incident
    // data stay at the neutral 1.0.
    double safety_of(const std::string& id) const;

    // Replaces the safety table. Values must be >= 0 and keyed by known
    // stations. Call during setup, before sharing the graph.
    void apply_safety(const std::map<std::string, double>& coefficients);

    void set_attribution(SafetyAttribution a) { attribution_ = a; }
    SafetyAttribution attribution() const { return attribution_; }

    // Outgoing (neighbor id, edge weight) pairs, sorted by neighbor id.
    std::vector<std::pair<std::string, double>> neighbors(const std::string& id) const;

    // Safety-weighted view all routing engines consume.
    WeightedDigraph to_weighted() const;

    friend RouteGraph build_graph(const std::vector<StationRow>& rows);
    friend RouteGraph build_graph(const std::vector<StationRow>& rows,
                                  const std::map<std::string, std::pair<double, double>>& coords);

private:
    double weight_of(const TrackSegment& seg) const;

    std::map<std::string, Station> stations_;
    std::map<std::string, std::vector<TrackSegment>> segments_;
    std::map<std::string, double> safety_;
    SafetyAttribution attribution_ = SafetyAttribution::Destination;
};

// Builds the network from parsed connectivity rows. Each (station, prev_stop)
// and (station, next_stop) pair becomes a segment in both directions with the
// row's travel time; duplicates collapse to the minimum time, so feeding the
// same rows twice is a no-op.
//
// Throws DataError for a non-positive/missing time on a row that defines a
// connection (message carries the 1-based row index) and for stop names that
// are referenced but never defined by any row.
RouteGraph build_graph(const std::vector<StationRow>& rows);

// Same, attaching coordinates (lat, lon by station id) where provided.
RouteGraph build_graph(const std::vector<StationRow>& rows,
                       const std::map<std::string, std::pair<double, double>>& coords);

}  // namespace saferoute
