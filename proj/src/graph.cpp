#include "saferoute/graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "saferoute/errors.hpp"

namespace saferoute {

std::optional<SafetyAttribution> parse_attribution(std::string_view name) {
    if (name == "source") return SafetyAttribution::Source;
    if (name == "destination") return SafetyAttribution::Destination;
    if (name == "mean") return SafetyAttribution::Mean;
    return std::nullopt;
}

double edge_weight(double safety, double travel_time_min) {
    if (!(safety >= 0.0))
        throw DomainError("safety coefficient must be >= 0, got " + std::to_string(safety));
    if (!(travel_time_min > 0.0))
        throw DomainError("travel time must be > 0 minutes, got " + std::to_string(travel_time_min));
    return safety * travel_time_min;
}

void WeightedDigraph::add_node(const std::string& id) {
    adjacency.try_emplace(id);
}

void WeightedDigraph::add_arc(const std::string& from, const std::string& to, double weight) {
    add_node(from);
    add_node(to);
    auto& arcs = adjacency[from];
    auto it = std::lower_bound(arcs.begin(), arcs.end(), to,
                               [](const Arc& a, const std::string& t) { return a.to < t; });
    if (it != arcs.end() && it->to == to) {
        it->weight = std::min(it->weight, weight);
    } else {
        arcs.insert(it, Arc{to, weight});
    }
}

bool WeightedDigraph::has_node(const std::string& id) const {
    return adjacency.count(id) > 0;
}

std::vector<std::string> WeightedDigraph::node_ids() const {
    std::vector<std::string> ids;
    ids.reserve(adjacency.size());
    for (const auto& [id, _] : adjacency) ids.push_back(id);
    return ids;
}

const std::vector<WeightedDigraph::Arc>& WeightedDigraph::arcs_from(const std::string& id) const {
    auto it = adjacency.find(id);
    if (it == adjacency.end()) throw LookupError("unknown station id '" + id + "'");
    return it->second;
}

std::optional<double> WeightedDigraph::arc_weight(const std::string& from,
                                                  const std::string& to) const {
    auto it = adjacency.find(from);
    if (it == adjacency.end()) return std::nullopt;
    for (const auto& arc : it->second)
        if (arc.to == to) return arc.weight;
    return std::nullopt;
}

bool WeightedDigraph::has_negative_arc() const {
    for (const auto& [_, arcs] : adjacency)
        for (const auto& arc : arcs)
            if (arc.weight < 0.0) return true;
    return false;
}

const Station& RouteGraph::station(const std::string& id) const {
    auto it = stations_.find(id);
    if (it == stations_.end()) throw LookupError("unknown station id '" + id + "'");
    return it->second;
}

double RouteGraph::safety_of(const std::string& id) const {
    auto it = safety_.find(id);
    return it == safety_.end() ? 1.0 : it->second;
}

void RouteGraph::apply_safety(const std::map<std::string, double>& coefficients) {
    for (const auto& [id, s] : coefficients) {
        if (!has_station(id))
            throw LookupError("safety coefficient for unknown station '" + id + "'");
        if (!(s >= 0.0))
            throw DomainError("safety coefficient for '" + id + "' must be >= 0");
    }
    safety_ = coefficients;
}

double RouteGraph::weight_of(const TrackSegment& seg) const {
    double s;
    switch (attribution_) {
        case SafetyAttribution::Source: s = safety_of(seg.from); break;
        case SafetyAttribution::Destination: s = safety_of(seg.to); break;
        case SafetyAttribution::Mean:
        default: s = 0.5 * (safety_of(seg.from) + safety_of(seg.to)); break;
    }
    return edge_weight(s, seg.travel_time_min);
}

std::vector<std::pair<std::string, double>> RouteGraph::neighbors(const std::string& id) const {
    if (!has_station(id)) throw LookupError("unknown station id '" + id + "'");
    std::vector<std::pair<std::string, double>> out;
    auto it = segments_.find(id);
    if (it == segments_.end()) return out;
    for (const auto& seg : it->second) out.emplace_back(seg.to, weight_of(seg));
    // Segment lists are kept sorted by destination; keep the guarantee here too.
    std::sort(out.begin(), out.end());
    return out;
}

WeightedDigraph RouteGraph::to_weighted() const {
    WeightedDigraph g;
    for (const auto& [id, _] : stations_) g.add_node(id);
    for (const auto& [id, segs] : segments_)
        for (const auto& seg : segs) g.add_arc(seg.from, seg.to, weight_of(seg));
    return g;
}

namespace {

// Inserts a bidirectional connection, collapsing duplicates to the minimum time.
void add_segment_pair(std::map<std::string, std::vector<TrackSegment>>& segments,
                      const std::string& a, const std::string& b, double time_min) {
    auto upsert = [&](const std::string& from, const std::string& to) {
        auto& list = segments[from];
        auto it = std::lower_bound(list.begin(), list.end(), to,
                                   [](const TrackSegment& s, const std::string& t) { return s.to < t; });
        if (it != list.end() && it->to == to) {
            it->travel_time_min = std::min(it->travel_time_min, time_min);
        } else {
            list.insert(it, TrackSegment{from, to, time_min});
        }
    };
    upsert(a, b);
    upsert(b, a);
}

}  // namespace

RouteGraph build_graph(const std::vector<StationRow>& rows) {
    return build_graph(rows, {});
}

RouteGraph build_graph(const std::vector<StationRow>& rows,
                       const std::map<std::string, std::pair<double, double>>& coords) {
    RouteGraph graph;
    std::set<std::string> referenced;

    for (std::size_t i = 0; i < rows.size(); ++i) {
        const StationRow& row = rows[i];
        if (row.station.empty())
            throw DataError("station row " + std::to_string(i + 1) + ": empty station name");

        auto& st = graph.stations_[row.station];
        st.id = row.station;
        st.name = row.station;
        if (!row.train.empty()) st.lines.insert(row.train);

        const bool connects = !row.prev_stop.empty() || !row.next_stop.empty();
        if (connects) {
            if (!row.time_min.has_value() || !(*row.time_min > 0.0)) {
                std::ostringstream os;
                os << "station row " << (i + 1) << " ('" << row.station
                   << "'): travel time must be a positive number of minutes";
                throw DataError(os.str());
            }
            if (row.prev_stop == row.station || row.next_stop == row.station)
                throw DataError("station row " + std::to_string(i + 1) + " ('" + row.station +
                                "'): a stop cannot connect to itself");
            if (!row.prev_stop.empty()) {
                referenced.insert(row.prev_stop);
                add_segment_pair(graph.segments_, row.station, row.prev_stop, *row.time_min);
            }
            if (!row.next_stop.empty()) {
                referenced.insert(row.next_stop);
                add_segment_pair(graph.segments_, row.station, row.next_stop, *row.time_min);
            }
        }
    }

    std::vector<std::string> dangling;
    for (const auto& name : referenced)
        if (graph.stations_.count(name) == 0) dangling.push_back(name);
    if (!dangling.empty()) {
        std::ostringstream os;
        os << "stop name(s) referenced but never defined:";
        for (const auto& n : dangling) os << " '" << n << "'";
        throw DataError(os.str());
    }

    for (auto& [id, st] : graph.stations_) {
        auto it = coords.find(id);
        if (it == coords.end()) continue;
        auto [lat, lon] = it->second;
        if (lat < -90.0 || lat > 90.0 || lon < -180.0 || lon > 180.0)
            throw DataError("station '" + id + "': coordinates out of range");
        st.lat = lat;
        st.lon = lon;
        st.has_coords = true;
    }

    return graph;
}

}  // namespace saferoute
