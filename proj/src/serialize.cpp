#include "saferoute/serialize.hpp"

#include <fstream>
#include <sstream>

#include "saferoute/errors.hpp"

namespace saferoute {

namespace {

// Pulls a required key, rethrowing nlohmann's exceptions as DataError so
// callers see one error family for every malformed artifact.
const Json& require(const Json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) {
        throw DataError(std::string("missing key '") + key + "' in JSON document");
    }
    return *it;
}

std::chrono::year_month_day require_date(const Json& j, const char* key) {
    const std::string text = require(j, key).get<std::string>();
    const auto d = parse_date(text);
    if (!d) {
        throw DataError(std::string("bad date '") + text + "' for key '" + key + "'");
    }
    return *d;
}

Json vector_to_json(const Eigen::VectorXd& v) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Eigen::VectorXd vector_from_json(const Json& arr) {
    Eigen::VectorXd v(arr.size());
    Eigen::Index i = 0;
    for (const auto& x : arr) v[i++] = x.get<double>();
    return v;
}

}  // namespace

Json series_to_json(const SeriesFile& f) {
    Json j;
    j["bucket"] = bucket_name(f.bucket);
    j["from"] = format_date(f.from);
    j["to"] = format_date(f.to);
    j["radius_km"] = f.radius_km;
    Json per_station = Json::object();
    for (const auto& [id, series] : f.series) {
        Json entry;
        entry["start"] = format_date(series.bucket_start.empty()
                                         ? f.from
                                         : series.bucket_start.front());
        entry["counts"] = series.counts;
        per_station[id] = std::move(entry);
    }
    j["series"] = std::move(per_station);
    return j;
}

SeriesFile series_from_json(const Json& j) {
    try {
        SeriesFile f;
        const std::string bucket_text = require(j, "bucket").get<std::string>();
        const auto bucket = parse_bucket(bucket_text);
        if (!bucket) throw DataError("unknown bucket '" + bucket_text + "'");
        f.bucket = *bucket;
        f.from = require_date(j, "from");
        f.to = require_date(j, "to");
        f.radius_km = require(j, "radius_km").get<double>();

        const BucketGrid grid{f.bucket, f.from, f.to};
        const std::size_t n = grid.size();
        for (const auto& [id, entry] : require(j, "series").items()) {
            IncidentSeries s;
            s.station_id = id;
            s.counts = require(entry, "counts").get<std::vector<std::uint64_t>>();
            if (s.counts.size() != n) {
                throw DataError("series for '" + id + "' has " +
                                std::to_string(s.counts.size()) + " buckets, grid has " +
                                std::to_string(n));
            }
            s.bucket_start.reserve(n);
            for (std::size_t k = 0; k < n; ++k) s.bucket_start.push_back(grid.bucket_start(k));
            f.series.emplace(id, std::move(s));
        }
        return f;
    } catch (const Json::exception& e) {
        throw DataError(std::string("malformed series document: ") + e.what());
    }
}

Json coefficients_to_json(const ModelCoefficients& m) {
    Json j;
    j["model_kind"] = model_kind_name(m.model_kind);
    j["lambda"] = m.lambda;
    j["theta"] = vector_to_json(m.theta);
    j["diagnostics"] = {{"iterations", m.diagnostics.iterations},
                        {"final_objective", m.diagnostics.final_objective},
                        {"converged", m.diagnostics.converged}};
    return j;
}

ModelCoefficients coefficients_from_json(const Json& j) {
    try {
        ModelCoefficients m;
        const std::string kind_text = require(j, "model_kind").get<std::string>();
        const auto kind = parse_model_kind(kind_text);
        if (!kind) throw DataError("unknown model kind '" + kind_text + "'");
        m.model_kind = *kind;
        m.lambda = require(j, "lambda").get<double>();
        m.theta = vector_from_json(require(j, "theta"));
        const Json& d = require(j, "diagnostics");
        m.diagnostics.iterations = require(d, "iterations").get<int>();
        m.diagnostics.final_objective = require(d, "final_objective").get<double>();
        m.diagnostics.converged = require(d, "converged").get<bool>();
        return m;
    } catch (const Json::exception& e) {
        throw DataError(std::string("malformed coefficients document: ") + e.what());
    }
}

Json recurrent_to_json(const RecurrentModel& m) {
    Json j;
    const bool is_lstm = m.kind == CellKind::Lstm;
    j["kind"] = is_lstm ? "lstm" : "gru";
    int hidden = 0;
    Eigen::VectorXd w;
    if (is_lstm) {
        const auto& p = std::get<LstmParams>(m.params);
        hidden = p.hidden_size();
        w = flatten(p);
    } else {
        const auto& p = std::get<GruParams>(m.params);
        hidden = p.hidden_size();
        j["gru_bias"] = p.use_bias;
        w = flatten(p);
    }
    j["hidden_size"] = hidden;
    j["window"] = m.window;
    j["norm_min"] = m.norm_min;
    j["norm_range"] = m.norm_range;
    j["weights"] = vector_to_json(w);
    return j;
}

RecurrentModel recurrent_from_json(const Json& j) {
    try {
        RecurrentModel m;
        const std::string kind_text = require(j, "kind").get<std::string>();
        const int hidden = require(j, "hidden_size").get<int>();
        if (hidden <= 0) throw DataError("hidden_size must be positive");
        const Eigen::VectorXd w = vector_from_json(require(j, "weights"));
        if (kind_text == "lstm") {
            m.kind = CellKind::Lstm;
            LstmParams p = LstmParams::zeros(hidden);
            if (flatten(p).size() != w.size()) {
                throw DataError("weight count does not match an lstm of hidden size " +
                                std::to_string(hidden));
            }
            unflatten(w, p);
            m.params = std::move(p);
        } else if (kind_text == "gru") {
            m.kind = CellKind::Gru;
            const bool bias = j.value("gru_bias", true);
            GruParams p = GruParams::zeros(hidden, bias);
            if (flatten(p).size() != w.size()) {
                throw DataError("weight count does not match a gru of hidden size " +
                                std::to_string(hidden));
            }
            unflatten(w, p);
            m.params = std::move(p);
        } else {
            throw DataError("unknown cell kind '" + kind_text + "'");
        }
        m.window = require(j, "window").get<int>();
        if (m.window <= 0) throw DataError("window must be positive");
        m.norm_min = require(j, "norm_min").get<double>();
        m.norm_range = require(j, "norm_range").get<double>();
        return m;
    } catch (const Json::exception& e) {
        throw DataError(std::string("malformed recurrent-model document: ") + e.what());
    }
}

Json model_file_to_json(const ModelFile& f) {
    Json j;
    j["model_kind"] = model_kind_name(f.kind);
    Json stations = Json::object();
    for (const auto& [id, m] : f.linear) stations[id] = coefficients_to_json(m);
    for (const auto& [id, m] : f.recurrent) stations[id] = recurrent_to_json(m);
    j["stations"] = std::move(stations);
    if (!f.failures.empty()) {
        Json fails = Json::object();
        for (const auto& [id, msg] : f.failures) fails[id] = msg;
        j["failures"] = std::move(fails);
    }
    return j;
}

ModelFile model_file_from_json(const Json& j) {
    try {
        ModelFile f;
        const std::string kind_text = require(j, "model_kind").get<std::string>();
        const auto kind = parse_model_kind(kind_text);
        if (!kind) throw DataError("unknown model kind '" + kind_text + "'");
        f.kind = *kind;
        const bool is_recurrent = f.kind == ModelKind::Lstm || f.kind == ModelKind::Gru;
        for (const auto& [id, entry] : require(j, "stations").items()) {
            if (is_recurrent) {
                f.recurrent.emplace(id, recurrent_from_json(entry));
            } else {
                f.linear.emplace(id, coefficients_from_json(entry));
            }
        }
        if (j.contains("failures")) {
            for (const auto& [id, msg] : j.at("failures").items()) {
                f.failures.emplace(id, msg.get<std::string>());
            }
        }
        return f;
    } catch (const Json::exception& e) {
        throw DataError(std::string("malformed model file: ") + e.what());
    }
}

Json report_to_json(const ComparisonReport& report) {
    Json j;
    Json rows = Json::array();
    for (const auto& row : report.rows) {
        rows.push_back({{"station", row.station_id},
                        {"model", model_kind_name(row.model)},
                        {"rmse", row.rmse}});
    }
    j["rows"] = std::move(rows);
    Json averages = Json::object();
    for (const auto& [kind, avg] : report.per_model_average) {
        averages[model_kind_name(kind)] = avg;
    }
    j["averages"] = std::move(averages);
    Json gaps = Json::array();
    for (const auto& gap : report.gaps) {
        gaps.push_back({{"station", gap.station_id},
                        {"model", model_kind_name(gap.model)},
                        {"error", gap.message}});
    }
    j["gaps"] = std::move(gaps);
    return j;
}

Json route_to_json(const ShortestPathResult& r) {
    Json j;
    j["engine"] = r.engine;
    j["found"] = r.found();
    j["path"] = r.path;
    j["total_cost"] = r.total_cost;
    j["settled_or_episodes"] = r.settled_or_episodes;
    j["elapsed_seconds"] = r.elapsed_seconds;
    return j;
}

Json weighted_to_json(const WeightedDigraph& g) {
    Json j;
    j["nodes"] = g.node_ids();
    Json arcs = Json::array();
    for (const auto& id : g.node_ids()) {
        for (const auto& arc : g.arcs_from(id)) {
            arcs.push_back({{"from", id}, {"to", arc.to}, {"weight", arc.weight}});
        }
    }
    j["arcs"] = std::move(arcs);
    return j;
}

WeightedDigraph weighted_from_json(const Json& j) {
    try {
        WeightedDigraph g;
        for (const auto& id : require(j, "nodes")) {
            g.add_node(id.get<std::string>());
        }
        for (const auto& arc : require(j, "arcs")) {
            const std::string from = require(arc, "from").get<std::string>();
            const std::string to = require(arc, "to").get<std::string>();
            if (!g.has_node(from) || !g.has_node(to)) {
                throw DataError("arc " + from + "->" + to + " references an unlisted node");
            }
            g.add_arc(from, to, require(arc, "weight").get<double>());
        }
        return g;
    } catch (const Json::exception& e) {
        throw DataError(std::string("malformed graph document: ") + e.what());
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write file: " + path);
    }
    out << content;
}

Json parse_json_file(const std::string& path) {
    const std::string text = read_text_file(path);
    try {
        return Json::parse(text);
    } catch (const Json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
}

}  // namespace saferoute
