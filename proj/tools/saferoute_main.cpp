// saferoute: forecast per-station incident intensity and route between
// stations over a safety-weighted travel-time graph.
//
// Subcommands: ingest (CSV -> per-station series), fit (series -> model file),
// evaluate (RMSE comparison of all six models), route (shortest path by
// dijkstra / bellman-ford / q-learning), bench (engine agreement + timings).
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 no path, 4 negative cycle,
// 5 routing did not converge.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "saferoute/errors.hpp"
#include "saferoute/evaluate.hpp"
#include "saferoute/graph.hpp"
#include "saferoute/ingest.hpp"
#include "saferoute/linear_models.hpp"
#include "saferoute/routing.hpp"
#include "saferoute/serialize.hpp"

namespace {

using namespace saferoute;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNoPath = 3;
constexpr int kExitNegativeCycle = 4;
constexpr int kExitNotConverged = 5;

// ---------------------------------------------------------------------------
// Option bundles shared by subcommands.

struct IngestOptions {
    std::string stations_path;
    std::string coords_path;
    std::string incidents_path;
    std::string out_path;
    double radius_km = 8.0;
    std::string bucket = "monthly";
    std::string from_date = "2018-01";
    std::string to_date = "2020-01";
};

struct FitOptions {
    std::string series_path;
    std::string model;
    std::string out_path;
    double lambda = 0.1;
    double pseudocount = 0.0;
    std::uint64_t seed = 42;
    TrainConfig recurrent;  // hidden/window/epochs/lr defaults live here
};

struct EvaluateOptions {
    std::string series_path;
    std::string format = "csv";
    double lambda = 0.1;
    double pseudocount = 0.0;
    std::uint64_t seed = 42;
    TrainConfig recurrent;
};

struct RouteOptions {
    std::string stations_path;
    std::string coords_path;
    std::string graph_path;   // raw weighted digraph, bypasses the pipeline
    std::string series_path;  // with --model: safety from forecasts
    std::string model;
    bool uniform_safety = false;
    std::string attribution = "destination";
    std::string from_station;
    std::string to_station;
    std::string engine = "dijkstra";
    double lambda = 0.1;
    double pseudocount = 0.0;
    QLearningConfig q;
    TrainConfig recurrent;
    int repeat = 10;  // bench only
};

// ---------------------------------------------------------------------------
// Small helpers.

int levenshtein(const std::string& a, const std::string& b) {
    std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
    std::iota(prev.begin(), prev.end(), 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

// "unknown station 'X'; closest matches: a, b, c"
std::string unknown_station_message(const std::string& name,
                                    const std::vector<std::string>& ids) {
    std::vector<std::pair<int, std::string>> ranked;
    ranked.reserve(ids.size());
    for (const auto& id : ids) ranked.emplace_back(levenshtein(name, id), id);
    std::sort(ranked.begin(), ranked.end());
    std::string msg = "unknown station '" + name + "'";
    if (!ranked.empty()) {
        msg += "; closest matches:";
        for (std::size_t i = 0; i < ranked.size() && i < 3; ++i) {
            msg += (i ? ", " : " ") + ranked[i].second;
        }
    }
    return msg;
}

void require_station(const WeightedDigraph& g, const std::string& name) {
    if (!g.has_node(name)) {
        throw DataError(unknown_station_message(name, g.node_ids()));
    }
}

ModelKind parse_model_or_throw(const std::string& name) {
    const auto kind = parse_model_kind(name);
    if (!kind) {
        throw DataError("unknown model '" + name +
                        "' (expected poisson, ols, ridge, lasso, lstm or gru)");
    }
    return *kind;
}

std::string fmt_double(double v, const char* fmt = "%.12g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

RouteGraph load_route_graph(const std::string& stations_path,
                            const std::string& coords_path) {
    const auto rows = parse_station_rows(read_text_file(stations_path));
    if (coords_path.empty()) {
        return build_graph(rows);
    }
    return build_graph(rows, parse_station_coords(read_text_file(coords_path)));
}

// Fits `kind` on a full series and forecasts the next bucket, the horizon-1
// extrapolation the safety table is built from.
double forecast_next(ModelKind kind, const IncidentSeries& series, double lambda,
                     double pseudocount, const TrainConfig& recurrent) {
    EvalConfig cfg;
    cfg.lambda = lambda;
    cfg.poisson_pseudocount = pseudocount;
    cfg.recurrent = recurrent;
    return forecast_with_model(kind, series, 1, cfg).at(0);
}

// Per-station one-step forecasts -> normalized safety coefficients.
std::map<std::string, double> safety_from_series(const SeriesFile& series,
                                                 ModelKind kind, double lambda,
                                                 double pseudocount,
                                                 const TrainConfig& recurrent) {
    std::map<std::string, double> forecasts;
    std::uint64_t index = 0;
    for (const auto& [id, s] : series.series) {
        TrainConfig station_cfg = recurrent;
        station_cfg.seed = recurrent.seed + index;  // distinct, reproducible
        ++index;
        forecasts[id] = forecast_next(kind, s, lambda, pseudocount, station_cfg);
    }
    return safety_coefficients(forecasts, model_kind_name(kind));
}

// ---------------------------------------------------------------------------
// Subcommand bodies. Each returns an exit code; exceptions map to codes in
// main().

int cmd_ingest(const IngestOptions& opt) {
    if (opt.radius_km <= 0.0) {
        throw DomainError("--radius-km must be positive");
    }
    const auto bucket = parse_bucket(opt.bucket);
    if (!bucket) throw DataError("unknown bucket '" + opt.bucket + "'");
    const auto from = parse_date(opt.from_date);
    const auto to = parse_date(opt.to_date);
    if (!from || !to) throw DataError("dates must be YYYY-MM or YYYY-MM-DD");

    const RouteGraph graph = load_route_graph(opt.stations_path, opt.coords_path);
    const ParsedIncidents incidents = parse_incidents(read_text_file(opt.incidents_path));
    const BucketGrid grid{*bucket, *from, *to};

    SeriesFile out;
    out.bucket = *bucket;
    out.from = *from;
    out.to = *to;
    out.radius_km = opt.radius_km;
    std::size_t skipped = 0;
    for (const auto& [id, station] : graph.stations()) {
        if (!station.has_coords) {
            std::cerr << "warning: station '" << id << "' has no coordinates, skipped\n";
            ++skipped;
            continue;
        }
        out.series.emplace(id, aggregate_series(incidents.records, station,
                                                opt.radius_km, grid));
    }
    if (out.series.empty()) {
        throw DataError("no station has coordinates; nothing to aggregate");
    }
    write_text_file(opt.out_path, series_to_json(out).dump(2) + "\n");

    Json summary;
    summary["stations"] = out.series.size();
    summary["buckets"] = grid.size();
    summary["malformed_rows"] = incidents.malformed_rows;
    summary["stations_without_coordinates"] = skipped;
    summary["out"] = opt.out_path;
    std::cout << summary.dump(2) << "\n";
    return kExitOk;
}

int cmd_fit(const FitOptions& opt) {
    const ModelKind kind = parse_model_or_throw(opt.model);
    const SeriesFile series = series_from_json(parse_json_file(opt.series_path));
    if (series.series.empty()) throw DataError("series file holds no stations");

    ModelFile out;
    out.kind = kind;
    std::uint64_t index = 0;
    for (const auto& [id, s] : series.series) {
        try {
            switch (kind) {
                case ModelKind::Lstm:
                case ModelKind::Gru: {
                    TrainConfig cfg = opt.recurrent;
                    cfg.seed = opt.seed + index;
                    const CellKind cell =
                        kind == ModelKind::Lstm ? CellKind::Lstm : CellKind::Gru;
                    out.recurrent.emplace(id, train_recurrent(s.counts, cfg, cell).model);
                    break;
                }
                case ModelKind::Poisson:
                    out.linear.emplace(id, fit_poisson(time_design(s.counts),
                                                       opt.pseudocount));
                    break;
                case ModelKind::Ols:
                    out.linear.emplace(id, fit_ols(time_design(s.counts)));
                    break;
                case ModelKind::Ridge:
                    out.linear.emplace(id, fit_ridge(time_design(s.counts), opt.lambda));
                    break;
                case ModelKind::Lasso:
                    out.linear.emplace(id, fit_lasso(time_design(s.counts), opt.lambda));
                    break;
            }
        } catch (const std::exception& e) {
            std::cerr << "fit failed for station '" << id << "': " << e.what() << "\n";
            out.failures.emplace(id, e.what());
        }
        ++index;
    }
    const std::size_t fitted = out.linear.size() + out.recurrent.size();
    if (fitted == 0) {
        throw DataError("every station failed to fit");
    }
    write_text_file(opt.out_path, model_file_to_json(out).dump(2) + "\n");

    Json summary;
    summary["model"] = model_kind_name(kind);
    summary["fitted"] = fitted;
    summary["failed"] = out.failures.size();
    summary["out"] = opt.out_path;
    std::cout << summary.dump(2) << "\n";
    return kExitOk;
}

int cmd_evaluate(const EvaluateOptions& opt) {
    if (opt.format != "csv" && opt.format != "json") {
        throw DataError("--format must be csv or json");
    }
    const SeriesFile series = series_from_json(parse_json_file(opt.series_path));
    if (series.series.empty()) throw DataError("series file holds no stations");

    std::map<std::string, SplitSeries> splits;
    for (const auto& [id, s] : series.series) {
        try {
            splits.emplace(id, split_train_test(s));
        } catch (const std::exception& e) {
            std::cerr << "skipping station '" << id << "': " << e.what() << "\n";
        }
    }

    EvalConfig cfg;
    cfg.lambda = opt.lambda;
    cfg.poisson_pseudocount = opt.pseudocount;
    cfg.recurrent = opt.recurrent;
    cfg.recurrent.seed = opt.seed;
    const ComparisonReport report = evaluate_all(splits, cfg);

    // Internal consistency: averages must recompute from the rows exactly.
    std::map<ModelKind, double> sums;
    std::map<ModelKind, std::size_t> counts;
    for (const auto& row : report.rows) {
        sums[row.model] += row.rmse;
        counts[row.model] += 1;
    }
    for (const auto& [kind, avg] : report.per_model_average) {
        if (avg != sums[kind] / static_cast<double>(counts[kind])) {
            std::cerr << "internal error: average for " << model_kind_name(kind)
                      << " does not recompute from its rows\n";
            return kExitData;
        }
    }

    if (opt.format == "json") {
        std::cout << report_to_json(report).dump(2) << "\n";
    } else {
        std::cout << report_to_csv(report);
    }
    for (const auto& gap : report.gaps) {
        std::cerr << "no result for (" << gap.station_id << ", "
                  << model_kind_name(gap.model) << "): " << gap.message << "\n";
    }
    return kExitOk;
}

WeightedDigraph routing_graph(const RouteOptions& opt) {
    if (!opt.graph_path.empty()) {
        return weighted_from_json(parse_json_file(opt.graph_path));
    }
    if (opt.stations_path.empty()) {
        throw DataError("route needs --stations (or --graph-file)");
    }
    RouteGraph graph = load_route_graph(opt.stations_path, opt.coords_path);
    const auto attribution = parse_attribution(opt.attribution);
    if (!attribution) {
        throw DataError("--attribution must be source, destination or mean");
    }
    graph.set_attribution(*attribution);
    if (opt.uniform_safety) {
        return graph.to_weighted();  // neutral coefficients: pure travel time
    }
    if (opt.series_path.empty() || opt.model.empty()) {
        throw DataError(
            "route needs safety inputs: --series with --model, or --uniform-safety");
    }
    const SeriesFile series = series_from_json(parse_json_file(opt.series_path));
    TrainConfig recurrent = opt.recurrent;
    recurrent.seed = opt.q.seed;  // one --seed steers fitting and q-learning
    graph.apply_safety(safety_from_series(series, parse_model_or_throw(opt.model),
                                          opt.lambda, opt.pseudocount, recurrent));
    return graph.to_weighted();
}

ShortestPathResult run_engine(const WeightedDigraph& g, const std::string& engine,
                              const std::string& from, const std::string& to,
                              const QLearningConfig& q) {
    if (engine == "dijkstra") return dijkstra(g, from, to);
    if (engine == "bellman-ford") return bellman_ford(g, from, to);
    if (engine == "q-learning") return q_learning(g, from, to, q).second;
    throw DataError("unknown engine '" + engine +
                    "' (expected dijkstra, bellman-ford or q-learning)");
}

int cmd_route(const RouteOptions& opt) {
    const WeightedDigraph g = routing_graph(opt);
    require_station(g, opt.from_station);
    require_station(g, opt.to_station);
    opt.q.validate();
    const ShortestPathResult result =
        run_engine(g, opt.engine, opt.from_station, opt.to_station, opt.q);
    std::cout << route_to_json(result).dump(2) << "\n";
    if (!result.found()) {
        std::cerr << "no path from '" << opt.from_station << "' to '"
                  << opt.to_station << "'\n";
        return kExitNoPath;
    }
    return kExitOk;
}

int cmd_bench(const RouteOptions& opt) {
    if (opt.repeat < 1) throw DomainError("--repeat must be at least 1");
    const WeightedDigraph g = routing_graph(opt);
    require_station(g, opt.from_station);
    require_station(g, opt.to_station);
    opt.q.validate();

    const std::vector<std::string> engines = {"dijkstra", "bellman-ford", "q-learning"};
    std::vector<ShortestPathResult> last;
    std::cout << "engine,median_seconds,total_cost,hops\n";
    for (const auto& engine : engines) {
        std::vector<double> elapsed;
        ShortestPathResult result;
        for (int i = 0; i < opt.repeat; ++i) {
            result = run_engine(g, engine, opt.from_station, opt.to_station, opt.q);
            elapsed.push_back(result.elapsed_seconds);
        }
        std::sort(elapsed.begin(), elapsed.end());
        const double median = elapsed[elapsed.size() / 2];
        std::cout << engine << ',' << fmt_double(median, "%.6f") << ','
                  << fmt_double(result.total_cost) << ','
                  << (result.path.empty() ? 0 : result.path.size() - 1) << "\n";
        last.push_back(result);
    }
    for (std::size_t i = 1; i < last.size(); ++i) {
        const bool same_path = last[i].path == last[0].path;
        const bool same_cost = std::abs(last[i].total_cost - last[0].total_cost) <= 1e-9;
        if (!same_path || !same_cost) {
            std::cerr << "engine disagreement: " << last[i].engine << " differs from "
                      << last[0].engine << " (cost " << fmt_double(last[i].total_cost)
                      << " vs " << fmt_double(last[0].total_cost) << ")\n";
            return kExitData;
        }
    }
    std::cout << "agreement,yes\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"subway safety forecasting and safety-weighted routing"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file; flags take precedence")
        ->envname("SAFEROUTE_CONFIG");

    IngestOptions ingest_opt;
    auto* ingest = app.add_subcommand("ingest", "aggregate incidents into per-station series");
    ingest->fallthrough();  // lets --config appear after the subcommand name
    ingest->add_option("--stations", ingest_opt.stations_path, "station connectivity CSV")
        ->required();
    ingest->add_option("--coords", ingest_opt.coords_path, "station coordinates CSV")
        ->required();
    ingest->add_option("--incidents", ingest_opt.incidents_path, "incident CSV")->required();
    ingest->add_option("--out", ingest_opt.out_path, "series JSON output path")->required();
    ingest->add_option("--radius-km", ingest_opt.radius_km, "catchment radius in km");
    ingest->add_option("--bucket", ingest_opt.bucket, "monthly, weekly or daily");
    ingest->add_option("--from", ingest_opt.from_date, "range start (YYYY-MM[-DD])");
    ingest->add_option("--to", ingest_opt.to_date, "range end, exclusive");

    FitOptions fit_opt;
    auto* fit = app.add_subcommand("fit", "fit one model per station on a series file");
    fit->fallthrough();
    fit->add_option("--series", fit_opt.series_path, "series JSON from ingest")->required();
    fit->add_option("--model", fit_opt.model, "poisson, ols, ridge, lasso, lstm or gru")
        ->required();
    fit->add_option("--out", fit_opt.out_path, "model JSON output path")->required();
    fit->add_option("--lambda", fit_opt.lambda, "ridge/lasso penalty");
    fit->add_option("--pseudocount", fit_opt.pseudocount, "added to counts for poisson");
    fit->add_option("--seed", fit_opt.seed, "base RNG seed for recurrent training");
    fit->add_option("--hidden", fit_opt.recurrent.hidden_size, "recurrent hidden units");
    fit->add_option("--window", fit_opt.recurrent.window, "recurrent input window");
    fit->add_option("--epochs", fit_opt.recurrent.epochs, "recurrent training epochs");
    fit->add_option("--lr", fit_opt.recurrent.learning_rate, "recurrent learning rate");

    EvaluateOptions eval_opt;
    auto* evaluate = app.add_subcommand("evaluate",
                                        "holdout RMSE for all six models per station");
    evaluate->fallthrough();
    evaluate->add_option("--series", eval_opt.series_path, "series JSON from ingest")
        ->required();
    evaluate->add_option("--format", eval_opt.format, "csv or json");
    evaluate->add_option("--lambda", eval_opt.lambda, "ridge/lasso penalty");
    evaluate->add_option("--pseudocount", eval_opt.pseudocount, "added to counts for poisson");
    evaluate->add_option("--seed", eval_opt.seed, "base RNG seed for recurrent training");
    evaluate->add_option("--hidden", eval_opt.recurrent.hidden_size, "recurrent hidden units");
    evaluate->add_option("--window", eval_opt.recurrent.window, "recurrent input window");
    evaluate->add_option("--epochs", eval_opt.recurrent.epochs, "recurrent training epochs");
    evaluate->add_option("--lr", eval_opt.recurrent.learning_rate, "recurrent learning rate");

    RouteOptions route_opt;
    auto add_routing_options = [&route_opt](CLI::App* cmd) {
        cmd->add_option("--stations", route_opt.stations_path, "station connectivity CSV");
        cmd->add_option("--coords", route_opt.coords_path, "station coordinates CSV");
        cmd->add_option("--graph-file", route_opt.graph_path,
                        "raw weighted digraph JSON (bypasses safety weighting)");
        cmd->add_option("--series", route_opt.series_path, "series JSON for safety");
        cmd->add_option("--model", route_opt.model, "forecaster for safety coefficients");
        cmd->add_flag("--uniform-safety", route_opt.uniform_safety,
                      "route on travel time alone");
        cmd->add_option("--attribution", route_opt.attribution,
                        "edge safety from source, destination or mean");
        cmd->add_option("--from", route_opt.from_station, "origin station")->required();
        cmd->add_option("--to", route_opt.to_station, "target station")->required();
        cmd->add_option("--lambda", route_opt.lambda, "ridge/lasso penalty");
        cmd->add_option("--pseudocount", route_opt.pseudocount,
                        "added to counts for poisson");
        cmd->add_option("--seed", route_opt.q.seed, "RNG seed (fitting and q-learning)");
        cmd->add_option("--episodes", route_opt.q.episodes, "q-learning episodes");
        cmd->add_option("--alpha", route_opt.q.learning_rate, "q-learning step size");
        cmd->add_option("--gamma", route_opt.q.discount, "q-learning discount");
        cmd->add_option("--epsilon-decay", route_opt.q.epsilon_decay,
                        "per-episode exploration decay");
        cmd->add_option("--max-steps", route_opt.q.max_steps_per_episode,
                        "step cap per episode");
        cmd->add_flag("--allow-invalid-actions", route_opt.q.allow_invalid_actions,
                      "let the agent attempt non-edges at the -99 penalty");
    };

    auto* route = app.add_subcommand("route", "shortest safety-weighted path");
    route->fallthrough();
    add_routing_options(route);
    route->add_option("--engine", route_opt.engine, "dijkstra, bellman-ford or q-learning");

    auto* bench = app.add_subcommand("bench", "time all three engines and check agreement");
    bench->fallthrough();
    add_routing_options(bench);
    bench->add_option("--repeat", route_opt.repeat, "runs per engine (median reported)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (ingest->parsed()) return cmd_ingest(ingest_opt);
        if (fit->parsed()) return cmd_fit(fit_opt);
        if (evaluate->parsed()) return cmd_evaluate(eval_opt);
        if (route->parsed()) return cmd_route(route_opt);
        if (bench->parsed()) return cmd_bench(route_opt);
    } catch (const NegativeCycleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNegativeCycle;
    } catch (const NotConvergedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNotConverged;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
