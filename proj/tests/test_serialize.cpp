#include <doctest.h>

#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "saferoute/dates.hpp"
#include "saferoute/errors.hpp"
#include "saferoute/routing.hpp"
#include "saferoute/serialize.hpp"

using namespace saferoute;

namespace {

std::chrono::year_month_day ymd(int y, unsigned m, unsigned d) {
    return {std::chrono::year(y), std::chrono::month(m), std::chrono::day(d)};
}

SeriesFile sample_series_file() {
    SeriesFile f;
    f.bucket = Bucket::Monthly;
    f.from = ymd(2018, 1, 1);
    f.to = ymd(2020, 1, 1);
    f.radius_km = 8.0;
    const BucketGrid grid{f.bucket, f.from, f.to};
    for (const std::string id : {"Astor Pl", "Bleecker St"}) {
        IncidentSeries s;
        s.station_id = id;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            s.bucket_start.push_back(grid.bucket_start(k));
            s.counts.push_back(3 + (k + id.size()) % 5);
        }
        f.series.emplace(id, std::move(s));
    }
    return f;
}

std::filesystem::path fresh_temp_dir() {
    const auto dir = std::filesystem::temp_directory_path() /
                     ("saferoute_serialize_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    return dir;
}

WeightedDigraph sample_graph() {
    WeightedDigraph g;
    g.add_arc("A", "B", 1.5);
    g.add_arc("B", "C", -2.0);
    g.add_arc("A", "C", 4.0);
    g.add_node("Island");
    return g;
}

}  // namespace

TEST_CASE("series files survive a json round trip") {
    const SeriesFile f = sample_series_file();
    const Json j = series_to_json(f);
    CHECK(j.at("bucket") == "monthly");
    CHECK(j.at("from") == "2018-01-01");
    CHECK(j.at("to") == "2020-01-01");
    CHECK(j.at("series").at("Astor Pl").at("counts").size() == 24);

    // through text and back, as the CLI does
    const SeriesFile r = series_from_json(Json::parse(j.dump(2)));
    CHECK(r.bucket == f.bucket);
    CHECK(r.from == f.from);
    CHECK(r.to == f.to);
    CHECK(r.radius_km == f.radius_km);
    REQUIRE(r.series.size() == 2);
    for (const auto& [id, s] : f.series) {
        const auto& rs = r.series.at(id);
        CHECK(rs.station_id == id);
        CHECK(rs.counts == s.counts);
        CHECK(rs.bucket_start == s.bucket_start);
    }
}

TEST_CASE("series documents validate counts against the bucket grid") {
    Json j = series_to_json(sample_series_file());
    j["series"]["Astor Pl"]["counts"] = std::vector<int>{1, 2, 3};
    CHECK_THROWS_WITH_AS(series_from_json(j), doctest::Contains("buckets"), DataError);
}

TEST_CASE("series documents reject missing keys and unknown buckets") {
    Json j = series_to_json(sample_series_file());
    j.erase("radius_km");
    CHECK_THROWS_AS(series_from_json(j), DataError);

    Json k = series_to_json(sample_series_file());
    k["bucket"] = "fortnightly";
    CHECK_THROWS_WITH_AS(series_from_json(k), doctest::Contains("fortnightly"), DataError);
}

TEST_CASE("linear coefficients round trip exactly") {
    ModelCoefficients m;
    m.model_kind = ModelKind::Lasso;
    m.lambda = 0.37;
    m.theta = Eigen::VectorXd(3);
    m.theta << 1.0, -0.123456789012345, 2e-7;
    m.diagnostics.iterations = 41;
    m.diagnostics.final_objective = 12.5;
    m.diagnostics.converged = false;

    const ModelCoefficients r =
        coefficients_from_json(Json::parse(coefficients_to_json(m).dump()));
    CHECK(r.model_kind == ModelKind::Lasso);
    CHECK(r.lambda == m.lambda);
    REQUIRE(r.theta.size() == 3);
    // 17-significant-digit text keeps every double bit-exact
    CHECK(r.theta == m.theta);
    CHECK(r.diagnostics.iterations == 41);
    CHECK(r.diagnostics.final_objective == 12.5);
    CHECK_FALSE(r.diagnostics.converged);
}

TEST_CASE("coefficients reject unknown model kinds") {
    Json j = coefficients_to_json(ModelCoefficients{});
    j["model_kind"] = "prophet";
    CHECK_THROWS_WITH_AS(coefficients_from_json(j), doctest::Contains("prophet"),
                         DataError);
}

TEST_CASE("recurrent models round trip with their normalization bounds") {
    std::vector<std::uint64_t> series = {3, 5, 2, 7, 4, 6, 3, 8, 5, 4};
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.hidden_size = 3;
    for (CellKind kind : {CellKind::Lstm, CellKind::Gru}) {
        const RecurrentModel m = train_recurrent(series, cfg, kind).model;
        const RecurrentModel r = recurrent_from_json(Json::parse(recurrent_to_json(m).dump()));
        CHECK(r.kind == m.kind);
        CHECK(r.window == m.window);
        CHECK(r.norm_min == m.norm_min);
        CHECK(r.norm_range == m.norm_range);
        const Eigen::VectorXd wm = std::visit([](const auto& p) { return flatten(p); }, m.params);
        const Eigen::VectorXd wr = std::visit([](const auto& p) { return flatten(p); }, r.params);
        CHECK(wm == wr);
        // identical forecasts prove the weights landed in the right slots
        CHECK(forecast(m, series, 4) == forecast(r, series, 4));
    }
}

TEST_CASE("a no-bias gru keeps its flag through serialization") {
    RecurrentModel m;
    m.kind = CellKind::Gru;
    m.params = GruParams::zeros(2, false);
    m.window = 4;
    const Json j = recurrent_to_json(m);
    CHECK(j.at("gru_bias") == false);
    const RecurrentModel r = recurrent_from_json(j);
    CHECK_FALSE(std::get<GruParams>(r.params).use_bias);

    // documents without the flag default to biased cells
    Json k = j;
    k.erase("gru_bias");
    CHECK(std::get<GruParams>(recurrent_from_json(k).params).use_bias);
}

TEST_CASE("recurrent documents validate the weight count") {
    RecurrentModel m;
    m.kind = CellKind::Lstm;
    m.params = LstmParams::zeros(2);
    Json j = recurrent_to_json(m);
    j["weights"].push_back(0.5);
    CHECK_THROWS_WITH_AS(recurrent_from_json(j), doctest::Contains("does not match"),
                         DataError);
}

TEST_CASE("model files carry per-station fits and failures") {
    ModelFile f;
    f.kind = ModelKind::Ridge;
    ModelCoefficients c;
    c.model_kind = ModelKind::Ridge;
    c.lambda = 0.1;
    c.theta = Eigen::VectorXd::Constant(2, 1.5);
    f.linear.emplace("Astor Pl", c);
    f.failures.emplace("Quiet St", "all-zero series");

    const Json j = model_file_to_json(f);
    CHECK(j.at("model_kind") == "ridge");
    CHECK(j.contains("failures"));

    const ModelFile r = model_file_from_json(Json::parse(j.dump()));
    CHECK(r.kind == ModelKind::Ridge);
    REQUIRE(r.linear.count("Astor Pl") == 1);
    CHECK(r.linear.at("Astor Pl").theta == c.theta);
    CHECK(r.failures.at("Quiet St") == "all-zero series");
    CHECK(r.recurrent.empty());
}

TEST_CASE("model files without failures omit the key") {
    ModelFile f;
    f.kind = ModelKind::Ols;
    CHECK_FALSE(model_file_to_json(f).contains("failures"));
}

TEST_CASE("recurrent model files route stations into the recurrent map") {
    ModelFile f;
    f.kind = ModelKind::Gru;
    RecurrentModel m;
    m.kind = CellKind::Gru;
    m.params = GruParams::zeros(2, true);
    f.recurrent.emplace("Astor Pl", m);
    const ModelFile r = model_file_from_json(model_file_to_json(f));
    CHECK(r.recurrent.count("Astor Pl") == 1);
    CHECK(r.linear.empty());
}

TEST_CASE("evaluation reports serialize rows, averages and gaps") {
    ComparisonReport report;
    report.rows.push_back({"Astor Pl", ModelKind::Ols, 1.5});
    report.per_model_average[ModelKind::Ols] = 1.5;
    report.gaps.push_back({"Quiet St", ModelKind::Poisson, "all-zero series"});
    const Json j = report_to_json(report);
    CHECK(j.at("rows").size() == 1);
    CHECK(j.at("rows")[0].at("model") == "ols");
    CHECK(j.at("averages").at("ols") == 1.5);
    CHECK(j.at("gaps")[0].at("error") == "all-zero series");
}

TEST_CASE("route results serialize the fields the cli prints") {
    WeightedDigraph g;
    g.add_arc("A", "B", 2.0);
    const Json j = route_to_json(dijkstra(g, "A", "B"));
    CHECK(j.at("engine") == "dijkstra");
    CHECK(j.at("found") == true);
    CHECK(j.at("path") == Json::array({"A", "B"}));
    CHECK(j.at("total_cost") == 2.0);
    CHECK(j.contains("settled_or_episodes"));
    CHECK(j.contains("elapsed_seconds"));
}

TEST_CASE("weighted digraphs round trip through json") {
    const WeightedDigraph g = sample_graph();
    const WeightedDigraph r = weighted_from_json(Json::parse(weighted_to_json(g).dump()));
    CHECK(r.node_ids() == g.node_ids());
    CHECK(r.arc_weight("A", "B") == 1.5);
    CHECK(r.arc_weight("B", "C") == -2.0);
    CHECK(r.arc_weight("A", "C") == 4.0);
    CHECK_FALSE(r.arc_weight("C", "A").has_value());
    CHECK(r.has_node("Island"));
    // byte-identical re-serialization
    CHECK(weighted_to_json(r).dump() == weighted_to_json(g).dump());
}

TEST_CASE("graph documents reject arcs to unlisted nodes") {
    Json j;
    j["nodes"] = {"A"};
    j["arcs"] = Json::array({Json{{"from", "A"}, {"to", "B"}, {"weight", 1.0}}});
    CHECK_THROWS_WITH_AS(weighted_from_json(j), doctest::Contains("unlisted"), DataError);
}

TEST_CASE("file helpers name the offending path") {
    const auto dir = fresh_temp_dir();
    const std::string missing = (dir / "missing.json").string();
    CHECK_THROWS_WITH_AS(read_text_file(missing), doctest::Contains("missing.json"),
                         DataError);
    CHECK_THROWS_WITH_AS(parse_json_file(missing), doctest::Contains("missing.json"),
                         DataError);

    const std::string bad = (dir / "bad.json").string();
    write_text_file(bad, "{ not json");
    CHECK_THROWS_WITH_AS(parse_json_file(bad), doctest::Contains("bad.json"), DataError);

    const std::string good = (dir / "good.json").string();
    write_text_file(good, "{\"k\": 3}");
    CHECK(read_text_file(good) == "{\"k\": 3}");
    CHECK(parse_json_file(good).at("k") == 3);
    std::filesystem::remove_all(dir);
}
