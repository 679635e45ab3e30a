#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "saferoute/serialize.hpp"

using namespace saferoute;

namespace {

namespace fs = std::filesystem;

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

const fs::path& work_dir() {
    static const fs::path dir = [] {
        const fs::path d =
            fs::temp_directory_path() / ("saferoute_cli_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Runs the cli with `args` through the shell, capturing exit code and both
// streams. `env_prefix` may carry VAR=value assignments.
RunResult run_cli(const std::string& args, const std::string& env_prefix = "") {
    static int counter = 0;
    const fs::path out = work_dir() / ("out" + std::to_string(counter) + ".txt");
    const fs::path err = work_dir() / ("err" + std::to_string(counter) + ".txt");
    ++counter;
    std::string cmd = env_prefix;
    if (!cmd.empty()) cmd += " ";
    cmd += std::string(SAFEROUTE_CLI_PATH) + " " + args + " >\"" + out.string() +
           "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string fixture(const char* name) {
    return std::string(SAFEROUTE_FIXTURE_DIR) + "/" + name;
}

std::string q(const std::string& s) { return "\"" + s + "\""; }

// Ingest runs once; later cases reuse the series file.
const std::string& series_path() {
    static const std::string path = [] {
        const std::string p = (work_dir() / "series.json").string();
        const RunResult r = run_cli("ingest --stations " + q(fixture("stations.csv")) +
                                    " --coords " + q(fixture("station_coords.csv")) +
                                    " --incidents " + q(fixture("incidents.csv")) +
                                    " --out " + q(p));
        REQUIRE(r.code == 0);
        return p;
    }();
    return path;
}

std::string write_triangle_graph() {
    WeightedDigraph g;
    g.add_arc("A", "B", 1.0);
    g.add_arc("B", "C", 2.0);
    g.add_arc("A", "C", 4.0);
    const std::string p = (work_dir() / "triangle.json").string();
    write_text_file(p, weighted_to_json(g).dump(2));
    return p;
}

// Equal hop counts on both branches, so all three engines pick A,B,D.
std::string write_diamond_graph() {
    WeightedDigraph g;
    g.add_arc("A", "B", 1.0);
    g.add_arc("A", "C", 5.0);
    g.add_arc("B", "D", 1.0);
    g.add_arc("C", "D", 5.0);
    const std::string p = (work_dir() / "diamond.json").string();
    write_text_file(p, weighted_to_json(g).dump(2));
    return p;
}

// Small two-station series file so evaluate stays fast in unit tests.
std::string write_small_series() {
    SeriesFile f;
    f.bucket = Bucket::Monthly;
    f.from = {std::chrono::year(2018), std::chrono::month(1), std::chrono::day(1)};
    f.to = {std::chrono::year(2020), std::chrono::month(1), std::chrono::day(1)};
    f.radius_km = 8.0;
    for (const std::string id : {"Astor Pl", "Bleecker St"}) {
        IncidentSeries s;
        s.station_id = id;
        const BucketGrid grid{f.bucket, f.from, f.to};
        for (std::size_t k = 0; k < grid.size(); ++k) {
            s.bucket_start.push_back(grid.bucket_start(k));
            s.counts.push_back(2 + (k * 7 + id.size()) % 6);
        }
        f.series.emplace(id, std::move(s));
    }
    const std::string p = (work_dir() / "small_series.json").string();
    write_text_file(p, series_to_json(f).dump(2));
    return p;
}

std::string strip_elapsed(const std::string& text) {
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line)) {
        if (line.find("elapsed_seconds") != std::string::npos) continue;
        out += line + "\n";
    }
    return out;
}

}  // namespace

TEST_CASE("ingest aggregates the sample network into a series file") {
    const std::string path = series_path();
    // re-run to inspect the summary output
    const RunResult r = run_cli("ingest --stations " + q(fixture("stations.csv")) +
                                " --coords " + q(fixture("station_coords.csv")) +
                                " --incidents " + q(fixture("incidents.csv")) +
                                " --out " + q(path));
    REQUIRE(r.code == 0);
    const Json summary = Json::parse(r.out);
    CHECK(summary.at("stations") == 23);
    CHECK(summary.at("buckets") == 24);
    CHECK(summary.at("malformed_rows") == 0);
    CHECK(summary.at("stations_without_coordinates") == 0);

    const SeriesFile series = series_from_json(parse_json_file(path));
    CHECK(series.series.size() == 23);
    for (const auto& [id, s] : series.series) CHECK(s.counts.size() == 24);
}

TEST_CASE("ingest fails loudly when the incident file is missing") {
    const RunResult r = run_cli("ingest --stations " + q(fixture("stations.csv")) +
                                " --coords " + q(fixture("station_coords.csv")) +
                                " --incidents /nowhere/missing.csv --out " +
                                q((work_dir() / "x.json").string()));
    CHECK(r.code == 2);
    CHECK(r.err.find("/nowhere/missing.csv") != std::string::npos);
}

TEST_CASE("fit writes a model file the serializer can read back") {
    const std::string model_path = (work_dir() / "model_ols.json").string();
    const RunResult r = run_cli("fit --series " + q(series_path()) +
                                " --model ols --out " + q(model_path));
    REQUIRE(r.code == 0);
    const Json summary = Json::parse(r.out);
    CHECK(summary.at("model") == "ols");
    CHECK(summary.at("fitted") == 23);
    CHECK(summary.at("failed") == 0);

    const ModelFile file = model_file_from_json(parse_json_file(model_path));
    CHECK(file.kind == ModelKind::Ols);
    CHECK(file.linear.size() == 23);
    for (const auto& [id, coef] : file.linear) CHECK(coef.theta.size() == 2);
}

TEST_CASE("fit lstm is reproducible for a fixed seed") {
    const std::string a = (work_dir() / "lstm_a.json").string();
    const std::string b = (work_dir() / "lstm_b.json").string();
    const std::string base = "fit --series " + q(write_small_series()) +
                             " --model lstm --epochs 40 --seed 7 --out ";
    REQUIRE(run_cli(base + q(a)).code == 0);
    REQUIRE(run_cli(base + q(b)).code == 0);
    CHECK(slurp(a) != "");
    CHECK(slurp(a) == slurp(b));
}

TEST_CASE("fit rejects an unknown model name") {
    const RunResult r = run_cli("fit --series " + q(series_path()) +
                                " --model prophet --out " +
                                q((work_dir() / "x.json").string()));
    CHECK(r.code == 2);
    CHECK(r.err.find("unknown model 'prophet'") != std::string::npos);
}

TEST_CASE("bad invocations exit with the usage code") {
    CHECK(run_cli("").code == 1);                       // missing subcommand
    CHECK(run_cli("fit --model ols").code == 1);        // missing required options
    CHECK(run_cli("route --nope x").code == 1);         // unknown flag
    CHECK(run_cli("--help").code == 0);                 // help is a clean exit
}

TEST_CASE("evaluate emits csv rows and per-model averages") {
    const RunResult r =
        run_cli("evaluate --series " + q(write_small_series()) + " --epochs 30");
    REQUIRE(r.code == 0);
    REQUIRE(r.out.rfind("station,model,rmse\n", 0) == 0);
    std::istringstream in(r.out);
    std::string line;
    std::size_t rows = 0, averages = 0;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.rfind("average,", 0) == 0)
            ++averages;
        else if (!line.empty())
            ++rows;
    }
    CHECK(rows == 2 * 6);
    CHECK(averages == 6);
}

TEST_CASE("evaluate can emit the same report as json") {
    const RunResult r = run_cli("evaluate --series " + q(write_small_series()) +
                                " --epochs 30 --format json");
    REQUIRE(r.code == 0);
    const Json report = Json::parse(r.out);
    CHECK(report.at("rows").size() == 12);
    CHECK(report.at("averages").size() == 6);
    CHECK(report.at("gaps").empty());
}

TEST_CASE("route follows the cheaper two-hop detour on a raw graph") {
    const RunResult r = run_cli("route --graph-file " + q(write_triangle_graph()) +
                                " --from A --to C");
    REQUIRE(r.code == 0);
    const Json out = Json::parse(r.out);
    CHECK(out.at("engine") == "dijkstra");
    CHECK(out.at("path") == Json::array({"A", "B", "C"}));
    CHECK(out.at("total_cost") == 3.0);
}

TEST_CASE("route from a station to itself is free") {
    const RunResult r = run_cli("route --graph-file " + q(write_triangle_graph()) +
                                " --from A --to A");
    REQUIRE(r.code == 0);
    const Json out = Json::parse(r.out);
    CHECK(out.at("path") == Json::array({"A"}));
    CHECK(out.at("total_cost") == 0.0);
}

TEST_CASE("an unreachable target exits with the no-path code") {
    const RunResult r = run_cli("route --graph-file " + q(write_triangle_graph()) +
                                " --from C --to A");
    CHECK(r.code == 3);
    const Json out = Json::parse(r.out);
    CHECK(out.at("found") == false);
    CHECK(r.err.find("no path") != std::string::npos);
}

TEST_CASE("unknown stations get close-match suggestions") {
    WeightedDigraph g;
    g.add_arc("Astor Pl", "Bleecker St", 2.0);
    g.add_arc("Bleecker St", "Canal St", 2.0);
    const std::string p = (work_dir() / "named.json").string();
    write_text_file(p, weighted_to_json(g).dump());
    const RunResult r =
        run_cli("route --graph-file " + q(p) + " --from \"Astor Pi\" --to \"Canal St\"");
    CHECK(r.code == 2);
    CHECK(r.err.find("unknown station 'Astor Pi'") != std::string::npos);
    CHECK(r.err.find("closest matches") != std::string::npos);
    CHECK(r.err.find("Astor Pl") != std::string::npos);
}

TEST_CASE("bellman-ford surfaces a crafted negative cycle") {
    WeightedDigraph g;
    g.add_arc("A", "B", -1.0);
    g.add_arc("B", "C", -1.0);
    g.add_arc("C", "A", -1.0);
    const std::string p = (work_dir() / "negcycle.json").string();
    write_text_file(p, weighted_to_json(g).dump());

    const RunResult bf = run_cli("route --graph-file " + q(p) +
                                 " --engine bellman-ford --from A --to C");
    CHECK(bf.code == 4);
    CHECK(bf.err.find("negative cycle exists") != std::string::npos);

    const RunResult dj =
        run_cli("route --graph-file " + q(p) + " --engine dijkstra --from A --to C");
    CHECK(dj.code == 2);
    CHECK(dj.err.find("bellman_ford") != std::string::npos);
}

TEST_CASE("route weights edges with model-forecast safety coefficients") {
    const RunResult r = run_cli("route --stations " + q(fixture("stations.csv")) +
                                " --coords " + q(fixture("station_coords.csv")) +
                                " --series " + q(series_path()) +
                                " --model poisson --from 116th --to \"Union Sq\"");
    REQUIRE(r.code == 0);
    const Json out = Json::parse(r.out);
    CHECK(out.at("found") == true);
    const auto& path = out.at("path");
    CHECK(path.front() == "116th");
    CHECK(path.back() == "Union Sq");
}

TEST_CASE("config files fill options and explicit flags win") {
    const std::string cfg = (work_dir() / "route.cfg").string();
    write_text_file(cfg, "[route]\nengine=bellman-ford\n");
    const std::string graph = write_triangle_graph();

    const RunResult from_cfg = run_cli("route --config " + q(cfg) + " --graph-file " +
                                       q(graph) + " --from A --to C");
    REQUIRE(from_cfg.code == 0);
    CHECK(Json::parse(from_cfg.out).at("engine") == "bellman-ford");

    const RunResult overridden =
        run_cli("route --config " + q(cfg) + " --graph-file " + q(graph) +
                " --engine dijkstra --from A --to C");
    REQUIRE(overridden.code == 0);
    CHECK(Json::parse(overridden.out).at("engine") == "dijkstra");

    const RunResult from_env = run_cli(
        "route --graph-file " + q(graph) + " --from A --to C",
        "SAFEROUTE_CONFIG=" + q(cfg));
    REQUIRE(from_env.code == 0);
    CHECK(Json::parse(from_env.out).at("engine") == "bellman-ford");
}

TEST_CASE("bench reports timings and cross-engine agreement") {
    const RunResult r = run_cli("bench --graph-file " + q(write_diamond_graph()) +
                                " --from A --to D --repeat 1 --episodes 3000");
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("engine,median_seconds,total_cost,hops\n", 0) == 0);
    CHECK(r.out.find("dijkstra,") != std::string::npos);
    CHECK(r.out.find("bellman-ford,") != std::string::npos);
    CHECK(r.out.find("q-learning,") != std::string::npos);
    CHECK(r.out.find("agreement,yes") != std::string::npos);
}

TEST_CASE("bench flags engines that disagree") {
    // The direct arc into the goal wins the +100 bonus in one hop, so the
    // q-learning route (A,C at cost 4) differs from dijkstra's (A,B,C at 3).
    const RunResult r = run_cli("bench --graph-file " + q(write_triangle_graph()) +
                                " --from A --to C --repeat 1 --episodes 3000");
    CHECK(r.code == 2);
    CHECK(r.err.find("engine disagreement") != std::string::npos);
}

TEST_CASE("seeded q-learning routes are byte-identical across runs") {
    const std::string args = "route --graph-file " + q(write_diamond_graph()) +
                             " --engine q-learning --episodes 500 --seed 5 "
                             "--from A --to D";
    const RunResult a = run_cli(args);
    const RunResult b = run_cli(args);
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(strip_elapsed(a.out) == strip_elapsed(b.out));
    CHECK(Json::parse(a.out).at("path") == Json::array({"A", "B", "D"}));
}
