#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fovctl/errors.hpp"
#include "fovctl/runner.hpp"

using namespace fovctl;

namespace {

std::string scenario_path(const std::string& name) {
    return std::string(FOVCTL_SCENARIO_DIR) + "/" + name;
}

// Two robots at rest at the joint stationary point; short horizon.
std::string tiny_scenario(const std::string& extra = "") {
    std::ostringstream os;
    os << R"({
  "version": 1,
  "name": "tiny",
  "robots": 2,
  "edges": [[1, 2]],
  "initial_states": [[0.0, 0.0, 0.0], [1.15470053838, 0.0, 0.0]],
  "fov": {"half_angle": 0.5235987755982988, "depth": 2.0},
  "leader": {"index": 2, "schedule": [{"t": 0.0, "vx": 0.0, "vy": 0.0}]},
  "mode": "nominal",
  "horizon": 0.5,
  "dt": 0.001,
  "log_stride": 50
)" << extra
       << "\n}";
    return os.str();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("bundled scenario loads with the published shape") {
    const Scenario sc = load_scenario(scenario_path("paper_6robot.scn"));
    CHECK(sc.topology.node_count() == 6);
    CHECK(sc.topology.edge_count() == 5);
    CHECK(sc.leader == 5);  // robot 6, zero-based
    CHECK(sc.horizon == 350.0);
    CHECK(sc.mode == RunMode::Adaptive);
    CHECK(sc.learning.t_in == 50);
    CHECK(sc.learning.eps0 == 0.7);
    CHECK(sc.learning.eps1 == 11.0);
    CHECK(!sc.content_hash.empty());

    const CertifyReport report = certify(sc);
    CHECK(report.certified);
    CHECK(report.spanning_tree);
}

TEST_CASE("scenario validation diagnostics") {
    // neighbor initially outside the observer's triangle, named in the error
    try {
        parse_scenario(R"({
      "version": 1, "robots": 2, "edges": [[1, 2]],
      "initial_states": [[0, 0, 0], [5.0, 0, 0]],
      "fov": {"half_angle": 0.5, "depth": 2.0},
      "leader": {"index": 2}, "horizon": 10.0
    })");
        FAIL("expected rejection");
    } catch (const validation_error& err) {
        const std::string what = err.what();
        CHECK(what.find("1->2") != std::string::npos);
    }

    // negative dt
    CHECK_THROWS_AS(parse_scenario(R"({
      "version": 1, "robots": 2, "edges": [[1, 2]],
      "initial_states": [[0, 0, 0], [1.1547, 0, 0]],
      "fov": {"half_angle": 0.5235987755982988, "depth": 2.0},
      "leader": {"index": 2}, "horizon": 10.0, "dt": -0.001
    })"),
                    validation_error);

    // parse errors carry the origin and parser location
    CHECK_THROWS_AS(parse_scenario("{ not json"), validation_error);

    // unsupported version
    CHECK_THROWS_AS(parse_scenario(R"({"version": 9})"), validation_error);

    // unknown mode
    CHECK_THROWS_AS(parse_mode("warp"), validation_error);
}

TEST_CASE("nominal run from an equilibrium is flat") {
    const Scenario sc = parse_scenario(tiny_scenario());
    const RunLog log = run(sc);
    CHECK(log.summary.completed);
    const auto& states = log.groups.at("states");
    const auto x0 = states.column("x_1");
    const auto y0 = states.column("y_1");
    for (double v : x0) CHECK(v == 0.0);
    for (double v : y0) CHECK(v == 0.0);
    const auto d = log.groups.at("distances").column("d_1_2");
    for (double v : d) CHECK(v == doctest::Approx(1.15470053838).epsilon(1e-12));
}

TEST_CASE("determinism: identical scenarios give identical bytes") {
    const Scenario sc = parse_scenario(tiny_scenario(R"(, "mode": "adaptive")"));
    const auto dir1 = std::filesystem::temp_directory_path() / "fovctl_det_a";
    const auto dir2 = std::filesystem::temp_directory_path() / "fovctl_det_b";
    emit_outputs(run(sc), dir1.string());
    emit_outputs(run(sc), dir2.string());
    for (const char* group : {"states", "gains", "costs", "distances"}) {
        const std::string a = slurp((dir1 / (std::string(group) + ".csv")).string());
        const std::string b = slurp((dir2 / (std::string(group) + ".csv")).string());
        CHECK(!a.empty());
        CHECK(a == b);
    }
}

TEST_CASE("nominal mode ignores fault declarations") {
    const Scenario plain = parse_scenario(tiny_scenario());
    const Scenario faulted = parse_scenario(tiny_scenario(
        R"(, "faults": {"sensor": [{"robot": 1, "type": "ramp", "rate": 0.2}],
                        "actuator": [{"type": "sine", "amp": 1.5, "freq": 1.0}]})"));
    const auto dir1 = std::filesystem::temp_directory_path() / "fovctl_iso_a";
    const auto dir2 = std::filesystem::temp_directory_path() / "fovctl_iso_b";
    emit_outputs(run(plain), dir1.string());
    emit_outputs(run(faulted), dir2.string());
    CHECK(slurp((dir1 / "states.csv").string()) == slurp((dir2 / "states.csv").string()));
}

TEST_CASE("csv round trip preserves the log") {
    Scenario sc = parse_scenario(tiny_scenario(R"(, "mode": "adaptive")"));
    const RunLog log = run(sc);
    const auto dir = std::filesystem::temp_directory_path() / "fovctl_roundtrip";
    emit_outputs(log, dir.string());
    for (const auto& [group, table] : log.groups) {
        const Table parsed = read_csv((dir / (group + ".csv")).string());
        REQUIRE(parsed.columns == table.columns);
        REQUIRE(parsed.rows.size() == table.rows.size());
        // recomputed summary statistics match the in-memory table
        for (size_t c = 0; c < table.columns.size(); ++c) {
            double sum = 0, sum2 = 0, max = -1e300;
            double psum = 0, psum2 = 0, pmax = -1e300;
            for (size_t r = 0; r < table.rows.size(); ++r) {
                sum += table.rows[r][c];
                sum2 += table.rows[r][c] * table.rows[r][c];
                max = std::max(max, table.rows[r][c]);
                psum += parsed.rows[r][c];
                psum2 += parsed.rows[r][c] * parsed.rows[r][c];
                pmax = std::max(pmax, parsed.rows[r][c]);
            }
            CHECK(psum == doctest::Approx(sum).epsilon(1e-10));
            CHECK(psum2 == doctest::Approx(sum2).epsilon(1e-10));
            CHECK(pmax == doctest::Approx(max).epsilon(1e-10));
        }
    }
}

TEST_CASE("plots reference every series in the log") {
    Scenario sc = parse_scenario(tiny_scenario(R"(, "mode": "adaptive")"));
    const RunLog log = run(sc);
    const auto dir = std::filesystem::temp_directory_path() / "fovctl_plots";
    const auto files = emit_outputs(log, dir.string(), true);
    bool saw_svg = false;
    for (const auto& f : files) {
        if (f.size() < 4 || f.substr(f.size() - 4) != ".svg") continue;
        saw_svg = true;
        const std::string svg = slurp(f);
        CHECK(!svg.empty());
        const std::string group =
            std::filesystem::path(f).stem().string();
        for (const auto& col : log.groups.at(group).columns)
            if (col != "t") CHECK(svg.find(col) != std::string::npos);
    }
    CHECK(saw_svg);
}

TEST_CASE("mid-run violation flushes a partial log with a structured reason") {
    // a follower can never keep up with a leader fleeing at high speed
    Scenario sc = parse_scenario(tiny_scenario(
        R"(, "mode": "nominal",
          "leader": {"index": 2, "schedule": [{"t": 0.0, "vx": 50.0, "vy": 0.0}]},
          "horizon": 5.0)"));
    const RunLog log = run(sc);
    CHECK_FALSE(log.summary.completed);
    CHECK_FALSE(log.summary.containment_ok);
    CHECK(log.summary.abort_reason.find("sensing triangle") != std::string::npos);
    CHECK(!log.groups.at("states").rows.empty());
}
