#include "fovctl/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fovctl/errors.hpp"

namespace fovctl {

using nlohmann::json;

std::string to_string(RunMode mode) {
    switch (mode) {
        case RunMode::Nominal: return "nominal";
        case RunMode::Adaptive: return "adaptive";
        case RunMode::Resilient: return "resilient";
        case RunMode::QLearning: return "qlearning";
    }
    return "?";
}

RunMode parse_mode(const std::string& name) {
    if (name == "nominal") return RunMode::Nominal;
    if (name == "adaptive") return RunMode::Adaptive;
    if (name == "resilient") return RunMode::Resilient;
    if (name == "qlearning") return RunMode::QLearning;
    throw validation_error("unknown mode '" + name + "'");
}

Vec2 Scenario::leader_velocity(double t) const {
    Vec2 v = Vec2::Zero();
    for (const auto& seg : schedule)
        if (t >= seg.t_start) v = seg.velocity;
    return v;
}

std::vector<double> Scenario::change_times() const {
    std::vector<double> times;
    for (const auto& seg : schedule)
        if (seg.t_start > 0.0 && seg.t_start < horizon) times.push_back(seg.t_start);
    std::sort(times.begin(), times.end());
    return times;
}

namespace {

// 64-bit FNV-1a over the raw file bytes; enough to fingerprint a scenario.
std::string content_hash_of(const std::string& bytes) {
    unsigned long long h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", h);
    return buf;
}

FaultSignal parse_fault_signal(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "zero") return FaultSignal::zero();
    if (type == "ramp") return FaultSignal::ramp(j.at("rate").get<double>());
    if (type == "sine") return FaultSignal::sine(j.at("amp").get<double>(), j.at("freq").get<double>());
    if (type == "constant") return FaultSignal::constant(j.at("x").get<double>(), j.at("y").get<double>());
    throw validation_error("fault signal type '" + type + "' is not one of zero/ramp/sine/constant");
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& err) {
        throw validation_error(origin + ": " + err.what());
    }

    try {
        Scenario sc;
        sc.content_hash = content_hash_of(text);
        sc.version = j.at("version").get<int>();
        if (sc.version != 1) throw validation_error("unsupported scenario version");
        sc.name = j.value("name", std::string("scenario"));

        const int n = j.at("robots").get<int>();
        if (n <= 0) throw validation_error("robots must be positive");

        std::vector<std::pair<int, int>> edges;
        for (const auto& e : j.at("edges")) {
            const int a = e.at(0).get<int>(), b = e.at(1).get<int>();
            if (a < 1 || a > n || b < 1 || b > n)
                throw validation_error("edge [" + std::to_string(a) + "," + std::to_string(b) +
                                       "] references a robot outside 1.." + std::to_string(n));
            edges.emplace_back(a - 1, b - 1);  // file is 1-based
        }
        sc.topology = Topology(n, std::move(edges));

        const auto& init = j.at("initial_states");
        if (static_cast<int>(init.size()) != n)
            throw validation_error("initial_states must list one [x,y,theta] per robot");
        sc.initial_states.resize(n);
        for (int i = 0; i < n; ++i) {
            sc.initial_states[i] = {init[i].at(0).get<double>(), init[i].at(1).get<double>(),
                                    wrap_angle(init[i].at(2).get<double>())};
        }

        const auto& fj = j.at("fov");
        FovTriangle fov = FovTriangle::standard(fj.value("half_angle", kPi / 6.0),
                                                fj.value("depth", 2.0), fj.value("apex_offset", 0.0));
        if (fj.contains("quality_mean"))
            fov.quality_mean = Vec2(fj["quality_mean"].at(0).get<double>(),
                                    fj["quality_mean"].at(1).get<double>());
        if (fj.contains("quality_sigma"))
            fov.quality_sigma = Vec2(fj["quality_sigma"].at(0).get<double>(),
                                     fj["quality_sigma"].at(1).get<double>());
        fov.amplitude = fj.value("amplitude", 1.0);
        fov.validate();
        sc.fovs.assign(n, fov);

        const auto& lj = j.at("leader");
        sc.leader = lj.at("index").get<int>() - 1;
        if (sc.leader < 0 || sc.leader >= n) throw validation_error("leader index out of range");
        for (const auto& seg : lj.value("schedule", json::array())) {
            LeaderSegment s;
            s.t_start = seg.at("t").get<double>();
            s.velocity = Vec2(seg.at("vx").get<double>(), seg.at("vy").get<double>());
            sc.schedule.push_back(s);
        }
        std::sort(sc.schedule.begin(), sc.schedule.end(),
                  [](const LeaderSegment& a, const LeaderSegment& b) { return a.t_start < b.t_start; });

        sc.mode = parse_mode(j.value("mode", std::string("adaptive")));
        sc.horizon = j.at("horizon").get<double>();
        if (!(sc.horizon > 0.0)) throw validation_error("horizon must be positive");
        sc.dt = j.value("dt", 1e-3);
        if (!(sc.dt > 0.0)) throw validation_error("dt must be positive");
        sc.log_stride = j.value("log_stride", 100);
        if (sc.log_stride < 1) throw validation_error("log_stride must be at least 1");
        sc.seed = j.value("seed", 0ull);

        sc.faults = FaultProfile::none(n);
        if (j.contains("faults")) {
            for (const auto& f : j["faults"].value("sensor", json::array())) {
                const int robot = f.at("robot").get<int>() - 1;
                if (robot < 0 || robot >= n) throw validation_error("sensor fault robot out of range");
                sc.faults.sensor[robot] = parse_fault_signal(f);
            }
            for (const auto& f : j["faults"].value("actuator", json::array())) {
                if (f.contains("robot")) {
                    const int robot = f.at("robot").get<int>() - 1;
                    if (robot < 0 || robot >= n)
                        throw validation_error("actuator fault robot out of range");
                    sc.faults.actuator[robot] = parse_fault_signal(f);
                } else {  // "all"
                    for (int i = 0; i < n; ++i) sc.faults.actuator[i] = parse_fault_signal(f);
                }
            }
        }
        sc.faults.derive_bounds();
        if (j.contains("faults")) {
            const auto& fb = j["faults"];
            if (fb.contains("sensor_rate_bound"))
                sc.faults.sensor_rate_bound = fb["sensor_rate_bound"].get<double>();
            if (fb.contains("actuator_bound"))
                sc.faults.actuator_bound = fb["actuator_bound"].get<double>();
        }
        sc.faults.check_bounds(sc.horizon);

        if (j.contains("learning")) {
            const auto& q = j["learning"];
            sc.learning.dt = q.value("dt", sc.learning.dt);
            sc.learning.discount = q.value("discount", sc.learning.discount);
            sc.learning.t_in = q.value("t_in", sc.learning.t_in);
            sc.learning.forgetting = q.value("forgetting", sc.learning.forgetting);
            sc.learning.eps0 = q.value("eps0", sc.learning.eps0);
            sc.learning.eps1 = q.value("eps1", sc.learning.eps1);
            sc.learning.p0 = q.value("p0", sc.learning.p0);
            if (!(sc.learning.discount >= 0.0 && sc.learning.discount <= 1.0))
                throw validation_error("learning.discount must lie in [0,1]");
            if (sc.learning.t_in < 1) throw validation_error("learning.t_in must be positive");
            if (!(sc.learning.dt > 0.0)) throw validation_error("learning.dt must be positive");
        }
        if (j.contains("observer")) {
            const auto& o = j["observer"];
            sc.observer.q = o.value("q", 1.0);
            sc.observer.r = o.value("r", 1.0);
            sc.observer.gamma = o.value("gamma", 10.0);
        }

        // Every declared edge must be satisfied by the initial placement.
        for (int e = 0; e < sc.topology.edge_count(); ++e) {
            const auto [a, b] = sc.topology.edge(e);
            if (!contains(sc.initial_states[a], sc.fovs[a], sc.initial_states[b].position()))
                throw validation_error("initial placement: robot " + std::to_string(b + 1) +
                                       " is outside the sensing triangle of robot " +
                                       std::to_string(a + 1) + " (edge " + std::to_string(a + 1) +
                                       "->" + std::to_string(b + 1) + ")");
        }
        return sc;
    } catch (const json::exception& err) {
        throw validation_error(origin + ": " + err.what());
    }
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open scenario file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path);
}

}  // namespace fovctl
