#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fovctl/errors.hpp"
#include "fovctl/runner.hpp"

namespace {

int do_validate(const std::string& path) {
    try {
        const fovctl::Scenario sc = fovctl::load_scenario(path);
        std::cout << "ok: " << sc.name << " (" << sc.topology.node_count() << " robots, "
                  << sc.topology.edge_count() << " edges, horizon " << sc.horizon << " s, mode "
                  << fovctl::to_string(sc.mode) << ", hash " << sc.content_hash << ")\n";
        return 0;
    } catch (const std::exception& err) {
        std::cerr << "validation failed: " << err.what() << "\n";
        return 2;
    }
}

int do_certify(const std::string& path, double tol) {
    try {
        const fovctl::Scenario sc = fovctl::load_scenario(path);
        const fovctl::CertifyReport report = fovctl::certify(sc, tol);
        std::cout << "edge-space spectrum (symmetric part):";
        for (int i = 0; i < report.eigenvalues.size(); ++i)
            std::cout << " " << report.eigenvalues(i);
        std::cout << "\nstability certificate: " << (report.certified ? "PASS" : "FAIL")
                  << "\nleader-rooted spanning tree: " << (report.spanning_tree ? "yes" : "no")
                  << "\n";
        return report.certified ? 0 : 2;
    } catch (const std::exception& err) {
        std::cerr << "certify failed: " << err.what() << "\n";
        return 2;
    }
}

int do_run(const std::string& path, const std::string& mode, const std::string& out_dir,
           long long seed, bool plots) {
    fovctl::Scenario sc;
    try {
        sc = fovctl::load_scenario(path);
        if (!mode.empty()) sc.mode = fovctl::parse_mode(mode);
        if (seed >= 0) sc.seed = static_cast<unsigned long long>(seed);
    } catch (const std::exception& err) {
        std::cerr << "validation failed: " << err.what() << "\n";
        return 2;
    }
    try {
        const fovctl::RunLog log = fovctl::run(sc);
        const std::string dir = out_dir.empty() ? ("out/" + sc.name) : out_dir;
        const auto files = fovctl::emit_outputs(log, dir, plots);
        std::cout << "mode " << fovctl::to_string(sc.mode) << ", " << log.summary.steps
                  << " steps, " << (log.summary.completed ? "completed" : "ABORTED") << "\n";
        if (!log.summary.completed) std::cout << "abort: " << log.summary.abort_reason << "\n";
        for (const auto& f : files) std::cout << "wrote " << f << "\n";
        return log.summary.completed ? 0 : 3;
    } catch (const std::exception& err) {
        std::cerr << "run failed: " << err.what() << "\n";
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fovctl: directed multi-robot topology maintenance simulator"};
    app.require_subcommand(1);

    std::string scenario_path, mode, out_dir;
    long long seed = -1;
    bool plots = false;
    double tol = 1e-9;

    auto* run_cmd = app.add_subcommand("run", "simulate a scenario and emit CSV/plots");
    run_cmd->add_option("scenario", scenario_path, "scenario file")->required();
    run_cmd->add_option("--mode", mode, "nominal|adaptive|resilient|qlearning");
    run_cmd->add_option("--out", out_dir, "output directory (default out/<name>)");
    run_cmd->add_option("--seed", seed, "override the scenario seed");
    run_cmd->add_flag("--plots", plots, "also write SVG plots");

    auto* validate_cmd = app.add_subcommand("validate", "parse and validate a scenario");
    validate_cmd->add_option("scenario", scenario_path, "scenario file")->required();

    auto* certify_cmd = app.add_subcommand("certify", "print the stability certificate");
    certify_cmd->add_option("scenario", scenario_path, "scenario file")->required();
    certify_cmd->add_option("--tol", tol, "eigenvalue tolerance");

    CLI11_PARSE(app, argc, argv);

    if (app.got_subcommand(run_cmd)) return do_run(scenario_path, mode, out_dir, seed, plots);
    if (app.got_subcommand(validate_cmd)) return do_validate(scenario_path);
    return do_certify(scenario_path, tol);
}
