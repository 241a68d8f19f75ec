// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
// Command-line front end: validate a config or run the sweep it describes.
#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "config.h"
#include "experiment.h"
#include "units.h"

using namespace atpsim;

int main(int argc, char** argv) {
    CLI::App app{"approximate-transport datacenter network simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    uint64_t seed_override = 0;
    bool have_seed = false;
    bool trace = false;
    bool dump_topology = false;

    CLI::App* run = app.add_subcommand("run", "run the experiment sweep described by a config");
    run->add_option("config", config_path, "INI config file")->required();
    run->add_option("--seed", seed_override, "run a single seed instead of [run] seeds")
        ->each([&](const std::string&) { have_seed = true; });
    run->add_option("--out", out_dir, "output directory (default: out)");
    run->add_flag("--trace", trace, "write a per-run event trace (trace_*.tsv)");
    run->add_flag("--dump-topology", dump_topology, "write the edge list (topology.csv)");

    CLI::App* validate = app.add_subcommand("validate", "parse and check a config, then exit");
    validate->add_option("config", config_path, "INI config file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        SimConfig cfg = SimConfig::load(config_path);
        if (validate->parsed()) {
            std::cout << "ok: " << config_path << "\n";
            return 0;
        }
        if (have_seed)
            cfg.run.seeds = {seed_override};
        run_experiment(cfg, out_dir, trace, dump_topology, &std::cout);
        std::cout << "wrote " << out_dir << "/flows.csv and " << out_dir << "/aggregate.csv\n";
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const SimError& e) {
        std::cerr << "simulation error: " << e.what() << "\n";
        return 3;
    }
}
