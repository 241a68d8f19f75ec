// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "experiment.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "atp.h"
#include "baselines.h"

namespace atpsim {

RunResult run_single(const SimConfig& cfg, uint64_t seed, double mlr, double load_scale,
                     const SizeCdf* cdf, std::ostream* trace) {
    TopologyGraph topo = cfg.topology.build();
    Simulator sim;
    sim.set_trace_sink(trace);
    RngStream spray_rng(seed, RngUse::Spray);
    RngStream red_rng(seed, RngUse::Red);
    RngStream drop_rng(seed, RngUse::SenderDrop);
    FlowDispatcher hub;
    Fabric fabric(sim, topo, cfg.sw, spray_rng, red_rng, hub);

    WorkloadConfig wcfg = cfg.workload;
    wcfg.load_scale = load_scale;
    std::vector<FlowSpec> specs = generate_workload(wcfg, cdf, topo, seed);

    for (const FlowSpec& spec : specs) {
        std::string proto = cfg.protocol.protocol;
        if (cfg.mix == TrafficMix::HalfAccurate && spec.flow_id % 2 == 1)
            proto = "reliable";
        Bps line_rate = topo.link(topo.host_uplink(spec.src)).bw;
        if (proto == "atp") {
            AtpConfig acfg = cfg.protocol.atp;
            acfg.mlr = mlr;
            hub.add(std::make_unique<AtpFlow>(sim, fabric, spec, acfg, line_rate));
        } else if (proto == "udp") {
            hub.add(std::make_unique<UdpFlow>(sim, fabric, spec, cfg.protocol.atp.mtu));
        } else if (proto == "reliable") {
            hub.add(std::make_unique<ReliableFlow>(sim, fabric, spec, cfg.protocol.reliable));
        } else if (proto == "sender-drop") {
            std::vector<bool> mask = sender_drop_mask(spec, mlr, drop_rng);
            hub.add(std::make_unique<ReliableFlow>(sim, fabric, spec, cfg.protocol.reliable,
                                                   std::move(mask), "sender-drop"));
        } else {
            throw ConfigError("unknown protocol: " + proto);
        }
    }
    SIM_CHECK(hub.size() == specs.size(), "one endpoint per generated flow");

    for (const FlowSpec& spec : specs) {
        FlowEndpoint* ep = &hub.flow(spec.flow_id);
        sim.schedule(spec.start, EventKind::Timer, sim.detail("flow=%u start", spec.flow_id),
                     [ep] { ep->start(); });
        for (const MessageSpec& m : spec.messages)
            sim.schedule(m.arrival, EventKind::AppMessageArrival,
                         sim.detail("flow=%u msg=%u", spec.flow_id, m.id),
                         [ep, id = m.id] { ep->on_message_arrival(id); });
    }

    RunResult res;
    res.summary = sim.run_until(cfg.run.duration_ns);
    fabric.audit_conservation();
    res.flows = hub.records(cfg.run.duration_ns);
    res.counters = fabric.counters();
    res.base_rtt = fabric.base_rtt();
    return res;
}

void run_experiment(const SimConfig& cfg, const std::string& out_dir, bool trace_runs,
                    bool dump_topology, std::ostream* log) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    SizeCdf cdf;
    const SizeCdf* cdf_ptr = nullptr;
    if (cfg.workload.kind == WorkloadConfig::Kind::Cdf) {
        cdf = SizeCdf::parse_file(cfg.cdf_resolved);
        cdf_ptr = &cdf;
    }
    if (dump_topology) {
        std::ofstream out(fs::path(out_dir) / "topology.csv");
        cfg.topology.build().dump_csv(out);
    }

    std::vector<double> mlrs =
        cfg.run.sweep_mlr.empty() ? std::vector<double>{cfg.protocol.mlr} : cfg.run.sweep_mlr;
    std::vector<double> loads = cfg.run.sweep_load_scale.empty()
                                    ? std::vector<double>{cfg.workload.load_scale}
                                    : cfg.run.sweep_load_scale;

    std::vector<RunRow> rows;
    for (double mlr : mlrs) {
        for (double load : loads) {
            for (uint64_t seed : cfg.run.seeds) {
                std::ofstream trace;
                if (trace_runs) {
                    char name[96];
                    std::snprintf(name, sizeof name, "trace_mlr%g_load%g_seed%llu.tsv", mlr, load,
                                  static_cast<unsigned long long>(seed));
                    trace.open(fs::path(out_dir) / name);
                }
                RunResult res =
                    run_single(cfg, seed, mlr, load, cdf_ptr, trace_runs ? &trace : nullptr);
                uint32_t completed = 0;
                for (FlowRecord& rec : res.flows) {
                    completed += rec.completed ? 1 : 0;
                    rows.push_back(RunRow{seed, mlr, load, std::move(rec)});
                }
                if (log)
                    *log << "mlr=" << mlr << " load_scale=" << load << " seed=" << seed << ": "
                         << res.flows.size() << " flows, " << completed << " completed, "
                         << res.summary.events_processed << " events, "
                         << res.counters.dropped << " drops\n";
            }
        }
    }

    std::ofstream flows_out(fs::path(out_dir) / "flows.csv");
    write_flows_csv(flows_out, rows);
    std::ofstream agg_out(fs::path(out_dir) / "aggregate.csv");
    write_aggregate_csv(agg_out, aggregate_rows(rows));
}

}  // namespace atpsim
