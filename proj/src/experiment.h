// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#ifndef ATPSIM_EXPERIMENT_H
#define ATPSIM_EXPERIMENT_H

#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "config.h"
#include "fabric.h"
#include "flow.h"
#include "metrics.h"
#include "sim.h"
#include "workload.h"

namespace atpsim {

// Owns the flow endpoints of one run and routes delivered packets to them by
// flow id (ids are dense indexes into the table).
class FlowDispatcher : public EndpointHub {
  public:
    void add(std::unique_ptr<FlowEndpoint> ep) { flows_.push_back(std::move(ep)); }
    FlowEndpoint& flow(uint32_t id) { return *flows_[id]; }
    size_t size() const { return flows_.size(); }

    void deliver(const Packet& pkt, SimTime) override {
        SIM_CHECK(pkt.flow_id < flows_.size(), "packet delivered for an unknown flow");
        flows_[pkt.flow_id]->deliver(pkt);
    }

    std::vector<FlowRecord> records(SimTime end_of_run) {
        std::vector<FlowRecord> out;
        out.reserve(flows_.size());
        for (auto& f : flows_) {
            f->finalize(end_of_run);
            out.push_back(f->record());
        }
        return out;
    }

  private:
    std::vector<std::unique_ptr<FlowEndpoint>> flows_;
};

struct RunResult {
    std::vector<FlowRecord> flows;
    FabricCounters counters;
    RunSummary summary;
    SimTime base_rtt = 0;
};

// One deterministic simulation at a single (seed, mlr, load_scale) point.
RunResult run_single(const SimConfig& cfg, uint64_t seed, double mlr, double load_scale,
                     const SizeCdf* cdf, std::ostream* trace = nullptr);

// Full sweep (sweep_mlr x sweep_load_scale x seeds): writes flows.csv and
// aggregate.csv into out_dir, plus optional per-run traces and topology.csv.
void run_experiment(const SimConfig& cfg, const std::string& out_dir, bool trace_runs,
                    bool dump_topology, std::ostream* log = nullptr);

}  // namespace atpsim

#endif
