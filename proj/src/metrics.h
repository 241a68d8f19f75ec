// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#ifndef ATPSIM_METRICS_H
#define ATPSIM_METRICS_H

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "flow.h"
#include "units.h"

namespace atpsim {

// Jain fairness index (sum x)^2 / (n * sum x^2); 1 = perfectly even shares.
double jain_index(const std::vector<double>& xs);

// Nearest-rank percentile, p in (0, 100].
double percentile(std::vector<double> xs, double p);

double mean(const std::vector<double>& xs);

// Sent-weighted packet loss over the rate-control windows after the warmup
// prefix (default: skip the first three windows); 0 when no such window sent
// anything.
double steady_window_loss(const FlowRecord& rec, size_t skip_windows = 3);

// One flow outcome tagged with the sweep coordinates it ran under.
struct RunRow {
    uint64_t seed = 0;
    double mlr = 0;
    double load_scale = 1;
    FlowRecord rec;
};

struct AggregateRow {
    double mlr = 0;
    double load_scale = 1;
    std::string protocol;
    uint32_t seeds = 0;
    uint32_t flows = 0;
    uint32_t completed = 0;
    double mean_jct_ns = 0;   // completed flows only
    double p99_jct_ns = 0;
    double mean_goodput_bps = 0;
    double jain_goodput = 0;
    double mean_measured_loss = 0;  // message loss at the receiver
    double window_loss = 0;         // steady-state packet loss seen by rate control
};

std::vector<AggregateRow> aggregate_rows(const std::vector<RunRow>& rows);

// First line "#atpsim-flows-v1", then a header row and one row per flow.
void write_flows_csv(std::ostream& out, const std::vector<RunRow>& rows);

// First line "#atpsim-aggregate-v1", keyed (mlr, load_scale, protocol).
void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);

}  // namespace atpsim

#endif
