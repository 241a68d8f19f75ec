// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#ifndef ATPSIM_WORKLOAD_H
#define ATPSIM_WORKLOAD_H

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "flow.h"
#include "rng.h"
#include "topology.h"
#include "units.h"

namespace atpsim {

// Message-size distribution given as CDF knots "size_bytes cum_prob", one per
// line, '#' comments allowed.  Sizes strictly increasing (>= 1), probabilities
// nondecreasing in (0, 1], the last exactly 1.  Sampling inverts the CDF with
// linear interpolation between knots; all mass at or below the first knot
// collapses onto it.
class SizeCdf {
  public:
    struct Point {
        uint32_t size;
        double prob;
    };

    static SizeCdf parse(std::istream& in, const std::string& name);
    static SizeCdf parse_file(const std::string& path);

    uint32_t sample(RngStream& rng) const;
    double cdf_at(double size) const;  // piecewise-linear CDF with an atom at the first knot
    const std::vector<Point>& points() const { return points_; }

  private:
    std::vector<Point> points_;
};

// Message arrival process at one sender.  "now" puts every message at the
// flow start; "poisson:<rate_per_s>" draws exponential gaps;
// "fixed:<gap_ns>" spaces them evenly.  load_scale divides the gaps.
struct ArrivalSpec {
    enum class Kind { Now, Poisson, Fixed };
    Kind kind = Kind::Now;
    double rate_per_s = 0;
    SimTime gap_ns = 0;

    static ArrivalSpec parse(const std::string& text);
    SimTime next_gap(RngStream& rng, double load_scale) const;
    std::string to_string() const;
};

struct WorkloadConfig {
    enum class Kind { Cdf, Pairs };
    Kind kind = Kind::Cdf;

    // kind = Cdf: total_messages split evenly over sender hosts, sizes drawn
    // from the CDF, receivers uniform over the other hosts, `batch`
    // consecutive messages per flow (0 = one flow per sender).
    uint32_t total_messages = 0;
    ArrivalSpec arrival;
    double load_scale = 1.0;
    uint32_t batch = 1;

    // kind = Pairs: pair_senders hosts each send one flow of
    // messages_per_flow fixed-size messages to a dedicated receiver host
    // (sender i -> receiver i mod R over the remaining hosts).
    uint32_t pair_senders = 0;
    uint32_t messages_per_flow = 1;
    uint32_t message_bytes = 1460;
};

std::vector<FlowSpec> generate_workload(const WorkloadConfig& cfg, const SizeCdf* cdf,
                                        const TopologyGraph& topo, uint64_t master_seed);

}  // namespace atpsim

#endif
