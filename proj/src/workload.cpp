// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "workload.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace atpsim {

namespace {

[[noreturn]] void cdf_error(const std::string& name, int line, const std::string& what) {
    throw ConfigError(name + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

SizeCdf SizeCdf::parse(std::istream& in, const std::string& name) {
    SizeCdf cdf;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        long long size;
        double prob;
        if (!(ls >> size))
            continue;  // blank or comment-only line
        if (!(ls >> prob))
            cdf_error(name, lineno, "expected \"size_bytes cum_prob\"");
        std::string trail;
        if (ls >> trail)
            cdf_error(name, lineno, "trailing token \"" + trail + "\"");
        if (size < 1)
            cdf_error(name, lineno, "size must be >= 1 byte");
        if (prob <= 0.0 || prob > 1.0)
            cdf_error(name, lineno, "cumulative probability must be in (0, 1]");
        if (!cdf.points_.empty()) {
            if (size <= cdf.points_.back().size)
                cdf_error(name, lineno, "sizes must be strictly increasing");
            if (prob < cdf.points_.back().prob)
                cdf_error(name, lineno, "cumulative probabilities must be nondecreasing");
        }
        cdf.points_.push_back({static_cast<uint32_t>(size), prob});
    }
    if (cdf.points_.empty())
        cdf_error(name, lineno, "no data points");
    if (cdf.points_.back().prob != 1.0)
        cdf_error(name, lineno, "last cumulative probability must be exactly 1");
    return cdf;
}

SizeCdf SizeCdf::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open size distribution file: " + path);
    return parse(in, path);
}

uint32_t SizeCdf::sample(RngStream& rng) const {
    double u = rng.uniform();
    if (u <= points_.front().prob)
        return points_.front().size;
    for (size_t i = 1; i < points_.size(); ++i) {
        const Point& lo = points_[i - 1];
        const Point& hi = points_[i];
        if (u <= hi.prob) {
            double frac = (u - lo.prob) / (hi.prob - lo.prob);
            double size = lo.size + frac * (static_cast<double>(hi.size) - lo.size);
            auto s = static_cast<uint32_t>(std::llround(size));
            return std::max(s, 1u);
        }
    }
    return points_.back().size;
}

double SizeCdf::cdf_at(double size) const {
    if (size < points_.front().size)
        return 0.0;
    for (size_t i = 1; i < points_.size(); ++i) {
        const Point& lo = points_[i - 1];
        const Point& hi = points_[i];
        if (size < hi.size) {
            double frac = (size - lo.size) / (static_cast<double>(hi.size) - lo.size);
            return lo.prob + frac * (hi.prob - lo.prob);
        }
    }
    return 1.0;
}

ArrivalSpec ArrivalSpec::parse(const std::string& text) {
    ArrivalSpec spec;
    if (text == "now") {
        spec.kind = Kind::Now;
        return spec;
    }
    size_t colon = text.find(':');
    std::string head = text.substr(0, colon);
    std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    try {
        if (head == "poisson") {
            spec.kind = Kind::Poisson;
            spec.rate_per_s = std::stod(arg);
            if (spec.rate_per_s <= 0)
                throw ConfigError("");
            return spec;
        }
        if (head == "fixed") {
            spec.kind = Kind::Fixed;
            spec.gap_ns = std::stoll(arg);
            if (spec.gap_ns <= 0)
                throw ConfigError("");
            return spec;
        }
    } catch (const std::exception&) {
        // falls through to the shared error below
    }
    throw ConfigError("bad arrival spec \"" + text +
                      "\" (want now, poisson:<rate_per_s> or fixed:<gap_ns>)");
}

SimTime ArrivalSpec::next_gap(RngStream& rng, double load_scale) const {
    switch (kind) {
        case Kind::Now:
            return 0;
        case Kind::Poisson: {
            double gap_s = rng.exponential(rate_per_s);
            return static_cast<SimTime>(std::llround(gap_s * NS_PER_SEC / load_scale));
        }
        case Kind::Fixed:
            return static_cast<SimTime>(std::llround(static_cast<double>(gap_ns) / load_scale));
    }
    return 0;
}

std::string ArrivalSpec::to_string() const {
    switch (kind) {
        case Kind::Now:
            return "now";
        case Kind::Poisson: {
            char buf[48];
            std::snprintf(buf, sizeof buf, "poisson:%g", rate_per_s);
            return buf;
        }
        case Kind::Fixed:
            return "fixed:" + std::to_string(gap_ns);
    }
    return "?";
}

namespace {

std::vector<FlowSpec> generate_cdf(const WorkloadConfig& cfg, const SizeCdf& cdf,
                                   const TopologyGraph& topo, uint64_t master_seed) {
    const std::vector<NodeId>& hosts = topo.hosts();
    size_t nhosts = hosts.size();
    if (nhosts < 2)
        throw ConfigError("cdf workload needs at least two hosts");
    if (cfg.total_messages == 0)
        throw ConfigError("cdf workload needs total_messages > 0");
    if (cfg.load_scale <= 0)
        throw ConfigError("load_scale must be positive");
    RngStream size_rng(master_seed, RngUse::WorkloadSize);
    RngStream arrival_rng(master_seed, RngUse::WorkloadArrival);
    RngStream place_rng(master_seed, RngUse::WorkloadPlacement);

    std::vector<FlowSpec> flows;
    uint32_t base = cfg.total_messages / static_cast<uint32_t>(nhosts);
    uint32_t extra = cfg.total_messages % static_cast<uint32_t>(nhosts);
    for (size_t s = 0; s < nhosts; ++s) {
        uint32_t count = base + (s < extra ? 1 : 0);
        SimTime clock = 0;
        uint32_t emitted = 0;
        while (emitted < count) {
            uint32_t in_flow =
                cfg.batch == 0 ? count - emitted : std::min(cfg.batch, count - emitted);
            FlowSpec flow;
            flow.flow_id = static_cast<uint32_t>(flows.size());
            flow.src = hosts[s];
            // Receiver: uniform over the other hosts.
            size_t r = place_rng.uniform_int(nhosts - 1);
            if (r >= s)
                ++r;
            flow.dst = hosts[r];
            for (uint32_t i = 0; i < in_flow; ++i) {
                clock += cfg.arrival.next_gap(arrival_rng, cfg.load_scale);
                flow.messages.push_back(MessageSpec{i, cdf.sample(size_rng), clock});
            }
            flow.start = flow.messages.front().arrival;
            flows.push_back(std::move(flow));
            emitted += in_flow;
        }
    }
    return flows;
}

std::vector<FlowSpec> generate_pairs(const WorkloadConfig& cfg, const TopologyGraph& topo,
                                     uint64_t master_seed) {
    const std::vector<NodeId>& hosts = topo.hosts();
    if (cfg.pair_senders == 0)
        throw ConfigError("pairs workload needs pair_senders > 0");
    if (cfg.pair_senders >= hosts.size())
        throw ConfigError("pairs workload needs at least one non-sender host");
    if (cfg.message_bytes == 0)
        throw ConfigError("pairs workload needs message_bytes > 0");
    RngStream arrival_rng(master_seed, RngUse::WorkloadArrival);
    size_t receivers = hosts.size() - cfg.pair_senders;

    std::vector<FlowSpec> flows;
    for (uint32_t s = 0; s < cfg.pair_senders; ++s) {
        FlowSpec flow;
        flow.flow_id = s;
        flow.src = hosts[s];
        flow.dst = hosts[cfg.pair_senders + s % receivers];
        SimTime clock = 0;
        for (uint32_t i = 0; i < cfg.messages_per_flow; ++i) {
            clock += cfg.arrival.next_gap(arrival_rng, cfg.load_scale);
            flow.messages.push_back(MessageSpec{i, cfg.message_bytes, clock});
        }
        flow.start = flow.messages.empty() ? 0 : flow.messages.front().arrival;
        flows.push_back(std::move(flow));
    }
    return flows;
}

}  // namespace

std::vector<FlowSpec> generate_workload(const WorkloadConfig& cfg, const SizeCdf* cdf,
                                        const TopologyGraph& topo, uint64_t master_seed) {
    if (cfg.kind == WorkloadConfig::Kind::Pairs)
        return generate_pairs(cfg, topo, master_seed);
    if (!cdf)
        throw ConfigError("cdf workload needs a size distribution");
    return generate_cdf(cfg, *cdf, topo, master_seed);
}

}  // namespace atpsim
