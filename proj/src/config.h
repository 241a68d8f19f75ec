// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#ifndef ATPSIM_CONFIG_H
#define ATPSIM_CONFIG_H

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "atp.h"
#include "baselines.h"
#include "switchport.h"
#include "topology.h"
#include "units.h"
#include "workload.h"

namespace atpsim {

// INI-style key/value store with consumption tracking: every key must be read
// by the typed getters or finish() reports it as unknown, so typos fail loudly
// with file:line positions.
class Ini {
  public:
    static Ini parse(std::istream& in, const std::string& name);
    static Ini parse_file(const std::string& path);

    bool has(const std::string& sec, const std::string& key) const;
    std::string str(const std::string& sec, const std::string& key, const std::string& def);
    int64_t integer(const std::string& sec, const std::string& key, int64_t def);
    double num(const std::string& sec, const std::string& key, double def);
    // Comma-separated lists; empty or missing -> def.
    std::vector<double> num_list(const std::string& sec, const std::string& key,
                                 std::vector<double> def);
    std::vector<uint64_t> int_list(const std::string& sec, const std::string& key,
                                   std::vector<uint64_t> def);
    // Bandwidth with optional G/M/K suffix (bits per second).
    Bps bandwidth(const std::string& sec, const std::string& key, Bps def);

    void finish() const;  // throw ConfigError on unconsumed keys
    const std::string& name() const { return name_; }

  private:
    struct Val {
        std::string text;
        int line = 0;
        mutable bool used = false;
    };
    [[noreturn]] void fail(const Val& v, const std::string& sec, const std::string& key,
                           const std::string& what) const;
    const Val* find(const std::string& sec, const std::string& key) const;

    std::string name_;
    std::map<std::string, std::map<std::string, Val>> data_;
};

struct TopologyConfig {
    enum class Kind { FatTree, LeafSpine, Dumbbell };
    Kind kind = Kind::FatTree;
    int cores = 2, aggs = 2, tors = 4, hosts = 8;
    int oversub = 1;
    int leaves = 2, spines = 2, hosts_per_leaf = 4;
    Bps bw = 1 * GBPS;
    Bps bottleneck_bw = 1 * GBPS, edge_bw = 1 * GBPS;
    int senders = 1, receivers = 1;
    LinkParams lp;

    TopologyGraph build() const;
};

enum class TrafficMix { None, HalfAccurate };

struct ProtocolConfig {
    std::string protocol = "atp";  // atp | udp | reliable | sender-drop
    AtpConfig atp;
    ReliableConfig reliable;
    double mlr = 0.0;  // atp quota / sender-drop filter probability
};

struct RunConfig {
    std::vector<uint64_t> seeds{1};
    SimTime duration_ns = 60 * NS_PER_SEC;
    std::vector<double> sweep_mlr;         // empty = just protocol.mlr
    std::vector<double> sweep_load_scale;  // empty = just workload.load_scale
};

struct SimConfig {
    TopologyConfig topology;
    SwitchConfig sw;
    WorkloadConfig workload;
    std::string cdf_path;  // as written in the file
    std::string cdf_resolved;  // relative paths resolved against the config dir
    TrafficMix mix = TrafficMix::None;
    ProtocolConfig protocol;
    RunConfig run;

    static SimConfig load(const std::string& path);
    static SimConfig from_ini(Ini ini, const std::string& dir);
};

}  // namespace atpsim

#endif
