// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#ifndef ATPSIM_TOPOLOGY_H
#define ATPSIM_TOPOLOGY_H

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "units.h"

namespace atpsim {

enum class NodeKind : uint8_t { Host, Tor, Agg, Core, Leaf, Spine };

const char* node_kind_name(NodeKind k);

struct Node {
    NodeId id;
    NodeKind kind;
    std::string name;
    std::vector<int> links;  // incident link ids
};

// Full-duplex link; each direction has its own serialization timeline.
struct Link {
    int id;
    NodeId a, b;
    Bps bw;
    SimTime delay;                 // propagation
    SimTime busy_until[2] = {0, 0};  // dir 0 = a->b, dir 1 = b->a

    NodeId peer(NodeId n) const { return n == a ? b : a; }
    int dir_from(NodeId n) const { return n == a ? 0 : 1; }
    NodeId head(int dir) const { return dir == 0 ? b : a; }  // receiving end
};

struct LinkParams {
    SimTime link_delay = 1 * NS_PER_US;
    SimTime host_delay = 10 * NS_PER_US;
};

// Static graph of hosts and switches plus the store-and-forward transmit rule.
class TopologyGraph {
  public:
    // Explicit-count fat-tree: hosts spread evenly under ToRs; each ToR
    // uplinks to every aggregation switch of its pod; pod aggregation switch
    // i attaches to its own slice of the cores.  `oversub` is the ToR
    // downlink:uplink capacity ratio (3 means 3:1).
    static TopologyGraph fat_tree(int cores, int aggs, int tors, int hosts, Bps bw, int oversub,
                                  LinkParams lp = {});
    // Leaves fully meshed to spines, hosts_per_leaf hosts on each leaf.
    static TopologyGraph leaf_spine(int leaves, int spines, int hosts_per_leaf, Bps bw,
                                    LinkParams lp = {});
    // senders -- SwL -- SwR -- receivers with the middle link at bottleneck_bw.
    static TopologyGraph dumbbell(Bps bottleneck_bw, Bps edge_bw, int senders, int receivers,
                                  LinkParams lp = {});

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<NodeId>& hosts() const { return hosts_; }
    const Node& node(NodeId id) const { return nodes_[id]; }
    Link& link(int id) { return links_[id]; }
    const Link& link(int id) const { return links_[id]; }
    size_t link_count() const { return links_.size(); }
    SimTime host_delay() const { return params_.host_delay; }

    bool is_host(NodeId id) const { return nodes_[id].kind == NodeKind::Host; }
    // Hosts attach to exactly one switch; their single uplink.
    int host_uplink(NodeId host) const;

    // Occupy the link direction for the packet's serialization and return the
    // absolute arrival time at the far node:
    //   start = max(now, busy_until); busy_until = start + size/bw;
    //   arrival = busy_until + delay.
    SimTime transmit(uint32_t wire_bytes, int link_id, int dir, SimTime now);

    // Nominal farthest-pair round-trip of a minimum-size control frame, host
    // processing charged once.  Feeds window/timeout defaults.
    SimTime base_rtt_ns() const;

    // Edge list as CSV: node_a,node_b,bw_bps,delay_ns.
    void dump_csv(std::ostream& out) const;

  private:
    NodeId add_node(NodeKind kind, const std::string& name);
    int add_link(NodeId a, NodeId b, Bps bw);

    std::vector<Node> nodes_;
    std::vector<Link> links_;
    std::vector<NodeId> hosts_;
    LinkParams params_;
};

// Minimal-hop next-hop sets for every (switch, destination host) pair,
// deterministic order (ascending link id).  Built once per experiment by BFS
// from each host.
class RouteTable {
  public:
    void build(const TopologyGraph& topo);

    // Next hops as (link_id, direction) pairs.
    const std::vector<std::pair<int, int>>& next_hops(NodeId at, NodeId dst_host) const;

    // Hop count from a node to a destination host (links to traverse).
    int distance(NodeId at, NodeId dst_host) const;

  private:
    int host_index(NodeId host) const;

    const TopologyGraph* topo_ = nullptr;
    std::vector<NodeId> host_of_index_;
    std::vector<int> index_of_host_;  // NodeId -> dense host index (-1 otherwise)
    // [host index][node id] -> next hops toward that host.
    std::vector<std::vector<std::vector<std::pair<int, int>>>> hops_;
    std::vector<std::vector<int>> dist_;
};

}  // namespace atpsim

#endif
