// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "topology.h"

#include <algorithm>
#include <deque>
#include <limits>

namespace atpsim {

const char* node_kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::Host: return "host";
        case NodeKind::Tor: return "tor";
        case NodeKind::Agg: return "agg";
        case NodeKind::Core: return "core";
        case NodeKind::Leaf: return "leaf";
        case NodeKind::Spine: return "spine";
    }
    return "?";
}

NodeId TopologyGraph::add_node(NodeKind kind, const std::string& name) {
    NodeId id = static_cast<NodeId>(nodes_.size());
    nodes_.push_back(Node{id, kind, name, {}});
    if (kind == NodeKind::Host)
        hosts_.push_back(id);
    return id;
}

int TopologyGraph::add_link(NodeId a, NodeId b, Bps bw) {
    int id = static_cast<int>(links_.size());
    Link l;
    l.id = id;
    l.a = a;
    l.b = b;
    l.bw = bw;
    l.delay = params_.link_delay;
    links_.push_back(l);
    nodes_[a].links.push_back(id);
    nodes_[b].links.push_back(id);
    return id;
}

static void require(bool ok, const std::string& constraint) {
    if (!ok)
        throw ConfigError("topology: " + constraint);
}

TopologyGraph TopologyGraph::fat_tree(int cores, int aggs, int tors, int hosts, Bps bw,
                                      int oversub, LinkParams lp) {
    require(cores >= 1 && aggs >= 1 && tors >= 1 && hosts >= 2, "all tier counts must be positive (>=2 hosts)");
    require(bw > 0, "link bandwidth must be positive");
    require(oversub >= 1, "oversubscription ratio must be >= 1");
    require(hosts % tors == 0, "hosts must divide evenly across ToRs");
    int hosts_per_tor = hosts / tors;
    require(hosts_per_tor % oversub == 0,
            "ToR downlink count must be a multiple of the oversubscription ratio");
    int uplinks_per_tor = hosts_per_tor / oversub;
    require(uplinks_per_tor >= 1, "each ToR needs at least one uplink");
    int aggs_per_pod = uplinks_per_tor;  // ToR connects to every agg in its pod
    require(aggs % aggs_per_pod == 0, "agg count must divide into pods of uplinks_per_tor");
    int pods = aggs / aggs_per_pod;
    require(tors % pods == 0, "ToR count must divide evenly across pods");
    int tors_per_pod = tors / pods;
    require(cores % aggs_per_pod == 0, "core count must divide across the pod agg columns");
    int cores_per_agg = cores / aggs_per_pod;

    TopologyGraph g;
    g.params_ = lp;
    std::vector<NodeId> core_ids, agg_ids, tor_ids;
    for (int i = 0; i < cores; ++i)
        core_ids.push_back(g.add_node(NodeKind::Core, "core" + std::to_string(i)));
    for (int i = 0; i < aggs; ++i)
        agg_ids.push_back(g.add_node(NodeKind::Agg, "agg" + std::to_string(i)));
    for (int i = 0; i < tors; ++i)
        tor_ids.push_back(g.add_node(NodeKind::Tor, "tor" + std::to_string(i)));
    for (int i = 0; i < hosts; ++i) {
        NodeId h = g.add_node(NodeKind::Host, "host" + std::to_string(i));
        g.add_link(h, tor_ids[i / hosts_per_tor], bw);
    }
    for (int t = 0; t < tors; ++t) {
        int pod = t / tors_per_pod;
        for (int j = 0; j < aggs_per_pod; ++j)
            g.add_link(tor_ids[t], agg_ids[pod * aggs_per_pod + j], bw);
    }
    // Agg column j of every pod shares core block j.
    for (int a = 0; a < aggs; ++a) {
        int column = a % aggs_per_pod;
        for (int c = 0; c < cores_per_agg; ++c)
            g.add_link(agg_ids[a], core_ids[column * cores_per_agg + c], bw);
    }
    return g;
}

TopologyGraph TopologyGraph::leaf_spine(int leaves, int spines, int hosts_per_leaf, Bps bw,
                                        LinkParams lp) {
    require(leaves >= 1 && spines >= 1 && hosts_per_leaf >= 1, "leaf/spine/host counts must be positive");
    require(bw > 0, "link bandwidth must be positive");
    TopologyGraph g;
    g.params_ = lp;
    std::vector<NodeId> spine_ids, leaf_ids;
    for (int i = 0; i < spines; ++i)
        spine_ids.push_back(g.add_node(NodeKind::Spine, "spine" + std::to_string(i)));
    for (int i = 0; i < leaves; ++i)
        leaf_ids.push_back(g.add_node(NodeKind::Leaf, "leaf" + std::to_string(i)));
    for (int l = 0; l < leaves; ++l)
        for (int h = 0; h < hosts_per_leaf; ++h) {
            NodeId host = g.add_node(NodeKind::Host,
                                     "host" + std::to_string(l * hosts_per_leaf + h));
            g.add_link(host, leaf_ids[l], bw);
        }
    for (int l = 0; l < leaves; ++l)
        for (int s = 0; s < spines; ++s)
            g.add_link(leaf_ids[l], spine_ids[s], bw);
    return g;
}

TopologyGraph TopologyGraph::dumbbell(Bps bottleneck_bw, Bps edge_bw, int senders, int receivers,
                                      LinkParams lp) {
    require(senders >= 1 && receivers >= 1, "dumbbell needs at least one sender and one receiver");
    require(bottleneck_bw > 0 && edge_bw > 0, "link bandwidth must be positive");
    TopologyGraph g;
    g.params_ = lp;
    NodeId swl = g.add_node(NodeKind::Tor, "swl");
    NodeId swr = g.add_node(NodeKind::Tor, "swr");
    g.add_link(swl, swr, bottleneck_bw);
    for (int i = 0; i < senders; ++i)
        g.add_link(g.add_node(NodeKind::Host, "snd" + std::to_string(i)), swl, edge_bw);
    for (int i = 0; i < receivers; ++i)
        g.add_link(g.add_node(NodeKind::Host, "rcv" + std::to_string(i)), swr, edge_bw);
    return g;
}

int TopologyGraph::host_uplink(NodeId host) const {
    const Node& n = nodes_[host];
    SIM_CHECK(n.kind == NodeKind::Host, "host_uplink on a non-host node");
    SIM_CHECK(n.links.size() == 1, "hosts must attach to exactly one switch");
    return n.links[0];
}

SimTime TopologyGraph::transmit(uint32_t wire_bytes, int link_id, int dir, SimTime now) {
    Link& l = links_[link_id];
    SimTime start = std::max(now, l.busy_until[dir]);
    l.busy_until[dir] = start + transmission_time_ns(wire_bytes, l.bw);
    return l.busy_until[dir] + l.delay;
}

SimTime TopologyGraph::base_rtt_ns() const {
    RouteTable routes;
    routes.build(*this);
    SimTime worst = 0;
    for (NodeId src : hosts_) {
        for (NodeId dst : hosts_) {
            if (src == dst)
                continue;
            // Follow one minimal path, summing per-link costs for a
            // minimum-size control frame.
            SimTime one_way = 0;
            NodeId at = src;
            while (at != dst) {
                int link_id;
                if (is_host(at))
                    link_id = host_uplink(at);
                else
                    link_id = routes.next_hops(at, dst).front().first;
                const Link& l = links_[link_id];
                one_way += l.delay + transmission_time_ns(MIN_CTRL_WIRE_BYTES, l.bw);
                at = l.peer(at);
            }
            worst = std::max(worst, params_.host_delay + 2 * one_way);
        }
    }
    return worst;
}

void TopologyGraph::dump_csv(std::ostream& out) const {
    out << "node_a,node_b,bw_bps,delay_ns\n";
    for (const Link& l : links_)
        out << nodes_[l.a].name << ',' << nodes_[l.b].name << ',' << l.bw << ',' << l.delay
            << '\n';
}

void RouteTable::build(const TopologyGraph& topo) {
    topo_ = &topo;
    host_of_index_ = topo.hosts();
    index_of_host_.assign(topo.nodes().size(), -1);
    for (size_t i = 0; i < host_of_index_.size(); ++i)
        index_of_host_[host_of_index_[i]] = static_cast<int>(i);

    size_t n = topo.nodes().size();
    hops_.assign(host_of_index_.size(), {});
    dist_.assign(host_of_index_.size(), {});
    for (size_t hi = 0; hi < host_of_index_.size(); ++hi) {
        NodeId dst = host_of_index_[hi];
        std::vector<int>& dist = dist_[hi];
        dist.assign(n, std::numeric_limits<int>::max());
        dist[dst] = 0;
        std::deque<NodeId> queue{dst};
        while (!queue.empty()) {
            NodeId u = queue.front();
            queue.pop_front();
            // Hosts other than the destination never relay traffic.
            if (topo.is_host(u) && u != dst)
                continue;
            for (int lid : topo.node(u).links) {
                NodeId v = topo.link(lid).peer(u);
                if (dist[v] == std::numeric_limits<int>::max()) {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        hops_[hi].assign(n, {});
        for (NodeId u = 0; u < static_cast<NodeId>(n); ++u) {
            if (u == dst || topo.is_host(u) || dist[u] == std::numeric_limits<int>::max())
                continue;
            for (int lid : topo.node(u).links) {
                const Link& l = topo.link(lid);
                NodeId v = l.peer(u);
                if (dist[v] != std::numeric_limits<int>::max() && dist[v] == dist[u] - 1)
                    hops_[hi][u].emplace_back(lid, l.dir_from(u));
            }
            std::sort(hops_[hi][u].begin(), hops_[hi][u].end());
            SIM_CHECK(!hops_[hi][u].empty(), "switch has no route to a destination host");
        }
    }
}

int RouteTable::host_index(NodeId host) const {
    int idx = index_of_host_[host];
    SIM_CHECK(idx >= 0, "route lookup for a non-host destination");
    return idx;
}

const std::vector<std::pair<int, int>>& RouteTable::next_hops(NodeId at, NodeId dst_host) const {
    return hops_[host_index(dst_host)][at];
}

int RouteTable::distance(NodeId at, NodeId dst_host) const {
    return dist_[host_index(dst_host)][at];
}

}  // namespace atpsim
