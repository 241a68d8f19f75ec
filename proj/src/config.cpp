// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "config.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace atpsim {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos)
        return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

}  // namespace

Ini Ini::parse(std::istream& in, const std::string& name) {
    Ini ini;
    ini.name_ = name;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t cut = line.find_first_of("#;");
        if (cut != std::string::npos)
            line.erase(cut);
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(name + ":" + std::to_string(lineno) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError(name + ":" + std::to_string(lineno) + ": empty section name");
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(name + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(name + ":" + std::to_string(lineno) + ": empty key");
        if (section.empty())
            throw ConfigError(name + ":" + std::to_string(lineno) + ": key outside any section");
        auto [it, fresh] = ini.data_[section].emplace(key, Val{val, lineno, false});
        if (!fresh)
            throw ConfigError(name + ":" + std::to_string(lineno) + ": duplicate key \"" + key +
                              "\" in [" + section + "]");
    }
    return ini;
}

Ini Ini::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path);
    return parse(in, path);
}

const Ini::Val* Ini::find(const std::string& sec, const std::string& key) const {
    auto s = data_.find(sec);
    if (s == data_.end())
        return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end())
        return nullptr;
    k->second.used = true;
    return &k->second;
}

bool Ini::has(const std::string& sec, const std::string& key) const {
    return find(sec, key) != nullptr;
}

void Ini::fail(const Val& v, const std::string& sec, const std::string& key,
               const std::string& what) const {
    throw ConfigError(name_ + ":" + std::to_string(v.line) + ": [" + sec + "] " + key + " = \"" +
                      v.text + "\": " + what);
}

std::string Ini::str(const std::string& sec, const std::string& key, const std::string& def) {
    const Val* v = find(sec, key);
    return v ? v->text : def;
}

int64_t Ini::integer(const std::string& sec, const std::string& key, int64_t def) {
    const Val* v = find(sec, key);
    if (!v)
        return def;
    try {
        size_t pos = 0;
        int64_t n = std::stoll(v->text, &pos);
        if (pos != v->text.size())
            fail(*v, sec, key, "not an integer");
        return n;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        fail(*v, sec, key, "not an integer");
    }
}

double Ini::num(const std::string& sec, const std::string& key, double def) {
    const Val* v = find(sec, key);
    if (!v)
        return def;
    try {
        size_t pos = 0;
        double x = std::stod(v->text, &pos);
        if (pos != v->text.size())
            fail(*v, sec, key, "not a number");
        return x;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        fail(*v, sec, key, "not a number");
    }
}

std::vector<double> Ini::num_list(const std::string& sec, const std::string& key,
                                  std::vector<double> def) {
    const Val* v = find(sec, key);
    if (!v)
        return def;
    std::vector<double> out;
    for (const std::string& item : split_list(v->text)) {
        try {
            size_t pos = 0;
            out.push_back(std::stod(item, &pos));
            if (pos != item.size())
                throw std::invalid_argument(item);
        } catch (const std::exception&) {
            fail(*v, sec, key, "list item \"" + item + "\" is not a number");
        }
    }
    if (out.empty())
        fail(*v, sec, key, "empty list");
    return out;
}

std::vector<uint64_t> Ini::int_list(const std::string& sec, const std::string& key,
                                    std::vector<uint64_t> def) {
    const Val* v = find(sec, key);
    if (!v)
        return def;
    std::vector<uint64_t> out;
    for (const std::string& item : split_list(v->text)) {
        try {
            size_t pos = 0;
            out.push_back(std::stoull(item, &pos));
            if (pos != item.size())
                throw std::invalid_argument(item);
        } catch (const std::exception&) {
            fail(*v, sec, key, "list item \"" + item + "\" is not an integer");
        }
    }
    if (out.empty())
        fail(*v, sec, key, "empty list");
    return out;
}

Bps Ini::bandwidth(const std::string& sec, const std::string& key, Bps def) {
    const Val* v = find(sec, key);
    if (!v)
        return def;
    std::string text = v->text;
    double mult = 1;
    if (!text.empty()) {
        char suffix = static_cast<char>(std::toupper(static_cast<unsigned char>(text.back())));
        if (suffix == 'G' || suffix == 'M' || suffix == 'K') {
            mult = suffix == 'G' ? 1e9 : suffix == 'M' ? 1e6 : 1e3;
            text.pop_back();
        }
    }
    try {
        size_t pos = 0;
        double x = std::stod(text, &pos);
        if (pos != text.size() || x <= 0)
            throw std::invalid_argument(text);
        return static_cast<Bps>(std::llround(x * mult));
    } catch (const std::exception&) {
        fail(*v, sec, key, "not a bandwidth (use bps or a G/M/K suffix)");
    }
}

void Ini::finish() const {
    for (const auto& [sec, keys] : data_)
        for (const auto& [key, val] : keys)
            if (!val.used)
                throw ConfigError(name_ + ":" + std::to_string(val.line) + ": unknown key \"" +
                                  key + "\" in [" + sec + "]");
}

TopologyGraph TopologyConfig::build() const {
    switch (kind) {
        case Kind::FatTree:
            return TopologyGraph::fat_tree(cores, aggs, tors, hosts, bw, oversub, lp);
        case Kind::LeafSpine:
            return TopologyGraph::leaf_spine(leaves, spines, hosts_per_leaf, bw, lp);
        case Kind::Dumbbell:
            return TopologyGraph::dumbbell(bottleneck_bw, edge_bw, senders, receivers, lp);
    }
    throw ConfigError("unreachable topology kind");
}

SimConfig SimConfig::load(const std::string& path) {
    std::string dir = std::filesystem::path(path).parent_path().string();
    return from_ini(Ini::parse_file(path), dir);
}

SimConfig SimConfig::from_ini(Ini ini, const std::string& dir) {
    SimConfig cfg;

    std::string tkind = ini.str("topology", "kind", "fat_tree");
    if (tkind == "fat_tree")
        cfg.topology.kind = TopologyConfig::Kind::FatTree;
    else if (tkind == "leaf_spine")
        cfg.topology.kind = TopologyConfig::Kind::LeafSpine;
    else if (tkind == "dumbbell")
        cfg.topology.kind = TopologyConfig::Kind::Dumbbell;
    else
        throw ConfigError(ini.name() + ": [topology] kind must be fat_tree, leaf_spine or dumbbell");
    cfg.topology.cores = static_cast<int>(ini.integer("topology", "cores", cfg.topology.cores));
    cfg.topology.aggs = static_cast<int>(ini.integer("topology", "aggs", cfg.topology.aggs));
    cfg.topology.tors = static_cast<int>(ini.integer("topology", "tors", cfg.topology.tors));
    cfg.topology.hosts = static_cast<int>(ini.integer("topology", "hosts", cfg.topology.hosts));
    cfg.topology.oversub =
        static_cast<int>(ini.integer("topology", "oversub", cfg.topology.oversub));
    cfg.topology.leaves = static_cast<int>(ini.integer("topology", "leaves", cfg.topology.leaves));
    cfg.topology.spines = static_cast<int>(ini.integer("topology", "spines", cfg.topology.spines));
    cfg.topology.hosts_per_leaf =
        static_cast<int>(ini.integer("topology", "hosts_per_leaf", cfg.topology.hosts_per_leaf));
    cfg.topology.bw = ini.bandwidth("topology", "bw", cfg.topology.bw);
    cfg.topology.bottleneck_bw =
        ini.bandwidth("topology", "bottleneck_bw", cfg.topology.bottleneck_bw);
    cfg.topology.edge_bw = ini.bandwidth("topology", "edge_bw", cfg.topology.edge_bw);
    cfg.topology.senders =
        static_cast<int>(ini.integer("topology", "senders", cfg.topology.senders));
    cfg.topology.receivers =
        static_cast<int>(ini.integer("topology", "receivers", cfg.topology.receivers));
    cfg.topology.lp.link_delay =
        ini.integer("topology", "link_delay_ns", cfg.topology.lp.link_delay);
    cfg.topology.lp.host_delay =
        ini.integer("topology", "host_delay_ns", cfg.topology.lp.host_delay);

    cfg.sw.buffer_packets =
        static_cast<int>(ini.integer("switch", "buffer_packets", cfg.sw.buffer_packets));
    cfg.sw.ecn_threshold =
        static_cast<int>(ini.integer("switch", "ecn_threshold", cfg.sw.ecn_threshold));
    cfg.sw.approx_red.min_th =
        static_cast<int>(ini.integer("switch", "red_min", cfg.sw.approx_red.min_th));
    cfg.sw.approx_red.max_th =
        static_cast<int>(ini.integer("switch", "red_max", cfg.sw.approx_red.max_th));
    cfg.sw.backup_red.min_th =
        static_cast<int>(ini.integer("switch", "backup_red_min", cfg.sw.backup_red.min_th));
    cfg.sw.backup_red.max_th =
        static_cast<int>(ini.integer("switch", "backup_red_max", cfg.sw.backup_red.max_th));
    cfg.sw.quantum_bytes =
        static_cast<int>(ini.integer("switch", "quantum_bytes", cfg.sw.quantum_bytes));
    if (cfg.sw.buffer_packets <= cfg.sw.approx_reservation)
        throw ConfigError(ini.name() + ": [switch] buffer_packets must exceed " +
                          std::to_string(cfg.sw.approx_reservation));
    if (cfg.sw.approx_red.min_th < 1 || cfg.sw.approx_red.max_th < cfg.sw.approx_red.min_th)
        throw ConfigError(ini.name() + ": [switch] red thresholds must satisfy 1 <= min <= max");

    std::string wkind = ini.str("workload", "kind", "cdf");
    if (wkind == "cdf")
        cfg.workload.kind = WorkloadConfig::Kind::Cdf;
    else if (wkind == "pairs")
        cfg.workload.kind = WorkloadConfig::Kind::Pairs;
    else
        throw ConfigError(ini.name() + ": [workload] kind must be cdf or pairs");
    cfg.cdf_path = ini.str("workload", "cdf", "");
    cfg.workload.total_messages = static_cast<uint32_t>(
        ini.integer("workload", "total_messages", cfg.workload.total_messages));
    cfg.workload.arrival = ArrivalSpec::parse(
        ini.str("workload", "arrival", cfg.workload.arrival.to_string()));
    cfg.workload.load_scale = ini.num("workload", "load_scale", cfg.workload.load_scale);
    cfg.workload.batch =
        static_cast<uint32_t>(ini.integer("workload", "batch", cfg.workload.batch));
    cfg.workload.pair_senders = static_cast<uint32_t>(
        ini.integer("workload", "pair_senders", cfg.workload.pair_senders));
    cfg.workload.messages_per_flow = static_cast<uint32_t>(
        ini.integer("workload", "messages_per_flow", cfg.workload.messages_per_flow));
    cfg.workload.message_bytes = static_cast<uint32_t>(
        ini.integer("workload", "message_bytes", cfg.workload.message_bytes));
    std::string mix = ini.str("workload", "mix", "none");
    if (mix == "none")
        cfg.mix = TrafficMix::None;
    else if (mix == "half_accurate")
        cfg.mix = TrafficMix::HalfAccurate;
    else
        throw ConfigError(ini.name() + ": [workload] mix must be none or half_accurate");
    if (cfg.workload.kind == WorkloadConfig::Kind::Cdf) {
        if (cfg.cdf_path.empty())
            throw ConfigError(ini.name() + ": [workload] cdf is required for kind = cdf");
        if (cfg.workload.total_messages == 0)
            throw ConfigError(ini.name() + ": [workload] total_messages must be > 0");
        std::filesystem::path p(cfg.cdf_path);
        if (p.is_absolute() || dir.empty())
            cfg.cdf_resolved = cfg.cdf_path;
        else
            cfg.cdf_resolved = (std::filesystem::path(dir) / p).string();
    }
    if (cfg.workload.load_scale <= 0)
        throw ConfigError(ini.name() + ": [workload] load_scale must be positive");

    cfg.protocol.protocol = ini.str("protocol", "protocol", "atp");
    if (cfg.protocol.protocol != "atp" && cfg.protocol.protocol != "udp" &&
        cfg.protocol.protocol != "reliable" && cfg.protocol.protocol != "sender-drop")
        throw ConfigError(ini.name() + ": [protocol] protocol \"" + cfg.protocol.protocol +
                          "\" is not one of atp, udp, reliable, sender-drop");
    std::string mode = ini.str("protocol", "mode", "full");
    if (mode == "base")
        cfg.protocol.atp.mode = AtpMode::Base;
    else if (mode == "rc")
        cfg.protocol.atp.mode = AtpMode::Rc;
    else if (mode == "pri")
        cfg.protocol.atp.mode = AtpMode::Pri;
    else if (mode == "full")
        cfg.protocol.atp.mode = AtpMode::Full;
    else
        throw ConfigError(ini.name() + ": [protocol] mode must be base, rc, pri or full");
    cfg.protocol.mlr = ini.num("protocol", "mlr", cfg.protocol.mlr);
    if (cfg.protocol.mlr < 0 || cfg.protocol.mlr >= 1)
        throw ConfigError(ini.name() + ": [protocol] mlr must be in [0, 1)");
    cfg.protocol.atp.mlr = cfg.protocol.mlr;
    cfg.protocol.atp.tlr = ini.num("protocol", "tlr", cfg.protocol.atp.tlr);
    cfg.protocol.atp.gain_m = ini.num("protocol", "m", cfg.protocol.atp.gain_m);
    cfg.protocol.atp.beta = ini.num("protocol", "beta", cfg.protocol.atp.beta);
    cfg.protocol.atp.window_ns = ini.integer("protocol", "window_ns", cfg.protocol.atp.window_ns);
    cfg.protocol.atp.mrdf_bins =
        static_cast<int>(ini.integer("protocol", "mrdf_bins", cfg.protocol.atp.mrdf_bins));
    cfg.protocol.atp.mtu = static_cast<uint32_t>(ini.integer("protocol", "mtu", DEFAULT_MTU));
    cfg.protocol.atp.initial_rate_bps =
        static_cast<double>(ini.bandwidth("protocol", "initial_rate", 0));
    cfg.protocol.atp.alphas_bps = ini.num_list("protocol", "alphas", {});
    if (ini.has("protocol", "scheduler")) {
        std::string sched = ini.str("protocol", "scheduler", "");
        if (sched == "mrdf")
            cfg.protocol.atp.scheduler = MsgSched::Mrdf;
        else if (sched == "fifo")
            cfg.protocol.atp.scheduler = MsgSched::Fifo;
        else
            throw ConfigError(ini.name() + ": [protocol] scheduler must be mrdf or fifo");
    }
    cfg.protocol.reliable.cwnd_init =
        ini.num("protocol", "cwnd_init", cfg.protocol.reliable.cwnd_init);
    cfg.protocol.reliable.ecn_gain =
        ini.num("protocol", "ecn_gain", cfg.protocol.reliable.ecn_gain);
    cfg.protocol.reliable.mtu = cfg.protocol.atp.mtu;
    if (cfg.protocol.atp.tlr < 0 || cfg.protocol.atp.tlr > 1)
        throw ConfigError(ini.name() + ": [protocol] tlr must be in [0, 1]");

    cfg.run.seeds = ini.int_list("run", "seeds", cfg.run.seeds);
    cfg.run.duration_ns = ini.integer("run", "duration_ns", cfg.run.duration_ns);
    if (cfg.run.duration_ns <= 0)
        throw ConfigError(ini.name() + ": [run] duration_ns must be positive");
    cfg.run.sweep_mlr = ini.num_list("run", "sweep_mlr", {});
    for (double m : cfg.run.sweep_mlr)
        if (m < 0 || m >= 1)
            throw ConfigError(ini.name() + ": [run] sweep_mlr values must be in [0, 1)");
    cfg.run.sweep_load_scale = ini.num_list("run", "sweep_load_scale", {});
    for (double l : cfg.run.sweep_load_scale)
        if (l <= 0)
            throw ConfigError(ini.name() + ": [run] sweep_load_scale values must be positive");

    ini.finish();
    cfg.topology.build();  // surface geometry errors at load time
    return cfg;
}

}  // namespace atpsim
