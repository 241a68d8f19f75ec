// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <tuple>

namespace atpsim {

double jain_index(const std::vector<double>& xs) {
    SIM_CHECK(!xs.empty(), "fairness index of an empty set");
    double sum = 0, sq = 0;
    for (double x : xs) {
        SIM_CHECK(x >= 0, "fairness index over a negative share");
        sum += x;
        sq += x * x;
    }
    if (sq == 0)
        return 1.0;  // all-zero shares are (vacuously) even
    return sum * sum / (static_cast<double>(xs.size()) * sq);
}

double percentile(std::vector<double> xs, double p) {
    SIM_CHECK(!xs.empty(), "percentile of an empty set");
    SIM_CHECK(p > 0 && p <= 100, "percentile rank out of (0, 100]");
    std::sort(xs.begin(), xs.end());
    size_t rank = static_cast<size_t>(std::ceil(p / 100.0 * static_cast<double>(xs.size())));
    return xs[std::max<size_t>(rank, 1) - 1];
}

double mean(const std::vector<double>& xs) {
    if (xs.empty())
        return 0.0;
    double sum = 0;
    for (double x : xs)
        sum += x;
    return sum / static_cast<double>(xs.size());
}

double steady_window_loss(const FlowRecord& rec, size_t skip_windows) {
    uint64_t sent = 0, lost = 0;
    for (size_t i = skip_windows; i < rec.windows.size(); ++i) {
        const WindowSample& w = rec.windows[i];
        sent += w.n_sent;
        lost += w.n_sent > w.n_rcv ? w.n_sent - w.n_rcv : 0;
    }
    return sent == 0 ? 0.0 : static_cast<double>(lost) / static_cast<double>(sent);
}

std::vector<AggregateRow> aggregate_rows(const std::vector<RunRow>& rows) {
    struct Bucket {
        std::vector<double> jcts, goodputs, losses;
        std::vector<const FlowRecord*> recs;
        std::map<uint64_t, bool> seeds;
        uint32_t flows = 0, completed = 0;
        uint64_t win_sent = 0, win_lost = 0;
    };
    std::map<std::tuple<double, double, std::string>, Bucket> buckets;
    for (const RunRow& r : rows) {
        Bucket& b = buckets[{r.mlr, r.load_scale, r.rec.protocol}];
        ++b.flows;
        b.seeds[r.seed] = true;
        b.losses.push_back(r.rec.measured_loss());
        for (size_t i = 3; i < r.rec.windows.size(); ++i) {
            const WindowSample& w = r.rec.windows[i];
            b.win_sent += w.n_sent;
            b.win_lost += w.n_sent > w.n_rcv ? w.n_sent - w.n_rcv : 0;
        }
        if (r.rec.completed) {
            ++b.completed;
            b.jcts.push_back(static_cast<double>(r.rec.jct()));
            b.goodputs.push_back(r.rec.goodput_bps());
        }
    }
    std::vector<AggregateRow> out;
    for (auto& [key, b] : buckets) {
        AggregateRow row;
        row.mlr = std::get<0>(key);
        row.load_scale = std::get<1>(key);
        row.protocol = std::get<2>(key);
        row.seeds = static_cast<uint32_t>(b.seeds.size());
        row.flows = b.flows;
        row.completed = b.completed;
        if (!b.jcts.empty()) {
            row.mean_jct_ns = mean(b.jcts);
            row.p99_jct_ns = percentile(b.jcts, 99);
            row.mean_goodput_bps = mean(b.goodputs);
            row.jain_goodput = jain_index(b.goodputs);
        }
        row.mean_measured_loss = mean(b.losses);
        row.window_loss =
            b.win_sent == 0 ? 0.0 : static_cast<double>(b.win_lost) / static_cast<double>(b.win_sent);
        out.push_back(std::move(row));
    }
    return out;
}

void write_flows_csv(std::ostream& out, const std::vector<RunRow>& rows) {
    out << "#atpsim-flows-v1\n";
    out << "seed,mlr,load_scale,flow_id,protocol,src,dst,start_ns,end_ns,completed,jct_ns,"
           "messages_total,messages_delivered,messages_filtered,bytes_sent,delivered_payload,"
           "goodput_bps,measured_loss,steady_window_loss\n";
    char buf[64];
    for (const RunRow& r : rows) {
        const FlowRecord& f = r.rec;
        out << r.seed << ',' << r.mlr << ',' << r.load_scale << ',' << f.flow_id << ','
            << f.protocol << ',' << f.src << ',' << f.dst << ',' << f.start << ',' << f.end << ','
            << (f.completed ? 1 : 0) << ',' << f.jct() << ',' << f.messages_total << ','
            << f.messages_delivered << ',' << f.messages_filtered << ',' << f.bytes_sent << ','
            << f.delivered_payload << ',';
        std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.6g", f.goodput_bps(), f.measured_loss(),
                      steady_window_loss(f));
        out << buf << '\n';
    }
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
    out << "#atpsim-aggregate-v1\n";
    out << "mlr,load_scale,protocol,seeds,flows,completed,mean_jct_ns,p99_jct_ns,"
           "mean_goodput_bps,jain_goodput,mean_measured_loss,window_loss\n";
    char buf[128];
    for (const AggregateRow& r : rows) {
        out << r.mlr << ',' << r.load_scale << ',' << r.protocol << ',' << r.seeds << ','
            << r.flows << ',' << r.completed << ',';
        std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.6g,%.6g,%.6g,%.6g", r.mean_jct_ns,
                      r.p99_jct_ns, r.mean_goodput_bps, r.jain_goodput, r.mean_measured_loss,
                      r.window_loss);
        out << buf << '\n';
    }
}

}  // namespace atpsim
