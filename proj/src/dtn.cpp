#include "deorbit/dtn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>
#include <tuple>

namespace deorbit::dtn {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string to_string(Priority p) {
    switch (p) {
        case Priority::safety_critical: return "safety-critical";
        case Priority::metadata: return "metadata";
        case Priority::bulk: return "bulk";
    }
    return "bulk";
}

Priority priority_from_string(const std::string& name) {
    if (name == "safety-critical") return Priority::safety_critical;
    if (name == "metadata") return Priority::metadata;
    if (name == "bulk") return Priority::bulk;
    throw std::invalid_argument("unknown priority '" + name + "'");
}

std::string to_string(EventKind k) {
    switch (k) {
        case EventKind::generate: return "generate";
        case EventKind::enqueue: return "enqueue";
        case EventKind::tx_start: return "tx_start";
        case EventKind::tx_end: return "tx_end";
        case EventKind::deliver: return "deliver";
        case EventKind::drop: return "drop";
    }
    return "unknown";
}

void LinkModel::validate() const {
    if (rate_table.empty()) throw std::invalid_argument("link " + name + ": empty rate table");
    for (std::size_t i = 0; i < rate_table.size(); ++i) {
        if (!(rate_table[i].bytes_per_s > 0)) {
            throw std::invalid_argument("link " + name + ": rate table rates must be > 0");
        }
        if (i > 0 && !(rate_table[i].min_snr_db > rate_table[i - 1].min_snr_db &&
                       rate_table[i].bytes_per_s > rate_table[i - 1].bytes_per_s)) {
            throw std::invalid_argument("link " + name + ": rate table must increase in SNR and rate");
        }
    }
    if (mode == SnrMode::parametric) {
        if (!(parametric.period_s > 0)) throw std::invalid_argument("link " + name + ": period must be > 0");
        if (!(parametric.amplitude_db >= 0)) throw std::invalid_argument("link " + name + ": amplitude must be >= 0");
        for (const auto& w : parametric.outages) {
            if (!(w.start_s >= 0) || !(w.duration_s > 0)) {
                throw std::invalid_argument("link " + name + ": outage windows need start >= 0, duration > 0");
            }
        }
    }
}

double snr_at(const LinkModel& link, double t_s, const LinkGeometry* geometry) {
    if (!(t_s >= 0)) throw std::invalid_argument("snr_at: t must be >= 0");
    if (link.mode == SnrMode::parametric) {
        const ParametricSnr& p = link.parametric;
        for (const auto& w : p.outages) {
            if (t_s >= w.start_s && t_s < w.start_s + w.duration_s) return p.outage_snr_db;
        }
        return p.mean_db + p.amplitude_db * std::sin(2 * kPi * (t_s + p.phase_s) / p.period_s);
    }

    if (geometry == nullptr || !geometry->from || !geometry->to) {
        throw std::invalid_argument("snr_at: link " + link.name + " is geometry-driven but has no trajectories");
    }
    const Vec3 a = geometry->from(t_s);
    const Vec3 b = geometry->to(t_s);
    const Vec3 d = b - a;
    const double dist = d.norm();
    const LinkBudget& lb = link.budget;

    if (geometry->to_is_ground) {
        const double elevation = std::asin(std::clamp((-d).dot(b.normalized()) / dist, -1.0, 1.0));
        if (elevation < deg2rad(geometry->min_elevation_deg)) return lb.outage_snr_db;
    } else {
        // Closest point of the segment to the Earth's centre.
        const double s = std::clamp(-a.dot(d) / d.squaredNorm(), 0.0, 1.0);
        if ((a + s * d).norm() < geometry->earth_radius_km) return lb.outage_snr_db;
    }
    const double fspl = 20.0 * std::log10(dist) + lb.fspl_constant_db;
    return lb.tx_power_dbw + lb.tx_gain_db + lb.rx_gain_db - fspl - lb.noise_dbw;
}

double rate_from_snr(double snr_db, const LinkModel& link) {
    double rate = 0.0;
    for (const auto& step : link.rate_table) {
        if (step.min_snr_db <= snr_db) rate = step.bytes_per_s;
    }
    return rate;
}

// ---------------------------------------------------------------------------
// RateSchedule
// ---------------------------------------------------------------------------

RateSchedule::RateSchedule(const LinkModel& link, double horizon_s, double grid_s,
                           const LinkGeometry* geometry)
    : horizon_(horizon_s) {
    if (!(horizon_s > 0) || !(grid_s > 0)) throw std::invalid_argument("RateSchedule: bad horizon or grid");
    std::vector<double> breaks;
    const auto cells = static_cast<long>(std::ceil(horizon_s / grid_s));
    breaks.reserve(static_cast<std::size_t>(cells) + 2 * link.parametric.outages.size());
    for (long k = 0; k < cells; ++k) breaks.push_back(static_cast<double>(k) * grid_s);
    if (link.mode == SnrMode::parametric) {
        for (const auto& w : link.parametric.outages) {
            for (double edge : {w.start_s, w.start_s + w.duration_s}) {
                if (edge < horizon_s) breaks.push_back(edge);
            }
        }
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    for (double t : breaks) {
        const double snr = dtn::snr_at(link, t, geometry);
        const double rate = rate_from_snr(snr, link);
        if (!segments_.empty() && segments_.back().bytes_per_s == rate && segments_.back().snr_db == snr) continue;
        segments_.push_back({t, rate, snr});
    }
}

std::size_t RateSchedule::index_at(double t_s) const {
    auto it = std::upper_bound(segments_.begin(), segments_.end(), t_s,
                               [](double t, const Segment& s) { return t < s.start_s; });
    return it == segments_.begin() ? 0 : static_cast<std::size_t>(it - segments_.begin()) - 1;
}

double RateSchedule::segment_end(std::size_t i) const {
    return i + 1 < segments_.size() ? segments_[i + 1].start_s : horizon_;
}

double RateSchedule::rate_at(double t_s) const {
    if (segments_.empty() || t_s >= horizon_ || t_s < 0) return 0.0;
    return segments_[index_at(t_s)].bytes_per_s;
}

double RateSchedule::snr_at(double t_s) const {
    if (segments_.empty()) return 0.0;
    return segments_[index_at(std::clamp(t_s, 0.0, horizon_))].snr_db;
}

double RateSchedule::next_up(double t_s) const {
    if (segments_.empty() || t_s >= horizon_) return kInf;
    for (std::size_t i = index_at(t_s); i < segments_.size(); ++i) {
        if (segments_[i].bytes_per_s > 0) return std::max(t_s, segments_[i].start_s);
    }
    return kInf;
}

double RateSchedule::completion(double t_s, double bytes) const {
    if (bytes <= 0) return t_s;
    if (segments_.empty() || t_s >= horizon_) return kInf;
    double cur = t_s;
    double remaining = bytes;
    for (std::size_t i = index_at(t_s); i < segments_.size(); ++i) {
        const double end = segment_end(i);
        const double rate = segments_[i].bytes_per_s;
        if (rate > 0) {
            const double need = remaining / rate;
            if (cur + need <= end) return cur + need;
            remaining -= rate * (end - cur);
        }
        cur = end;
    }
    return kInf;
}

double RateSchedule::bytes_between(double a_s, double b_s) const {
    if (segments_.empty() || b_s <= a_s) return 0.0;
    double total = 0.0;
    for (std::size_t i = index_at(a_s); i < segments_.size(); ++i) {
        const double lo = std::max(a_s, segments_[i].start_s);
        const double hi = std::min(b_s, segment_end(i));
        if (lo >= b_s) break;
        if (hi > lo) total += segments_[i].bytes_per_s * (hi - lo);
    }
    return total;
}

double RateSchedule::peak_rate() const {
    double peak = 0.0;
    for (const auto& s : segments_) peak = std::max(peak, s.bytes_per_s);
    return peak;
}

// ---------------------------------------------------------------------------
// Traffic and topology
// ---------------------------------------------------------------------------

void TrafficModel::validate() const {
    for (const auto& f : flows) {
        if (!(f.interval_s > 0)) throw std::invalid_argument("traffic: intervals must be > 0");
        if (f.size_bytes == 0) throw std::invalid_argument("traffic: bundle size must be > 0");
        if (!(f.phase_s >= 0)) throw std::invalid_argument("traffic: phase must be >= 0");
    }
}

int Topology::node_index(const std::string& name) const {
    for (std::size_t i = 0; i < node_names.size(); ++i) {
        if (node_names[i] == name) return static_cast<int>(i);
    }
    throw std::invalid_argument("unknown node '" + name + "'");
}

void Topology::validate(int source, int destination) const {
    const int n = static_cast<int>(node_names.size());
    if (source < 0 || source >= n || destination < 0 || destination >= n || source == destination) {
        throw std::invalid_argument("topology: invalid source/destination");
    }
    if (!capacity_bytes.empty() && capacity_bytes.size() != node_names.size()) {
        throw std::invalid_argument("topology: capacity list must match node count");
    }
    std::vector<int> out(static_cast<std::size_t>(n), 0);
    for (const auto& l : links) {
        l.validate();
        if (l.from < 0 || l.from >= n || l.to < 0 || l.to >= n || l.from == l.to) {
            throw std::invalid_argument("topology: link " + l.name + " has invalid endpoints");
        }
        ++out[static_cast<std::size_t>(l.from)];
    }
    // Follow the chain; every hop must be unique and it must end at the destination.
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    int node = source;
    while (node != destination) {
        if (seen[static_cast<std::size_t>(node)]) throw std::invalid_argument("topology: cycle in chain");
        seen[static_cast<std::size_t>(node)] = true;
        if (out[static_cast<std::size_t>(node)] != 1) {
            throw std::invalid_argument("topology: node " + node_names[static_cast<std::size_t>(node)] +
                                        " needs exactly one outgoing link");
        }
        for (const auto& l : links) {
            if (l.from == node) {
                node = l.to;
                break;
            }
        }
    }
}

std::vector<double> flow_arrivals(const Flow& flow, double duration_s, GaussianRng& rng) {
    std::vector<double> times;
    if (!flow.poisson) {
        for (long k = 0;; ++k) {
            const double t = flow.phase_s + static_cast<double>(k) * flow.interval_s;
            if (t >= duration_s) break;
            times.push_back(t);
        }
        return times;
    }
    double t = flow.phase_s;
    while (true) {
        t += -std::log(rng.uniform()) * flow.interval_s;
        if (t >= duration_s) break;
        times.push_back(t);
    }
    return times;
}

double DtnMetrics::delivered_within(double latency_s) const {
    if (bundles.empty()) return 0.0;
    std::uint64_t hit = 0;
    for (const auto& b : bundles) {
        const auto lat = b.latency();
        if (lat && *lat <= latency_s) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(bundles.size());
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

namespace {

enum class SimEvent { generate = 0, tx_complete = 1, link_wake = 2 };

struct QueuedEvent {
    double t;
    int node;
    std::uint64_t bundle;
    SimEvent kind;
    std::uint64_t seq;
    int link;

    auto key() const { return std::tuple(t, node, bundle, static_cast<int>(kind), seq); }
    bool operator>(const QueuedEvent& o) const { return key() > o.key(); }
};

class Simulator {
public:
    Simulator(const Topology& topo, const TrafficModel& traffic, const DtnRunSpec& spec)
        : topo_(topo), traffic_(traffic), spec_(spec) {}

    DtnMetrics run() {
        const std::size_t n_nodes = topo_.node_names.size();
        metrics_.node_names = topo_.node_names;
        queues_.assign(n_nodes, std::array<std::deque<std::size_t>, kPriorityCount>{});
        backlog_.assign(n_nodes, 0);
        out_link_.assign(n_nodes, -1);
        for (std::size_t i = 0; i < topo_.links.size(); ++i) {
            out_link_[static_cast<std::size_t>(topo_.links[i].from)] = static_cast<int>(i);
            metrics_.link_names.push_back(topo_.links[i].name);
        }

        const double horizon = spec_.duration_s + spec_.drain_s;
        links_.resize(topo_.links.size());
        for (std::size_t i = 0; i < topo_.links.size(); ++i) {
            const LinkGeometry* g = nullptr;
            if (i < spec_.geometry.size() && spec_.geometry[i]) g = &*spec_.geometry[i];
            metrics_.schedules.emplace_back(topo_.links[i], horizon, spec_.rate_grid_s, g);
        }

        schedule_generation();
        for (std::size_t i = 0; i < n_nodes; ++i) log_backlog(0.0, static_cast<int>(i));

        while (!events_.empty()) {
            const QueuedEvent ev = events_.top();
            if (ev.t > horizon) break;
            events_.pop();
            now_ = ev.t;
            switch (ev.kind) {
                case SimEvent::generate: on_generate(ev.bundle); break;
                case SimEvent::tx_complete: on_tx_complete(ev.link); break;
                case SimEvent::link_wake:
                    links_[static_cast<std::size_t>(ev.link)].wake_pending = false;
                    try_start(ev.link);
                    break;
            }
            check_conservation();
        }

        metrics_.end_time_s = horizon;
        sample_throughput(horizon);
        return std::move(metrics_);
    }

private:
    struct LinkState {
        std::optional<std::size_t> in_flight;
        double tx_start = 0.0;
        bool wake_pending = false;
    };

    struct Transmission {
        int link;
        double start;
        double end;
    };

    void push(double t, int node, std::uint64_t bundle, SimEvent kind, int link) {
        events_.push({t, node, bundle, kind, seq_++, link});
    }

    void schedule_generation() {
        GaussianRng rng(spec_.seed);
        std::vector<std::tuple<double, std::size_t>> arrivals;
        for (std::size_t f = 0; f < traffic_.flows.size(); ++f) {
            for (double t : flow_arrivals(traffic_.flows[f], spec_.duration_s, rng)) arrivals.emplace_back(t, f);
        }
        std::sort(arrivals.begin(), arrivals.end());
        metrics_.bundles.reserve(arrivals.size());
        for (const auto& [t, f] : arrivals) {
            BundleRecord r;
            r.id = metrics_.bundles.size();
            r.priority = traffic_.flows[f].priority;
            r.size_bytes = traffic_.flows[f].size_bytes;
            r.created_s = t;
            metrics_.bundles.push_back(r);
            push(t, traffic_.source, r.id, SimEvent::generate, -1);
        }
    }

    void log_event(EventKind kind, int node, std::size_t b) {
        if (!spec_.record_events) return;
        const auto& r = metrics_.bundles[b];
        metrics_.events.push_back({now_, kind, node, r.id, r.priority, r.size_bytes});
    }

    void log_backlog(double t, int node) {
        metrics_.backlog.push_back({t, node, backlog_[static_cast<std::size_t>(node)]});
    }

    void on_generate(std::uint64_t id) {
        const auto b = static_cast<std::size_t>(id);
        ++metrics_.counts.generated;
        log_event(EventKind::generate, traffic_.source, b);
        enqueue(traffic_.source, b);
    }

    void enqueue(int node, std::size_t b) {
        auto& rec = metrics_.bundles[b];
        const auto un = static_cast<std::size_t>(node);
        const std::uint64_t cap = topo_.capacity_bytes.empty() ? 0 : topo_.capacity_bytes[un];
        if (cap > 0 && backlog_[un] + rec.size_bytes > cap) {
            rec.dropped = true;
            rec.drop_reason = "buffer-overflow@" + topo_.node_names[un];
            ++metrics_.counts.dropped;
            log_event(EventKind::drop, node, b);
            return;
        }
        queues_[un][static_cast<std::size_t>(rec.priority)].push_back(b);
        backlog_[un] += rec.size_bytes;
        ++metrics_.counts.buffered;
        log_event(EventKind::enqueue, node, b);
        log_backlog(now_, node);
        const int link = out_link_[un];
        if (link >= 0) try_start(link);
    }

    void try_start(int link) {
        auto& ls = links_[static_cast<std::size_t>(link)];
        if (ls.in_flight) return;
        const int node = topo_.links[static_cast<std::size_t>(link)].from;
        auto& q = queues_[static_cast<std::size_t>(node)];
        auto it = std::find_if(q.begin(), q.end(), [](const auto& d) { return !d.empty(); });
        if (it == q.end()) return;

        const RateSchedule& sched = metrics_.schedules[static_cast<std::size_t>(link)];
        if (sched.rate_at(now_) <= 0) {
            if (!ls.wake_pending) {
                const double up = sched.next_up(now_);
                if (std::isfinite(up)) {
                    push(up, node, std::numeric_limits<std::uint64_t>::max(), SimEvent::link_wake, link);
                    ls.wake_pending = true;
                }
            }
            return;
        }

        const std::size_t b = it->front();
        it->pop_front();
        --metrics_.counts.buffered;
        ++metrics_.counts.in_flight;
        ls.in_flight = b;
        ls.tx_start = now_;
        log_event(EventKind::tx_start, node, b);
        const double done = sched.completion(now_, static_cast<double>(metrics_.bundles[b].size_bytes));
        if (std::isfinite(done)) push(done, node, metrics_.bundles[b].id, SimEvent::tx_complete, link);
        else transmissions_.push_back({link, now_, metrics_.end_time_s});
    }

    void on_tx_complete(int link) {
        auto& ls = links_[static_cast<std::size_t>(link)];
        const std::size_t b = *ls.in_flight;
        const LinkModel& lm = topo_.links[static_cast<std::size_t>(link)];
        auto& rec = metrics_.bundles[b];

        transmissions_.push_back({link, ls.tx_start, now_});
        ls.in_flight.reset();
        --metrics_.counts.in_flight;
        backlog_[static_cast<std::size_t>(lm.from)] -= rec.size_bytes;
        log_event(EventKind::tx_end, lm.from, b);
        log_backlog(now_, lm.from);

        ++rec.hops;
        rec.hop_arrivals_s.push_back(now_);
        if (lm.to == traffic_.destination) {
            rec.delivered_s = now_;
            ++metrics_.counts.delivered;
            log_event(EventKind::deliver, lm.to, b);
        } else {
            enqueue(lm.to, b);
        }
        try_start(link);
    }

    void check_conservation() {
        const auto& c = metrics_.counts;
        if (c.generated != c.delivered + c.buffered + c.in_flight + c.dropped) ++metrics_.conservation_violations;
    }

    void sample_throughput(double horizon) {
        // Transmissions still in flight at the horizon.
        for (std::size_t i = 0; i < links_.size(); ++i) {
            if (links_[i].in_flight) transmissions_.push_back({static_cast<int>(i), links_[i].tx_start, horizon});
        }
        const double dt = spec_.throughput_sample_s;
        const auto windows = static_cast<std::size_t>(std::ceil(horizon / dt));
        std::vector<std::vector<double>> bytes(links_.size(), std::vector<double>(windows, 0.0));
        for (const auto& tx : transmissions_) {
            const RateSchedule& sched = metrics_.schedules[static_cast<std::size_t>(tx.link)];
            const double end = std::min(tx.end, horizon);
            for (auto w = static_cast<std::size_t>(tx.start / dt); w < windows; ++w) {
                const double lo = static_cast<double>(w) * dt;
                if (lo >= end) break;
                bytes[static_cast<std::size_t>(tx.link)][w] +=
                    sched.bytes_between(std::max(lo, tx.start), std::min(lo + dt, end));
            }
        }
        for (std::size_t w = 0; w < windows; ++w) {
            const double t = static_cast<double>(w) * dt;
            for (std::size_t l = 0; l < links_.size(); ++l) {
                metrics_.throughput.push_back(
                    {t, static_cast<int>(l), bytes[l][w] / dt, metrics_.schedules[l].snr_at(t)});
            }
        }
    }

    const Topology& topo_;
    const TrafficModel& traffic_;
    const DtnRunSpec& spec_;
    DtnMetrics metrics_;
    std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, std::greater<>> events_;
    std::vector<std::array<std::deque<std::size_t>, kPriorityCount>> queues_;
    std::vector<std::uint64_t> backlog_;
    std::vector<int> out_link_;
    std::vector<LinkState> links_;
    std::vector<Transmission> transmissions_;
    double now_ = 0.0;
    std::uint64_t seq_ = 0;
};

}  // namespace

DtnMetrics run_dtn(const Topology& topology, const TrafficModel& traffic, const DtnRunSpec& spec) {
    if (!(spec.duration_s > 0)) throw std::invalid_argument("run_dtn: duration must be > 0");
    if (!(spec.drain_s >= 0) || !(spec.rate_grid_s > 0) || !(spec.throughput_sample_s > 0)) {
        throw std::invalid_argument("run_dtn: drain, grid and sample interval must be positive");
    }
    topology.validate(traffic.source, traffic.destination);
    traffic.validate();
    return Simulator(topology, traffic, spec).run();
}

std::vector<std::pair<double, double>> latency_cdf(const std::vector<BundleRecord>& records) {
    std::vector<std::pair<double, double>> cdf;
    if (records.empty()) return cdf;
    std::map<double, std::uint64_t> counts;
    for (const auto& r : records) {
        if (const auto lat = r.latency()) ++counts[*lat];
    }
    const auto total = static_cast<double>(records.size());
    std::uint64_t running = 0;
    for (const auto& [lat, c] : counts) {
        running += c;
        cdf.emplace_back(lat, static_cast<double>(running) / total);
    }
    return cdf;
}

std::vector<double> delivered_latencies(const std::vector<BundleRecord>& records) {
    std::vector<double> out;
    for (const auto& r : records) {
        if (const auto lat = r.latency()) out.push_back(*lat);
    }
    return out;
}

std::vector<HistogramBin> histogram(const std::vector<double>& values, double bin_width, double max_value) {
    if (!(bin_width > 0) || !(max_value > 0)) throw std::invalid_argument("histogram: bad bin width or range");
    const auto bins = static_cast<std::size_t>(std::ceil(max_value / bin_width));
    std::vector<HistogramBin> out(bins);
    for (std::size_t i = 0; i < bins; ++i) {
        out[i] = {static_cast<double>(i) * bin_width, static_cast<double>(i + 1) * bin_width, 0};
    }
    for (double v : values) {
        if (v < 0 || v >= max_value) continue;
        ++out[std::min(bins - 1, static_cast<std::size_t>(v / bin_width))].count;
    }
    return out;
}

std::vector<std::pair<double, std::uint64_t>> backlog_series(const DtnMetrics& run, int node) {
    if (node < 0 || node >= static_cast<int>(run.node_names.size())) {
        throw std::invalid_argument("backlog_series: unknown node " + std::to_string(node));
    }
    std::vector<std::pair<double, std::uint64_t>> out;
    for (const auto& p : run.backlog) {
        if (p.node == node) out.emplace_back(p.t_s, p.bytes);
    }
    return out;
}

std::uint64_t peak_backlog(const DtnMetrics& run, int node) {
    std::uint64_t peak = 0;
    for (const auto& [t, b] : backlog_series(run, node)) peak = std::max(peak, b);
    return peak;
}

}  // namespace deorbit::dtn
