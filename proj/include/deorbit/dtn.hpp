#pragma once

// Discrete-event store-and-forward simulation of the Primary -> Relay ->
// Ground bundle chain.
//
// Rates are bytes per second. A link serves one bundle at a time in strict
// priority order (FIFO within a class). A sender keeps custody of a bundle
// until its last byte reaches the next hop, so a node's backlog counts its
// queued bundles plus the one it is transmitting.

#include "deorbit/common.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace deorbit::dtn {

enum class Priority { safety_critical = 0, metadata = 1, bulk = 2 };
inline constexpr int kPriorityCount = 3;

std::string to_string(Priority p);
Priority priority_from_string(const std::string& name);

struct Bundle {
    std::uint64_t id = 0;
    std::uint64_t size_bytes = 0;
    Priority priority = Priority::bulk;
    int source = 0;
    int destination = 0;
    double created_s = 0.0;
    std::optional<double> delivered_s;
};

struct RateStep {
    double min_snr_db = 0.0;
    double bytes_per_s = 0.0;
};

struct OutageWindow {
    double start_s = 0.0;
    double duration_s = 0.0;
};

struct ParametricSnr {
    double mean_db = 20.0;
    double amplitude_db = 0.0;
    double period_s = 6000.0;
    double phase_s = 0.0;
    std::vector<OutageWindow> outages;
    // SNR reported inside an outage window.
    double outage_snr_db = -10.0;
};

struct LinkBudget {
    double tx_power_dbw = 10.0;
    double tx_gain_db = 20.0;
    double rx_gain_db = 20.0;
    // Free-space loss is 20 log10(d_km) + this constant (32.45 + 20 log10(f_MHz)).
    double fspl_constant_db = 99.68;  // 2.3 GHz
    double noise_dbw = -140.0;
    double outage_snr_db = -10.0;
};

using PositionFn = std::function<Vec3(double)>;

/// Endpoint trajectories for geometry-driven links, km in ECI.
struct LinkGeometry {
    PositionFn from;
    PositionFn to;
    double earth_radius_km = 6378.137;
    // When set, `to` is a ground site and needs the sender above this
    // elevation; otherwise the Earth must not block the line of sight.
    bool to_is_ground = false;
    double min_elevation_deg = 5.0;
};

enum class SnrMode { parametric, geometry };

struct LinkModel {
    std::string name;
    int from = 0;
    int to = 1;
    SnrMode mode = SnrMode::parametric;
    ParametricSnr parametric;
    LinkBudget budget;
    std::vector<RateStep> rate_table;

    void validate() const;
};

double snr_at(const LinkModel& link, double t_s, const LinkGeometry* geometry = nullptr);

double rate_from_snr(double snr_db, const LinkModel& link);

/// Piecewise-constant rate of a link over [0, horizon).
class RateSchedule {
public:
    struct Segment {
        double start_s;
        double bytes_per_s;
        double snr_db;
    };

    RateSchedule() = default;
    RateSchedule(const LinkModel& link, double horizon_s, double grid_s, const LinkGeometry* geometry);

    double rate_at(double t_s) const;
    double snr_at(double t_s) const;
    /// Earliest time >= t with a non-zero rate, or +inf.
    double next_up(double t_s) const;
    /// Time at which `bytes` finish when transmission starts at t (+inf if never).
    double completion(double t_s, double bytes) const;
    /// Bytes a busy link moves during [a, b).
    double bytes_between(double a_s, double b_s) const;
    double peak_rate() const;
    double horizon() const { return horizon_; }
    const std::vector<Segment>& segments() const { return segments_; }

private:
    std::size_t index_at(double t_s) const;
    double segment_end(std::size_t i) const;

    std::vector<Segment> segments_;
    double horizon_ = 0.0;
};

struct Flow {
    Priority priority = Priority::bulk;
    double interval_s = 1.0;
    std::uint64_t size_bytes = 1;
    double phase_s = 0.0;
    // Exponential inter-arrivals with the same mean instead of a fixed period.
    bool poisson = false;
};

struct TrafficModel {
    std::vector<Flow> flows;
    int source = 0;
    int destination = 2;

    void validate() const;
};

struct Topology {
    std::vector<std::string> node_names;
    std::vector<LinkModel> links;
    // Per-node buffer capacity in bytes; zero means unlimited.
    std::vector<std::uint64_t> capacity_bytes;

    int node_index(const std::string& name) const;
    void validate(int source, int destination) const;
};

struct DtnRunSpec {
    double duration_s = 21600.0;
    // Extra time after the last generation for queues to drain.
    double drain_s = 600.0;
    double rate_grid_s = 1.0;
    double throughput_sample_s = 10.0;
    std::uint64_t seed = 42;
    bool record_events = true;
    // Indexed like Topology::links; required for geometry-mode links.
    std::vector<std::optional<LinkGeometry>> geometry;
};

struct BundleRecord {
    std::uint64_t id = 0;
    Priority priority = Priority::bulk;
    std::uint64_t size_bytes = 0;
    double created_s = 0.0;
    std::optional<double> delivered_s;
    int hops = 0;
    bool dropped = false;
    std::string drop_reason;
    // Time the bundle was fully received at each node after the source.
    std::vector<double> hop_arrivals_s;

    std::optional<double> latency() const {
        if (!delivered_s) return std::nullopt;
        return *delivered_s - created_s;
    }
};

struct BacklogPoint {
    double t_s;
    int node;
    std::uint64_t bytes;
};

struct ThroughputPoint {
    double t_s;
    int link;
    double bytes_per_s;
    double snr_db;
};

enum class EventKind { generate, enqueue, tx_start, tx_end, deliver, drop };

std::string to_string(EventKind k);

struct EventRecord {
    double t_s;
    EventKind kind;
    int node;
    std::uint64_t bundle;
    Priority priority;
    std::uint64_t size_bytes;
};

struct BundleCounts {
    std::uint64_t generated = 0;
    std::uint64_t delivered = 0;
    std::uint64_t buffered = 0;
    std::uint64_t in_flight = 0;
    std::uint64_t dropped = 0;
};

struct DtnMetrics {
    std::vector<std::string> node_names;
    std::vector<std::string> link_names;
    std::vector<BundleRecord> bundles;
    std::vector<BacklogPoint> backlog;
    std::vector<ThroughputPoint> throughput;
    std::vector<EventRecord> events;
    std::vector<RateSchedule> schedules;
    BundleCounts counts;
    // Events at which generated != delivered + buffered + in-flight + dropped.
    std::uint64_t conservation_violations = 0;
    double end_time_s = 0.0;

    /// Fraction of generated bundles delivered within the given latency.
    double delivered_within(double latency_s) const;
};

/// Arrival times of one flow over [0, duration), deterministic per seed.
std::vector<double> flow_arrivals(const Flow& flow, double duration_s, GaussianRng& rng);

DtnMetrics run_dtn(const Topology& topology, const TrafficModel& traffic, const DtnRunSpec& spec);

/// Step points (latency, cumulative fraction of all records).
std::vector<std::pair<double, double>> latency_cdf(const std::vector<BundleRecord>& records);

struct HistogramBin {
    double lower;
    double upper;
    std::uint64_t count;
};

std::vector<HistogramBin> histogram(const std::vector<double>& values, double bin_width, double max_value);

std::vector<double> delivered_latencies(const std::vector<BundleRecord>& records);

/// Piecewise-constant backlog of one node: (time, bytes) at every change.
std::vector<std::pair<double, std::uint64_t>> backlog_series(const DtnMetrics& run, int node);

std::uint64_t peak_backlog(const DtnMetrics& run, int node);

}  // namespace deorbit::dtn
