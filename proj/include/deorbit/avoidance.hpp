#pragma once

// Local collision-avoidance layer: screen a scripted intruder once it enters
// the detection range gate, interrupt the deorbit with a cross-track thrust
// offset long enough to clear it, then resume retrograde thrust.

#include "deorbit/orbital.hpp"

#include <optional>
#include <string>
#include <vector>

namespace deorbit::avoid {

using orbit::DeorbitConfig;
using orbit::DeorbitResult;
using orbit::EciState;
using orbit::TrajectorySample;

struct Conjunction {
    double tca_s = 0.0;
    double miss_km = 0.0;
    std::string intruder_id;
};

struct AvoidancePolicy {
    // Screening window after a detection.
    double horizon_s = 10800.0;
    double trigger_km = 1.0;
    double clearance_km = 5.0;
    // Thrust-vector offset toward the orbit normal during the evasion.
    double offset_deg = 90.0;
    // Thrust level during the evasion as a fraction of the nominal thrust.
    double thrust_fraction = 1.0;
    // Intruders are invisible to the planner until they come this close.
    double detection_range_km = 50.0;

    void validate() const;
};

/// Object on a circular orbit through `position_km` at `t_ref_s`, moving
/// along `velocity_dir` (its radial part is removed).
struct Intruder {
    std::string id = "intruder-1";
    double t_ref_s = 0.0;
    Vec3 position_km = Vec3::Zero();
    Vec3 velocity_dir = Vec3::UnitY();

    Vec3 position_at(double t_s, const orbit::BodyConstants& constants) const;
    Vec3 velocity_at(double t_s, const orbit::BodyConstants& constants) const;
};

/// Co-orbital intruder that sits `miss_km` radially above the given sample,
/// moving parallel to it.
Intruder coorbital_intruder(const TrajectorySample& own, double miss_km, const std::string& id);

/// Intruder samples on the same time grid as `own`.
std::vector<TrajectorySample> sample_intruder(const Intruder& intruder,
                                              const std::vector<TrajectorySample>& own,
                                              const orbit::BodyConstants& constants);

/// Closest approach between two trajectories on a common grid, restricted to
/// [t_first, t_first + horizon]; the minimum of the squared distance is
/// refined by a parabola through the discrete minimum and its neighbours.
Conjunction closest_approach(const std::vector<TrajectorySample>& own,
                             const std::vector<TrajectorySample>& intruder, double horizon_s,
                             const std::string& intruder_id = "intruder");

/// The closest approach when it falls below the trigger distance.
std::optional<Conjunction> detect_conjunction(const std::vector<TrajectorySample>& own,
                                              const std::vector<TrajectorySample>& intruder,
                                              const AvoidancePolicy& policy,
                                              const std::string& intruder_id = "intruder");

/// Own trajectory from `state` over `duration_s`, one sample per step.
/// The first `offset_steps` steps fly the evasion attitude and thrust level.
std::vector<TrajectorySample> predict_trajectory(const EciState& state, const DeorbitConfig& cfg,
                                                 double duration_s, long offset_steps = 0,
                                                 const AvoidancePolicy& policy = {});

struct EvasionPlan {
    bool needed = false;
    double start_s = 0.0;
    double duration_s = 0.0;
    double offset_deg = 0.0;
    // Miss distance from re-propagating the planned trajectory.
    double predicted_miss_km = 0.0;
};

/// Shortest cross-track offset burn (a whole number of integration steps,
/// found by bisection) after which the re-propagated miss distance reaches
/// the clearance. Throws when even burning until TCA falls short.
EvasionPlan plan_evasion(const EciState& state, const Conjunction& conj, const Intruder& intruder,
                         const AvoidancePolicy& policy, const DeorbitConfig& cfg);

/// Retrograde continuation after a manoeuvre.
DeorbitResult resume_deorbit(const EciState& state, const DeorbitConfig& cfg);

struct AvoidanceEvent {
    double t_s = 0.0;
    std::string event;
    std::string intruder;
    double miss_km = 0.0;
    std::string action;
};

struct AvoidanceResult {
    DeorbitResult run;
    std::vector<AvoidanceEvent> events;
    std::optional<Conjunction> conjunction;
    std::optional<EvasionPlan> plan;
    // Closest approach re-measured on the flown trajectory, per intruder.
    std::vector<Conjunction> flown;
    // Every integration step of the flown trajectory.
    std::vector<TrajectorySample> flown_track;
    // Set when a required evasion could not be planned.
    std::optional<std::string> error;
};

/// Deorbit with the avoidance layer in the loop.
AvoidanceResult run_with_avoidance(const DeorbitConfig& cfg, const std::vector<Intruder>& intruders,
                                   const AvoidancePolicy& policy);

}  // namespace deorbit::avoid
