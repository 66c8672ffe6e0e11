#pragma once

// Earth-centred two-body propagation with continuous low thrust, mass
// depletion and cylindrical eclipse geometry.
//
// Units: km, km/s, kg, s throughout; thrust in N and g0 in m/s^2 are
// converted where they enter the dynamics.

#include "deorbit/common.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace deorbit::orbit {

struct DragConfig {
    bool enabled = false;
    double area_m2 = 10.0;
    double drag_coefficient = 2.2;
    // Exponential atmosphere anchored at a reference altitude.
    double reference_density_kgm3 = 3.614e-14;
    double reference_altitude_km = 700.0;
    double scale_height_km = 88.667;
};

struct BodyConstants {
    double mu_km3s2 = 398600.4418;
    double earth_radius_km = 6378.137;
    double g0_ms2 = 9.80665;
    Vec3 sun_direction = Vec3::UnitX();
    DragConfig drag;

    void validate() const;
};

struct EciState {
    double epoch_s = 0.0;
    Vec3 position_km = Vec3::Zero();
    Vec3 velocity_kms = Vec3::Zero();
    double mass_kg = 0.0;
};

enum class ThrustMode { retrograde, prograde, inertial_fixed, off };

std::string to_string(ThrustMode mode);
ThrustMode thrust_mode_from_string(const std::string& name);

struct ThrustConfig {
    double thrust_n = 0.237;
    double isp_s = 4150.0;
    ThrustMode mode = ThrustMode::retrograde;
    // Rotation of the velocity-relative thrust vector toward the orbit
    // normal. Zero for nominal retrograde/prograde firing.
    double cross_track_offset_deg = 0.0;
    Vec3 inertial_direction = Vec3::UnitX();
    // Mass at which propellant is exhausted.
    double min_mass_kg = 0.0;

    void validate() const;
};

// ---------------------------------------------------------------------------
// Scalar-templated primitives
// ---------------------------------------------------------------------------

/// Point-mass gravitational acceleration, km/s^2.
template <typename Derived>
Vector3<typename Derived::Scalar> two_body_accel(const Eigen::MatrixBase<Derived>& position,
                                                 typename Derived::Scalar mu) {
    using Scalar = typename Derived::Scalar;
    const Scalar r = position.norm();
    if (!(r > Scalar(0))) {
        throw std::domain_error("two_body_accel: zero-norm position");
    }
    return (-mu / (r * r * r)) * position;
}

/// Specific orbital energy |v|^2/2 - mu/|r|, km^2/s^2.
template <typename DerivedR, typename DerivedV>
typename DerivedR::Scalar specific_energy(const Eigen::MatrixBase<DerivedR>& position,
                                          const Eigen::MatrixBase<DerivedV>& velocity,
                                          typename DerivedR::Scalar mu) {
    return velocity.squaredNorm() / 2 - mu / position.norm();
}

template <typename Scalar>
Scalar circular_speed(Scalar radius_km, Scalar mu) {
    return std::sqrt(mu / radius_km);
}

template <typename Scalar>
Scalar orbital_period(Scalar radius_km, Scalar mu) {
    return 2 * Scalar(kPi) * std::sqrt(radius_km * radius_km * radius_km / mu);
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

Vec3 two_body_accel(const Vec3& position_km, const BodyConstants& constants);

/// Unit thrust direction for the configured mode, or zero when off.
Vec3 thrust_direction(const EciState& state, const ThrustConfig& cfg);

/// Thrust acceleration, km/s^2.
Vec3 thrust_accel(const EciState& state, const ThrustConfig& cfg, bool enabled);

/// Propellant mass flow T/(Isp g0), kg/s.
double mass_flow_rate(const ThrustConfig& cfg, const BodyConstants& constants);

bool in_eclipse(const Vec3& position_km, const BodyConstants& constants);
inline bool in_eclipse(const EciState& state, const BodyConstants& constants) {
    return in_eclipse(state.position_km, constants);
}

/// Exponential-atmosphere drag acceleration, km/s^2 (zero when disabled).
Vec3 drag_accel(const EciState& state, const BodyConstants& constants);

struct StepResult {
    EciState state;
    // Thrust-on time actually accumulated inside the step.
    double burn_time_s = 0.0;
    bool propellant_exhausted = false;
};

/// One fixed RK4 step of the (r, v, m) system.
StepResult propagate_step(const EciState& state, const ThrustConfig& cfg,
                          const BodyConstants& constants, double dt_s, bool thrust_enabled = true);

/// Circular orbit at the given altitude. The orbit plane is rotated about
/// the x axis by the inclination; the vehicle starts on +x.
EciState circular_orbit_state(double altitude_km, double inclination_deg, double mass_kg,
                              const BodyConstants& constants, double phase_deg = 0.0);

// ---------------------------------------------------------------------------
// Deorbit run
// ---------------------------------------------------------------------------

struct DeorbitConfig {
    BodyConstants constants;
    ThrustConfig thrust;
    double initial_altitude_km = 800.0;
    double final_altitude_km = 100.0;
    double dry_mass_kg = 300.0;
    double propellant_kg = 20.0;
    double payload_kg = 100.0;
    double inclination_deg = 0.0;
    double dt_s = 10.0;
    double sample_interval_s = 60.0;
    double max_duration_days = 30.0;
    // Time origin of the altitude plot (TAI MJD).
    double epoch_mjd = 21546.2;

    double initial_mass_kg() const { return dry_mass_kg + propellant_kg + payload_kg; }
    void validate() const;
};

/// Per-step command from an outer loop (power gating, avoidance).
struct StepCommand {
    bool thrust_enabled = true;
    std::optional<double> cross_track_offset_deg;
    std::optional<double> thrust_n;
};

using StepController = std::function<StepCommand(const EciState&)>;

struct TrajectorySample {
    double t_s = 0.0;
    Vec3 position_km = Vec3::Zero();
    Vec3 velocity_kms = Vec3::Zero();
    double mass_kg = 0.0;
    double altitude_km = 0.0;
    bool eclipse = false;
};

TrajectorySample make_sample(const EciState& state, const BodyConstants& constants);

enum class Termination { reached_target, propellant_exhausted, max_duration, impact };

std::string to_string(Termination t);

struct DeorbitResult {
    std::vector<TrajectorySample> samples;
    double duration_s = 0.0;
    double propellant_used_kg = 0.0;
    double thrust_on_time_s = 0.0;
    int orbit_count = 0;
    bool completed = false;
    Termination termination = Termination::max_duration;
    EciState final_state;
};

DeorbitResult run_deorbit(double initial_altitude_km, double final_altitude_km,
                          const DeorbitConfig& cfg, const StepController& controller = {});

/// Continue a deorbit from an arbitrary state (used after an interrupt).
DeorbitResult continue_deorbit(const EciState& start, double final_altitude_km,
                               const DeorbitConfig& cfg, const StepController& controller = {});

/// Edelbaum coplanar circular-to-circular estimate |v1 - v2| m / T, seconds.
double edelbaum_estimate(double altitude1_km, double altitude2_km, double thrust_n, double mass_kg,
                         const BodyConstants& constants);

struct OrbitMean {
    double t_mid_s = 0.0;
    double mean_altitude_km = 0.0;
};

/// Mean altitude of each complete revolution, split where the in-plane
/// angle of the position (relative to the first sample) wraps.
std::vector<OrbitMean> per_orbit_mean_altitude(const std::vector<TrajectorySample>& samples);

/// Completed revolutions in the sample set.
int count_orbits(const std::vector<TrajectorySample>& samples);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// R^2 of a line through the per-orbit means in the middle fraction of the
/// run (0.8 keeps orbits from 10% to 90%).
LinearFit decay_fit(const std::vector<OrbitMean>& means, double middle_fraction = 0.8);

/// Cubic Hermite interpolation of a sampled trajectory, km.
Vec3 interpolate_position(const std::vector<TrajectorySample>& samples, double t_s);

}  // namespace deorbit::orbit
