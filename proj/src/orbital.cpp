#include "deorbit/orbital.hpp"

#include <algorithm>
#include <cmath>

namespace deorbit::orbit {

namespace {

using StateVector = Eigen::Matrix<double, 7, 1>;

StateVector pack(const EciState& s) {
    StateVector y;
    y << s.position_km, s.velocity_kms, s.mass_kg;
    return y;
}

double altitude_of(const Vec3& position_km, const BodyConstants& constants) {
    return position_km.norm() - constants.earth_radius_km;
}

}  // namespace

void BodyConstants::validate() const {
    if (!(mu_km3s2 > 0) || !(earth_radius_km > 0) || !(g0_ms2 > 0)) {
        throw std::invalid_argument("body constants must be strictly positive");
    }
    if (std::abs(sun_direction.norm() - 1.0) > 1e-9) {
        throw std::invalid_argument("sun direction must be a unit vector");
    }
    if (drag.enabled && (!(drag.area_m2 > 0) || !(drag.drag_coefficient > 0) ||
                         !(drag.reference_density_kgm3 > 0) || !(drag.scale_height_km > 0))) {
        throw std::invalid_argument("drag parameters must be strictly positive");
    }
}

std::string to_string(ThrustMode mode) {
    switch (mode) {
        case ThrustMode::retrograde: return "retrograde";
        case ThrustMode::prograde: return "prograde";
        case ThrustMode::inertial_fixed: return "inertial-fixed";
        case ThrustMode::off: return "off";
    }
    return "off";
}

ThrustMode thrust_mode_from_string(const std::string& name) {
    if (name == "retrograde") return ThrustMode::retrograde;
    if (name == "prograde") return ThrustMode::prograde;
    if (name == "inertial-fixed") return ThrustMode::inertial_fixed;
    if (name == "off") return ThrustMode::off;
    throw std::invalid_argument("unknown thrust mode '" + name + "'");
}

void ThrustConfig::validate() const {
    if (!(thrust_n >= 0)) throw std::invalid_argument("thrust must be >= 0");
    if (!(isp_s > 0)) throw std::invalid_argument("specific impulse must be > 0");
    if (mode == ThrustMode::inertial_fixed && !(inertial_direction.norm() > 0)) {
        throw std::invalid_argument("inertial thrust direction must be non-zero");
    }
}

Vec3 two_body_accel(const Vec3& position_km, const BodyConstants& constants) {
    return two_body_accel(position_km, constants.mu_km3s2);
}

Vec3 thrust_direction(const EciState& state, const ThrustConfig& cfg) {
    switch (cfg.mode) {
        case ThrustMode::off: return Vec3::Zero();
        case ThrustMode::inertial_fixed: return cfg.inertial_direction.normalized();
        case ThrustMode::retrograde:
        case ThrustMode::prograde: break;
    }
    const double speed = state.velocity_kms.norm();
    if (!(speed > 0)) {
        throw std::domain_error("velocity-relative thrust with zero velocity");
    }
    const double sign = cfg.mode == ThrustMode::prograde ? 1.0 : -1.0;
    const Vec3 along = sign * state.velocity_kms / speed;
    if (cfg.cross_track_offset_deg == 0.0) return along;

    const Vec3 h = state.position_km.cross(state.velocity_kms);
    const double phi = deg2rad(cfg.cross_track_offset_deg);
    return std::cos(phi) * along + std::sin(phi) * h.normalized();
}

Vec3 thrust_accel(const EciState& state, const ThrustConfig& cfg, bool enabled) {
    if (!enabled || cfg.mode == ThrustMode::off || cfg.thrust_n == 0.0) return Vec3::Zero();
    if (!(state.mass_kg > 0)) throw std::domain_error("thrust_accel: mass must be positive");
    // N/kg = m/s^2 -> km/s^2
    return thrust_direction(state, cfg) * (cfg.thrust_n / state.mass_kg / 1000.0);
}

double mass_flow_rate(const ThrustConfig& cfg, const BodyConstants& constants) {
    if (!(cfg.isp_s > 0)) throw std::invalid_argument("mass_flow_rate: Isp must be > 0");
    return cfg.thrust_n / (cfg.isp_s * constants.g0_ms2);
}

bool in_eclipse(const Vec3& position_km, const BodyConstants& constants) {
    const Vec3& s = constants.sun_direction;
    const double along = position_km.dot(s);
    if (along >= 0) return false;
    return (position_km - along * s).norm() < constants.earth_radius_km;
}

Vec3 drag_accel(const EciState& state, const BodyConstants& constants) {
    const DragConfig& d = constants.drag;
    if (!d.enabled) return Vec3::Zero();
    const double h = altitude_of(state.position_km, constants);
    const double rho = d.reference_density_kgm3 *
                       std::exp(-(h - d.reference_altitude_km) / d.scale_height_km);
    // Co-rotating atmosphere.
    const Vec3 omega_earth(0.0, 0.0, 7.292115e-5);
    const Vec3 v_rel_ms = (state.velocity_kms - omega_earth.cross(state.position_km)) * 1000.0;
    const double b = d.drag_coefficient * d.area_m2 / state.mass_kg;
    return (-0.5 * rho * b * v_rel_ms.norm()) * v_rel_ms / 1000.0;
}

namespace {

StateVector derivative(const StateVector& y, double epoch, const ThrustConfig& cfg,
                       const BodyConstants& constants, bool thrusting, double mdot) {
    EciState s;
    s.epoch_s = epoch;
    s.position_km = y.head<3>();
    s.velocity_kms = y.segment<3>(3);
    s.mass_kg = y(6);

    StateVector dy;
    dy.head<3>() = s.velocity_kms;
    dy.segment<3>(3) = two_body_accel(s.position_km, constants.mu_km3s2) +
                       thrust_accel(s, cfg, thrusting) + drag_accel(s, constants);
    dy(6) = thrusting ? -mdot : 0.0;
    return dy;
}

EciState rk4(const EciState& state, const ThrustConfig& cfg, const BodyConstants& constants,
             double dt, bool thrusting, double mdot) {
    const StateVector y0 = pack(state);
    const double t0 = state.epoch_s;
    const StateVector k1 = derivative(y0, t0, cfg, constants, thrusting, mdot);
    const StateVector k2 = derivative(y0 + 0.5 * dt * k1, t0 + 0.5 * dt, cfg, constants, thrusting, mdot);
    const StateVector k3 = derivative(y0 + 0.5 * dt * k2, t0 + 0.5 * dt, cfg, constants, thrusting, mdot);
    const StateVector k4 = derivative(y0 + dt * k3, t0 + dt, cfg, constants, thrusting, mdot);
    const StateVector y1 = y0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    EciState out;
    out.epoch_s = t0 + dt;
    out.position_km = y1.head<3>();
    out.velocity_kms = y1.segment<3>(3);
    // Linear in time, so set exactly rather than through the RK sum.
    out.mass_kg = thrusting ? state.mass_kg - mdot * dt : state.mass_kg;
    return out;
}

}  // namespace

StepResult propagate_step(const EciState& state, const ThrustConfig& cfg,
                          const BodyConstants& constants, double dt_s, bool thrust_enabled) {
    if (!(dt_s > 0)) throw std::invalid_argument("propagate_step: dt must be > 0");
    if (!(state.mass_kg > 0)) throw std::invalid_argument("propagate_step: mass must be > 0");

    const bool thrusting = thrust_enabled && cfg.mode != ThrustMode::off && cfg.thrust_n > 0;
    if (!thrusting) {
        return {rk4(state, cfg, constants, dt_s, false, 0.0), 0.0, false};
    }

    const double mdot = mass_flow_rate(cfg, constants);
    const double available = state.mass_kg - cfg.min_mass_kg;
    if (available <= 0) {
        return {rk4(state, cfg, constants, dt_s, false, 0.0), 0.0, true};
    }
    if (mdot * dt_s <= available) {
        return {rk4(state, cfg, constants, dt_s, true, mdot), dt_s, false};
    }

    // Floor reached inside the step: burn to the floor, coast the remainder.
    const double burn = available / mdot;
    EciState mid = rk4(state, cfg, constants, burn, true, mdot);
    mid.mass_kg = cfg.min_mass_kg;
    EciState end = rk4(mid, cfg, constants, dt_s - burn, false, 0.0);
    end.epoch_s = state.epoch_s + dt_s;
    return {end, burn, true};
}

EciState circular_orbit_state(double altitude_km, double inclination_deg, double mass_kg,
                              const BodyConstants& constants, double phase_deg) {
    const double r = constants.earth_radius_km + altitude_km;
    const double v = circular_speed(r, constants.mu_km3s2);
    const double inc = deg2rad(inclination_deg);
    const double u = deg2rad(phase_deg);
    const Vec3 e1 = Vec3::UnitX();
    const Vec3 e2(0.0, std::cos(inc), std::sin(inc));

    EciState s;
    s.position_km = r * (std::cos(u) * e1 + std::sin(u) * e2);
    s.velocity_kms = v * (-std::sin(u) * e1 + std::cos(u) * e2);
    s.mass_kg = mass_kg;
    return s;
}

void DeorbitConfig::validate() const {
    constants.validate();
    thrust.validate();
    if (!(initial_altitude_km > final_altitude_km) || !(final_altitude_km > 0)) {
        throw std::invalid_argument("deorbit requires initial altitude > final altitude > 0");
    }
    if (!(dry_mass_kg > 0) || !(propellant_kg > 0) || !(payload_kg >= 0)) {
        throw std::invalid_argument("masses must be positive (payload may be zero)");
    }
    if (!(dt_s > 0) || !(sample_interval_s >= dt_s) || !(max_duration_days > 0)) {
        throw std::invalid_argument("dt, sample interval and max duration must be positive");
    }
    const double ratio = sample_interval_s / dt_s;
    if (std::abs(ratio - std::round(ratio)) > 1e-9) {
        throw std::invalid_argument("sample interval must be a multiple of dt");
    }
}

std::string to_string(Termination t) {
    switch (t) {
        case Termination::reached_target: return "reached-target";
        case Termination::propellant_exhausted: return "propellant-exhausted";
        case Termination::max_duration: return "max-duration";
        case Termination::impact: return "impact";
    }
    return "unknown";
}

TrajectorySample make_sample(const EciState& s, const BodyConstants& constants) {
    return {s.epoch_s, s.position_km, s.velocity_kms, s.mass_kg,
            altitude_of(s.position_km, constants), in_eclipse(s.position_km, constants)};
}

DeorbitResult continue_deorbit(const EciState& start, double final_altitude_km,
                               const DeorbitConfig& cfg, const StepController& controller) {
    cfg.validate();
    ThrustConfig thrust = cfg.thrust;
    thrust.min_mass_kg = cfg.dry_mass_kg + cfg.payload_kg;

    const auto sample_every = static_cast<long>(std::llround(cfg.sample_interval_s / cfg.dt_s));
    const double t_max = cfg.max_duration_days * kSecondsPerDay;

    DeorbitResult result;
    EciState state = start;
    result.samples.push_back(make_sample(state, cfg.constants));

    long step = 0;
    bool sampled_last = true;
    while (true) {
        if (altitude_of(state.position_km, cfg.constants) <= final_altitude_km) {
            result.completed = true;
            result.termination = Termination::reached_target;
            break;
        }
        if (state.position_km.norm() <= cfg.constants.earth_radius_km) {
            result.termination = Termination::impact;
            break;
        }
        if (state.epoch_s >= t_max) {
            result.termination = Termination::max_duration;
            break;
        }

        StepCommand cmd;
        if (controller) cmd = controller(state);
        ThrustConfig step_cfg = thrust;
        if (cmd.cross_track_offset_deg) step_cfg.cross_track_offset_deg = *cmd.cross_track_offset_deg;
        if (cmd.thrust_n) step_cfg.thrust_n = *cmd.thrust_n;

        const StepResult r = propagate_step(state, step_cfg, cfg.constants, cfg.dt_s, cmd.thrust_enabled);
        state = r.state;
        result.thrust_on_time_s += r.burn_time_s;
        ++step;

        sampled_last = (step % sample_every) == 0;
        if (sampled_last) result.samples.push_back(make_sample(state, cfg.constants));

        if (r.propellant_exhausted) {
            result.termination = Termination::propellant_exhausted;
            break;
        }
    }
    if (!sampled_last) result.samples.push_back(make_sample(state, cfg.constants));

    result.final_state = state;
    result.duration_s = state.epoch_s - start.epoch_s;
    result.propellant_used_kg = start.mass_kg - state.mass_kg;
    result.orbit_count = count_orbits(result.samples);
    return result;
}

DeorbitResult run_deorbit(double initial_altitude_km, double final_altitude_km,
                          const DeorbitConfig& cfg, const StepController& controller) {
    DeorbitConfig c = cfg;
    c.initial_altitude_km = initial_altitude_km;
    c.final_altitude_km = final_altitude_km;
    c.validate();
    const EciState start =
        circular_orbit_state(initial_altitude_km, c.inclination_deg, c.initial_mass_kg(), c.constants);
    return continue_deorbit(start, final_altitude_km, c, controller);
}

double edelbaum_estimate(double altitude1_km, double altitude2_km, double thrust_n, double mass_kg,
                         const BodyConstants& constants) {
    if (!(thrust_n > 0)) throw std::invalid_argument("edelbaum_estimate: thrust must be > 0");
    const double r1 = constants.earth_radius_km + altitude1_km;
    const double r2 = constants.earth_radius_km + altitude2_km;
    const double dv_ms = std::abs(circular_speed(r1, constants.mu_km3s2) -
                                  circular_speed(r2, constants.mu_km3s2)) * 1000.0;
    return dv_ms * mass_kg / thrust_n;
}

namespace {

// Unwrapped in-plane angle of every sample, measured from the first one.
std::vector<double> unwrapped_angles(const std::vector<TrajectorySample>& samples) {
    std::vector<double> angles;
    if (samples.empty()) return angles;
    const Vec3 e1 = samples.front().position_km.normalized();
    const Vec3 h = samples.front().position_km.cross(samples.front().velocity_kms).normalized();
    const Vec3 e2 = h.cross(e1);

    angles.reserve(samples.size());
    double prev = 0.0;
    double offset = 0.0;
    for (const auto& s : samples) {
        const double a = std::atan2(s.position_km.dot(e2), s.position_km.dot(e1));
        if (!angles.empty()) {
            if (a - prev < -kPi) offset += 2 * kPi;
            if (a - prev > kPi) offset -= 2 * kPi;
        }
        angles.push_back(a + offset);
        prev = a;
    }
    return angles;
}

}  // namespace

int count_orbits(const std::vector<TrajectorySample>& samples) {
    const auto angles = unwrapped_angles(samples);
    if (angles.empty()) return 0;
    return static_cast<int>(std::floor(angles.back() / (2 * kPi)));
}

std::vector<OrbitMean> per_orbit_mean_altitude(const std::vector<TrajectorySample>& samples) {
    const auto angles = unwrapped_angles(samples);
    std::vector<OrbitMean> means;
    if (angles.empty()) return means;
    const int complete = static_cast<int>(std::floor(angles.back() / (2 * kPi)));

    int current = 0;
    double sum_alt = 0.0, sum_t = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < samples.size() && current < complete; ++i) {
        const int k = static_cast<int>(std::floor(angles[i] / (2 * kPi)));
        if (k != current) {
            if (n > 0) means.push_back({sum_t / n, sum_alt / n});
            sum_alt = sum_t = 0.0;
            n = 0;
            current = k;
            if (current >= complete) break;
        }
        sum_alt += samples[i].altitude_km;
        sum_t += samples[i].t_s;
        ++n;
    }
    return means;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("fit_line needs at least two paired points");
    }
    const auto n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

LinearFit decay_fit(const std::vector<OrbitMean>& means, double middle_fraction) {
    const std::size_t n = means.size();
    const double trim = (1.0 - middle_fraction) / 2.0;
    const auto first = static_cast<std::size_t>(std::floor(trim * static_cast<double>(n)));
    const auto last = n - first;
    std::vector<double> x, y;
    for (std::size_t i = first; i < last; ++i) {
        x.push_back(means[i].t_mid_s / kSecondsPerDay);
        y.push_back(means[i].mean_altitude_km);
    }
    return fit_line(x, y);
}

Vec3 interpolate_position(const std::vector<TrajectorySample>& samples, double t_s) {
    if (samples.empty()) throw std::invalid_argument("interpolate_position: no samples");
    if (t_s <= samples.front().t_s) return samples.front().position_km;
    if (t_s >= samples.back().t_s) return samples.back().position_km;
    auto hi = std::upper_bound(samples.begin(), samples.end(), t_s,
                               [](double t, const TrajectorySample& s) { return t < s.t_s; });
    const auto& b = *hi;
    const auto& a = *(hi - 1);
    const double h = b.t_s - a.t_s;
    const double s = (t_s - a.t_s) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * a.position_km + h10 * h * a.velocity_kms + h01 * b.position_km +
           h11 * h * b.velocity_kms;
}

}  // namespace deorbit::orbit
