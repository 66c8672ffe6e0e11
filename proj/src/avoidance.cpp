#include "deorbit/avoidance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace deorbit::avoid {

void AvoidancePolicy::validate() const {
    if (!(horizon_s > 0)) throw std::invalid_argument("avoidance horizon must be > 0");
    if (!(trigger_km > 0)) throw std::invalid_argument("trigger distance must be > 0");
    if (!(clearance_km >= trigger_km)) throw std::invalid_argument("clearance must be >= trigger distance");
    if (!(detection_range_km > 0)) throw std::invalid_argument("detection range must be > 0");
    if (!(offset_deg >= -180 && offset_deg <= 180)) throw std::invalid_argument("offset must be in [-180, 180] deg");
    if (!(thrust_fraction > 0 && thrust_fraction <= 1)) throw std::invalid_argument("thrust fraction must be in (0, 1]");
}

namespace {

struct CircularBasis {
    double radius;
    double rate;
    Vec3 e1;
    Vec3 e2;
};

CircularBasis basis_of(const Intruder& in, const orbit::BodyConstants& constants) {
    const double r = in.position_km.norm();
    if (!(r > 0)) throw std::invalid_argument("intruder " + in.id + ": position must be non-zero");
    const Vec3 e1 = in.position_km / r;
    const Vec3 along = in.velocity_dir - in.velocity_dir.dot(e1) * e1;
    if (!(along.norm() > 0)) throw std::invalid_argument("intruder " + in.id + ": velocity is radial");
    return {r, std::sqrt(constants.mu_km3s2 / (r * r * r)), e1, along.normalized()};
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

}  // namespace

Vec3 Intruder::position_at(double t_s, const orbit::BodyConstants& constants) const {
    const CircularBasis b = basis_of(*this, constants);
    const double th = b.rate * (t_s - t_ref_s);
    return b.radius * (std::cos(th) * b.e1 + std::sin(th) * b.e2);
}

Vec3 Intruder::velocity_at(double t_s, const orbit::BodyConstants& constants) const {
    const CircularBasis b = basis_of(*this, constants);
    const double th = b.rate * (t_s - t_ref_s);
    return b.radius * b.rate * (-std::sin(th) * b.e1 + std::cos(th) * b.e2);
}

Intruder coorbital_intruder(const TrajectorySample& own, double miss_km, const std::string& id) {
    Intruder in;
    in.id = id;
    in.t_ref_s = own.t_s;
    in.position_km = own.position_km + miss_km * own.position_km.normalized();
    in.velocity_dir = own.velocity_kms.normalized();
    return in;
}

std::vector<TrajectorySample> sample_intruder(const Intruder& intruder,
                                              const std::vector<TrajectorySample>& own,
                                              const orbit::BodyConstants& constants) {
    std::vector<TrajectorySample> out;
    out.reserve(own.size());
    for (const auto& s : own) {
        TrajectorySample t;
        t.t_s = s.t_s;
        t.position_km = intruder.position_at(s.t_s, constants);
        t.velocity_kms = intruder.velocity_at(s.t_s, constants);
        t.altitude_km = t.position_km.norm() - constants.earth_radius_km;
        out.push_back(t);
    }
    return out;
}

Conjunction closest_approach(const std::vector<TrajectorySample>& own,
                             const std::vector<TrajectorySample>& intruder, double horizon_s,
                             const std::string& intruder_id) {
    if (own.empty()) throw std::invalid_argument("closest_approach: empty trajectory");
    if (own.size() != intruder.size()) throw std::invalid_argument("closest_approach: trajectories differ in length");
    for (std::size_t i = 0; i < own.size(); ++i) {
        if (std::abs(own[i].t_s - intruder[i].t_s) > 1e-9 * std::max(1.0, std::abs(own[i].t_s))) {
            throw std::invalid_argument("closest_approach: time grids differ at sample " + std::to_string(i));
        }
    }

    const double t_end = own.front().t_s + horizon_s;
    std::vector<double> d2;
    for (std::size_t i = 0; i < own.size() && own[i].t_s <= t_end; ++i) {
        d2.push_back((own[i].position_km - intruder[i].position_km).squaredNorm());
    }
    const auto k = static_cast<std::size_t>(std::min_element(d2.begin(), d2.end()) - d2.begin());

    Conjunction c{own[k].t_s, std::sqrt(d2[k]), intruder_id};
    if (k > 0 && k + 1 < d2.size()) {
        const double h0 = own[k].t_s - own[k - 1].t_s;
        const double h1 = own[k + 1].t_s - own[k].t_s;
        // Parabola through the three points, in local time u = t - t_k.
        const double s0 = (d2[k] - d2[k - 1]) / h0;
        const double s1 = (d2[k + 1] - d2[k]) / h1;
        const double a = (s1 - s0) / (h0 + h1);
        if (a > 0) {
            const double b = s0 + a * h0;  // slope at u = 0
            const double u = std::clamp(-b / (2 * a), -h0, h1);
            c.tca_s = own[k].t_s + u;
            c.miss_km = std::sqrt(std::max(0.0, d2[k] + b * u + a * u * u));
        }
    }
    return c;
}

std::optional<Conjunction> detect_conjunction(const std::vector<TrajectorySample>& own,
                                              const std::vector<TrajectorySample>& intruder,
                                              const AvoidancePolicy& policy, const std::string& intruder_id) {
    policy.validate();
    const Conjunction c = closest_approach(own, intruder, policy.horizon_s, intruder_id);
    if (c.miss_km < policy.trigger_km) return c;
    return std::nullopt;
}

std::vector<TrajectorySample> predict_trajectory(const EciState& state, const DeorbitConfig& cfg,
                                                 double duration_s, long offset_steps, const AvoidancePolicy& policy) {
    orbit::ThrustConfig thrust = cfg.thrust;
    thrust.min_mass_kg = cfg.dry_mass_kg + cfg.payload_kg;
    const auto steps = static_cast<long>(std::llround(duration_s / cfg.dt_s));

    std::vector<TrajectorySample> out;
    out.reserve(static_cast<std::size_t>(steps) + 1);
    EciState s = state;
    out.push_back(orbit::make_sample(s, cfg.constants));
    for (long k = 0; k < steps; ++k) {
        if (out.back().altitude_km <= cfg.final_altitude_km) break;
        orbit::ThrustConfig step_cfg = thrust;
        if (k < offset_steps) {
            step_cfg.cross_track_offset_deg = policy.offset_deg;
            step_cfg.thrust_n = thrust.thrust_n * policy.thrust_fraction;
        }
        s = orbit::propagate_step(s, step_cfg, cfg.constants, cfg.dt_s).state;
        out.push_back(orbit::make_sample(s, cfg.constants));
    }
    return out;
}

EvasionPlan plan_evasion(const EciState& state, const Conjunction& conj, const Intruder& intruder,
                         const AvoidancePolicy& policy, const DeorbitConfig& cfg) {
    policy.validate();
    if (!(conj.tca_s > state.epoch_s)) {
        throw std::invalid_argument("plan_evasion: conjunction at t=" + fmt("%.1f", conj.tca_s) +
                                    " s is not in the future");
    }
    EvasionPlan plan;
    plan.start_s = state.epoch_s;
    plan.offset_deg = policy.offset_deg;
    plan.predicted_miss_km = conj.miss_km;
    if (conj.miss_km >= policy.clearance_km) return plan;

    // Screen past TCA too: the raised trajectory crosses the intruder's shell later.
    const double window = conj.tca_s - state.epoch_s + policy.horizon_s;
    auto miss_for = [&](long steps) {
        const auto own = predict_trajectory(state, cfg, window, steps, policy);
        return closest_approach(own, sample_intruder(intruder, own, cfg.constants), window, intruder.id).miss_km;
    };

    const double nominal = miss_for(0);
    if (nominal >= policy.clearance_km) {
        plan.predicted_miss_km = nominal;
        return plan;
    }

    const long max_steps = static_cast<long>(std::floor((conj.tca_s - state.epoch_s) / cfg.dt_s));
    const double best = max_steps > 0 ? miss_for(max_steps) : nominal;
    if (best < policy.clearance_km) {
        throw std::runtime_error(
            fmt("evasion infeasible: burning until TCA (%.0f s) reaches %.3f km, clearance %.3f km, shortfall %.3f km",
                static_cast<double>(max_steps) * cfg.dt_s, best, policy.clearance_km, policy.clearance_km - best));
    }

    long lo = 0, hi = max_steps;
    double hi_miss = best;
    while (hi - lo > 1) {
        const long mid = lo + (hi - lo) / 2;
        const double m = miss_for(mid);
        if (m >= policy.clearance_km) {
            hi = mid;
            hi_miss = m;
        } else {
            lo = mid;
        }
    }
    plan.needed = true;
    plan.duration_s = static_cast<double>(hi) * cfg.dt_s;
    plan.predicted_miss_km = hi_miss;
    return plan;
}

DeorbitResult resume_deorbit(const EciState& state, const DeorbitConfig& cfg) {
    DeorbitConfig c = cfg;
    c.thrust.mode = orbit::ThrustMode::retrograde;
    c.thrust.cross_track_offset_deg = 0.0;
    return orbit::continue_deorbit(state, c.final_altitude_km, c);
}

AvoidanceResult run_with_avoidance(const DeorbitConfig& cfg, const std::vector<Intruder>& intruders,
                                   const AvoidancePolicy& policy) {
    policy.validate();
    cfg.validate();
    AvoidanceResult result;
    std::vector<bool> seen(intruders.size(), false);
    std::vector<TrajectorySample> flown;
    long burn_left = 0;
    bool resume_pending = false;

    auto controller = [&](const EciState& s) -> orbit::StepCommand {
        flown.push_back(orbit::make_sample(s, cfg.constants));
        orbit::StepCommand cmd;

        if (resume_pending && burn_left == 0) {
            result.events.push_back({s.epoch_s, "resume", result.conjunction->intruder_id,
                                     result.plan->predicted_miss_km, "retrograde"});
            resume_pending = false;
        }

        if (burn_left == 0 && !resume_pending) {
            for (std::size_t i = 0; i < intruders.size(); ++i) {
                if (seen[i]) continue;
                const Intruder& in = intruders[i];
                if ((s.position_km - in.position_at(s.epoch_s, cfg.constants)).norm() > policy.detection_range_km) {
                    continue;
                }
                seen[i] = true;
                const auto own = predict_trajectory(s, cfg, policy.horizon_s);
                const auto other = sample_intruder(in, own, cfg.constants);
                const Conjunction ca = closest_approach(own, other, policy.horizon_s, in.id);
                const auto conj = detect_conjunction(own, other, policy, in.id);
                if (!conj) {
                    result.events.push_back({s.epoch_s, "detection", in.id, ca.miss_km, "none"});
                    continue;
                }
                result.events.push_back({s.epoch_s, "detection", in.id, conj->miss_km, "screen"});
                result.conjunction = conj;
                try {
                    const EvasionPlan plan = plan_evasion(s, *conj, in, policy, cfg);
                    result.plan = plan;
                    if (plan.needed) {
                        burn_left = std::lround(plan.duration_s / cfg.dt_s);
                        resume_pending = true;
                        result.events.push_back({s.epoch_s, "maneuver", in.id, plan.predicted_miss_km,
                                                 fmt("cross-track offset %.1f deg for %.0f s", plan.offset_deg,
                                                     plan.duration_s)});
                    }
                } catch (const std::runtime_error& e) {
                    result.error = e.what();
                    result.events.push_back({s.epoch_s, "maneuver", in.id, conj->miss_km, "infeasible"});
                }
                break;
            }
        }

        if (burn_left > 0) {
            --burn_left;
            cmd.cross_track_offset_deg = policy.offset_deg;
            cmd.thrust_n = cfg.thrust.thrust_n * policy.thrust_fraction;
        }
        return cmd;
    };

    result.run = orbit::continue_deorbit(
        orbit::circular_orbit_state(cfg.initial_altitude_km, cfg.inclination_deg, cfg.initial_mass_kg(),
                                    cfg.constants),
        cfg.final_altitude_km, cfg, intruders.empty() ? orbit::StepController{} : controller);
    flown.push_back(orbit::make_sample(result.run.final_state, cfg.constants));

    if (resume_pending) {
        result.events.push_back({result.run.final_state.epoch_s, "resume", result.conjunction->intruder_id,
                                 result.plan->predicted_miss_km, "retrograde"});
    }
    if (!flown.empty() && !intruders.empty()) {
        const double span = flown.back().t_s - flown.front().t_s;
        for (const auto& in : intruders) {
            result.flown.push_back(closest_approach(flown, sample_intruder(in, flown, cfg.constants), span, in.id));
        }
    }
    result.flown_track = std::move(flown);
    return result;
}

}  // namespace deorbit::avoid
