#include "deorbit/relnav.hpp"

#include <algorithm>
#include <cmath>

namespace deorbit::nav {

double NavConfig::mean_motion(const orbit::BodyConstants& constants) const {
    if (mean_motion_rad_s > 0) return mean_motion_rad_s;
    const double a = constants.earth_radius_km + chief_altitude_km;
    return std::sqrt(constants.mu_km3s2 / (a * a * a));
}

void NavConfig::validate() const {
    if (!(chief_altitude_km > 0)) throw std::invalid_argument("chief altitude must be > 0");
    if (!(mean_motion_rad_s >= 0)) throw std::invalid_argument("mean motion must be >= 0 (0 derives it)");
    if (!(sigma_range_m > 0) || !(sigma_angle_rad > 0)) {
        throw std::invalid_argument("measurement sigmas must be > 0");
    }
    if (!(process_noise_q >= 0)) throw std::invalid_argument("process noise must be >= 0");
    if (!(filter_step_s > 0) || !(truth_step_s > 0)) throw std::invalid_argument("steps must be > 0");
    if (!(thrust_n >= 0)) throw std::invalid_argument("thrust must be >= 0");
    if (std::abs(thrust_direction.norm() - 1.0) > 1e-9 || thrust_direction.x() != 0.0) {
        throw std::invalid_argument("thrust direction must be a unit vector in the along-track/cross-track plane");
    }
    if (!(chaser_mass_kg > 0) || !(chaser_isp_s > 0)) throw std::invalid_argument("chaser mass and Isp must be > 0");
    if (!(init_sigma_position_m >= 0) || !(init_sigma_velocity_ms >= 0)) {
        throw std::invalid_argument("initial sigmas must be >= 0");
    }
}

Mat3 lvlh_rotation(const orbit::EciState& chief) {
    const Vec3 x = chief.position_km.normalized();
    const Vec3 z = chief.position_km.cross(chief.velocity_kms).normalized();
    const Vec3 y = z.cross(x);
    Mat3 rot;
    rot.row(0) = x.transpose();
    rot.row(1) = y.transpose();
    rot.row(2) = z.transpose();
    return rot;
}

namespace {

Vec3 frame_rate(const orbit::EciState& chief) {
    const Vec3 h = chief.position_km.cross(chief.velocity_kms);
    return h / chief.position_km.squaredNorm();
}

}  // namespace

LvlhState eci_to_lvlh(const orbit::EciState& chief, const orbit::EciState& deputy) {
    const Mat3 rot = lvlh_rotation(chief);
    const Vec3 dr = deputy.position_km - chief.position_km;
    const Vec3 dv = deputy.velocity_kms - chief.velocity_kms - frame_rate(chief).cross(dr);
    return {rot * dr * 1000.0, rot * dv * 1000.0};
}

orbit::EciState lvlh_to_eci(const orbit::EciState& chief, const LvlhState& rel) {
    const Mat3 rot_t = lvlh_rotation(chief).transpose();
    const Vec3 dr = rot_t * rel.position_m / 1000.0;
    orbit::EciState out = chief;
    out.position_km = chief.position_km + dr;
    out.velocity_kms = chief.velocity_kms + rot_t * rel.velocity_ms / 1000.0 + frame_rate(chief).cross(dr);
    return out;
}

TruthStep truth_propagate(const orbit::EciState& chief, const orbit::EciState& deputy,
                          const orbit::ThrustConfig& deputy_thrust, const orbit::BodyConstants& constants,
                          double dt_s, double max_step_s) {
    if (!(dt_s > 0) || !(max_step_s > 0)) throw std::invalid_argument("truth_propagate: steps must be > 0");
    const auto substeps = static_cast<int>(std::ceil(dt_s / max_step_s - 1e-9));
    const double h = dt_s / substeps;

    orbit::ThrustConfig coast;
    coast.mode = orbit::ThrustMode::off;

    TruthStep out{chief, deputy, {}};
    for (int i = 0; i < substeps; ++i) {
        out.chief = orbit::propagate_step(out.chief, coast, constants, h).state;
        out.deputy = orbit::propagate_step(out.deputy, deputy_thrust, constants, h).state;
    }
    out.relative = eci_to_lvlh(out.chief, out.deputy);
    return out;
}

RadarMeasurement radar_measure(const LvlhState& truth, const NavConfig& cfg, GaussianRng& rng,
                               double timestamp_s) {
    const Vec3 h = radar_model(truth.flat());
    RadarMeasurement m{h(0), h(1), h(2), timestamp_s};
    if (cfg.measurement_noise) {
        m.range_m += rng.normal(0.0, cfg.sigma_range_m);
        m.azimuth_rad += rng.normal(0.0, cfg.sigma_angle_rad);
        m.elevation_rad += rng.normal(0.0, cfg.sigma_angle_rad);
    }
    return m;
}

Eigen::Matrix3d measurement_covariance(const NavConfig& cfg) {
    return Eigen::Vector3d(cfg.sigma_range_m * cfg.sigma_range_m, cfg.sigma_angle_rad * cfg.sigma_angle_rad,
                           cfg.sigma_angle_rad * cfg.sigma_angle_rad)
        .asDiagonal();
}

void require_spd(const Mat6& covariance, const char* where) {
    const double scale = covariance.cwiseAbs().maxCoeff();
    if (!((covariance - covariance.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * scale)) {
        throw std::invalid_argument(std::string(where) + ": covariance is not symmetric");
    }
    Eigen::LLT<Mat6> llt(covariance);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument(std::string(where) + ": covariance is not positive-definite");
    }
}

EkfEstimate ekf_predict(const EkfEstimate& est, const NavConfig& cfg, double mean_motion,
                        const std::optional<Vec3>& control_accel_ms2) {
    require_spd(est.covariance, "ekf_predict");
    const double dt = cfg.filter_step_s;
    const Mat6 phi = cw_transition(mean_motion, dt);

    EkfEstimate out;
    out.state = phi * est.state;
    if (control_accel_ms2) out.state += cw_control_convolution(mean_motion, dt) * *control_accel_ms2;
    out.covariance = phi * est.covariance * phi.transpose() + process_noise(cfg.process_noise_q, dt);
    out.covariance = (out.covariance + out.covariance.transpose()).eval() / 2.0;
    return out;
}

EkfEstimate ekf_update(const EkfEstimate& est, const RadarMeasurement& meas, const NavConfig& cfg) {
    require_spd(est.covariance, "ekf_update");
    Vec3 innovation = meas.vector() - radar_model(est.state);
    innovation(1) = std::remainder(innovation(1), 2 * kPi);

    EkfEstimate out = est;
    const Eigen::Matrix<double, 3, 6> h = measurement_jacobian(est.state);
    const Eigen::Matrix3d r = measurement_covariance(cfg);
    kalman_update(out.state, out.covariance, innovation, h, r);
    return out;
}

double nees(const EkfEstimate& est, const Vec6& truth) {
    const Vec6 e = est.state - truth;
    return e.dot(est.covariance.llt().solve(e));
}

std::string to_string(FilterVariant v) {
    return v == FilterVariant::cw_only ? "cw-only" : "thrust-aware";
}

namespace {

orbit::ThrustConfig chaser_thrust(const NavConfig& cfg) {
    orbit::ThrustConfig t;
    t.thrust_n = cfg.thrust_n;
    t.isp_s = cfg.chaser_isp_s;
    t.mode = cfg.thrust_n > 0 ? orbit::ThrustMode::prograde : orbit::ThrustMode::off;
    // Along-track +y is prograde; the cross-track share becomes an offset.
    t.cross_track_offset_deg = rad2deg(std::atan2(cfg.thrust_direction.z(), cfg.thrust_direction.y()));
    return t;
}

double mean_of(const std::vector<NavSample>& s, std::size_t first, std::size_t last) {
    double sum = 0.0;
    for (std::size_t i = first; i < last; ++i) sum += s[i].position_error_m.norm();
    return last > first ? sum / static_cast<double>(last - first) : 0.0;
}

}  // namespace

NavResult run_nav(const NavConfig& cfg, const orbit::BodyConstants& constants, const NavRunSpec& spec) {
    cfg.validate();
    const double n = cfg.mean_motion(constants);
    const orbit::ThrustConfig thrust = chaser_thrust(cfg);

    orbit::EciState chief = orbit::circular_orbit_state(cfg.chief_altitude_km, 0.0, 1000.0, constants);
    orbit::EciState deputy = lvlh_to_eci(chief, spec.initial_relative);
    deputy.mass_kg = cfg.chaser_mass_kg;

    GaussianRng rng(spec.seed);
    const Vec6 truth0 = spec.initial_relative.flat();
    Vec6 sigma0;
    sigma0 << Vec3::Constant(cfg.init_sigma_position_m), Vec3::Constant(cfg.init_sigma_velocity_ms);

    EkfEstimate est;
    est.state = truth0;
    if (cfg.initial_error) {
        for (int i = 0; i < 6; ++i) est.state(i) += rng.normal(0.0, sigma0(i));
    }
    // Floor keeps P0 invertible when a zero initial sigma is configured.
    est.covariance = sigma0.cwiseMax(1e-6).cwiseAbs2().asDiagonal();

    std::optional<Vec3> control;
    if (spec.variant == FilterVariant::thrust_aware && cfg.thrust_n > 0) {
        control = cfg.thrust_direction * (cfg.thrust_n / cfg.chaser_mass_kg);
    }

    const auto steps = static_cast<long>(std::llround(spec.duration_s / cfg.filter_step_s));
    NavResult result;
    result.samples.reserve(static_cast<std::size_t>(steps));
    double sum_p2 = 0.0, sum_v2 = 0.0, sum_nees = 0.0;
    result.min_range_m = spec.initial_relative.position_m.norm();
    result.max_range_m = result.min_range_m;

    LvlhState truth = spec.initial_relative;
    for (long k = 1; k <= steps; ++k) {
        const TruthStep ts = truth_propagate(chief, deputy, thrust, constants, cfg.filter_step_s, cfg.truth_step_s);
        chief = ts.chief;
        deputy = ts.deputy;
        truth = ts.relative;

        est = ekf_predict(est, cfg, n, control);
        if (spec.check_covariance) require_spd(est.covariance, "run_nav/predict");
        const double t = static_cast<double>(k) * cfg.filter_step_s;
        est = ekf_update(est, radar_measure(truth, cfg, rng, t), cfg);
        if (spec.check_covariance) require_spd(est.covariance, "run_nav/update");

        NavSample s;
        s.t_s = t;
        const Vec6 truth_flat = truth.flat();
        s.position_error_m = est.state.head<3>() - truth_flat.head<3>();
        s.velocity_error_ms = est.state.tail<3>() - truth_flat.tail<3>();
        s.position_3sigma_m = 3.0 * est.covariance.diagonal().head<3>().cwiseSqrt();
        s.nees = nees(est, truth_flat);
        s.range_m = truth.position_m.norm();
        result.samples.push_back(s);

        sum_p2 += s.position_error_m.squaredNorm();
        sum_v2 += s.velocity_error_ms.squaredNorm();
        sum_nees += s.nees;
        result.max_position_error_m = std::max(result.max_position_error_m, s.position_error_m.norm());
        result.min_range_m = std::min(result.min_range_m, s.range_m);
        result.max_range_m = std::max(result.max_range_m, s.range_m);
    }

    const auto count = static_cast<double>(result.samples.size());
    if (count > 0) {
        result.position_rmse_m = std::sqrt(sum_p2 / count);
        result.velocity_rmse_ms = std::sqrt(sum_v2 / count);
        result.mean_nees = sum_nees / count;
        const std::size_t tenth = std::max<std::size_t>(1, result.samples.size() / 10);
        const double head = mean_of(result.samples, 0, tenth);
        const double tail = mean_of(result.samples, result.samples.size() - tenth, result.samples.size());
        result.error_growth_ratio = head > 0 ? tail / head : 0.0;
    }
    result.final_truth = truth;
    return result;
}

LvlhState default_proximity_start(double mean_motion) {
    // x = 300 sin(nt), y = 1400 - 600 (1 - cos(nt)): range spans 200 m to 1.4 km.
    LvlhState s;
    s.position_m = Vec3(0.0, 1400.0, 0.0);
    s.velocity_ms = Vec3(300.0 * mean_motion, 0.0, 0.0);
    return s;
}

LvlhState default_longduration_start() {
    LvlhState s;
    s.position_m = Vec3(0.0, 200.0, 0.0);
    return s;
}

NavResult run_proximity_scenario(const NavConfig& cfg, const orbit::BodyConstants& constants,
                                 double duration_s, std::uint64_t seed) {
    NavConfig c = cfg;
    c.thrust_n = 0.0;
    NavRunSpec spec;
    spec.initial_relative = default_proximity_start(c.mean_motion(constants));
    spec.duration_s = duration_s;
    spec.seed = seed;
    spec.variant = FilterVariant::cw_only;
    return run_nav(c, constants, spec);
}

NavResult run_longduration_scenario(const NavConfig& cfg, const orbit::BodyConstants& constants,
                                    double duration_s, std::uint64_t seed, FilterVariant variant) {
    NavRunSpec spec;
    spec.initial_relative = default_longduration_start();
    spec.duration_s = duration_s;
    spec.seed = seed;
    spec.variant = variant;
    return run_nav(cfg, constants, spec);
}

double chi2_quantile(double p, double dof) {
    if (!(p > 0 && p < 1) || !(dof > 0)) throw std::invalid_argument("chi2_quantile: need 0 < p < 1, dof > 0");
    // Standard normal quantile by bisection on the CDF.
    double lo = -10.0, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p) lo = mid;
        else hi = mid;
    }
    const double z = 0.5 * (lo + hi);
    const double c = 2.0 / (9.0 * dof);
    const double t = 1.0 - c + z * std::sqrt(c);
    return dof * t * t * t;
}

std::pair<double, double> nees_band(int dof, int runs, double confidence) {
    if (dof < 1 || runs < 1 || !(confidence > 0 && confidence < 1)) {
        throw std::invalid_argument("nees_band: need dof >= 1, runs >= 1, 0 < confidence < 1");
    }
    const double alpha = 1.0 - confidence;
    const double n = static_cast<double>(dof) * runs;
    return {chi2_quantile(alpha / 2, n) / runs, chi2_quantile(1 - alpha / 2, n) / runs};
}

}  // namespace deorbit::nav
