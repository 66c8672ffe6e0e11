#pragma once

// Truth / radar / EKF chain for relative navigation in the target's
// local-vertical local-horizontal (LVLH) frame.
//
// Frame: x radial (outward), y along-track, z cross-track (orbit normal).
// Relative quantities are SI (m, m/s); absolute states come from the
// orbital module in km.

#include "deorbit/common.hpp"
#include "deorbit/orbital.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace deorbit::nav {

// ---------------------------------------------------------------------------
// Clohessy-Wiltshire primitives
// ---------------------------------------------------------------------------

/// Closed-form CW state transition for mean motion n over dt.
template <typename Scalar>
Matrix6<Scalar> cw_transition(Scalar n, Scalar dt) {
    const Scalar nt = n * dt;
    const Scalar c = std::cos(nt);
    const Scalar s = std::sin(nt);

    Matrix6<Scalar> phi = Matrix6<Scalar>::Zero();
    phi(0, 0) = 4 - 3 * c;
    phi(0, 3) = s / n;
    phi(0, 4) = 2 * (1 - c) / n;
    phi(1, 0) = 6 * (s - nt);
    phi(1, 1) = 1;
    phi(1, 3) = -2 * (1 - c) / n;
    phi(1, 4) = (4 * s - 3 * nt) / n;
    phi(2, 2) = c;
    phi(2, 5) = s / n;
    phi(3, 0) = 3 * n * s;
    phi(3, 3) = c;
    phi(3, 4) = 2 * s;
    phi(4, 0) = -6 * n * (1 - c);
    phi(4, 3) = -2 * s;
    phi(4, 4) = 4 * c - 3;
    phi(5, 2) = -n * s;
    phi(5, 5) = c;
    return phi;
}

/// Continuous-time CW system matrix (x' = A x + B u).
template <typename Scalar>
Matrix6<Scalar> cw_system_matrix(Scalar n) {
    Matrix6<Scalar> a = Matrix6<Scalar>::Zero();
    a(0, 3) = a(1, 4) = a(2, 5) = 1;
    a(3, 0) = 3 * n * n;
    a(3, 4) = 2 * n;
    a(4, 3) = -2 * n;
    a(5, 2) = -n * n;
    return a;
}

/// Response to a constant LVLH acceleration held over dt:
/// integral of Phi(dt - tau) B dtau, 6x3.
template <typename Scalar>
Eigen::Matrix<Scalar, 6, 3> cw_control_convolution(Scalar n, Scalar dt) {
    const Scalar nt = n * dt;
    const Scalar c = std::cos(nt);
    const Scalar s = std::sin(nt);
    const Scalar n2 = n * n;

    Eigen::Matrix<Scalar, 6, 3> g = Eigen::Matrix<Scalar, 6, 3>::Zero();
    g(0, 0) = (1 - c) / n2;
    g(0, 1) = 2 * (nt - s) / n2;
    g(1, 0) = -2 * (nt - s) / n2;
    g(1, 1) = 4 * (1 - c) / n2 - Scalar(1.5) * dt * dt;
    g(2, 2) = (1 - c) / n2;
    g(3, 0) = s / n;
    g(3, 1) = 2 * (1 - c) / n;
    g(4, 0) = -2 * (1 - c) / n;
    g(4, 1) = 4 * s / n - 3 * dt;
    g(5, 2) = s / n;
    return g;
}

/// Discrete process noise for white acceleration of spectral density q
/// (m^2/s^3) on each axis, integrated over dt.
template <typename Scalar>
Matrix6<Scalar> process_noise(Scalar q, Scalar dt) {
    Matrix6<Scalar> out = Matrix6<Scalar>::Zero();
    const Scalar dt2 = dt * dt;
    for (int i = 0; i < 3; ++i) {
        out(i, i) = q * dt2 * dt / 3;
        out(i, i + 3) = out(i + 3, i) = q * dt2 / 2;
        out(i + 3, i + 3) = q * dt;
    }
    return out;
}

/// Noise-free radar observable h(x) = (range, azimuth, elevation).
template <typename Derived>
Vector3<typename Derived::Scalar> radar_model(const Eigen::MatrixBase<Derived>& x) {
    using Scalar = typename Derived::Scalar;
    const Vector3<Scalar> r = x.template head<3>();
    const Scalar range = r.norm();
    if (!(range > Scalar(0))) throw std::domain_error("radar_model: zero range");
    return {range, std::atan2(r(1), r(0)), std::asin(r(2) / range)};
}

/// Analytic Jacobian of radar_model, 3x6 (velocity columns are zero).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 3, 6> measurement_jacobian(const Eigen::MatrixBase<Derived>& x) {
    using Scalar = typename Derived::Scalar;
    const Scalar px = x(0), py = x(1), pz = x(2);
    const Scalar rho2 = px * px + py * py;
    const Scalar rho = std::sqrt(rho2);
    const Scalar r2 = rho2 + pz * pz;
    const Scalar r = std::sqrt(r2);
    if (!(r > Scalar(0))) throw std::domain_error("measurement_jacobian: zero range");
    if (!(rho > Scalar(0))) throw std::domain_error("measurement_jacobian: azimuth undefined on the z axis");

    Eigen::Matrix<Scalar, 3, 6> h = Eigen::Matrix<Scalar, 3, 6>::Zero();
    h(0, 0) = px / r;
    h(0, 1) = py / r;
    h(0, 2) = pz / r;
    h(1, 0) = -py / rho2;
    h(1, 1) = px / rho2;
    h(2, 0) = -px * pz / (r2 * rho);
    h(2, 1) = -py * pz / (r2 * rho);
    h(2, 2) = rho / r2;
    return h;
}

/// Linear Kalman measurement update in Joseph form. Works for any state and
/// measurement dimension; the innovation is supplied by the caller.
template <typename Scalar, int N, int M>
void kalman_update(Eigen::Matrix<Scalar, N, 1>& x, Eigen::Matrix<Scalar, N, N>& p,
                   const Eigen::Matrix<Scalar, M, 1>& innovation, const Eigen::Matrix<Scalar, M, N>& h,
                   const Eigen::Matrix<Scalar, M, M>& r) {
    const Eigen::Matrix<Scalar, M, M> s = h * p * h.transpose() + r;
    Eigen::LDLT<Eigen::Matrix<Scalar, M, M>> ldlt(s);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        !(ldlt.vectorD().minCoeff() > Scalar(0))) {
        throw std::runtime_error("kalman_update: innovation covariance is singular (min pivot " +
                                 std::to_string(static_cast<double>(ldlt.vectorD().minCoeff())) + ")");
    }
    const Eigen::Matrix<Scalar, N, M> k = ldlt.solve(h * p).transpose();
    x += k * innovation;
    const auto ikh = (Eigen::Matrix<Scalar, N, N>::Identity(p.rows(), p.cols()) - k * h).eval();
    p = ikh * p * ikh.transpose() + k * r * k.transpose();
    p = (p + p.transpose()).eval() / Scalar(2);
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct LvlhState {
    Vec3 position_m = Vec3::Zero();
    Vec3 velocity_ms = Vec3::Zero();

    Vec6 flat() const {
        Vec6 v;
        v << position_m, velocity_ms;
        return v;
    }
    static LvlhState from_flat(const Vec6& v) { return {v.head<3>(), v.tail<3>()}; }
};

struct EkfEstimate {
    Vec6 state = Vec6::Zero();
    Mat6 covariance = Mat6::Identity();
};

struct RadarMeasurement {
    double range_m = 0.0;
    double azimuth_rad = 0.0;
    double elevation_rad = 0.0;
    double timestamp_s = 0.0;

    Vec3 vector() const { return {range_m, azimuth_rad, elevation_rad}; }
};

struct NavConfig {
    double chief_altitude_km = 778.0;
    // Zero derives n from the chief altitude.
    double mean_motion_rad_s = 0.0;
    double sigma_range_m = 1.0;
    double sigma_angle_rad = 1e-3;
    double process_noise_q = 1e-6;
    double filter_step_s = 1.0;
    double truth_step_s = 0.1;
    // Perturbing thrust on the chaser; direction is a unit LVLH vector.
    double thrust_n = 0.0;
    Vec3 thrust_direction = Vec3::UnitY();
    double chaser_mass_kg = 420.0;
    double chaser_isp_s = 4150.0;
    double init_sigma_position_m = 10.0;
    double init_sigma_velocity_ms = 0.1;
    bool measurement_noise = true;
    bool initial_error = true;

    double mean_motion(const orbit::BodyConstants& constants) const;
    void validate() const;
};

// ---------------------------------------------------------------------------
// Frames and truth
// ---------------------------------------------------------------------------

/// Rotation whose rows are the chief's LVLH axes expressed in ECI.
Mat3 lvlh_rotation(const orbit::EciState& chief);

/// Deputy relative to chief in chief LVLH (m, m/s), rotating-frame velocity.
LvlhState eci_to_lvlh(const orbit::EciState& chief, const orbit::EciState& deputy);

/// Inverse of eci_to_lvlh; mass and epoch are taken from the chief.
orbit::EciState lvlh_to_eci(const orbit::EciState& chief, const LvlhState& rel);

struct TruthStep {
    orbit::EciState chief;
    orbit::EciState deputy;
    LvlhState relative;
};

/// Propagates both vehicles over dt (internal substeps of at most max_step)
/// with the orbital module; the deputy carries the thrust.
TruthStep truth_propagate(const orbit::EciState& chief, const orbit::EciState& deputy,
                          const orbit::ThrustConfig& deputy_thrust, const orbit::BodyConstants& constants,
                          double dt_s, double max_step_s);

// ---------------------------------------------------------------------------
// Sensor and filter
// ---------------------------------------------------------------------------

RadarMeasurement radar_measure(const LvlhState& truth, const NavConfig& cfg, GaussianRng& rng,
                               double timestamp_s = 0.0);

Eigen::Matrix3d measurement_covariance(const NavConfig& cfg);

/// Throws std::invalid_argument when the covariance is not symmetric
/// positive-definite.
void require_spd(const Mat6& covariance, const char* where);

EkfEstimate ekf_predict(const EkfEstimate& est, const NavConfig& cfg, double mean_motion,
                        const std::optional<Vec3>& control_accel_ms2 = std::nullopt);

EkfEstimate ekf_update(const EkfEstimate& est, const RadarMeasurement& meas, const NavConfig& cfg);

double nees(const EkfEstimate& est, const Vec6& truth);

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

enum class FilterVariant { cw_only, thrust_aware };

std::string to_string(FilterVariant v);

struct NavSample {
    double t_s = 0.0;
    Vec3 position_error_m = Vec3::Zero();
    Vec3 velocity_error_ms = Vec3::Zero();
    Vec3 position_3sigma_m = Vec3::Zero();
    double nees = 0.0;
    double range_m = 0.0;
};

struct NavResult {
    std::vector<NavSample> samples;
    double position_rmse_m = 0.0;
    double velocity_rmse_ms = 0.0;
    double max_position_error_m = 0.0;
    double mean_nees = 0.0;
    // Mean position error over the last tenth of the run divided by the
    // mean over the first tenth.
    double error_growth_ratio = 0.0;
    double min_range_m = 0.0;
    double max_range_m = 0.0;
    LvlhState final_truth;
};

struct NavRunSpec {
    LvlhState initial_relative;
    double duration_s = 3600.0;
    std::uint64_t seed = 42;
    FilterVariant variant = FilterVariant::cw_only;
    // Verify SPD covariance after every predict/update.
    bool check_covariance = false;
};

NavResult run_nav(const NavConfig& cfg, const orbit::BodyConstants& constants, const NavRunSpec& spec);

/// Closed relative ellipse spanning 200 m to 1.4 km of along-track range.
LvlhState default_proximity_start(double mean_motion);

/// Co-orbital point 200 m ahead along-track.
LvlhState default_longduration_start();

NavResult run_proximity_scenario(const NavConfig& cfg, const orbit::BodyConstants& constants,
                                 double duration_s, std::uint64_t seed);

NavResult run_longduration_scenario(const NavConfig& cfg, const orbit::BodyConstants& constants,
                                    double duration_s, std::uint64_t seed, FilterVariant variant);

/// Chi-square quantile (Wilson-Hilferty approximation).
double chi2_quantile(double p, double dof);

/// Two-sided band for the mean over `runs` independent runs of a
/// `dof`-dimensional NEES: [chi2(a/2, dof*runs), chi2(1-a/2, dof*runs)] / runs.
std::pair<double, double> nees_band(int dof, int runs, double confidence);

}  // namespace deorbit::nav
