#include "deorbit/relnav.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace deorbit;
using namespace deorbit::nav;

namespace {

constexpr double kN778 = 1.106e-3;

Vec6 cw_rhs(const Vec6& x, double n, const Vec3& u = Vec3::Zero()) {
    Vec6 d;
    d << x.tail<3>(), 3 * n * n * x(0) + 2 * n * x(4) + u(0), -2 * n * x(3) + u(1), -n * n * x(2) + u(2);
    return d;
}

// Reference solution of the CW equations by fine-step RK4.
Vec6 cw_ode(Vec6 x, double n, double t, const Vec3& u = Vec3::Zero(), double h = 0.01) {
    const auto steps = static_cast<long>(std::llround(t / h));
    for (long i = 0; i < steps; ++i) {
        const Vec6 k1 = cw_rhs(x, n, u);
        const Vec6 k2 = cw_rhs(x + 0.5 * h * k1, n, u);
        const Vec6 k3 = cw_rhs(x + 0.5 * h * k2, n, u);
        const Vec6 k4 = cw_rhs(x + h * k3, n, u);
        x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return x;
}

Vec6 random_unit(GaussianRng& rng) {
    Vec6 v;
    for (int i = 0; i < 6; ++i) v(i) = rng.normal();
    return v.normalized();
}

struct Pair {
    orbit::EciState chief, deputy;
};

Pair make_pair(const NavConfig& cfg, const orbit::BodyConstants& c, const LvlhState& rel) {
    Pair p;
    p.chief = orbit::circular_orbit_state(cfg.chief_altitude_km, 0.0, 1000.0, c);
    p.deputy = lvlh_to_eci(p.chief, rel);
    p.deputy.mass_kg = 420.0;
    return p;
}

orbit::ThrustConfig coast() {
    orbit::ThrustConfig t;
    t.mode = orbit::ThrustMode::off;
    return t;
}

orbit::ThrustConfig tangential(double thrust_n) {
    orbit::ThrustConfig t;
    t.thrust_n = thrust_n;
    t.isp_s = 4150.0;
    t.mode = orbit::ThrustMode::prograde;
    return t;
}

double min_eigenvalue(const Mat6& m) {
    Eigen::SelfAdjointEigenSolver<Mat6> es(m);
    return es.eigenvalues().minCoeff();
}

NavConfig quiet_config() {
    NavConfig cfg;
    cfg.measurement_noise = false;
    cfg.initial_error = false;
    return cfg;
}

}  // namespace

TEST_SUITE("clohessy-wiltshire model") {
    TEST_CASE("transition at zero time is the identity") {
        CHECK(cw_transition(kN778, 0.0).isApprox(Mat6::Identity(), 0.0));
    }

    TEST_CASE("pure along-track offset is an equilibrium") {
        Vec6 x = Vec6::Zero();
        x(1) = 250.0;
        for (double dt : {1.0, 600.0, 5000.0, 1e5}) CHECK((cw_transition(kN778, dt) * x - x).norm() < 1e-9);
    }

    TEST_CASE("closed form matches numerical integration of the CW equations") {
        GaussianRng rng(11);
        for (int trial = 0; trial < 5; ++trial) {
            const Vec6 x0 = random_unit(rng);
            const Vec6 analytic = cw_transition(kN778, 600.0) * x0;
            CHECK((analytic - cw_ode(x0, kN778, 600.0)).norm() < 1e-6);
        }
    }

    TEST_CASE("control convolution matches integration under constant acceleration") {
        const Vec3 u(1e-4, 7.1e-4, -3e-4);
        const Vec6 x0 = Vec6::Zero();
        const Vec6 analytic = cw_control_convolution(kN778, 600.0) * u;
        CHECK((analytic - cw_ode(x0, kN778, 600.0, u)).norm() < 1e-6);
    }

    TEST_CASE("transition is a semigroup") {
        GaussianRng rng(5);
        const double n = 1.0429e-3;
        for (int trial = 0; trial < 200; ++trial) {
            const double a = 1000.0 * rng.uniform(), b = 1000.0 * rng.uniform();
            const Mat6 lhs = cw_transition(n, a) * cw_transition(n, b);
            const Mat6 rhs = cw_transition(n, a + b);
            REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
        }
    }

    TEST_CASE("system matrix exponential agrees with the transition") {
        const double n = 1.0429e-3, dt = 1e-3;
        const Mat6 approx = Mat6::Identity() + cw_system_matrix(n) * dt;
        CHECK((approx - cw_transition(n, dt)).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_SUITE("nonlinear relative truth") {
    const orbit::BodyConstants c;

    TEST_CASE("LVLH conversion round-trips") {
        const NavConfig cfg;
        LvlhState rel;
        rel.position_m = Vec3(120.0, -900.0, 35.0);
        rel.velocity_ms = Vec3(0.3, -0.25, 0.01);
        const Pair p = make_pair(cfg, c, rel);
        const LvlhState back = eci_to_lvlh(p.chief, p.deputy);
        CHECK((back.position_m - rel.position_m).norm() < 1e-6);
        CHECK((back.velocity_ms - rel.velocity_ms).norm() < 1e-9);
    }

    TEST_CASE("zero separation stays zero") {
        const NavConfig cfg;
        const Pair p = make_pair(cfg, c, {});
        const TruthStep ts = truth_propagate(p.chief, p.deputy, coast(), c, 600.0, 1.0);
        CHECK(ts.relative.position_m.norm() < 1e-9);
        CHECK(ts.relative.velocity_ms.norm() < 1e-12);
    }

    TEST_CASE("short arc agrees with the CW prediction to under a metre") {
        const NavConfig cfg;
        const double n = cfg.mean_motion(c);
        LvlhState rel;
        rel.position_m = Vec3(100.0, 500.0, -50.0);
        rel.velocity_ms = Vec3(0.1, -0.2, 0.05);
        const Pair p = make_pair(cfg, c, rel);
        const double period = 2 * kPi / n;
        const double dt = 0.09 * period;
        const TruthStep ts = truth_propagate(p.chief, p.deputy, coast(), c, dt, 0.1);
        const Vec6 cw = cw_transition(n, dt) * rel.flat();
        CHECK((ts.relative.position_m - cw.head<3>()).norm() < 1.0);
    }

    TEST_CASE("CW closed ellipse from a 200 m radial offset is recovered after one orbit") {
        const NavConfig cfg;
        const double n = cfg.mean_motion(c);
        LvlhState rel;
        rel.position_m = Vec3(200.0, 0.0, 0.0);
        rel.velocity_ms = Vec3(0.0, -2.0 * n * 200.0, 0.0);
        Pair p = make_pair(cfg, c, rel);
        const double period = 2 * kPi / n;
        const int chunks = 100;
        double worst = 0.0;
        for (int i = 1; i <= chunks; ++i) {
            const TruthStep ts = truth_propagate(p.chief, p.deputy, coast(), c, period / chunks, 1.0);
            p.chief = ts.chief;
            p.deputy = ts.deputy;
            const Vec6 cw = cw_transition(n, period * i / chunks) * rel.flat();
            worst = std::max(worst, (ts.relative.position_m - cw.head<3>()).norm());
        }
        MESSAGE("worst deviation from the CW ellipse over one orbit: ", worst, " m");
        CHECK(worst < 2.0);
    }

    TEST_CASE("0.3 N tangential thrust separates the chaser beyond 10 km in an hour") {
        const NavConfig cfg;
        LvlhState rel;
        rel.position_m = Vec3(0.0, 200.0, 0.0);
        const Pair p = make_pair(cfg, c, rel);
        const TruthStep ts = truth_propagate(p.chief, p.deputy, tangential(0.3), c, 3600.0, 1.0);
        MESSAGE("separation after 60 min: ", ts.relative.position_m.transpose(), " m");
        CHECK(ts.relative.position_m.norm() > 10000.0);
        // Along-track alone follows the CW forced solution (a/n^2)(4(1 - cos nt) - 1.5 (nt)^2).
        const double n = cfg.mean_motion(c), a = 0.3 / 420.0, nt = n * 3600.0;
        const double y_cw = 200.0 + a / (n * n) * (4 * (1 - std::cos(nt)) - 1.5 * nt * nt);
        CHECK(ts.relative.position_m.y() == doctest::Approx(y_cw).epsilon(0.02));
    }
}

TEST_SUITE("radar measurement") {
    TEST_CASE("noise-free axis cases") {
        const NavConfig cfg = quiet_config();
        GaussianRng rng(1);
        LvlhState a;
        a.position_m = Vec3(100, 0, 0);
        const auto m = radar_measure(a, cfg, rng);
        CHECK(m.range_m == doctest::Approx(100.0));
        CHECK(m.azimuth_rad == 0.0);
        CHECK(m.elevation_rad == 0.0);
        LvlhState b;
        b.position_m = Vec3(0, 100, 0);
        const auto mb = radar_measure(b, cfg, rng);
        CHECK(mb.range_m == doctest::Approx(100.0));
        CHECK(mb.azimuth_rad == doctest::Approx(kPi / 2));
        CHECK(mb.elevation_rad == 0.0);
        CHECK_THROWS_AS(radar_measure(LvlhState{}, cfg, rng), std::domain_error);
    }

    TEST_CASE("range noise has the configured sigma") {
        const NavConfig cfg;
        GaussianRng rng(2024);
        LvlhState s;
        s.position_m = Vec3(300, 400, 0);
        const int n = 100000;
        double sum = 0, sum2 = 0;
        for (int i = 0; i < n; ++i) {
            const double e = radar_measure(s, cfg, rng).range_m - 500.0;
            sum += e;
            sum2 += e * e;
        }
        const double mean = sum / n;
        const double sigma = std::sqrt(sum2 / n - mean * mean);
        CHECK(sigma == doctest::Approx(1.0).epsilon(0.02));
    }

    TEST_CASE("same seed gives the same measurements") {
        const NavConfig cfg;
        GaussianRng a(9), b(9);
        LvlhState s;
        s.position_m = Vec3(10, 20, 30);
        for (int i = 0; i < 10; ++i) CHECK(radar_measure(s, cfg, a).vector() == radar_measure(s, cfg, b).vector());
    }

    TEST_CASE("Jacobian on the radial axis is the unit line of sight") {
        Vec6 x = Vec6::Zero();
        x(0) = 100.0;
        const auto h = measurement_jacobian(x);
        CHECK(h(0, 0) == doctest::Approx(1.0));
        CHECK(std::abs(h(0, 1)) < 1e-12);
        CHECK(h(0, 2) == 0.0);
        Vec6 axis = Vec6::Zero();
        CHECK_THROWS_AS(measurement_jacobian(axis), std::domain_error);
    }

    TEST_CASE("Jacobian matches central finite differences on random states") {
        GaussianRng rng(77);
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            Vec6 x;
            for (int i = 0; i < 6; ++i) x(i) = rng.normal(0.0, i < 3 ? 1000.0 : 1.0);
            const auto h = measurement_jacobian(x);
            CHECK(h.rightCols<3>().isZero(0.0));
            for (int j = 0; j < 3; ++j) {
                const double step = 1e-4 * x.head<3>().norm();
                Vec6 xp = x, xm = x;
                xp(j) += step;
                xm(j) -= step;
                Vec3 fd = (radar_model(xp) - radar_model(xm)) / (2 * step);
                fd(1) = std::remainder(radar_model(xp)(1) - radar_model(xm)(1), 2 * kPi) / (2 * step);
                for (int i = 0; i < 3; ++i) {
                    const double scale = h.row(i).head<3>().cwiseAbs().maxCoeff();
                    worst = std::max(worst, std::abs(h(i, j) - fd(i)) / scale);
                }
            }
        }
        MESSAGE("worst relative Jacobian mismatch: ", worst);
        CHECK(worst < 1e-5);
    }
}

TEST_SUITE("extended kalman filter") {
    const orbit::BodyConstants c;

    TEST_CASE("zero-length prediction without noise changes nothing") {
        NavConfig cfg;
        cfg.filter_step_s = 0.0;
        EkfEstimate est;
        est.state << 1, 2, 3, 0.1, 0.2, 0.3;
        est.covariance = Mat6::Identity() * 4.0;
        const auto out = ekf_predict(est, cfg, kN778);
        CHECK(out.state == est.state);
        CHECK(out.covariance == est.covariance);
    }

    TEST_CASE("process noise grows the covariance trace") {
        NavConfig cfg;
        cfg.filter_step_s = 0.1;
        cfg.process_noise_q = 1e-6;
        EkfEstimate est;
        const auto out = ekf_predict(est, cfg, kN778);
        CHECK(out.covariance.trace() > est.covariance.trace());
    }

    TEST_CASE("non-SPD covariance is rejected") {
        NavConfig cfg;
        EkfEstimate est;
        est.covariance(0, 0) = -1.0;
        CHECK_THROWS_AS(ekf_predict(est, cfg, kN778), std::invalid_argument);
        est.covariance = Mat6::Identity();
        est.covariance(0, 1) = 0.5;
        CHECK_THROWS_AS(ekf_predict(est, cfg, kN778), std::invalid_argument);
    }

    TEST_CASE("control-aware prediction tracks thrusting truth over 600 s") {
        NavConfig cfg;
        cfg.filter_step_s = 600.0;
        const double n = cfg.mean_motion(c);
        LvlhState rel;
        rel.position_m = Vec3(0.0, 1000.0, 0.0);
        const Pair p = make_pair(cfg, c, rel);
        const TruthStep ts = truth_propagate(p.chief, p.deputy, tangential(0.3), c, 600.0, 1.0);

        EkfEstimate est;
        est.state = rel.flat();
        const auto pred = ekf_predict(est, cfg, n, Vec3(0.0, 0.3 / 420.0, 0.0));
        MESSAGE("along-track: predicted ", pred.state(1), " m, truth ", ts.relative.position_m.y(), " m");
        CHECK(std::abs(pred.state(1) - ts.relative.position_m.y()) < 5.0);
        const auto blind = ekf_predict(est, cfg, n);
        CHECK(std::abs(blind.state(1) - ts.relative.position_m.y()) > 5.0);
    }

    TEST_CASE("update with zero innovation leaves the state alone") {
        const NavConfig cfg;
        EkfEstimate est;
        est.state << 50, 700, -20, 0.1, -0.1, 0.0;
        est.covariance = Vec6(100, 100, 100, 0.01, 0.01, 0.01).asDiagonal();
        const Vec3 h = radar_model(est.state);
        const RadarMeasurement m{h(0), h(1), h(2), 0.0};
        const auto out = ekf_update(est, m, cfg);
        CHECK((out.state - est.state).norm() < 1e-12);
        CHECK(min_eigenvalue(est.covariance - out.covariance) >= -1e-9);
        CHECK(out.covariance.trace() < est.covariance.trace());
    }

    TEST_CASE("an uninformative measurement is a no-op") {
        NavConfig cfg;
        cfg.sigma_range_m *= std::sqrt(1e9);
        cfg.sigma_angle_rad *= std::sqrt(1e9);
        EkfEstimate est;
        est.state << 50, 700, -20, 0.1, -0.1, 0.0;
        est.covariance = Vec6(100, 100, 100, 0.01, 0.01, 0.01).asDiagonal();
        const Vec3 h = radar_model(est.state);
        const RadarMeasurement m{h(0) + 3.0, h(1) + 0.003, h(2) - 0.003, 0.0};
        const auto out = ekf_update(est, m, cfg);
        CHECK((out.state - est.state).norm() < 1e-6);
        CHECK(((out.covariance - est.covariance).array() / est.covariance.diagonal().maxCoeff()).abs().maxCoeff() < 1e-6);
    }

    TEST_CASE("scalar Kalman algebra") {
        Eigen::Matrix<double, 1, 1> x(0.0), p(4.0), innov(2.0), r(4.0);
        Eigen::Matrix<double, 1, 1> h(1.0);
        kalman_update(x, p, innov, h, r);
        CHECK(x(0) == doctest::Approx(1.0));
        CHECK(p(0) == doctest::Approx(2.0));
    }

    TEST_CASE("singular innovation covariance is reported") {
        Eigen::Matrix<double, 1, 1> x(0.0), p(0.0), innov(1.0), r(0.0), h(1.0);
        CHECK_THROWS_AS(kalman_update(x, p, innov, h, r), std::runtime_error);
    }
}

TEST_SUITE("navigation scenarios") {
    const orbit::BodyConstants c;

    NavConfig proximity_config() {
        NavConfig cfg;
        cfg.process_noise_q = 1e-11;
        return cfg;
    }

    TEST_CASE("proximity run meets the error bands and keeps the covariance SPD") {
        const NavConfig cfg = proximity_config();
        NavRunSpec spec;
        spec.initial_relative = default_proximity_start(cfg.mean_motion(c));
        spec.duration_s = 6000.0;
        spec.seed = 42;
        spec.check_covariance = true;
        const auto r = run_nav(cfg, c, spec);
        CHECK(r.position_rmse_m < 10.0);
        CHECK(r.velocity_rmse_ms < 0.03);
        CHECK(r.min_range_m >= 190.0);
        CHECK(r.max_range_m <= 1410.0);
        CHECK(r.samples.size() == 6000);
    }

    TEST_CASE("ten times the range noise raises the error on every seed") {
        const NavConfig base = proximity_config();
        NavConfig noisy = base;
        noisy.sigma_range_m *= 10.0;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const double a = run_proximity_scenario(base, c, 6000.0, seed).position_rmse_m;
            const double b = run_proximity_scenario(noisy, c, 6000.0, seed).position_rmse_m;
            CHECK(b > a);
        }
    }

    TEST_CASE("noise-free run with a perfect start stays on the truth") {
        NavConfig cfg = quiet_config();
        cfg.process_noise_q = 1e-6;
        const auto r = run_proximity_scenario(cfg, c, 6000.0, 42);
        MESSAGE("max position error: ", r.max_position_error_m, " m");
        CHECK(r.max_position_error_m < 1e-3);
    }

    TEST_CASE("NEES over twenty seeds lies in the chi-square band") {
        const NavConfig cfg = proximity_config();
        double sum = 0.0;
        for (std::uint64_t seed = 42; seed < 62; ++seed) sum += run_proximity_scenario(cfg, c, 6000.0, seed).mean_nees;
        const auto [lo, hi] = nees_band(6, 20, 0.95);
        MESSAGE("mean NEES ", sum / 20, " band [", lo, ", ", hi, "]");
        CHECK(sum / 20 >= lo);
        CHECK(sum / 20 <= hi);
    }

    TEST_CASE("chi-square quantiles") {
        CHECK(chi2_quantile(0.975, 120) == doctest::Approx(152.211).epsilon(5e-4));
        CHECK(chi2_quantile(0.025, 120) == doctest::Approx(91.573).epsilon(5e-4));
        CHECK(chi2_quantile(0.5, 6) == doctest::Approx(5.348).epsilon(2e-3));
        const auto [lo, hi] = nees_band(6, 20, 0.95);
        CHECK(lo == doctest::Approx(4.579).epsilon(1e-3));
        CHECK(hi == doctest::Approx(7.611).epsilon(1e-3));
        CHECK_THROWS_AS(nees_band(0, 20, 0.95), std::invalid_argument);
    }

    NavConfig thrusting(double thrust_n) {
        NavConfig cfg;
        cfg.process_noise_q = 1e-10;
        cfg.thrust_n = thrust_n;
        return cfg;
    }

    TEST_CASE("cw-only filter diverges under 0.3 N thrust; thrust-aware does not") {
        const auto cw = run_longduration_scenario(thrusting(0.3), c, 3600.0, 42, FilterVariant::cw_only);
        CHECK(cw.position_rmse_m >= 30.0);
        CHECK(cw.position_rmse_m <= 500.0);
        CHECK(cw.error_growth_ratio > 1.0);
        for (std::uint64_t seed = 42; seed < 62; ++seed) {
            const auto a = run_longduration_scenario(thrusting(0.3), c, 3600.0, seed, FilterVariant::cw_only);
            const auto b = run_longduration_scenario(thrusting(0.3), c, 3600.0, seed, FilterVariant::thrust_aware);
            CHECK(b.position_rmse_m < a.position_rmse_m);
        }
    }

    TEST_CASE("variants coincide without thrust") {
        const auto a = run_longduration_scenario(thrusting(0.0), c, 3600.0, 42, FilterVariant::cw_only);
        const auto b = run_longduration_scenario(thrusting(0.0), c, 3600.0, 42, FilterVariant::thrust_aware);
        CHECK(std::abs(a.position_rmse_m - b.position_rmse_m) <= 1e-9);
        CHECK(a.samples.back().position_error_m == b.samples.back().position_error_m);
    }

    TEST_CASE("cw-only error grows with thrust magnitude") {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            double prev = -1.0;
            for (double thrust : {0.0, 0.1, 0.3}) {
                const double rmse =
                    run_longduration_scenario(thrusting(thrust), c, 3600.0, seed, FilterVariant::cw_only).position_rmse_m;
                CHECK(rmse > prev);
                prev = rmse;
            }
        }
    }

    TEST_CASE("configuration invariants") {
        NavConfig cfg;
        CHECK_NOTHROW(cfg.validate());
        NavConfig a = cfg;
        a.sigma_range_m = 0.0;
        CHECK_THROWS_AS(a.validate(), std::invalid_argument);
        NavConfig b = cfg;
        b.filter_step_s = -1.0;
        CHECK_THROWS_AS(b.validate(), std::invalid_argument);
    }
}
