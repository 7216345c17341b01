#include "smib/analysis.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

using namespace smib;

namespace {

const MachineParams kParams{};
const OperatingPoint kOp{};

// Uniform grid helper.
struct Grid {
    std::vector<double> t;
    std::vector<double> s;
};

template <typename F>
Grid sample(F&& f, double t0, double t1, double dt) {
    Grid g;
    for (double t = t0; t <= t1 + 0.5 * dt; t += dt) {
        g.t.push_back(t);
        g.s.push_back(f(t));
    }
    return g;
}

}  // namespace

TEST_CASE("metrics: damped sinusoid against the analytic envelope") {
    const double F = 1.3, A = 0.4, sigma = 1.0, omega = 8.0;
    const auto f = [&](double t) { return F + A * std::exp(-sigma * t) * std::cos(omega * t); };
    const double dt = 1e-4;
    const Grid g = sample(f, 0.0, 12.0, dt);
    const Metrics m = compute_metrics(g.t, g.s, 0.0, F);

    // Independent settling oracle: brute-force scan of the analytic signal on a
    // finer grid for the last excursion beyond 2% of the peak deviation (A).
    const double band = 0.02 * A;
    double last_out = 0.0;
    for (double t = 12.0; t >= 0.0; t -= dt / 4.0) {
        if (std::abs(f(t) - F) > band) {
            last_out = t;
            break;
        }
    }
    CHECK(m.final_value == doctest::Approx(F));
    CHECK(std::abs(m.settling_time_2pct - last_out) < 2 * dt);

    // First extremum of e^{-sigma t} cos(omega t): omega t = pi - atan(sigma/omega).
    const double t_peak = (M_PI - std::atan(sigma / omega)) / omega;
    CHECK(std::abs(m.first_swing_time - t_peak) < 2 * dt);
    CHECK(std::abs(m.first_swing_peak - f(t_peak)) < 1e-6);

    // The signal steps from F+A down to F; the first trough undershoots, which
    // counts as overshoot past the final value.
    const double expected_overshoot = 100.0 * (F - f(t_peak)) / A;
    CHECK(m.overshoot_pct == doctest::Approx(expected_overshoot).epsilon(1e-3));
    CHECK(m.backswing_detected);
}

TEST_CASE("metrics: monotone first-order response") {
    const double F = 0.96, A = 0.16, tau = 0.3;
    const auto f = [&](double t) { return F - A * std::exp(-t / tau); };
    const double dt = 1e-4;
    const Grid g = sample(f, 0.0, 5.0, dt);
    const Metrics m = compute_metrics(g.t, g.s, 0.0, F);

    // Deviation decays monotonically: settling at tau*ln(50), no overshoot,
    // no backswing, and the largest deviation sits at t_ref itself.
    CHECK(std::abs(m.settling_time_2pct - tau * std::log(50.0)) < 2 * dt);
    CHECK(std::abs(m.overshoot_pct) < 1e-9);
    CHECK_FALSE(m.backswing_detected);
    CHECK(m.first_swing_peak == doctest::Approx(F - A));
}

TEST_CASE("metrics: time shift of t_ref only shifts the settling time") {
    const auto f = [&](double t) { return 2.0 + std::exp(-3.0 * (t - 1.0)) * (t >= 1.0 ? 1.0 : 0.0); };
    const Grid g = sample(f, 0.0, 6.0, 1e-3);
    const Metrics m = compute_metrics(g.t, g.s, 1.0, 2.0);
    const double expect = std::log(50.0) / 3.0;
    CHECK(std::abs(m.settling_time_2pct - expect) < 5e-3);
}

TEST_CASE("metrics: constant signal reports zeros") {
    const Grid g = sample([](double) { return 0.7; }, 0.0, 1.0, 1e-3);
    const Metrics m = compute_metrics(g.t, g.s, 0.0);
    CHECK(m.final_value == doctest::Approx(0.7));
    CHECK(m.settling_time_2pct == 0.0);
    CHECK(m.overshoot_pct == 0.0);
    CHECK_FALSE(m.backswing_detected);
}

TEST_CASE("metrics: signal still outside the band at the end throws") {
    const Grid g = sample([](double t) { return std::sin(t); }, 0.0, 10.0, 1e-3);
    CHECK_THROWS_WITH_AS(compute_metrics(g.t, g.s, 0.0, 0.0),
                         "metrics: signal never enters the settling band", ModelError);
}

TEST_CASE("metrics: input validation") {
    std::vector<double> t{0.0, 1.0}, s{0.0};
    CHECK_THROWS_AS(compute_metrics(t, s, 0.0), ModelError);
    std::vector<double> t2{0.0, 1.0}, s2{0.0, 0.0};
    CHECK_THROWS_AS(compute_metrics(t2, s2, 5.0), ModelError);
}

TEST_CASE("cct: bisection agrees with a brute-force scan") {
    ControllerSet gains{};
    CctOptions opt;
    opt.lo = 0.05;
    opt.hi = 0.6;
    opt.tol = 0.01;
    opt.dt = 1e-3;
    opt.horizon = 6.0;
    const CctResult r = cct_search(kParams, kOp, ControllerKind::Bsfl, gains, opt);

    const auto stable_for = [&](double dur) {
        Scenario sc;
        sc.duration = opt.horizon;
        sc.dt = opt.dt;
        sc.record_stride = 1000;
        sc.controller = ControllerKind::Bsfl;
        sc.events = {{opt.fault_start, Event::Kind::ApplyFault, 1.0},
                     {opt.fault_start + dur, Event::Kind::ClearFault, 1.0}};
        return run_scenario(sc, kParams, kOp, gains).stable;
    };
    // The reported CCT is the largest probed stable duration; one tol beyond
    // must be unstable.
    CHECK(stable_for(r.cct));
    CHECK_FALSE(stable_for(r.cct + 2.0 * opt.tol));
    // Bisection bracket bookkeeping: every probe at or below cct that ran is
    // consistent with the final answer.
    for (const CctProbe& p : r.probes) {
        if (p.duration <= r.cct) CHECK(p.stable);
        if (p.duration > r.cct + opt.tol) CHECK_FALSE(p.stable);
    }
}

TEST_CASE("cct: invalid brackets and options throw") {
    ControllerSet gains{};
    CctOptions opt;
    opt.dt = 1e-3;
    opt.tol = 1e-2;
    opt.horizon = 6.0;

    opt.lo = 0.5;  // already unstable for bsfl at this operating point
    opt.hi = 1.0;
    CHECK_THROWS_AS(cct_search(kParams, kOp, ControllerKind::Bsfl, gains, opt), ModelError);

    opt.lo = 0.01;  // both ends stable
    opt.hi = 0.05;
    CHECK_THROWS_AS(cct_search(kParams, kOp, ControllerKind::Bsfl, gains, opt), ModelError);

    opt.lo = 0.2;
    opt.hi = 0.1;
    CHECK_THROWS_AS(cct_search(kParams, kOp, ControllerKind::Bsfl, gains, opt), ModelError);

    opt.lo = 0.05;
    opt.hi = 0.6;
    opt.tol = 1e-5;  // below dt
    CHECK_THROWS_AS(cct_search(kParams, kOp, ControllerKind::Bsfl, gains, opt), ModelError);
}

TEST_CASE("lyapunov: closed-form cases are exact") {
    const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
    // A = -I: P A + A^T P = -2P = -Q, so P = Q/2.
    Eigen::Matrix3d P = solve_lyapunov(-I, I);
    CHECK((P - 0.5 * I).cwiseAbs().maxCoeff() < 1e-12);

    // Diagonal A: P_ii = q_ii / (2 |a_ii|).
    Eigen::Matrix3d A = Eigen::Vector3d(-5.0, -10.0, -15.0).asDiagonal();
    P = solve_lyapunov(A, I);
    Eigen::Matrix3d expect = Eigen::Vector3d(0.1, 0.05, 1.0 / 30.0).asDiagonal();
    CHECK((P - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("lyapunov: random Hurwitz matrices satisfy the equation") {
    Eigen::Matrix3d A;
    A << -4.0, 1.2, 0.3, -0.5, -6.0, 2.0, 0.7, -0.2, -9.0;
    Eigen::Matrix3d Q;
    Q << 2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 3.0;
    const Eigen::Matrix3d P = solve_lyapunov(A, Q);
    CHECK((P * A + A.transpose() * P + Q).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((P - P.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(P).eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("lyapunov: rejects bad inputs") {
    const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
    Eigen::Matrix3d nonsym = I;
    nonsym(0, 1) = 0.5;
    CHECK_THROWS_AS(solve_lyapunov(-I, nonsym), ModelError);
    CHECK_THROWS_AS(solve_lyapunov(-I, -I), ModelError);  // Q not PD
    CHECK_THROWS_AS(solve_lyapunov(I, I), ModelError);    // A not Hurwitz
}

TEST_CASE("robustness margin: chain matrix, scaling invariance, positivity") {
    const std::array<double, 3> lambdas{5.0, 10.0, 15.0};
    const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
    const LyapunovReport rep = robustness_margin(lambdas, I);

    Eigen::Matrix3d A;
    A << -5.0, 1.0, 0.0, 0.0, -10.0, 1.0, 0.0, 0.0, -15.0;
    CHECK((rep.A - A).cwiseAbs().maxCoeff() == 0.0);
    CHECK((rep.P * A + A.transpose() * rep.P + I).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(rep.gamma1_max > 0.0);
    CHECK(rep.ultimate_bound_coeff > 0.0);
    // gamma1_max * ultimate_bound_coeff = 2 identically.
    CHECK(rep.gamma1_max * rep.ultimate_bound_coeff == doctest::Approx(2.0).epsilon(1e-12));

    // Scaling Q by a constant rescales P identically, so both margins are
    // invariant.
    const LyapunovReport scaled = robustness_margin(lambdas, 7.0 * I);
    CHECK(scaled.gamma1_max == doctest::Approx(rep.gamma1_max).epsilon(1e-10));
    CHECK(scaled.ultimate_bound_coeff ==
          doctest::Approx(rep.ultimate_bound_coeff).epsilon(1e-10));

    CHECK_THROWS_AS(robustness_margin({5.0, -1.0, 15.0}, I), ModelError);
}

TEST_CASE("chain residuals: synthetic exact chain is near machine precision") {
    // Analytic solution of xi' = A xi for the upper-bidiagonal chain with
    // distinct poles, so the residual should be limited only by the 4th-order
    // difference stencil.
    const double l1 = 1.0, l2 = 2.0, l3 = 3.0;
    const double dt = 1e-3;
    const int n = 2001;
    std::vector<std::vector<double>> sig(3, std::vector<double>(n));
    std::vector<std::vector<double>> rhs(3, std::vector<double>(n));
    // Start from xi3(0)=1 and integrate the cascade exactly: each stage is a
    // sum of exponentials with distinct rates.
    for (int i = 0; i < n; ++i) {
        const double t = i * dt;
        const double e1 = std::exp(-l1 * t), e2 = std::exp(-l2 * t), e3 = std::exp(-l3 * t);
        const double xi3 = e3;
        const double xi2 = (e2 - e3) / (l3 - l2);
        const double xi1 = (e1 - e2) / ((l2 - l1) * (l3 - l2)) -
                           (e1 - e3) / ((l3 - l1) * (l3 - l2));
        sig[0][i] = xi1;
        sig[1][i] = xi2;
        sig[2][i] = xi3;
        rhs[0][i] = -l1 * xi1 + xi2;
        rhs[1][i] = -l2 * xi2 + xi3;
        rhs[2][i] = -l3 * xi3;
    }
    const std::vector<double> res = chain_residuals(dt, sig, rhs);
    for (double r : res) CHECK(r < 1e-9);

    // An injected rhs violation is picked up and scaled by the signal norm.
    rhs[2][n / 2] += 0.5;
    const std::vector<double> bad = chain_residuals(dt, sig, rhs);
    CHECK(bad[2] > 0.1);
}

TEST_CASE("chain residuals: input validation") {
    std::vector<std::vector<double>> sig(3, std::vector<double>(5));
    std::vector<std::vector<double>> rhs(3, std::vector<double>(5));
    CHECK_THROWS_WITH_AS(chain_residuals(1e-3, sig, rhs),
                         "residuals: segment too short (< 10 samples)", ModelError);
    std::vector<std::vector<double>> sig2(3, std::vector<double>(20));
    std::vector<std::vector<double>> rhs2(2, std::vector<double>(20));
    CHECK_THROWS_AS(chain_residuals(1e-3, sig2, rhs2), ModelError);
    std::vector<std::vector<double>> rhs3(3, std::vector<double>(20));
    rhs3[1].resize(19);
    CHECK_THROWS_AS(chain_residuals(1e-3, sig2, rhs3), ModelError);
}

TEST_CASE("chain residuals: recorded bsfl and dfl trajectories close the loop") {
    ControllerSet gains{};
    const Equilibrium eq = compute_equilibrium(kParams, kOp);
    const Coefficients c = compute_coefficients(kParams, eq);

    Scenario sc;
    sc.duration = 2.0;
    sc.dt = 1e-4;
    sc.record_stride = 1;
    sc.init_dev = {0.05, 0.0, 0.0};

    sc.controller = ControllerKind::Bsfl;
    SimOutcome out = run_scenario(sc, kParams, kOp, gains);
    REQUIRE(out.stable);
    for (std::size_t i = 0; i < out.series.size(); ++i) {
        REQUIRE_FALSE(out.series.sat[i]);
        REQUIRE_FALSE(out.series.guard[i]);
    }
    std::vector<double> res = bsfl_chain_residuals(out.series, gains.bsfl, c, eq);
    REQUIRE(res.size() == 3);
    for (double r : res) CHECK(r < 1e-5);

    sc.controller = ControllerKind::Dfl;
    out = run_scenario(sc, kParams, kOp, gains);
    REQUIRE(out.stable);
    for (std::size_t i = 0; i < out.series.size(); ++i) REQUIRE_FALSE(out.series.sat[i]);
    res = dfl_chain_residuals(out.series, gains.dfl, c, eq);
    REQUIRE(res.size() == 3);
    for (double r : res) CHECK(r < 1e-5);
}

TEST_CASE("chain residuals: a saturated run violates the nominal chain") {
    ControllerSet gains{};
    const Equilibrium eq = compute_equilibrium(kParams, kOp);
    const Coefficients c = compute_coefficients(kParams, eq);

    Scenario sc;
    sc.duration = 1.2;
    sc.dt = 1e-4;
    sc.record_stride = 1;
    sc.controller = ControllerKind::Bsfl;
    sc.events = {{0.2, Event::Kind::ApplyFault, 1.0}, {0.3, Event::Kind::ClearFault, 1.0}};
    const SimOutcome out = run_scenario(sc, kParams, kOp, gains);
    bool any_sat = false;
    for (std::size_t i = 0; i < out.series.size(); ++i) any_sat |= (out.series.sat[i] != 0);
    REQUIRE(any_sat);
    const std::vector<double> res = bsfl_chain_residuals(out.series, gains.bsfl, c, eq);
    CHECK(res[2] > 1e-2);  // ceiling clipping breaks the xi3 equation
}

TEST_CASE("gamma1 estimate: zero for the nominal plant, positive under mismatch") {
    ControllerSet gains{};
    const double nominal = estimate_gamma1(kParams, kParams, kOp, gains.bsfl, 100, 7);
    CHECK(nominal < 1e-4);  // limited only by the finite-difference gradient

    MachineParams perturbed = kParams;
    perturbed.xe *= 1.2;
    const double mismatched = estimate_gamma1(kParams, perturbed, kOp, gains.bsfl, 100, 7);
    CHECK(mismatched > 10.0 * std::max(nominal, 1e-12));
    CHECK(std::isfinite(mismatched));
}
