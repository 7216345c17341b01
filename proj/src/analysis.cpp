#include "smib/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace smib {

namespace {

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

Eigen::Matrix<double, 9, 9> kron3(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
    Eigen::Matrix<double, 9, 9> out;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            out.block<3, 3>(3 * i, 3 * j) = a(i, j) * b;
    return out;
}

}  // namespace

Metrics compute_metrics(std::span<const double> t, std::span<const double> signal,
                        double t_ref, std::optional<double> final_value,
                        const MetricsOptions& opt) {
    if (t.size() != signal.size() || t.size() < 2)
        throw ModelError("metrics: need matching t/signal columns with >= 2 samples");
    std::size_t i_ref = 0;
    while (i_ref < t.size() && t[i_ref] < t_ref) ++i_ref;
    if (t.size() - i_ref < 2) throw ModelError("metrics: t_ref beyond the recording");

    const std::size_t n = t.size();
    Metrics m;
    if (final_value) {
        m.final_value = *final_value;
    } else {
        const std::size_t tail = std::max<std::size_t>(1, (n - i_ref) / 20);
        double sum = 0.0;
        for (std::size_t i = n - tail; i < n; ++i) sum += signal[i];
        m.final_value = sum / static_cast<double>(tail);
    }

    double scale = 0.0;
    for (std::size_t i = i_ref; i < n; ++i)
        scale = std::max(scale, std::abs(signal[i] - m.final_value));
    if (scale <= 1e-12 * std::max(1.0, std::abs(m.final_value)))
        return m;  // constant signal (up to roundoff in the tail average)

    const double band = opt.band_frac * scale;

    // Settling: last sample outside the +-band around the final value.
    std::size_t last_out = n;  // sentinel: never outside
    for (std::size_t i = n; i-- > i_ref;) {
        if (std::abs(signal[i] - m.final_value) > band) {
            last_out = i;
            break;
        }
    }
    if (last_out == n - 1)
        throw ModelError("metrics: signal never enters the settling band");
    if (last_out != n) m.settling_time_2pct = t[last_out] - t_ref;

    // First local extremum of the deviation after t_ref.
    std::size_t i_peak = 0;
    bool have_peak = false;
    for (std::size_t i = i_ref + 1; i + 1 < n; ++i) {
        const double d0 = signal[i] - signal[i - 1];
        const double d1 = signal[i + 1] - signal[i];
        if (d0 * d1 <= 0.0 && std::abs(signal[i] - m.final_value) > band) {
            i_peak = i;
            have_peak = true;
            break;
        }
    }
    if (!have_peak) {  // monotone approach: use the largest deviation
        double best = -1.0;
        for (std::size_t i = i_ref; i < n; ++i) {
            const double d = std::abs(signal[i] - m.final_value);
            if (d > best) {
                best = d;
                i_peak = i;
            }
        }
    }
    m.first_swing_peak = signal[i_peak];
    m.first_swing_time = t[i_peak];

    // Overshoot: excursion past the final value, relative to the step size.
    const double initial = signal[i_ref];
    const double step = m.final_value - initial;
    if (std::abs(step) > 1e-9 * std::max(1.0, scale)) {
        const double sgn = step > 0.0 ? 1.0 : -1.0;
        double excess = 0.0;
        for (std::size_t i = i_ref; i < n; ++i)
            excess = std::max(excess, (signal[i] - m.final_value) * sgn);
        m.overshoot_pct = 100.0 * excess / std::abs(step);
    }

    // Backswing: opposite-sign excursion after the first swing.
    const double dev_peak = m.first_swing_peak - m.final_value;
    const double a1 = std::abs(dev_peak);
    if (a1 > 0.0) {
        const double sgn = dev_peak > 0.0 ? 1.0 : -1.0;
        for (std::size_t i = i_peak + 1; i < n; ++i) {
            if ((signal[i] - m.final_value) * -sgn > opt.backswing_frac * a1) {
                m.backswing_detected = true;
                break;
            }
        }
    }
    return m;
}

CctResult cct_search(const MachineParams& params, const OperatingPoint& op,
                     ControllerKind controller, const ControllerSet& gains,
                     const CctOptions& opt) {
    if (opt.tol < opt.dt) throw ModelError("cct: tol must be >= dt");
    if (!(opt.lo < opt.hi)) throw ModelError("cct: need lo < hi");
    if (opt.lo <= 0.0) throw ModelError("cct: lo must be positive");

    CctResult result;
    const auto snap = [&](double d) {
        return std::round(d / opt.dt) * opt.dt;
    };
    const auto probe = [&](double dur) {
        Scenario sc;
        sc.duration = opt.horizon;
        sc.dt = opt.dt;
        sc.record_stride = 1000;
        sc.controller = controller;
        sc.events = {{snap(opt.fault_start), Event::Kind::ApplyFault, 1.0},
                     {snap(opt.fault_start + dur), Event::Kind::ClearFault, 1.0}};
        const bool stable = run_scenario(sc, params, op, gains).stable;
        result.probes.push_back({dur, stable});
        return stable;
    };

    double lo = snap(opt.lo);
    double hi = snap(opt.hi);
    if (!probe(lo))
        throw ModelError("cct: bracket invalid, fault of duration lo is already unstable");
    if (probe(hi))
        throw ModelError("cct: bracket invalid, fault of duration hi is still stable");

    while (hi - lo > opt.tol) {
        const double mid = snap(0.5 * (lo + hi));
        if (mid <= lo || mid >= hi) break;
        if (probe(mid))
            lo = mid;
        else
            hi = mid;
    }
    result.cct = lo;
    return result;
}

Eigen::Matrix3d solve_lyapunov(const Eigen::Matrix3d& A, const Eigen::Matrix3d& Q) {
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + Q.cwiseAbs().maxCoeff()))
        throw ModelError("lyapunov: Q must be symmetric");
    if (Eigen::LLT<Eigen::Matrix3d>(Q).info() != Eigen::Success)
        throw ModelError("lyapunov: Q must be positive definite");
    const Eigen::EigenSolver<Eigen::Matrix3d> es(A);
    for (int i = 0; i < 3; ++i)
        if (es.eigenvalues()(i).real() >= 0.0)
            throw ModelError("lyapunov: A is not Hurwitz");

    // vec(PA + A^T P) = (A^T (x) I + I (x) A^T) vec(P), column-major vec.
    const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
    const Eigen::Matrix<double, 9, 9> M =
        kron3(A.transpose(), I) + kron3(I, A.transpose());
    Eigen::Matrix<double, 9, 1> q;
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i) q(3 * j + i) = -Q(i, j);

    const Eigen::FullPivLU<Eigen::Matrix<double, 9, 9>> lu(M);
    if (!lu.isInvertible()) throw ModelError("lyapunov: singular Kronecker system");
    const Eigen::Matrix<double, 9, 1> p = lu.solve(q);

    Eigen::Matrix3d P;
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i) P(i, j) = p(3 * j + i);
    P = 0.5 * (P + P.transpose()).eval();

    const double resid = (P * A + A.transpose() * P + Q).cwiseAbs().maxCoeff();
    if (resid > 1e-10 * std::max(1.0, Q.cwiseAbs().maxCoeff()))
        throw ModelError("lyapunov: residual check failed");
    if (Eigen::LLT<Eigen::Matrix3d>(P).info() != Eigen::Success)
        throw ModelError("lyapunov: P is not positive definite");
    return P;
}

LyapunovReport robustness_margin(const std::array<double, 3>& lambdas,
                                 const Eigen::Matrix3d& Q) {
    for (double l : lambdas)
        if (l <= 0.0) throw ModelError("lyapunov: closed-loop poles must be positive");
    LyapunovReport rep;
    rep.A = Eigen::Matrix3d::Zero();
    rep.A(0, 0) = -lambdas[0];
    rep.A(1, 1) = -lambdas[1];
    rep.A(2, 2) = -lambdas[2];
    rep.A(0, 1) = 1.0;
    rep.A(1, 2) = 1.0;
    rep.Q = Q;
    rep.P = solve_lyapunov(rep.A, Q);
    const double pb_norm = rep.P.col(2).norm();  // B = (0,0,1)^T
    const double lmin =
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(Q).eigenvalues().minCoeff();
    rep.gamma1_max = lmin / (4.0 * pb_norm);
    rep.ultimate_bound_coeff = 8.0 * pb_norm / lmin;
    return rep;
}

std::vector<double> chain_residuals(double dt,
                                    std::span<const std::vector<double>> signals,
                                    std::span<const std::vector<double>> rhs) {
    if (signals.empty() || signals.size() != rhs.size())
        throw ModelError("residuals: signal/rhs column mismatch");
    const std::size_t n = signals[0].size();
    if (n < 10) throw ModelError("residuals: segment too short (< 10 samples)");

    std::vector<double> out;
    for (std::size_t k = 0; k < signals.size(); ++k) {
        const std::vector<double>& s = signals[k];
        const std::vector<double>& r = rhs[k];
        if (s.size() != n || r.size() != n)
            throw ModelError("residuals: ragged columns");
        const double scale = std::max(max_abs(s), 1e-300);
        double worst = 0.0;
        for (std::size_t i = 2; i + 2 < n; ++i) {
            const double d =
                (-s[i + 2] + 8.0 * s[i + 1] - 8.0 * s[i - 1] + s[i - 2]) / (12.0 * dt);
            worst = std::max(worst, std::abs(d - r[i]));
        }
        out.push_back(worst / scale);
    }
    return out;
}

std::vector<double> bsfl_chain_residuals(const TimeSeries& series, const BsflGains& gains,
                                         const Coefficients& coeffs, const Equilibrium& eq) {
    const std::size_t n = series.size();
    std::vector<std::vector<double>> sig(3, std::vector<double>(n));
    std::vector<std::vector<double>> rhs(3, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const DevState x{series.delta[i] - eq.delta0, series.domega[i],
                         series.eqp[i] - eq.eqp0};
        const XiVector xi = bsfl_transform(x, gains, coeffs, eq);
        sig[0][i] = xi.xi1;
        sig[1][i] = xi.xi2;
        sig[2][i] = xi.xi3;
        rhs[0][i] = -gains.l1 * xi.xi1 + xi.xi2;
        rhs[1][i] = -gains.l2 * xi.xi2 + xi.xi3;
        rhs[2][i] = -gains.l3 * xi.xi3;
    }
    const double dt = series.t[1] - series.t[0];
    return chain_residuals(dt, sig, rhs);
}

std::vector<double> dfl_chain_residuals(const TimeSeries& series, const DflGains& gains,
                                        const Coefficients& coeffs, const Equilibrium& eq) {
    const std::size_t n = series.size();
    std::vector<std::vector<double>> sig(3, std::vector<double>(n));
    std::vector<std::vector<double>> rhs(3, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const DevState x{series.delta[i] - eq.delta0, series.domega[i],
                         series.eqp[i] - eq.eqp0};
        const ZVector z = dfl_transform(x, coeffs, eq);
        sig[0][i] = z.z1;
        sig[1][i] = z.z2;
        sig[2][i] = z.z3;
        rhs[0][i] = z.z2;
        rhs[1][i] = z.z3;
        rhs[2][i] = -(gains.k1 * z.z1 + gains.k2 * z.z2 + gains.k3 * z.z3);
    }
    const double dt = series.t[1] - series.t[0];
    return chain_residuals(dt, sig, rhs);
}

double estimate_gamma1(const MachineParams& nominal, const MachineParams& perturbed,
                       const OperatingPoint& op, const BsflGains& gains,
                       int n_samples, unsigned seed) {
    const Equilibrium eq_n = compute_equilibrium(nominal, op);
    const Coefficients c_n = compute_coefficients(nominal, eq_n);
    const Equilibrium eq_p = compute_equilibrium(perturbed, op);
    const Coefficients c_p = compute_coefficients(perturbed, eq_p);

    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u1(-0.3, 0.3);
    std::uniform_real_distribution<double> u2(-0.05, 0.05);
    std::uniform_real_distribution<double> u3(-0.3, 0.3);

    double worst = 0.0;
    for (int k = 0; k < n_samples; ++k) {
        const DevState x{u1(rng), u2(rng), u3(rng)};
        if (std::abs(std::sin(x[0] + eq_n.delta0)) < gains.sin_eps) continue;
        const XiVector xi = bsfl_transform(x, gains, c_n, eq_n);
        const double xi_norm =
            std::sqrt(xi.xi1 * xi.xi1 + xi.xi2 * xi.xi2 + xi.xi3 * xi.xi3);
        if (xi_norm < 1e-12) continue;

        // Nominal law applied to the perturbed plant, in the nominal frame.
        const ControlResult cr =
            bsfl_control(x, gains, c_n, eq_n, nominal, eq_n.efd0);
        // Saturated or guarded samples measure ceiling clipping, not the
        // model mismatch this estimate is after.
        if (cr.sat || cr.guard) continue;
        const PlantState ps{x[0] + eq_n.delta0, x[1], x[2] + eq_n.eqp0};
        const StateDeriv d = plant_derivatives(ps, cr.efd, NetworkMode::Normal,
                                               perturbed, eq_p, c_p, eq_n.pm);

        // xi3-dot = grad_x(xi3) . xdot, gradient by central differences.
        const double h = 1e-6;
        double grad[3];
        for (int j = 0; j < 3; ++j) {
            DevState xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            grad[j] = (bsfl_transform(xp, gains, c_n, eq_n).xi3 -
                       bsfl_transform(xm, gains, c_n, eq_n).xi3) /
                      (2.0 * h);
        }
        const double xi3dot = grad[0] * d[0] + grad[1] * d[1] + grad[2] * d[2];
        const double delta_err = xi3dot + gains.l3 * xi.xi3;
        worst = std::max(worst, std::abs(delta_err) / xi_norm);
    }
    return worst;
}

}  // namespace smib
