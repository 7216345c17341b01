#pragma once

// Post-processing: settling/overshoot metrics, critical-clearing-time search,
// Lyapunov robustness margins for the linearized xi-chain, and the exactness
// residuals that certify the feedback-linearizing laws.

#include "smib/sim.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace smib {

struct Metrics {
    double settling_time_2pct = 0.0;  // measured from t_ref [s]
    double first_swing_peak = 0.0;    // signal value at the first extremum
    double first_swing_time = 0.0;    // absolute time of the first extremum [s]
    double overshoot_pct = 0.0;
    bool backswing_detected = false;
    double final_value = 0.0;
};

struct MetricsOptions {
    double band_frac = 0.02;       // settling band as fraction of peak deviation
    double backswing_frac = 0.10;  // backswing threshold vs first-swing amplitude
};

Metrics compute_metrics(std::span<const double> t, std::span<const double> signal,
                        double t_ref, std::optional<double> final_value = {},
                        const MetricsOptions& opt = {});

struct CctOptions {
    double fault_start = 0.6;
    double horizon = 8.0;
    double lo = 0.1;
    double hi = 1.5;
    double tol = 1e-3;
    double dt = 1e-4;
};

struct CctProbe {
    double duration;
    bool stable;
};

struct CctResult {
    double cct;  // largest stable fault duration found
    std::vector<CctProbe> probes;
};

// Bisection on fault duration; throws ModelError unless lo is stable and hi
// is unstable.
CctResult cct_search(const MachineParams& params, const OperatingPoint& op,
                     ControllerKind controller, const ControllerSet& gains,
                     const CctOptions& opt);

struct LyapunovReport {
    Eigen::Matrix3d A;
    Eigen::Matrix3d P;
    Eigen::Matrix3d Q;
    double gamma1_max;           // lmin(Q) / (4 |PB|_2)
    double ultimate_bound_coeff; // 8 |PB|_2 / lmin(Q); bound radius = coeff * gamma2
};

// Solves P A + A^T P = -Q via the 9x9 Kronecker system; A must be Hurwitz and
// Q symmetric positive definite, and the returned P is SPD.
Eigen::Matrix3d solve_lyapunov(const Eigen::Matrix3d& A, const Eigen::Matrix3d& Q);

// Builds the closed-loop chain matrix (diagonal -lambda_i, superdiagonal 1),
// B = (0,0,1)^T, and the perturbation margins.
LyapunovReport robustness_margin(const std::array<double, 3>& lambdas,
                                 const Eigen::Matrix3d& Q);

// Max |r_i| / max|signal_i| where r_i = d/dt signal_i - rhs_i, derivatives by
// 4th-order central differences on the uniform grid. Needs >= 10 samples.
std::vector<double> chain_residuals(double dt,
                                    std::span<const std::vector<double>> signals,
                                    std::span<const std::vector<double>> rhs);

// Convenience: bsfl xi-chain residuals for a recorded trajectory.
std::vector<double> bsfl_chain_residuals(const TimeSeries& series, const BsflGains& gains,
                                         const Coefficients& coeffs, const Equilibrium& eq);

// dfl z-chain residuals (z3-dot vs the commanded v).
std::vector<double> dfl_chain_residuals(const TimeSeries& series, const DflGains& gains,
                                        const Coefficients& coeffs, const Equilibrium& eq);

// Empirical gamma1 estimate: max ||delta(xi)||/||xi|| over sampled deviation
// states when the nominal bsfl law drives a plant with perturbed parameters.
double estimate_gamma1(const MachineParams& nominal, const MachineParams& perturbed,
                       const OperatingPoint& op, const BsflGains& gains,
                       int n_samples = 200, unsigned seed = 1);

}  // namespace smib
