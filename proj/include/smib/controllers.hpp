#pragma once

// The three excitation controllers compared in this toolkit:
//   bsfl — backstepping feedback linearization (exact xi-chain linearization)
//   dfl  — direct feedback linearization with linear state feedback
//   cpss — conventional AVR + thyristor exciter + speed-input PSS
// All produce a field voltage E_fd clamped to the machine ceiling.

#include "smib/model.hpp"

#include <array>

namespace smib {

struct BsflGains {
    double l1 = 5.0;   // closed-loop pole magnitudes, all > 0
    double l2 = 10.0;
    double l3 = 15.0;
    double sin_eps = 1e-3;  // singularity guard on |sin(x1 + delta0)|

    void validate() const;
};

struct DflGains {
    double k1 = 1100.0;
    double k2 = 185.0;
    double k3 = 11.0;
    double sin_eps = 1e-3;

    // Throws unless s^3 + k3 s^2 + k2 s + k1 is Hurwitz.
    void validate() const;
};

struct CpssParams {
    double ke = 400.0;     // amplifier gain
    double te = 0.05;      // amplifier time constant [s]
    double kfe = 0.025;    // derivative-feedback gain
    double tfe = 1.0;      // derivative-feedback time constant [s]
    double tr = 0.6e-3;    // transducer time constant [s]
    double kstab = 17.57;  // stabilizer gain
    double tw = 6.6;       // washout time [s]
    double t1 = 1.48, t2 = 0.33, t3 = 3.55, t4 = 11.57;  // lead-lag [s]
    double vpss_max = 0.15, vpss_min = -0.15;
    double efd_max = 4.5, efd_min = -4.5;
    double vref = 0.0;  // back-computed by cpss_init

    void validate() const;
};

struct CpssState {
    double x_tr;   // transducer
    double x_w;    // washout
    double x_ll1;  // first lead-lag
    double x_ll2;  // second lead-lag
    double x_amp;  // amplifier output (efd before ceiling)
    double x_fb;   // derivative feedback
};

using CpssDeriv = std::array<double, 6>;

struct XiVector {
    double xi1, xi2, xi3;
};

struct ZVector {
    double z1, z2, z3;
};

// Deviation state x = (delta - delta0, domega, eqp - eqp0).
using DevState = std::array<double, 3>;

inline DevState deviation_state(const PlantState& s, const Equilibrium& eq) {
    return {s.delta - eq.delta0, s.domega, s.eqp - eq.eqp0};
}

// Result of a feedback-linearizing law; guard is set when the sin(x1+delta0)
// singularity guard suppressed the update, sat when the ceiling clipped efd.
struct ControlResult {
    double efd;
    double uf;
    bool guard = false;
    bool sat = false;
};

XiVector bsfl_transform(const DevState& x, const BsflGains& gains,
                        const Coefficients& c, const Equilibrium& eq);

double bsfl_a3(const DevState& x, const BsflGains& gains,
               const Coefficients& c, const Equilibrium& eq);

// `hold_efd` is the previously commanded field voltage, returned unchanged
// when the singularity guard trips.
ControlResult bsfl_control(const DevState& x, const BsflGains& gains,
                           const Coefficients& c, const Equilibrium& eq,
                           const MachineParams& params, double hold_efd);

ZVector dfl_transform(const DevState& x, const Coefficients& c, const Equilibrium& eq);

ControlResult dfl_control(const DevState& x, const DflGains& gains,
                          const Coefficients& c, const Equilibrium& eq,
                          const MachineParams& params, double hold_efd);

// Initializes every block so the loop holds (vt0, efd0) with zero derivatives;
// sets p.vref accordingly.
CpssState cpss_init(CpssParams& p, const Equilibrium& eq, const OperatingPoint& op);

// Returns block derivatives and the (ceiling-clamped) field voltage.
struct CpssEval {
    CpssDeriv deriv;
    double efd;
    bool sat = false;
};

CpssEval cpss_derivatives(const CpssState& s, const CpssParams& p,
                          double vt, double domega);

}  // namespace smib
