#pragma once

// Single-machine-infinite-bus plant: one-axis (third order) synchronous
// generator behind a transient reactance, tied to an ideal bus through an
// external line reactance. All electrical quantities in per unit, angles
// in radians, time in seconds.

#include <array>
#include <stdexcept>
#include <string>

namespace smib {

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MachineParams {
    double xd = 1.7;       // d-axis synchronous reactance
    double xq = 1.64;      // q-axis synchronous reactance
    double xdp = 0.245;    // d-axis transient reactance X'd
    double xe = 0.2;       // external line reactance
    double tdop = 5.9;     // open-circuit transient time constant T'd0 [s]
    double m = 6.6;        // inertia constant M [s]
    double d = 0.0;        // damping D
    double ke = 400.0;     // exciter gain K_E
    double omega_base = 2.0 * 3.14159265358979323846 * 60.0;  // [rad/s]
    double efd_max = 4.5;  // field voltage ceiling
    double efd_min = -4.5;

    void validate() const;
};

struct OperatingPoint {
    double p0 = 0.8;   // active power
    double q0 = 0.496; // reactive power
    double vt0 = 1.0;  // terminal voltage magnitude

    void validate() const;
};

// Steady state derived from the operating point via complex phasor algebra.
struct Equilibrium {
    double delta0;  // rotor angle vs infinite bus [rad]
    double eqp0;    // E'q at equilibrium
    double uf0;     // steady field input
    double efd0;    // steady field voltage, ke*uf0
    double pm;      // mechanical power (equals pe at the operating point)
    double vb;      // infinite-bus voltage magnitude
    double id0;     // steady d-axis current
    double iq0;     // steady q-axis current
};

// Reduced-model coefficients. Sign convention: all of a3..a6 positive, with
//   ddelta  = a1*domega
//   ddomega = -a2*domega - a3*eqp*sin(delta) + a4*sin(2*delta) + a7
//   deqp    = -a5*eqp + a6*cos(delta) + a*uf
struct Coefficients {
    double a1, a2, a3, a4, a5, a6, a7;
    double a;  // ke/tdop
};

struct PlantState {
    double delta;   // rotor angle [rad]
    double domega;  // speed deviation
    double eqp;     // E'q
};

enum class NetworkMode { Normal, BoltedFault };

struct PlantOutputs {
    double pe;   // electrical power
    double vt;   // terminal voltage magnitude
    double id;
    double iq;
    double vtd;
    double vtq;
};

using StateDeriv = std::array<double, 3>;  // {ddelta, ddomega, deqp}

Equilibrium compute_equilibrium(const MachineParams& params, const OperatingPoint& op);

Coefficients compute_coefficients(const MachineParams& params, const Equilibrium& eq);

// Derivatives of (delta, domega, eqp). `pm` is the mechanical power actually
// driving the shaft; pass eq.pm unless a load step is active.
StateDeriv plant_derivatives(const PlantState& state, double efd, NetworkMode mode,
                             const MachineParams& params, const Equilibrium& eq,
                             const Coefficients& coeffs, double pm);

inline StateDeriv plant_derivatives(const PlantState& state, double efd, NetworkMode mode,
                                    const MachineParams& params, const Equilibrium& eq,
                                    const Coefficients& coeffs) {
    return plant_derivatives(state, efd, mode, params, eq, coeffs, eq.pm);
}

PlantOutputs plant_outputs(const PlantState& state, NetworkMode mode,
                           const MachineParams& params, const Equilibrium& eq);

}  // namespace smib
