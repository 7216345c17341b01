#include "smib/model.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace smib {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ModelError(msg);
}

}  // namespace

void MachineParams::validate() const {
    require(xd > xdp && xdp > 0.0, "machine: need xd > xdp > 0");
    require(xq > 0.0, "machine: xq must be positive");
    require(xe >= 0.0, "machine: xe must be non-negative");
    require(tdop > 0.0, "machine: tdop must be positive");
    require(m > 0.0, "machine: m must be positive");
    require(d >= 0.0, "machine: d must be non-negative");
    require(ke > 0.0, "machine: ke must be positive");
    require(omega_base > 0.0, "machine: omega_base must be positive");
    require(efd_max > 0.0 && efd_min < 0.0, "machine: need efd_max > 0 > efd_min");
}

void OperatingPoint::validate() const {
    // vt0 = 0 parses (the schema cannot rule it out without forbidding the
    // documented degenerate-phasor diagnostic) but fails at equilibrium time.
    require(vt0 >= 0.0, "operating_point: vt0 must be non-negative");
    require(p0 > 0.0, "operating_point: p0 must be positive");
}

Equilibrium compute_equilibrium(const MachineParams& params, const OperatingPoint& op) {
    params.validate();
    op.validate();
    require(op.vt0 > 0.0, "equilibrium: degenerate phasor, vt0 = 0");

    using cplx = std::complex<double>;
    const cplx j(0.0, 1.0);

    // Terminal voltage is the reference phasor.
    const cplx vt(op.vt0, 0.0);
    const cplx current = (cplx(op.p0, -op.q0)) / std::conj(vt);
    const cplx vbus = vt - j * params.xe * current;
    // EMF behind xq fixes the q-axis direction.
    const cplx emf_q = vt + j * params.xq * current;

    const double theta = std::arg(emf_q);
    const double delta0 = theta - std::arg(vbus);
    require(delta0 > 0.0 && delta0 < std::numbers::pi,
            "equilibrium: delta0 outside (0, pi)");

    // Rotor-frame decomposition: F_q = Re(F e^{-j theta}), F_d = -Im(F e^{-j theta}).
    const cplx rot = std::exp(-j * theta);
    const cplx i_rotor = current * rot;
    const cplx vt_rotor = vt * rot;

    Equilibrium eq;
    eq.delta0 = delta0;
    eq.vb = std::abs(vbus);
    eq.id0 = -i_rotor.imag();
    eq.iq0 = i_rotor.real();
    eq.eqp0 = vt_rotor.real() + params.xdp * eq.id0;
    require(eq.eqp0 > 0.0, "equilibrium: eqp0 not positive");
    eq.pm = op.p0;
    eq.efd0 = eq.eqp0 + (params.xd - params.xdp) * eq.id0;
    eq.uf0 = eq.efd0 / params.ke;

    // Cross-check against the alpha-route steady-state relations; a mismatch
    // here signals a sign-convention bug, not a numerical issue.
    const Coefficients c = compute_coefficients(params, eq);
    const double eqp0_alpha =
        (c.a7 + c.a4 * std::sin(2.0 * delta0)) / (c.a3 * std::sin(delta0));
    const double uf0_alpha = (c.a5 * eq.eqp0 - c.a6 * std::cos(delta0)) / c.a;
    require(std::abs(eqp0_alpha - eq.eqp0) < 1e-6 && std::abs(uf0_alpha - eq.uf0) < 1e-6,
            "equilibrium: phasor and alpha routes disagree");

    return eq;
}

Coefficients compute_coefficients(const MachineParams& params, const Equilibrium& eq) {
    Coefficients c;
    c.a1 = params.omega_base;
    c.a2 = params.d / params.m;
    c.a3 = eq.vb / (params.m * (params.xdp + params.xe));
    c.a4 = eq.vb * eq.vb / (2.0 * params.m) *
           (1.0 / (params.xdp + params.xe) - 1.0 / (params.xq + params.xe));
    c.a5 = (1.0 + (params.xd - params.xdp) / (params.xdp + params.xe)) / params.tdop;
    c.a6 = eq.vb * (params.xd - params.xdp) / (params.tdop * (params.xdp + params.xe));
    c.a7 = eq.pm / params.m;
    c.a = params.ke / params.tdop;
    return c;
}

StateDeriv plant_derivatives(const PlantState& state, double efd, NetworkMode mode,
                             const MachineParams& params, const Equilibrium& eq,
                             const Coefficients& coeffs, double pm) {
    StateDeriv d;
    d[0] = coeffs.a1 * state.domega;
    if (mode == NetworkMode::Normal) {
        d[1] = -coeffs.a2 * state.domega -
               coeffs.a3 * state.eqp * std::sin(state.delta) +
               coeffs.a4 * std::sin(2.0 * state.delta) + pm / params.m;
        d[2] = -coeffs.a5 * state.eqp + coeffs.a6 * std::cos(state.delta) +
               efd / params.tdop;
    } else {
        // Bolted fault at the terminal: pe = 0, EMF sees xdp alone.
        d[1] = -coeffs.a2 * state.domega + pm / params.m;
        d[2] = (efd - (params.xd / params.xdp) * state.eqp) / params.tdop;
    }
    return d;
}

PlantOutputs plant_outputs(const PlantState& state, NetworkMode mode,
                           const MachineParams& params, const Equilibrium& eq) {
    PlantOutputs out;
    if (mode == NetworkMode::BoltedFault) {
        out.id = state.eqp / params.xdp;
        out.iq = 0.0;
        out.pe = 0.0;
        out.vt = out.vtd = out.vtq = 0.0;
        return out;
    }
    const double sd = std::sin(state.delta);
    const double cd = std::cos(state.delta);
    out.id = (state.eqp - eq.vb * cd) / (params.xdp + params.xe);
    out.iq = eq.vb * sd / (params.xq + params.xe);
    out.vtq = eq.vb * cd + params.xe * out.id;
    out.vtd = eq.vb * sd - params.xe * out.iq;
    out.vt = std::hypot(out.vtd, out.vtq);
    out.pe = eq.vb * sd * out.id + eq.vb * cd * out.iq;
    return out;
}

}  // namespace smib
