#include "smib/controllers.hpp"

#include <algorithm>
#include <cmath>

namespace smib {

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw ModelError(msg);
}

double clamp(double v, double lo, double hi) { return std::clamp(v, lo, hi); }

// Deviation-form drift terms of the sign-corrected plant:
//   xdot2 = f2(x1,x2) + g2(x1)*x3,   xdot3 = f3(x1,x3) + a*duf
double f2_dev(double x1, double x2, const Coefficients& c, const Equilibrium& eq) {
    const double ang = x1 + eq.delta0;
    return -c.a2 * x2 - c.a3 * eq.eqp0 * std::sin(ang) +
           c.a4 * std::sin(2.0 * ang) + c.a7;
}

double g2_dev(double x1, const Coefficients& c, const Equilibrium& eq) {
    return -c.a3 * std::sin(x1 + eq.delta0);
}

double f3_dev(double x1, double x3, const Coefficients& c, const Equilibrium& eq) {
    return -c.a5 * x3 + c.a6 * (std::cos(x1 + eq.delta0) - std::cos(eq.delta0));
}

}  // namespace

void BsflGains::validate() const {
    require(l1 > 0.0 && l2 > 0.0 && l3 > 0.0, "bsfl: poles must be positive");
    require(sin_eps > 0.0 && sin_eps < 0.1, "bsfl: sin_eps must be in (0, 0.1)");
}

void DflGains::validate() const {
    // Routh condition for s^3 + k3 s^2 + k2 s + k1.
    require(k1 > 0.0 && k2 > 0.0 && k3 > 0.0 && k3 * k2 > k1,
            "dfl: gains do not place all closed-loop poles in the left half plane");
    require(sin_eps > 0.0 && sin_eps < 0.1, "dfl: sin_eps must be in (0, 0.1)");
}

void CpssParams::validate() const {
    require(te > 0.0 && tfe > 0.0 && tr > 0.0 && tw > 0.0 && t1 > 0.0 &&
                t2 > 0.0 && t3 > 0.0 && t4 > 0.0,
            "cpss: all time constants must be positive");
    require(ke > 0.0 && kstab >= 0.0 && kfe >= 0.0, "cpss: gains must be non-negative");
    require(vpss_max > 0.0 && vpss_min < 0.0, "cpss: need vpss_max > 0 > vpss_min");
    require(efd_max > 0.0 && efd_min < 0.0, "cpss: need efd_max > 0 > efd_min");
}

XiVector bsfl_transform(const DevState& x, const BsflGains& g,
                        const Coefficients& c, const Equilibrium& eq) {
    XiVector xi;
    xi.xi1 = x[0];
    xi.xi2 = c.a1 * x[1] + g.l1 * x[0];
    const double phi2 = c.a1 * g2_dev(x[0], c, eq);
    const double a2fun = g.l2 * xi.xi2 + c.a1 * f2_dev(x[0], x[1], c, eq) +
                         g.l1 * (-g.l1 * xi.xi1 + xi.xi2);
    xi.xi3 = phi2 * x[2] + a2fun;
    return xi;
}

double bsfl_a3(const DevState& x, const BsflGains& g,
               const Coefficients& c, const Equilibrium& eq) {
    const XiVector xi = bsfl_transform(x, g, c, eq);
    const double ang = x[0] + eq.delta0;
    const double phi2 = -c.a1 * c.a3 * std::sin(ang);
    const double phi3 = phi2 * f3_dev(x[0], x[2], c, eq);

    // xi-partials of phi2 and a2, taken with x2 = (xi2 - l1*xi1)/a1.
    const double dphi2_dxi1 = -c.a1 * c.a3 * std::cos(ang);
    const double da2_dxi1 = c.a2 * g.l1 - g.l1 * g.l1 -
                            c.a1 * c.a3 * eq.eqp0 * std::cos(ang) +
                            2.0 * c.a1 * c.a4 * std::cos(2.0 * ang);
    const double da2_dxi2 = g.l1 + g.l2 - c.a2;

    const double v1 = -g.l1 * xi.xi1 + xi.xi2;  // xi1-dot along the chain
    const double v2 = -g.l2 * xi.xi2 + xi.xi3;  // xi2-dot along the chain
    return g.l3 * xi.xi3 + phi3 + (dphi2_dxi1 * x[2] + da2_dxi1) * v1 + da2_dxi2 * v2;
}

ControlResult bsfl_control(const DevState& x, const BsflGains& g,
                           const Coefficients& c, const Equilibrium& eq,
                           const MachineParams& params, double hold_efd) {
    ControlResult r;
    const double s = std::sin(x[0] + eq.delta0);
    if (std::abs(s) < g.sin_eps) {
        r.efd = hold_efd;
        r.uf = hold_efd / params.ke;
        r.guard = true;
        return r;
    }
    const double phi3_gain = -c.a * c.a1 * c.a3 * s;
    const double duf = -bsfl_a3(x, g, c, eq) / phi3_gain;
    r.uf = eq.uf0 + duf;
    const double raw = params.ke * r.uf;
    r.efd = clamp(raw, params.efd_min, params.efd_max);
    r.sat = (raw != r.efd);
    return r;
}

ZVector dfl_transform(const DevState& x, const Coefficients& c, const Equilibrium& eq) {
    ZVector z;
    z.z1 = x[0];
    z.z2 = c.a1 * x[1];
    z.z3 = c.a1 * (f2_dev(x[0], x[1], c, eq) + g2_dev(x[0], c, eq) * x[2]);
    return z;
}

ControlResult dfl_control(const DevState& x, const DflGains& g,
                          const Coefficients& c, const Equilibrium& eq,
                          const MachineParams& params, double hold_efd) {
    ControlResult r;
    const double ang = x[0] + eq.delta0;
    const double s = std::sin(ang);
    if (std::abs(s) < g.sin_eps) {
        r.efd = hold_efd;
        r.uf = hold_efd / params.ke;
        r.guard = true;
        return r;
    }
    const ZVector z = dfl_transform(x, c, eq);
    const double v = -(g.k1 * z.z1 + g.k2 * z.z2 + g.k3 * z.z3);

    const double dz3_dx1 = c.a1 * (-c.a3 * eq.eqp0 * std::cos(ang) +
                                   2.0 * c.a4 * std::cos(2.0 * ang) -
                                   c.a3 * std::cos(ang) * x[2]);
    const double dz3_dx2 = -c.a1 * c.a2;
    const double dz3_dx3 = -c.a1 * c.a3 * s;
    const double drift = dz3_dx1 * c.a1 * x[1] +
                         dz3_dx2 * (f2_dev(x[0], x[1], c, eq) + g2_dev(x[0], c, eq) * x[2]) +
                         dz3_dx3 * f3_dev(x[0], x[2], c, eq);

    const double duf = (v - drift) / (c.a * dz3_dx3);
    r.uf = eq.uf0 + duf;
    const double raw = params.ke * r.uf;
    r.efd = clamp(raw, params.efd_min, params.efd_max);
    r.sat = (raw != r.efd);
    return r;
}

CpssState cpss_init(CpssParams& p, const Equilibrium& eq, const OperatingPoint& op) {
    p.validate();
    require(eq.efd0 < p.efd_max && eq.efd0 > p.efd_min,
            "cpss: steady field voltage exceeds exciter ceiling");
    CpssState s;
    s.x_tr = op.vt0;
    s.x_w = 0.0;
    s.x_ll1 = 0.0;
    s.x_ll2 = 0.0;
    s.x_amp = eq.efd0;
    s.x_fb = eq.efd0;
    p.vref = op.vt0 + eq.efd0 / p.ke;
    return s;
}

CpssEval cpss_derivatives(const CpssState& s, const CpssParams& p,
                          double vt, double domega) {
    CpssEval ev;

    // Transducer lag on the terminal voltage.
    const double d_tr = (vt - s.x_tr) / p.tr;

    // PSS path: gain -> washout -> two lead-lags -> output clamp.
    const double u_w = p.kstab * domega;
    const double d_w = (u_w - s.x_w) / p.tw;
    const double y_w = u_w - s.x_w;

    const double d_ll1 = (y_w - s.x_ll1) / p.t2;
    const double y_ll1 = s.x_ll1 + (p.t1 / p.t2) * (y_w - s.x_ll1);

    const double d_ll2 = (y_ll1 - s.x_ll2) / p.t4;
    const double y_ll2 = s.x_ll2 + (p.t3 / p.t4) * (y_ll1 - s.x_ll2);

    const double vpss = clamp(y_ll2, p.vpss_min, p.vpss_max);

    // Derivative feedback taken from the amplifier output.
    const double d_fb = (s.x_amp - s.x_fb) / p.tfe;
    const double y_fb = (p.kfe / p.tfe) * (s.x_amp - s.x_fb);

    const double u_amp = p.vref - s.x_tr + vpss - y_fb;
    double d_amp = (p.ke * u_amp - s.x_amp) / p.te;
    // Non-windup ceiling: freeze the amplifier state when pushing past a limit.
    if ((s.x_amp >= p.efd_max && d_amp > 0.0) ||
        (s.x_amp <= p.efd_min && d_amp < 0.0)) {
        d_amp = 0.0;
        ev.sat = true;
    }

    ev.efd = clamp(s.x_amp, p.efd_min, p.efd_max);
    if (ev.efd != s.x_amp) ev.sat = true;

    ev.deriv = {d_tr, d_w, d_ll1, d_ll2, d_amp, d_fb};
    return ev;
}

}  // namespace smib
