#include "smib/sim.hpp"

#include <charconv>
#include <cmath>
#include <numbers>

namespace smib {

namespace {

constexpr std::size_t kPlant = 3;
constexpr std::size_t kBundle = 9;  // plant (3) + cpss blocks (6)

struct SimCtx {
    ControllerKind kind;
    const ControllerSet* gains;
    const MachineParams* params;
    const Equilibrium* eq;
    const Coefficients* coeffs;
    NetworkMode mode = NetworkMode::Normal;
    double pm = 0.0;
    double hold_efd = 0.0;  // last commanded field voltage (guard hold)
};

struct ControlEval {
    double efd;
    double uf;
    bool guard = false;
    bool sat = false;
};

ControlEval eval_control(const std::array<double, kBundle>& y, const SimCtx& ctx) {
    ControlEval ev;
    const PlantState ps{y[0], y[1], y[2]};
    switch (ctx.kind) {
        case ControllerKind::Bsfl: {
            const ControlResult r = bsfl_control(deviation_state(ps, *ctx.eq),
                                                 ctx.gains->bsfl, *ctx.coeffs, *ctx.eq,
                                                 *ctx.params, ctx.hold_efd);
            ev = {r.efd, r.uf, r.guard, r.sat};
            break;
        }
        case ControllerKind::Dfl: {
            const ControlResult r = dfl_control(deviation_state(ps, *ctx.eq),
                                                ctx.gains->dfl, *ctx.coeffs, *ctx.eq,
                                                *ctx.params, ctx.hold_efd);
            ev = {r.efd, r.uf, r.guard, r.sat};
            break;
        }
        case ControllerKind::Cpss: {
            const CpssState cs{y[3], y[4], y[5], y[6], y[7], y[8]};
            const PlantOutputs po = plant_outputs(ps, ctx.mode, *ctx.params, *ctx.eq);
            const CpssEval ce = cpss_derivatives(cs, ctx.gains->cpss, po.vt, ps.domega);
            ev = {ce.efd, ce.efd / ctx.params->ke, false, ce.sat};
            break;
        }
        case ControllerKind::OpenLoop:
            ev = {ctx.eq->efd0, ctx.eq->uf0, false, false};
            break;
    }
    return ev;
}

std::array<double, kBundle> bundle_derivatives(const std::array<double, kBundle>& y,
                                               const SimCtx& ctx) {
    std::array<double, kBundle> d{};
    const PlantState ps{y[0], y[1], y[2]};
    double efd;
    if (ctx.kind == ControllerKind::Cpss) {
        const CpssState cs{y[3], y[4], y[5], y[6], y[7], y[8]};
        const PlantOutputs po = plant_outputs(ps, ctx.mode, *ctx.params, *ctx.eq);
        const CpssEval ce = cpss_derivatives(cs, ctx.gains->cpss, po.vt, ps.domega);
        for (std::size_t i = 0; i < 6; ++i) d[kPlant + i] = ce.deriv[i];
        efd = ce.efd;
    } else {
        efd = eval_control(y, ctx).efd;
    }
    const StateDeriv pd =
        plant_derivatives(ps, efd, ctx.mode, *ctx.params, *ctx.eq, *ctx.coeffs, ctx.pm);
    d[0] = pd[0];
    d[1] = pd[1];
    d[2] = pd[2];
    return d;
}

void format_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

}  // namespace

std::string to_string(ControllerKind kind) {
    switch (kind) {
        case ControllerKind::Bsfl: return "bsfl";
        case ControllerKind::Dfl: return "dfl";
        case ControllerKind::Cpss: return "cpss";
        case ControllerKind::OpenLoop: return "open";
    }
    return "?";
}

ControllerKind controller_from_string(const std::string& name) {
    if (name == "bsfl") return ControllerKind::Bsfl;
    if (name == "dfl") return ControllerKind::Dfl;
    if (name == "cpss") return ControllerKind::Cpss;
    if (name == "open" || name == "openloop") return ControllerKind::OpenLoop;
    throw ModelError("unknown controller '" + name + "'");
}

void Scenario::validate(const CpssParams* cpss) const {
    if (dt <= 0.0) throw ModelError("scenario: dt must be positive");
    if (duration <= 0.0) throw ModelError("scenario: duration must be positive");
    if (record_stride < 1) throw ModelError("scenario: record_stride must be >= 1");
    double prev = -1.0;
    for (const Event& e : events) {
        if (e.t < 0.0) throw ModelError("scenario: event time must be non-negative");
        if (e.t < prev) throw ModelError("scenario: events must be sorted by time");
        prev = e.t;
        const double steps = e.t / dt;
        if (std::abs(steps - std::round(steps)) > 1e-6)
            throw ModelError("scenario: event times must be integer multiples of dt");
        if (e.kind == Event::Kind::StepPm && e.factor <= 0.0)
            throw ModelError("scenario: StepPm factor must be positive");
    }
    if (controller == ControllerKind::Cpss && cpss) {
        if (dt >= cpss->te / 5.0 || dt >= cpss->tr / 5.0)
            throw ModelError("scenario: dt too large for cpss block time constants "
                             "(need dt < te/5 and dt < tr/5)");
    }
}

SimOutcome run_scenario(const Scenario& sc, const MachineParams& params,
                        const OperatingPoint& op, const ControllerSet& gains) {
    sc.validate(sc.controller == ControllerKind::Cpss ? &gains.cpss : nullptr);
    const Equilibrium eq = compute_equilibrium(params, op);
    const Coefficients coeffs = compute_coefficients(params, eq);

    ControllerSet local = gains;
    if (sc.controller == ControllerKind::Bsfl) local.bsfl.validate();
    if (sc.controller == ControllerKind::Dfl) local.dfl.validate();

    std::array<double, kBundle> y{};
    y[0] = eq.delta0 + sc.init_dev[0];
    y[1] = sc.init_dev[1];
    y[2] = eq.eqp0 + sc.init_dev[2];
    if (sc.controller == ControllerKind::Cpss) {
        const CpssState cs = cpss_init(local.cpss, eq, op);
        y[3] = cs.x_tr;
        y[4] = cs.x_w;
        y[5] = cs.x_ll1;
        y[6] = cs.x_ll2;
        y[7] = cs.x_amp;
        y[8] = cs.x_fb;
    }

    SimCtx ctx;
    ctx.kind = sc.controller;
    ctx.gains = &local;
    ctx.params = &params;
    ctx.eq = &eq;
    ctx.coeffs = &coeffs;
    ctx.pm = eq.pm;
    ctx.hold_efd = eq.efd0;

    const auto n_steps = static_cast<long>(std::llround(sc.duration / sc.dt));
    std::size_t next_event = 0;

    SimOutcome outcome;
    TimeSeries& ts = outcome.series;
    const auto record = [&](long i) {
        const double t = static_cast<double>(i) * sc.dt;
        const PlantState ps{y[0], y[1], y[2]};
        const PlantOutputs po = plant_outputs(ps, ctx.mode, params, eq);
        const ControlEval ev = eval_control(y, ctx);
        ts.t.push_back(t);
        ts.delta.push_back(y[0]);
        ts.domega.push_back(y[1]);
        ts.eqp.push_back(y[2]);
        ts.pe.push_back(po.pe);
        ts.vt.push_back(po.vt);
        ts.efd.push_back(ev.efd);
        ts.uf.push_back(ev.uf);
        ts.guard.push_back(ev.guard ? 1 : 0);
        ts.sat.push_back(ev.sat ? 1 : 0);
    };

    for (long i = 0; i <= n_steps; ++i) {
        while (next_event < sc.events.size() &&
               std::llround(sc.events[next_event].t / sc.dt) == i) {
            const Event& e = sc.events[next_event++];
            switch (e.kind) {
                case Event::Kind::ApplyFault: ctx.mode = NetworkMode::BoltedFault; break;
                case Event::Kind::ClearFault: ctx.mode = NetworkMode::Normal; break;
                case Event::Kind::StepPm: ctx.pm = eq.pm * e.factor; break;
            }
        }
        if (i % sc.record_stride == 0 || i == n_steps) record(i);
        if (i == n_steps) break;

        y = step_rk4<kBundle>(y, sc.dt, [&](const std::array<double, kBundle>& s) {
            return bundle_derivatives(s, ctx);
        });
        ctx.hold_efd = eval_control(y, ctx).efd;

        if (!(y[0] > 0.0 && y[0] < std::numbers::pi) || !std::isfinite(y[0])) {
            outcome.stable = false;
            outcome.instability_time = static_cast<double>(i + 1) * sc.dt;
            record(i + 1);
            break;
        }
    }
    return outcome;
}

void write_csv(std::ostream& out, const TimeSeries& series) {
    std::string buf;
    buf.reserve(series.size() * 120 + 64);
    buf += "t,delta_rad,domega_pu,eqp_pu,pe_pu,vt_pu,efd_pu,uf_pu,guard,sat\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        format_double(buf, series.t[i]);
        buf += ',';
        format_double(buf, series.delta[i]);
        buf += ',';
        format_double(buf, series.domega[i]);
        buf += ',';
        format_double(buf, series.eqp[i]);
        buf += ',';
        format_double(buf, series.pe[i]);
        buf += ',';
        format_double(buf, series.vt[i]);
        buf += ',';
        format_double(buf, series.efd[i]);
        buf += ',';
        format_double(buf, series.uf[i]);
        buf += ',';
        buf += series.guard[i] ? '1' : '0';
        buf += ',';
        buf += series.sat[i] ? '1' : '0';
        buf += '\n';
    }
    out << buf;
}

}  // namespace smib
