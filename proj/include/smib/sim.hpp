#pragma once

// Fixed-step RK4 integration of the coupled plant + controller system
// through a timed event schedule (fault apply/clear, mechanical-power step).

#include "smib/controllers.hpp"
#include "smib/model.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace smib {

struct Event {
    enum class Kind { ApplyFault, ClearFault, StepPm };
    double t = 0.0;
    Kind kind = Kind::ApplyFault;
    double factor = 1.0;  // StepPm only: multiplier on nominal pm
};

enum class ControllerKind { Bsfl, Dfl, Cpss, OpenLoop };

std::string to_string(ControllerKind kind);
ControllerKind controller_from_string(const std::string& name);

struct Scenario {
    double duration = 10.0;
    double dt = 1e-4;
    int record_stride = 10;
    std::vector<Event> events;
    ControllerKind controller = ControllerKind::Bsfl;
    // Optional initial offset from the equilibrium: (d_delta, d_omega, d_eqp).
    std::array<double, 3> init_dev{0.0, 0.0, 0.0};

    // Checks positivity, event ordering, and grid alignment of event times.
    void validate(const CpssParams* cpss = nullptr) const;
};

struct TimeSeries {
    std::vector<double> t, delta, domega, eqp, pe, vt, efd, uf;
    std::vector<std::uint8_t> guard, sat;
    std::string config_digest;

    std::size_t size() const { return t.size(); }
};

struct SimOutcome {
    TimeSeries series;
    bool stable = true;
    std::optional<double> instability_time;
};

struct ControllerSet {
    BsflGains bsfl;
    DflGains dfl;
    CpssParams cpss;
};

// One classical RK4 step of dy/dt = f(y). The derivative callable must be a
// pure function of the state vector.
template <std::size_t N, typename F>
std::array<double, N> step_rk4(const std::array<double, N>& y, double dt, F&& f) {
    std::array<double, N> k1 = f(y);
    std::array<double, N> tmp;
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
    std::array<double, N> k2 = f(tmp);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
    std::array<double, N> k3 = f(tmp);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + dt * k3[i];
    std::array<double, N> k4 = f(tmp);
    std::array<double, N> out;
    for (std::size_t i = 0; i < N; ++i)
        out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    return out;
}

SimOutcome run_scenario(const Scenario& sc, const MachineParams& params,
                        const OperatingPoint& op, const ControllerSet& gains);

// Writes the fixed-format CSV: header row, LF line endings, shortest
// round-trip double formatting.
void write_csv(std::ostream& out, const TimeSeries& series);

}  // namespace smib
