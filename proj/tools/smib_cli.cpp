// Command-line front end: equilibrium reports, scenario simulation with CSV +
// JSON summaries, controller comparison, critical-clearing-time search, and
// Lyapunov robustness margins.
//
// Exit codes: 0 success, 2 config/argument validation, 3 equilibrium failure,
// 4 instability detected, 5 I/O failure, 6 invalid CCT bracket.

#include "smib/analysis.hpp"
#include "smib/config.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

using namespace smib;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitEquilibrium = 3;
constexpr int kExitUnstable = 4;
constexpr int kExitIo = 5;
constexpr int kExitBracket = 6;

double deg(double rad) { return rad * 180.0 / M_PI; }

// Reference time for post-disturbance metrics: the last event, if any.
double metrics_t_ref(const Scenario& sc) {
    double t_ref = 0.0;
    for (const Event& e : sc.events) t_ref = std::max(t_ref, e.t);
    return t_ref;
}

json metrics_json(const Metrics& m) {
    return json{{"settling_time_2pct_s", m.settling_time_2pct},
                {"first_swing_peak", m.first_swing_peak},
                {"first_swing_time_s", m.first_swing_time},
                {"overshoot_pct", m.overshoot_pct},
                {"backswing_detected", m.backswing_detected},
                {"final_value", m.final_value}};
}

json equilibrium_json(const Equilibrium& eq, const Coefficients& c) {
    return json{{"delta0_rad", eq.delta0}, {"delta0_deg", deg(eq.delta0)},
                {"eqp0_pu", eq.eqp0},      {"uf0_pu", eq.uf0},
                {"efd0_pu", eq.efd0},      {"vb_pu", eq.vb},
                {"pm_pu", eq.pm},          {"id0_pu", eq.id0},
                {"iq0_pu", eq.iq0},
                {"alpha", {c.a1, c.a2, c.a3, c.a4, c.a5, c.a6, c.a7}},
                {"a", c.a}};
}

// Per-signal metrics, tolerant of trajectories that never settle.
json try_metrics(const TimeSeries& ts, const std::vector<double>& signal, double t_ref) {
    try {
        return metrics_json(compute_metrics(ts.t, signal, t_ref));
    } catch (const ModelError& e) {
        return json{{"error", e.what()}};
    }
}

int cmd_equilibrium(const std::string& config_path) {
    const Config cfg = load_config(config_path);
    const Equilibrium eq = compute_equilibrium(cfg.machine, cfg.operating_point);
    const Coefficients c = compute_coefficients(cfg.machine, eq);
    std::printf("equilibrium (config digest %s)\n", cfg.digest.c_str());
    std::printf("  delta0   %.12g rad  (%.6f deg)\n", eq.delta0, deg(eq.delta0));
    std::printf("  eqp0     %.12g pu\n", eq.eqp0);
    std::printf("  uf0      %.12g pu\n", eq.uf0);
    std::printf("  efd0     %.12g pu\n", eq.efd0);
    std::printf("  vb       %.12g pu\n", eq.vb);
    std::printf("  pm       %.12g pu\n", eq.pm);
    std::printf("  id0/iq0  %.12g / %.12g pu\n", eq.id0, eq.iq0);
    std::printf("  alpha1..alpha7  %.12g %.12g %.12g %.12g %.12g %.12g %.12g\n",
                c.a1, c.a2, c.a3, c.a4, c.a5, c.a6, c.a7);
    std::printf("  a        %.12g\n", c.a);
    return kExitOk;
}

void require_block(const Config& cfg, ControllerKind kind) {
    const bool ok = kind == ControllerKind::Bsfl   ? cfg.has_bsfl
                    : kind == ControllerKind::Dfl  ? cfg.has_dfl
                    : kind == ControllerKind::Cpss ? cfg.has_cpss
                                                   : true;
    if (!ok)
        throw ConfigError("controllers." + to_string(kind) +
                          ": block required but absent from the config");
}

int cmd_simulate(const std::string& config_path, const std::string& controller,
                 std::string out_csv, std::string out_summary) {
    Config cfg = load_config(config_path);
    if (!controller.empty()) cfg.scenario.controller = controller_from_string(controller);
    require_block(cfg, cfg.scenario.controller);
    if (out_csv.empty()) out_csv = cfg.output.csv;
    if (out_summary.empty()) out_summary = cfg.output.summary;

    const Equilibrium eq = compute_equilibrium(cfg.machine, cfg.operating_point);
    const Coefficients c = compute_coefficients(cfg.machine, eq);
    SimOutcome out = run_scenario(cfg.scenario, cfg.machine, cfg.operating_point,
                                  cfg.controllers);
    out.series.config_digest = cfg.digest;

    {
        std::ofstream f(out_csv, std::ios::binary);
        if (!f) throw std::ios_base::failure("cannot open '" + out_csv + "' for writing");
        write_csv(f, out.series);
        if (!f) throw std::ios_base::failure("write failed for '" + out_csv + "'");
    }

    const double t_ref = metrics_t_ref(cfg.scenario);
    json summary{{"tool_version", kVersion},
                 {"config_digest", cfg.digest},
                 {"controller", to_string(cfg.scenario.controller)},
                 {"equilibrium", equilibrium_json(eq, c)},
                 {"stable", out.stable},
                 {"csv", out_csv}};
    if (out.instability_time) summary["instability_time_s"] = *out.instability_time;
    if (out.stable) {
        summary["metrics"] = {{"delta_rad", try_metrics(out.series, out.series.delta, t_ref)},
                              {"pe_pu", try_metrics(out.series, out.series.pe, t_ref)},
                              {"vt_pu", try_metrics(out.series, out.series.vt, t_ref)}};
    }
    {
        std::ofstream f(out_summary, std::ios::binary);
        if (!f) throw std::ios_base::failure("cannot open '" + out_summary + "' for writing");
        f << summary.dump(2) << '\n';
        if (!f) throw std::ios_base::failure("write failed for '" + out_summary + "'");
    }

    if (!out.stable) {
        std::printf("unstable at t = %.4f s; outputs written to %s / %s\n",
                    out.instability_time.value_or(0.0), out_csv.c_str(), out_summary.c_str());
        return kExitUnstable;
    }
    std::printf("stable to t = %.4g s; outputs written to %s / %s\n",
                cfg.scenario.duration, out_csv.c_str(), out_summary.c_str());
    return kExitOk;
}

struct CompareRow {
    ControllerKind kind;
    SimOutcome outcome;
};

int cmd_compare(const std::string& config_path, const std::string& out_path) {
    Config cfg = load_config(config_path);
    for (ControllerKind k : {ControllerKind::Bsfl, ControllerKind::Dfl, ControllerKind::Cpss})
        require_block(cfg, k);

    Scenario fault = cfg.scenario;
    Scenario step = cfg.scenario;
    step.events = {{1.0, Event::Kind::StepPm, 1.2}};
    step.validate(cfg.has_cpss ? &cfg.controllers.cpss : nullptr);

    json report{{"tool_version", kVersion}, {"config_digest", cfg.digest}};
    const struct {
        const char* name;
        const Scenario* sc;
    } scenarios[] = {{"fault", &fault}, {"pm_step", &step}};

    for (const auto& [name, sc] : scenarios) {
        const double t_ref = metrics_t_ref(*sc);
        std::printf("\n%s scenario (t_ref = %.3g s)\n", name, t_ref);
        std::printf("  %-5s %-9s %12s %14s %12s %10s\n", "ctrl", "stable",
                    "settle(delta)", "peak(delta) deg", "settle(pe)", "peak(pe)");
        json rows = json::object();
        std::vector<std::pair<ControllerKind, double>> settling;
        for (ControllerKind k :
             {ControllerKind::Bsfl, ControllerKind::Dfl, ControllerKind::Cpss}) {
            Scenario run = *sc;
            run.controller = k;
            const SimOutcome out =
                run_scenario(run, cfg.machine, cfg.operating_point, cfg.controllers);
            json row{{"stable", out.stable}};
            if (out.stable) {
                row["delta_rad"] = try_metrics(out.series, out.series.delta, t_ref);
                row["pe_pu"] = try_metrics(out.series, out.series.pe, t_ref);
                row["vt_pu"] = try_metrics(out.series, out.series.vt, t_ref);
                const json& dm = row["delta_rad"];
                if (dm.contains("settling_time_2pct_s")) {
                    settling.emplace_back(k, dm["settling_time_2pct_s"].get<double>());
                    std::printf("  %-5s %-9s %12.3f %14.2f %12.3f %10.3f\n",
                                to_string(k).c_str(), "yes",
                                dm["settling_time_2pct_s"].get<double>(),
                                deg(dm["first_swing_peak"].get<double>()),
                                row["pe_pu"].value("settling_time_2pct_s", -1.0),
                                row["pe_pu"].value("first_swing_peak", 0.0));
                } else {
                    std::printf("  %-5s %-9s %12s\n", to_string(k).c_str(), "yes",
                                "no-settle");
                }
            } else {
                row["instability_time_s"] = out.instability_time.value_or(0.0);
                std::printf("  %-5s unstable (t = %.3f s)\n", to_string(k).c_str(),
                            out.instability_time.value_or(0.0));
            }
            rows[to_string(k)] = row;
        }
        json verdict = json::object();
        const auto find = [&](ControllerKind k) -> std::optional<double> {
            for (const auto& [kk, s] : settling)
                if (kk == k) return s;
            return std::nullopt;
        };
        const auto b = find(ControllerKind::Bsfl), d = find(ControllerKind::Dfl),
                   p = find(ControllerKind::Cpss);
        const bool ordering = b && d && p && *b < *d && *d < *p;
        verdict["settling_ordering_bsfl_dfl_cpss"] = ordering;
        std::printf("  ordering settling(bsfl) < settling(dfl) < settling(cpss): %s\n",
                    ordering ? "holds" : "violated");
        report[name] = {{"rows", rows}, {"verdict", verdict}};
    }

    if (!out_path.empty()) {
        std::ofstream f(out_path, std::ios::binary);
        if (!f) throw std::ios_base::failure("cannot open '" + out_path + "' for writing");
        f << report.dump(2) << '\n';
        if (!f) throw std::ios_base::failure("write failed for '" + out_path + "'");
    }
    return kExitOk;
}

int cmd_cct(const std::string& config_path, const std::string& controller, double lo,
            double hi, double tol, const std::vector<double>& sweep) {
    Config cfg = load_config(config_path);
    const ControllerKind kind = controller.empty() ? cfg.scenario.controller
                                                   : controller_from_string(controller);
    require_block(cfg, kind);
    if (!(lo < hi)) throw ConfigError("cct: need --lo < --hi");

    CctOptions opt;
    opt.lo = lo;
    opt.hi = hi;
    opt.tol = tol;
    // Fault start from the config when it schedules one.
    for (const Event& e : cfg.scenario.events)
        if (e.kind == Event::Kind::ApplyFault) opt.fault_start = e.t;

    std::vector<OperatingPoint> points;
    if (sweep.empty()) {
        points.push_back(cfg.operating_point);
    } else {
        for (double p0 : sweep) {
            OperatingPoint op = cfg.operating_point;
            op.p0 = p0;
            points.push_back(op);
        }
    }

    std::printf("cct search, controller %s, bracket [%g, %g] s, tol %g s (digest %s)\n",
                to_string(kind).c_str(), lo, hi, tol, cfg.digest.c_str());
    for (const OperatingPoint& op : points) {
        const CctResult r = cct_search(cfg.machine, op, kind, cfg.controllers, opt);
        std::printf("  p0 = %.3g pu: cct = %.4f s  (%zu probes:", op.p0, r.cct,
                    r.probes.size());
        for (const CctProbe& p : r.probes)
            std::printf(" %.4f%s", p.duration, p.stable ? "+" : "-");
        std::printf(")\n");
    }
    return kExitOk;
}

int cmd_robustness(const std::vector<double>& lambda, const std::string& q_spec,
                   double gamma2) {
    if (lambda.size() != 3) throw ConfigError("robustness: --lambda needs three values");
    Eigen::Matrix3d Q = Eigen::Matrix3d::Identity();
    if (q_spec != "identity")
        throw ConfigError("robustness: only '--q identity' is supported");
    LyapunovReport rep;
    try {
        rep = robustness_margin({lambda[0], lambda[1], lambda[2]}, Q);
    } catch (const ModelError& e) {
        throw ConfigError(e.what());
    }
    std::printf("chain poles (%g, %g, %g), Q = identity\n", lambda[0], lambda[1], lambda[2]);
    std::printf("P =\n");
    for (int i = 0; i < 3; ++i)
        std::printf("  % .12g % .12g % .12g\n", rep.P(i, 0), rep.P(i, 1), rep.P(i, 2));
    const double resid =
        (rep.P * rep.A + rep.A.transpose() * rep.P + rep.Q).cwiseAbs().maxCoeff();
    std::printf("lyapunov residual   %.3e\n", resid);
    std::printf("gamma1_max          %.12g\n", rep.gamma1_max);
    std::printf("ultimate bound      %.12g  (gamma2 = %g)\n",
                rep.ultimate_bound_coeff * gamma2, gamma2);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SMIB excitation-control study tool"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    std::string config_path, controller, out_csv, out_summary, out_report;
    std::string q_spec = "identity";
    double lo = 0.1, hi = 1.5, tol = 1e-3, gamma2 = 0.0;
    std::vector<double> sweep, lambda;

    CLI::App* eq = app.add_subcommand("equilibrium", "print the steady state and coefficients");
    eq->add_option("config", config_path, "JSON config file")->required();

    CLI::App* sim = app.add_subcommand("simulate", "run the configured scenario");
    sim->add_option("config", config_path, "JSON config file")->required();
    sim->add_option("--controller", controller, "bsfl|dfl|cpss|open");
    sim->add_option("--out", out_csv, "CSV output path (default from config)");
    sim->add_option("--summary", out_summary, "summary JSON path (default from config)");

    CLI::App* cmp = app.add_subcommand("compare", "fault + Pm-step study under all controllers");
    cmp->add_option("config", config_path, "JSON config file")->required();
    cmp->add_option("--out", out_report, "JSON report path");

    CLI::App* cct = app.add_subcommand("cct", "critical clearing time by bisection");
    cct->add_option("config", config_path, "JSON config file")->required();
    cct->add_option("--controller", controller, "bsfl|dfl|cpss|open");
    cct->add_option("--lo", lo, "stable bracket end [s]");
    cct->add_option("--hi", hi, "unstable bracket end [s]");
    cct->add_option("--tol", tol, "bisection tolerance [s]");
    cct->add_option("--sweep", sweep, "comma-separated p0 list")->delimiter(',');

    CLI::App* rob = app.add_subcommand("robustness", "Lyapunov margins for the xi-chain");
    rob->add_option("--lambda", lambda, "three chain poles")->delimiter(',')->required();
    rob->add_option("--q", q_spec, "Q matrix spec (identity)");
    rob->add_option("--gamma2", gamma2, "bounded-disturbance magnitude");

    CLI11_PARSE(app, argc, argv);

    try {
        if (eq->parsed()) return cmd_equilibrium(config_path);
        if (sim->parsed()) return cmd_simulate(config_path, controller, out_csv, out_summary);
        if (cmp->parsed()) return cmd_compare(config_path, out_report);
        if (cct->parsed()) return cmd_cct(config_path, controller, lo, hi, tol, sweep);
        if (rob->parsed()) return cmd_robustness(lambda, q_spec, gamma2);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::ios_base::failure& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return kExitIo;
    } catch (const ModelError& e) {
        const std::string msg = e.what();
        if (msg.rfind("cct: bracket", 0) == 0) {
            std::fprintf(stderr, "cct error: %s\n", msg.c_str());
            return kExitBracket;
        }
        std::fprintf(stderr, "model error: %s\n", msg.c_str());
        return kExitEquilibrium;
    }
    return kExitOk;
}
