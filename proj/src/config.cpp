#include "smib/config.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <set>

namespace smib {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError(path + ": " + msg);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) fail(path, "expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items())
        if (!ok.count(key)) fail(path + "." + key, "unknown key");
}

double num(const json& obj, const std::string& path, const char* key, double dflt) {
    if (!obj.contains(key)) return dflt;
    const json& v = obj.at(key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

double num_req(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) fail(path + "." + key, "required key missing");
    return num(obj, path, key, 0.0);
}

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

std::string config_digest(const json& doc) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(doc.dump())));
    return buf;
}

Config parse_config(const json& doc) {
    Config cfg;
    check_keys(doc, "config",
               {"machine", "operating_point", "controllers", "scenario", "output"});

    {
        const json& m = doc.value("machine", json::object());
        check_keys(m, "machine",
                   {"xd", "xq", "xdp", "xe", "tdop", "m", "d", "ke", "omega_base",
                    "efd_max", "efd_min"});
        MachineParams& p = cfg.machine;
        p.xd = num(m, "machine", "xd", p.xd);
        p.xq = num(m, "machine", "xq", p.xq);
        p.xdp = num(m, "machine", "xdp", p.xdp);
        p.xe = num(m, "machine", "xe", p.xe);
        p.tdop = num(m, "machine", "tdop", p.tdop);
        p.m = num(m, "machine", "m", p.m);
        p.d = num(m, "machine", "d", p.d);
        p.ke = num(m, "machine", "ke", p.ke);
        p.omega_base = num(m, "machine", "omega_base", p.omega_base);
        p.efd_max = num(m, "machine", "efd_max", p.efd_max);
        p.efd_min = num(m, "machine", "efd_min", p.efd_min);
        try {
            p.validate();
        } catch (const ModelError& e) {
            fail("machine", e.what());
        }
    }
    {
        const json& o = doc.value("operating_point", json::object());
        check_keys(o, "operating_point", {"p0", "q0", "vt0"});
        cfg.operating_point.p0 = num(o, "operating_point", "p0", cfg.operating_point.p0);
        cfg.operating_point.q0 = num(o, "operating_point", "q0", cfg.operating_point.q0);
        cfg.operating_point.vt0 = num(o, "operating_point", "vt0", cfg.operating_point.vt0);
        try {
            cfg.operating_point.validate();
        } catch (const ModelError& e) {
            fail("operating_point", e.what());
        }
    }
    {
        const json& c = doc.value("controllers", json::object());
        check_keys(c, "controllers", {"bsfl", "dfl", "cpss"});
        if (c.contains("bsfl")) {
            cfg.has_bsfl = true;
            const json& b = c.at("bsfl");
            check_keys(b, "controllers.bsfl", {"l1", "l2", "l3", "sin_eps"});
            BsflGains& g = cfg.controllers.bsfl;
            g.l1 = num_req(b, "controllers.bsfl", "l1");
            g.l2 = num_req(b, "controllers.bsfl", "l2");
            g.l3 = num_req(b, "controllers.bsfl", "l3");
            g.sin_eps = num(b, "controllers.bsfl", "sin_eps", g.sin_eps);
            try {
                g.validate();
            } catch (const ModelError& e) {
                fail("controllers.bsfl", e.what());
            }
        }
        if (c.contains("dfl")) {
            cfg.has_dfl = true;
            const json& d = c.at("dfl");
            check_keys(d, "controllers.dfl", {"k1", "k2", "k3", "sin_eps"});
            DflGains& g = cfg.controllers.dfl;
            g.k1 = num_req(d, "controllers.dfl", "k1");
            g.k2 = num_req(d, "controllers.dfl", "k2");
            g.k3 = num_req(d, "controllers.dfl", "k3");
            g.sin_eps = num(d, "controllers.dfl", "sin_eps", g.sin_eps);
            try {
                g.validate();
            } catch (const ModelError& e) {
                fail("controllers.dfl", e.what());
            }
        }
        if (c.contains("cpss")) {
            cfg.has_cpss = true;
            const json& s = c.at("cpss");
            check_keys(s, "controllers.cpss",
                       {"ke", "te", "kfe", "tfe", "tr", "kstab", "tw", "t1", "t2",
                        "t3", "t4", "vpss_max", "vpss_min", "efd_max", "efd_min"});
            CpssParams& g = cfg.controllers.cpss;
            g.ke = num(s, "controllers.cpss", "ke", g.ke);
            g.te = num(s, "controllers.cpss", "te", g.te);
            g.kfe = num(s, "controllers.cpss", "kfe", g.kfe);
            g.tfe = num(s, "controllers.cpss", "tfe", g.tfe);
            g.tr = num(s, "controllers.cpss", "tr", g.tr);
            g.kstab = num(s, "controllers.cpss", "kstab", g.kstab);
            g.tw = num(s, "controllers.cpss", "tw", g.tw);
            g.t1 = num(s, "controllers.cpss", "t1", g.t1);
            g.t2 = num(s, "controllers.cpss", "t2", g.t2);
            g.t3 = num(s, "controllers.cpss", "t3", g.t3);
            g.t4 = num(s, "controllers.cpss", "t4", g.t4);
            g.vpss_max = num(s, "controllers.cpss", "vpss_max", g.vpss_max);
            g.vpss_min = num(s, "controllers.cpss", "vpss_min", g.vpss_min);
            g.efd_max = num(s, "controllers.cpss", "efd_max", g.efd_max);
            g.efd_min = num(s, "controllers.cpss", "efd_min", g.efd_min);
            try {
                g.validate();
            } catch (const ModelError& e) {
                fail("controllers.cpss", e.what());
            }
        }
    }
    {
        const json& s = doc.value("scenario", json::object());
        check_keys(s, "scenario",
                   {"duration", "dt", "record_stride", "controller", "events",
                    "initial_deviation"});
        Scenario& sc = cfg.scenario;
        sc.duration = num(s, "scenario", "duration", sc.duration);
        sc.dt = num(s, "scenario", "dt", sc.dt);
        if (s.contains("record_stride")) {
            const json& v = s.at("record_stride");
            if (!v.is_number_integer()) fail("scenario.record_stride", "expected an integer");
            sc.record_stride = v.get<int>();
        }
        if (s.contains("controller")) {
            const json& v = s.at("controller");
            if (!v.is_string()) fail("scenario.controller", "expected a string");
            try {
                sc.controller = controller_from_string(v.get<std::string>());
            } catch (const ModelError& e) {
                fail("scenario.controller", e.what());
            }
        }
        if (s.contains("initial_deviation")) {
            const json& v = s.at("initial_deviation");
            if (!v.is_array() || v.size() != 3)
                fail("scenario.initial_deviation", "expected an array of 3 numbers");
            for (int i = 0; i < 3; ++i) sc.init_dev[i] = v.at(i).get<double>();
        }
        if (s.contains("events")) {
            const json& evs = s.at("events");
            if (!evs.is_array()) fail("scenario.events", "expected an array");
            int idx = 0;
            for (const json& e : evs) {
                const std::string path = "scenario.events[" + std::to_string(idx++) + "]";
                check_keys(e, path, {"t", "kind", "factor"});
                Event ev;
                ev.t = num_req(e, path, "t");
                if (!e.contains("kind") || !e.at("kind").is_string())
                    fail(path + ".kind", "required string missing");
                const std::string kind = e.at("kind").get<std::string>();
                if (kind == "apply_fault")
                    ev.kind = Event::Kind::ApplyFault;
                else if (kind == "clear_fault")
                    ev.kind = Event::Kind::ClearFault;
                else if (kind == "step_pm")
                    ev.kind = Event::Kind::StepPm;
                else
                    fail(path + ".kind", "unknown event kind '" + kind + "'");
                ev.factor = num(e, path, "factor", 1.0);
                cfg.scenario.events.push_back(ev);
            }
        }
        try {
            sc.validate(cfg.has_cpss ? &cfg.controllers.cpss : nullptr);
        } catch (const ModelError& e) {
            fail("scenario", e.what());
        }
    }
    {
        const json& o = doc.value("output", json::object());
        check_keys(o, "output", {"csv", "summary"});
        if (o.contains("csv")) cfg.output.csv = o.at("csv").get<std::string>();
        if (o.contains("summary")) cfg.output.summary = o.at("summary").get<std::string>();
    }

    cfg.digest = config_digest(cfg.canonical());
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_config(doc);
}

nlohmann::json Config::canonical() const {
    json doc;
    doc["machine"] = {{"xd", machine.xd},
                      {"xq", machine.xq},
                      {"xdp", machine.xdp},
                      {"xe", machine.xe},
                      {"tdop", machine.tdop},
                      {"m", machine.m},
                      {"d", machine.d},
                      {"ke", machine.ke},
                      {"omega_base", machine.omega_base},
                      {"efd_max", machine.efd_max},
                      {"efd_min", machine.efd_min}};
    doc["operating_point"] = {{"p0", operating_point.p0},
                              {"q0", operating_point.q0},
                              {"vt0", operating_point.vt0}};
    json ctrls = json::object();
    if (has_bsfl)
        ctrls["bsfl"] = {{"l1", controllers.bsfl.l1},
                         {"l2", controllers.bsfl.l2},
                         {"l3", controllers.bsfl.l3},
                         {"sin_eps", controllers.bsfl.sin_eps}};
    if (has_dfl)
        ctrls["dfl"] = {{"k1", controllers.dfl.k1},
                        {"k2", controllers.dfl.k2},
                        {"k3", controllers.dfl.k3},
                        {"sin_eps", controllers.dfl.sin_eps}};
    if (has_cpss)
        ctrls["cpss"] = {{"ke", controllers.cpss.ke},
                         {"te", controllers.cpss.te},
                         {"kfe", controllers.cpss.kfe},
                         {"tfe", controllers.cpss.tfe},
                         {"tr", controllers.cpss.tr},
                         {"kstab", controllers.cpss.kstab},
                         {"tw", controllers.cpss.tw},
                         {"t1", controllers.cpss.t1},
                         {"t2", controllers.cpss.t2},
                         {"t3", controllers.cpss.t3},
                         {"t4", controllers.cpss.t4},
                         {"vpss_max", controllers.cpss.vpss_max},
                         {"vpss_min", controllers.cpss.vpss_min},
                         {"efd_max", controllers.cpss.efd_max},
                         {"efd_min", controllers.cpss.efd_min}};
    doc["controllers"] = ctrls;
    json evs = json::array();
    for (const Event& e : scenario.events) {
        const char* kind = e.kind == Event::Kind::ApplyFault  ? "apply_fault"
                           : e.kind == Event::Kind::ClearFault ? "clear_fault"
                                                               : "step_pm";
        evs.push_back({{"t", e.t}, {"kind", kind}, {"factor", e.factor}});
    }
    doc["scenario"] = {{"duration", scenario.duration},
                       {"dt", scenario.dt},
                       {"record_stride", scenario.record_stride},
                       {"controller", to_string(scenario.controller)},
                       {"initial_deviation",
                        {scenario.init_dev[0], scenario.init_dev[1], scenario.init_dev[2]}},
                       {"events", evs}};
    doc["output"] = {{"csv", output.csv}, {"summary", output.summary}};
    return doc;
}

}  // namespace smib
