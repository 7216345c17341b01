#include "smib/config.hpp"

#include <doctest.h>

#include <nlohmann/json.hpp>

#include <fstream>

using namespace smib;
using nlohmann::json;

namespace {

json minimal_doc() {
    return json{{"machine", json::object()},
                {"operating_point", json::object()},
                {"controllers", {{"bsfl", {{"l1", 5.0}, {"l2", 10.0}, {"l3", 15.0}}}}},
                {"scenario", json::object()},
                {"output", json::object()}};
}

}  // namespace

TEST_CASE("empty document yields the documented defaults") {
    const Config cfg = parse_config(json::object());
    CHECK(cfg.machine.xd == doctest::Approx(1.7));
    CHECK(cfg.machine.omega_base == doctest::Approx(2.0 * M_PI * 60.0));
    CHECK(cfg.operating_point.p0 == doctest::Approx(0.8));
    CHECK_FALSE(cfg.has_bsfl);
    CHECK_FALSE(cfg.has_dfl);
    CHECK_FALSE(cfg.has_cpss);
    CHECK(cfg.scenario.controller == ControllerKind::Bsfl);
    CHECK(cfg.scenario.events.empty());
    CHECK(cfg.output.csv == "timeseries.csv");
    CHECK_FALSE(cfg.digest.empty());
}

TEST_CASE("canonical form round-trips to an identical config") {
    const Config cfg = parse_config(minimal_doc());
    const json canon = cfg.canonical();
    const Config again = parse_config(canon);
    CHECK(again.canonical() == canon);
    CHECK(again.digest == cfg.digest);
}

TEST_CASE("canonical form spells out every default") {
    const Config cfg = parse_config(minimal_doc());
    const json canon = cfg.canonical();
    // The sparse input did not mention any of these; the canonical form must.
    CHECK(canon.at("machine").size() == 11);
    CHECK(canon.at("machine").contains("tdop"));
    CHECK(canon.at("scenario").contains("record_stride"));
    CHECK(canon.at("scenario").contains("initial_deviation"));
    CHECK(canon.at("controllers").at("bsfl").contains("sin_eps"));
    // Controllers absent from the input stay absent (presence is meaningful).
    CHECK_FALSE(canon.at("controllers").contains("dfl"));
    CHECK_FALSE(canon.at("controllers").contains("cpss"));
}

TEST_CASE("unknown keys are rejected with the offending field path") {
    json doc = minimal_doc();
    doc["machine"]["xs"] = 1.0;
    CHECK_THROWS_WITH_AS(parse_config(doc), "machine.xs: unknown key", ConfigError);

    doc = minimal_doc();
    doc["controllers"]["bsfl"]["l4"] = 1.0;
    CHECK_THROWS_WITH_AS(parse_config(doc), "controllers.bsfl.l4: unknown key", ConfigError);

    doc = minimal_doc();
    doc["scenario"]["events"] = json::array({{{"t", 0.5}, {"kind", "apply_fault"}, {"factr", 1.0}}});
    CHECK_THROWS_WITH_AS(parse_config(doc), "scenario.events[0].factr: unknown key",
                         ConfigError);

    doc = minimal_doc();
    doc["extra"] = json::object();
    CHECK_THROWS_WITH_AS(parse_config(doc), "config.extra: unknown key", ConfigError);
}

TEST_CASE("type and requirement errors carry the field path") {
    json doc = minimal_doc();
    doc["machine"]["xd"] = "1.7";
    CHECK_THROWS_WITH_AS(parse_config(doc), "machine.xd: expected a number", ConfigError);

    doc = minimal_doc();
    doc["controllers"]["bsfl"].erase("l2");
    CHECK_THROWS_WITH_AS(parse_config(doc), "controllers.bsfl.l2: required key missing",
                         ConfigError);

    doc = minimal_doc();
    doc["scenario"]["record_stride"] = 2.5;
    CHECK_THROWS_WITH_AS(parse_config(doc), "scenario.record_stride: expected an integer",
                         ConfigError);

    doc = minimal_doc();
    doc["scenario"]["controller"] = "pid";
    CHECK_THROWS_AS(parse_config(doc), ConfigError);

    doc = minimal_doc();
    doc["scenario"]["events"] = json::array({{{"t", 0.5}, {"kind", "short_circuit"}}});
    CHECK_THROWS_AS(parse_config(doc), ConfigError);
}

TEST_CASE("domain invariants are re-checked and named") {
    json doc = minimal_doc();
    doc["machine"]["xdp"] = 2.0;  // violates xd > xdp
    try {
        parse_config(doc);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.rfind("machine:", 0) == 0);
        CHECK(msg.find("xd") != std::string::npos);
    }

    doc = minimal_doc();
    doc["controllers"]["dfl"] = {{"k1", 100.0}, {"k2", 1.0}, {"k3", 1.0}};  // not Hurwitz
    CHECK_THROWS_AS(parse_config(doc), ConfigError);

    doc = minimal_doc();
    doc["scenario"]["events"] =
        json::array({{{"t", 0.55551}, {"kind", "apply_fault"}}});  // off the dt grid
    try {
        parse_config(doc);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).rfind("scenario:", 0) == 0);
    }
}

TEST_CASE("digest is deterministic and sensitive to values") {
    const Config a = parse_config(minimal_doc());
    const Config b = parse_config(minimal_doc());
    CHECK(a.digest == b.digest);
    CHECK(a.digest.size() == 16);

    json doc = minimal_doc();
    doc["machine"]["xe"] = 0.3;
    const Config c = parse_config(doc);
    CHECK(c.digest != a.digest);
}

TEST_CASE("key order in the input does not change the digest") {
    // nlohmann::json objects are sorted, so two spellings of the same config
    // canonicalize identically; this is what makes the digest reproducible.
    const Config a = parse_config(json::parse(
        R"({"machine": {"xd": 1.7, "xq": 1.64}, "operating_point": {"p0": 0.8}})"));
    const Config b = parse_config(json::parse(
        R"({"operating_point": {"p0": 0.8}, "machine": {"xq": 1.64, "xd": 1.7}})"));
    CHECK(a.digest == b.digest);
}

TEST_CASE("load_config reads the bundled study file") {
    const Config cfg = load_config(std::string(CONFIG_DIR) + "/paper_table1.json");
    CHECK(cfg.has_bsfl);
    CHECK(cfg.has_dfl);
    CHECK(cfg.has_cpss);
    CHECK(cfg.machine.m == doctest::Approx(6.6));
    CHECK(cfg.controllers.cpss.kstab == doctest::Approx(17.57));
    REQUIRE(cfg.scenario.events.size() == 2);
    CHECK(cfg.scenario.events[0].kind == Event::Kind::ApplyFault);
    CHECK(cfg.scenario.events[1].t == doctest::Approx(0.78));
}

TEST_CASE("load_config error handling") {
    CHECK_THROWS_AS(load_config("/nonexistent/nope.json"), ConfigError);
    const std::string tmp = "bad_config_test.json";
    {
        std::ofstream out(tmp);
        out << "{ not json";
    }
    CHECK_THROWS_AS(load_config(tmp), ConfigError);
    std::remove(tmp.c_str());
}
