#pragma once

// JSON configuration: strict schema (unknown keys rejected), defaults made
// explicit on re-serialization, deterministic digest for reproducibility.

#include "smib/sim.hpp"

#include <nlohmann/json_fwd.hpp>

#include <stdexcept>
#include <string>

namespace smib {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutputConfig {
    std::string csv = "timeseries.csv";
    std::string summary = "summary.json";
};

struct Config {
    MachineParams machine;
    OperatingPoint operating_point;
    ControllerSet controllers;
    bool has_bsfl = false;
    bool has_dfl = false;
    bool has_cpss = false;
    Scenario scenario;
    OutputConfig output;
    std::string digest;  // of the canonical form, set by load/parse

    // Full canonical JSON with every default spelled out.
    nlohmann::json canonical() const;
};

Config parse_config(const nlohmann::json& doc);
Config load_config(const std::string& path);

std::string config_digest(const nlohmann::json& canonical_doc);

}  // namespace smib
