#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "vti/simulate.hpp"
#include "vti/solver.hpp"

namespace vti {

// Everything a run needs, resolvable from defaults, a config file, and
// command-line overrides (in that order of precedence). The resolved state is
// written back as a snapshot; replaying a snapshot reproduces outputs bitwise.
struct RunConfig {
    std::uint64_t seed = 7;

    std::string scene_kind = "checker_shadow";
    int scene_height = 128;
    int scene_width = 128;

    SpectralConfig spectral;
    ThermalSceneParams thermal;
    double thermal_noise_stddev = 0.0;

    SolverConfig solver;  // weights, edge and pair settings live inside
    int pair_count = -1;  // label-pairs export limit; -1 keeps every sample

    std::string out_dir = "out";
    std::string visible_path;   // defaults to <out_dir>/visible.pfm when empty
    std::string thermal_path;   // defaults to <out_dir>/thermal.pfm when empty
    std::string albedo_path;    // estimate input for evaluate
    std::string shading_path;
    std::string truth_albedo_path;
    std::string truth_shading_path;

    double max_si_mse_albedo = std::numeric_limits<double>::infinity();
    double max_si_mse_shading = std::numeric_limits<double>::infinity();
    double max_grad_rel_error = 1e-4;
};

enum class FieldType { Int, Double, String, Uint64 };

// One key in the config schema, bound to its storage inside a RunConfig.
// The registry is the single source of truth for parsing, serialization and
// command-line flag registration.
struct ConfigField {
    std::string section;  // "" = top level
    std::string key;
    FieldType type;
    void* ptr;

    std::string flag_name() const {
        return section.empty() ? "--" + key : "--" + section + "." + key;
    }
};

std::vector<ConfigField> config_fields(RunConfig& config);

// TOML subset: [section] headers, key = value, # comments, quoted strings,
// integers and floats (inf accepted). Unknown keys are rejected.
void parse_config_file(const std::string& path, RunConfig& config);
void parse_config_text(const std::string& text, RunConfig& config);

// Doubles serialize at 17 significant digits so a written snapshot parses
// back to bitwise-identical values.
std::string config_to_string(const RunConfig& config);
void write_config_file(const RunConfig& config, const std::string& path);

std::string format_double_exact(double v);

}  // namespace vti
