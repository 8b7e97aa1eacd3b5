#include "vti/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vti/errors.hpp"

namespace vti {

std::vector<ConfigField> config_fields(RunConfig& c) {
    return {
        {"", "seed", FieldType::Uint64, &c.seed},

        {"scene", "kind", FieldType::String, &c.scene_kind},
        {"scene", "height", FieldType::Int, &c.scene_height},
        {"scene", "width", FieldType::Int, &c.scene_width},

        {"spectral", "albedo_infrared", FieldType::Double, &c.spectral.albedo_infrared},
        {"spectral", "intensity_ratio", FieldType::Double, &c.spectral.intensity_ratio},

        {"thermal", "convection_coeff", FieldType::Double, &c.thermal.convection_coeff},
        {"thermal", "air_temp", FieldType::Double, &c.thermal.air_temp},
        {"thermal", "surround_temp", FieldType::Double, &c.thermal.surround_temp},
        {"thermal", "emissivity", FieldType::Double, &c.thermal.emissivity},
        {"thermal", "conductivity", FieldType::Double, &c.thermal.conductivity},
        {"thermal", "stefan_boltzmann", FieldType::Double, &c.thermal.stefan_boltzmann},
        {"thermal", "heat_capacity", FieldType::Double, &c.thermal.heat_capacity},
        {"thermal", "response_gain", FieldType::Double, &c.thermal.response_gain},
        {"thermal", "response_offset", FieldType::Double, &c.thermal.response_offset},
        {"thermal", "noise_stddev", FieldType::Double, &c.thermal_noise_stddev},

        {"solver", "iterations", FieldType::Int, &c.solver.iterations},
        {"solver", "learning_rate", FieldType::Double, &c.solver.learning_rate},
        {"solver", "beta1", FieldType::Double, &c.solver.beta1},
        {"solver", "beta2", FieldType::Double, &c.solver.beta2},
        {"solver", "resample_interval", FieldType::Int, &c.solver.resample_interval},
        {"solver", "pair_radius", FieldType::Int, &c.solver.pair_radius},

        {"weights", "lambda_recon", FieldType::Double, &c.solver.weights.lambda_recon},
        {"weights", "lambda_edge", FieldType::Double, &c.solver.weights.lambda_edge},
        {"weights", "lambda_ord", FieldType::Double, &c.solver.weights.lambda_ord},
        {"weights", "lambda_nonneg", FieldType::Double, &c.solver.weights.lambda_nonneg},
        {"weights", "margin", FieldType::Double, &c.solver.weights.margin},

        {"edges", "mag_threshold", FieldType::Double, &c.solver.edge_cfg.mag_threshold},
        {"edges", "cos_threshold", FieldType::Double, &c.solver.edge_cfg.cos_threshold},
        {"edges", "thermal_blur_sigma", FieldType::Double,
         &c.solver.edge_cfg.thermal_blur_sigma},

        {"pairs", "diff_threshold", FieldType::Double, &c.solver.pair_cfg.diff_threshold},
        {"pairs", "count", FieldType::Int, &c.pair_count},

        {"paths", "out_dir", FieldType::String, &c.out_dir},
        {"paths", "visible", FieldType::String, &c.visible_path},
        {"paths", "thermal", FieldType::String, &c.thermal_path},
        {"paths", "albedo", FieldType::String, &c.albedo_path},
        {"paths", "shading", FieldType::String, &c.shading_path},
        {"paths", "truth_albedo", FieldType::String, &c.truth_albedo_path},
        {"paths", "truth_shading", FieldType::String, &c.truth_shading_path},

        {"eval", "max_si_mse_albedo", FieldType::Double, &c.max_si_mse_albedo},
        {"eval", "max_si_mse_shading", FieldType::Double, &c.max_si_mse_shading},
        {"eval", "max_grad_rel_error", FieldType::Double, &c.max_grad_rel_error},
    };
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Strips a trailing comment, respecting quoted strings.
std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

std::string unquote(const std::string& value, int line_no) {
    if (value.size() < 2 || value.front() != '"' || value.back() != '"')
        throw invalid_input("config line " + std::to_string(line_no) +
                            ": string value must be quoted");
    std::string out;
    for (std::size_t i = 1; i + 1 < value.size(); ++i) {
        if (value[i] == '\\' && i + 2 < value.size()) {
            ++i;
            if (value[i] == '"') out += '"';
            else if (value[i] == '\\') out += '\\';
            else throw invalid_input("config line " + std::to_string(line_no) +
                                     ": unsupported escape");
        } else {
            out += value[i];
        }
    }
    return out;
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"' || ch == '\\') out += '\\';
        out += ch;
    }
    out += '"';
    return out;
}

void assign_field(const ConfigField& field, const std::string& raw, int line_no) {
    const std::string where = "config line " + std::to_string(line_no);
    try {
        switch (field.type) {
            case FieldType::Int: {
                std::size_t used = 0;
                const long long v = std::stoll(raw, &used);
                if (used != raw.size()) throw invalid_input(where + ": bad integer");
                *static_cast<int*>(field.ptr) = static_cast<int>(v);
                break;
            }
            case FieldType::Uint64: {
                std::size_t used = 0;
                const unsigned long long v = std::stoull(raw, &used);
                if (used != raw.size()) throw invalid_input(where + ": bad integer");
                *static_cast<std::uint64_t*>(field.ptr) = v;
                break;
            }
            case FieldType::Double: {
                std::size_t used = 0;
                const double v = std::stod(raw, &used);
                if (used != raw.size()) throw invalid_input(where + ": bad number");
                *static_cast<double*>(field.ptr) = v;
                break;
            }
            case FieldType::String:
                *static_cast<std::string*>(field.ptr) = unquote(raw, line_no);
                break;
        }
    } catch (const std::logic_error&) {
        throw invalid_input(where + ": cannot parse value '" + raw + "'");
    }
}

}  // namespace

std::string format_double_exact(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    std::string s(buf);
    // Bare integers would re-parse fine but read as a different type to a
    // human; keep a decimal marker.
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

void parse_config_text(const std::string& text, RunConfig& config) {
    const std::vector<ConfigField> fields = config_fields(config);
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(strip_comment(line));
        if (body.empty()) continue;
        if (body.front() == '[') {
            if (body.back() != ']')
                throw invalid_input("config line " + std::to_string(line_no) +
                                    ": unterminated section header");
            section = trim(body.substr(1, body.size() - 2));
            continue;
        }
        const std::size_t eq = body.find('=');
        if (eq == std::string::npos)
            throw invalid_input("config line " + std::to_string(line_no) +
                                ": expected key = value");
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        bool matched = false;
        for (const ConfigField& f : fields) {
            if (f.section == section && f.key == key) {
                assign_field(f, value, line_no);
                matched = true;
                break;
            }
        }
        if (!matched)
            throw invalid_input("config line " + std::to_string(line_no) + ": unknown key '" +
                                (section.empty() ? key : section + "." + key) + "'");
    }
}

void parse_config_file(const std::string& path, RunConfig& config) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    parse_config_text(buf.str(), config);
}

std::string config_to_string(const RunConfig& config) {
    RunConfig& mutable_ref = const_cast<RunConfig&>(config);
    const std::vector<ConfigField> fields = config_fields(mutable_ref);
    std::ostringstream out;
    std::string section;
    bool first = true;
    for (const ConfigField& f : fields) {
        if (f.section != section || first) {
            if (!f.section.empty()) {
                if (!first) out << '\n';
                out << '[' << f.section << "]\n";
            }
            section = f.section;
            first = false;
        }
        out << f.key << " = ";
        switch (f.type) {
            case FieldType::Int: out << *static_cast<const int*>(f.ptr); break;
            case FieldType::Uint64: out << *static_cast<const std::uint64_t*>(f.ptr); break;
            case FieldType::Double:
                out << format_double_exact(*static_cast<const double*>(f.ptr));
                break;
            case FieldType::String: out << quote(*static_cast<const std::string*>(f.ptr)); break;
        }
        out << '\n';
    }
    return out.str();
}

void write_config_file(const RunConfig& config, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open " + path + " for writing");
    out << config_to_string(config);
    if (!out) throw io_error("write failed for " + path);
}

}  // namespace vti
