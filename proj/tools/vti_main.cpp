#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vti/config.hpp"
#include "vti/errors.hpp"
#include "vti/image.hpp"
#include "vti/image_io.hpp"
#include "vti/metrics.hpp"
#include "vti/objective.hpp"
#include "vti/ordinality.hpp"
#include "vti/rng.hpp"
#include "vti/simulate.hpp"
#include "vti/solver.hpp"

namespace {

using namespace vti;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitThreshold = 3;
constexpr int kExitSolver = 4;

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

std::string visible_file(const RunConfig& c) {
    return c.visible_path.empty() ? join_path(c.out_dir, "visible.pfm") : c.visible_path;
}
std::string thermal_file(const RunConfig& c) {
    return c.thermal_path.empty() ? join_path(c.out_dir, "thermal.pfm") : c.thermal_path;
}
std::string albedo_file(const RunConfig& c) {
    return c.albedo_path.empty() ? join_path(c.out_dir, "albedo.pfm") : c.albedo_path;
}
std::string shading_file(const RunConfig& c) {
    return c.shading_path.empty() ? join_path(c.out_dir, "shading.pfm") : c.shading_path;
}
std::string truth_albedo_file(const RunConfig& c) {
    return c.truth_albedo_path.empty() ? join_path(c.out_dir, "truth_albedo.pfm")
                                       : c.truth_albedo_path;
}
std::string truth_shading_file(const RunConfig& c) {
    return c.truth_shading_path.empty() ? join_path(c.out_dir, "truth_shading.pfm")
                                        : c.truth_shading_path;
}

// Every command persists and echoes its fully-resolved configuration; a
// snapshot fed back through --config reproduces the run bitwise.
void emit_snapshot(const RunConfig& config) {
    std::filesystem::create_directories(config.out_dir);
    write_config_file(config, join_path(config.out_dir, "snapshot.toml"));
    std::cout << "# resolved config\n" << config_to_string(config) << std::flush;
}

SolverConfig solver_for(const RunConfig& config) {
    SolverConfig s = config.solver;
    s.seed = config.seed;
    return s;
}

// Scale-only normalization: dividing by the peak maps visible data into
// [0, 1] without the offset shift of normalize01, which would break the
// multiplicative albedo * shading model the solver fits.
ImageGrid load_visible(const std::string& path) {
    ImageGrid img = read_pfm(path);
    if (img.min() < 0.0)
        throw invalid_input("visible image must be nonnegative: " + path);
    const double peak = img.max();
    if (!(peak > 0.0))
        throw invalid_input("visible image must have positive range: " + path);
    for (double& v : img.data) v /= peak;
    return img;
}

// Thermal data only feeds ordinal comparisons, which are affine-invariant, so
// the full [0, 1] remap is safe here.
ImageGrid load_thermal(const std::string& path) {
    return normalize01(read_pfm(path)).image;
}

SceneTruth load_truth(const RunConfig& config) {
    SceneTruth truth;
    truth.albedo = read_pfm(truth_albedo_file(config));
    truth.shading = read_pfm(truth_shading_file(config));
    truth.gain = 1.0;
    truth.validate();
    return truth;
}

PairClassifierConfig pair_cfg_for(const RunConfig& config, const ImageGrid& vis_gray,
                                  const ImageGrid& thermal) {
    PairClassifierConfig pc = config.solver.pair_cfg;
    pc.z_visible = std::max(percentile(vis_gray, 0.98) - percentile(vis_gray, 0.02), 1e-6);
    pc.z_thermal = std::max(percentile(thermal, 0.98) - percentile(thermal, 0.02), 1e-6);
    return pc;
}

int cmd_simulate(const RunConfig& config) {
    const SceneKind kind = parse_scene_kind(config.scene_kind);
    config.thermal.validate();
    const SceneTruth scene =
        make_scene(kind, config.scene_height, config.scene_width, config.seed);
    const ImageGrid visible = render_visible(scene);
    const ImageGrid absorbed = render_absorbed_broadband(scene, config.spectral);
    const ImageGrid temperature = steady_state_temperature(absorbed, config.thermal);
    ImageGrid thermal = thermal_camera(temperature, config.thermal);
    thermal = add_noise(thermal, config.thermal_noise_stddev,
                        rng::derive(config.seed, rng::kNoiseStream));

    std::filesystem::create_directories(config.out_dir);
    write_pfm(join_path(config.out_dir, "truth_albedo.pfm"), scene.albedo);
    write_pfm(join_path(config.out_dir, "truth_shading.pfm"), scene.shading);
    write_pfm(join_path(config.out_dir, "visible.pfm"), visible);
    write_pfm(join_path(config.out_dir, "absorbed.pfm"), absorbed);
    write_pfm(join_path(config.out_dir, "thermal.pfm"), thermal);

    nlohmann::json meta{
        {"scene",
         {{"kind", config.scene_kind},
          {"height", config.scene_height},
          {"width", config.scene_width},
          {"seed", config.seed},
          {"gain", scene.gain}}},
        {"spectral",
         {{"albedo_infrared", config.spectral.albedo_infrared},
          {"intensity_ratio", config.spectral.intensity_ratio},
          {"beta", config.spectral.beta()}}},
        {"thermal",
         {{"convection_coeff", config.thermal.convection_coeff},
          {"air_temp", config.thermal.air_temp},
          {"surround_temp", config.thermal.surround_temp},
          {"emissivity", config.thermal.emissivity},
          {"conductivity", config.thermal.conductivity},
          {"stefan_boltzmann", config.thermal.stefan_boltzmann},
          {"response_gain", config.thermal.response_gain},
          {"response_offset", config.thermal.response_offset},
          {"absorption_coeff", config.thermal.absorption_coeff()},
          {"ambient_load", config.thermal.ambient_load()},
          {"noise_stddev", config.thermal_noise_stddev}}},
        {"files",
         {"truth_albedo.pfm", "truth_shading.pfm", "visible.pfm", "absorbed.pfm",
          "thermal.pfm"}}};
    std::ofstream meta_out(join_path(config.out_dir, "meta.json"), std::ios::binary);
    if (!meta_out) throw io_error("cannot write meta.json");
    meta_out << meta.dump(2) << '\n';

    emit_snapshot(config);
    return kExitOk;
}

void apply_ablate_mode(const std::string& mode, LossWeights& weights) {
    if (mode.empty() || mode == "full") return;
    if (mode == "recon-only") {
        weights.lambda_edge = 0.0;
        weights.lambda_ord = 0.0;
    } else if (mode == "recon-edge") {
        weights.lambda_ord = 0.0;
    } else if (mode == "recon-ord") {
        weights.lambda_edge = 0.0;
    } else if (mode == "edge-ord") {
        weights.lambda_recon = 0.0;
    } else {
        throw invalid_input("unknown ablate mode: " + mode);
    }
}

void write_previews(const RunConfig& config, const ImageGrid& albedo, const ImageGrid& shading) {
    write_png(join_path(config.out_dir, "albedo_preview.png"), albedo);
    ImageGrid display = shading;
    const double scale = std::max(percentile(shading, 0.99), 1e-6);
    for (double& v : display.data) v = std::min(std::max(v / scale, 0.0), 1.0);
    write_png(join_path(config.out_dir, "shading_preview.png"), display);
}

int cmd_decompose(const RunConfig& config) {
    const ImageGrid visible = load_visible(visible_file(config));
    const ImageGrid thermal = load_thermal(thermal_file(config));
    const SolverConfig solver = solver_for(config);

    const DecomposeResult result = decompose(visible, thermal, solver);

    std::filesystem::create_directories(config.out_dir);
    write_pfm(join_path(config.out_dir, "albedo.pfm"), result.albedo);
    write_pfm(join_path(config.out_dir, "shading.pfm"), result.shading);
    write_previews(config, result.albedo, result.shading);
    export_edge_png(classify_edges(to_grayscale(visible), thermal, solver.edge_cfg),
                    join_path(config.out_dir, "edges.png"));
    write_diagnostics(result.diagnostics, join_path(config.out_dir, "diagnostics.jsonl"));

    emit_snapshot(config);
    const LossTrace& f = result.diagnostics.final_loss;
    std::cout << "final losses: total=" << f.total << " recon=" << f.recon
              << " edge=" << f.edge << " ordinal=" << f.ordinal << " nonneg=" << f.nonneg
              << '\n';
    return kExitOk;
}

int cmd_label_pairs(const RunConfig& config) {
    const ImageGrid visible = load_visible(visible_file(config));
    const ImageGrid thermal = load_thermal(thermal_file(config));
    const ImageGrid vis_gray = to_grayscale(visible);

    const SolverConfig solver = solver_for(config);
    const int radius = solver.effective_radius(visible.height, visible.width);
    std::vector<PointPair> pairs = sample_point_pairs(
        visible.height, visible.width, radius, rng::derive(config.seed, rng::kSamplerStream));
    if (config.pair_count >= 0 &&
        pairs.size() > static_cast<std::size_t>(config.pair_count))
        pairs.resize(static_cast<std::size_t>(config.pair_count));
    pairs = classify_pairs(vis_gray, thermal, pairs, pair_cfg_for(config, vis_gray, thermal));

    std::filesystem::create_directories(config.out_dir);
    export_labels(pairs, join_path(config.out_dir, "labels.json"));

    nlohmann::json summary;
    std::size_t counts[5] = {0, 0, 0, 0, 0};
    for (const PointPair& p : pairs) ++counts[static_cast<std::size_t>(*p.label)];
    summary["counts"] = {{"S+", counts[0]},
                         {"S-", counts[1]},
                         {"A+", counts[2]},
                         {"A-", counts[3]},
                         {"None", counts[4]}};
    summary["total"] = pairs.size();

    const bool have_truth = std::filesystem::exists(truth_albedo_file(config)) &&
                            std::filesystem::exists(truth_shading_file(config));
    if (have_truth) {
        const OrdinalAccuracyReport acc = ordinal_accuracy(pairs, load_truth(config));
        summary["truth_check"] = {
            {"albedo_total", acc.albedo_total},
            {"albedo_mismatches", acc.albedo_total - acc.albedo_correct},
            {"shading_total", acc.shading_total},
            {"shading_mismatches", acc.shading_total - acc.shading_correct}};
    }
    emit_snapshot(config);
    std::cout << summary.dump(2) << '\n';
    return kExitOk;
}

int cmd_evaluate(const RunConfig& config) {
    const ImageGrid est_albedo = read_pfm(albedo_file(config));
    const ImageGrid est_shading = read_pfm(shading_file(config));
    const SceneTruth truth = load_truth(config);

    EvalReport report;
    report.si_mse_albedo = si_mse(est_albedo, truth.albedo);
    report.si_mse_shading = si_mse(est_shading, truth.shading);

    const bool have_inputs = std::filesystem::exists(visible_file(config)) &&
                             std::filesystem::exists(thermal_file(config));
    if (have_inputs) {
        const ImageGrid visible = load_visible(visible_file(config));
        const ImageGrid thermal = load_thermal(thermal_file(config));
        const ImageGrid vis_gray = to_grayscale(visible);
        const SolverConfig solver = solver_for(config);
        const EdgeLabelMap edges = classify_edges(vis_gray, thermal, solver.edge_cfg);
        report.edges = edge_accuracy(edges, truth, solver.edge_cfg.mag_threshold);
        const int radius = solver.effective_radius(visible.height, visible.width);
        const auto raw = sample_point_pairs(visible.height, visible.width, radius,
                                            rng::derive(config.seed, rng::kSamplerStream));
        report.ordinal = ordinal_accuracy(
            classify_pairs(vis_gray, thermal, raw, pair_cfg_for(config, vis_gray, thermal)),
            truth);
    }

    std::filesystem::create_directories(config.out_dir);
    write_eval_report(report, join_path(config.out_dir, "eval.json"));
    std::ofstream csv(join_path(config.out_dir, "eval.csv"), std::ios::binary);
    csv << eval_csv_header() << '\n' << eval_csv_row(config.scene_kind, report) << '\n';

    emit_snapshot(config);
    std::cout << "si_mse_albedo=" << report.si_mse_albedo
              << " si_mse_shading=" << report.si_mse_shading << '\n';
    if (report.si_mse_albedo > config.max_si_mse_albedo ||
        report.si_mse_shading > config.max_si_mse_shading) {
        std::cerr << "threshold violated: si-MSE above configured maximum\n";
        return kExitThreshold;
    }
    return kExitOk;
}

int cmd_ablate(const RunConfig& config) {
    const ImageGrid visible = load_visible(visible_file(config));
    const ImageGrid thermal = load_thermal(thermal_file(config));
    const SceneTruth truth = load_truth(config);

    struct Row {
        const char* name;
        bool recon, edge, ord;
    };
    const Row rows[] = {{"full", true, true, true},
                        {"recon_edge", true, true, false},
                        {"recon_ord", true, false, true},
                        {"edge_ord", false, true, true},
                        {"recon_only", true, false, false}};

    nlohmann::json table = nlohmann::json::array();
    std::ostringstream csv;
    csv << "row,si_mse_albedo,si_mse_shading\n";
    for (const Row& row : rows) {
        SolverConfig solver = solver_for(config);
        if (!row.recon) solver.weights.lambda_recon = 0.0;
        if (!row.edge) solver.weights.lambda_edge = 0.0;
        if (!row.ord) solver.weights.lambda_ord = 0.0;
        const DecomposeResult result = decompose(visible, thermal, solver);
        const double a = si_mse(result.albedo, truth.albedo);
        const double s = si_mse(result.shading, truth.shading);
        table.push_back({{"row", row.name},
                         {"si_mse_albedo", a},
                         {"si_mse_shading", s},
                         {"final_total", result.diagnostics.final_loss.total}});
        csv << row.name << ',' << format_double_exact(a) << ',' << format_double_exact(s)
            << '\n';
        std::cout << row.name << ": si_mse_albedo=" << a << " si_mse_shading=" << s << '\n';
    }

    std::filesystem::create_directories(config.out_dir);
    std::ofstream csv_out(join_path(config.out_dir, "ablation.csv"), std::ios::binary);
    csv_out << csv.str();
    std::ofstream json_out(join_path(config.out_dir, "ablation.json"), std::ios::binary);
    json_out << table.dump(2) << '\n';

    emit_snapshot(config);
    return kExitOk;
}

int cmd_gradcheck(const RunConfig& config) {
    const SceneTruth scene =
        make_scene(parse_scene_kind(config.scene_kind), 16, 16, config.seed);
    ImageGrid visible = render_visible(scene);
    const double peak = visible.max();
    for (double& v : visible.data) v /= peak;
    const ImageGrid thermal = normalize01(render_absorbed(scene)).image;
    const ImageGrid vis_gray = to_grayscale(visible);

    const SolverConfig solver = solver_for(config);
    ObjectiveData data;
    data.visible = visible;
    data.edges = classify_edges(vis_gray, thermal, solver.edge_cfg);
    const auto raw = sample_point_pairs(16, 16, 4, rng::derive(config.seed, rng::kSamplerStream));
    data.pairs = classify_pairs(vis_gray, thermal, raw, pair_cfg_for(config, vis_gray, thermal));

    const IntrinsicEstimate estimate =
        init_params(visible, rng::derive(config.seed, rng::kInitStream));
    data.z_albedo = 1.0;
    data.z_shading = std::max(percentile(estimate.shading_raw, 0.99), 1e-6);

    const GradCheckReport report =
        check_gradients(estimate, data, solver.weights, 400,
                        rng::derive(config.seed, rng::kShuffleStream));

    nlohmann::json j{{"max_rel_error", report.max_rel_error},
                     {"worst_block", report.worst_block},
                     {"worst_index", report.worst_index},
                     {"worst_analytic", report.worst_analytic},
                     {"worst_numeric", report.worst_numeric},
                     {"trials_used", report.trials_used},
                     {"trials_skipped", report.trials_skipped},
                     {"threshold", config.max_grad_rel_error}};
    emit_snapshot(config);
    std::cout << j.dump(2) << '\n';
    if (!(report.max_rel_error < config.max_grad_rel_error)) {
        std::cerr << "threshold violated: gradient mismatch above maximum\n";
        return kExitThreshold;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig config;
    if (const char* env = std::getenv("VTI_OUT_DIR"); env && *env) config.out_dir = env;

    // File values land before flag parsing so flags win.
    try {
        for (int i = 1; i < argc; ++i) {
            const std::string arg = argv[i];
            if (arg == "--config" && i + 1 < argc) {
                parse_config_file(argv[i + 1], config);
            } else if (arg.rfind("--config=", 0) == 0) {
                parse_config_file(arg.substr(9), config);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }

    CLI::App app{"Intrinsic decomposition of visible/thermal image pairs"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "config file applied before flags")
        ->expected(1);

    const std::vector<ConfigField> fields = config_fields(config);
    for (const ConfigField& f : fields) {
        switch (f.type) {
            case FieldType::Int:
                app.add_option(f.flag_name(), *static_cast<int*>(f.ptr));
                break;
            case FieldType::Uint64:
                app.add_option(f.flag_name(), *static_cast<std::uint64_t*>(f.ptr));
                break;
            case FieldType::Double:
                app.add_option(f.flag_name(), *static_cast<double*>(f.ptr));
                break;
            case FieldType::String:
                app.add_option(f.flag_name(), *static_cast<std::string*>(f.ptr));
                break;
        }
    }

    std::string ablate_mode;
    auto* sim = app.add_subcommand("simulate", "render a synthetic scene bundle");
    auto* dec = app.add_subcommand("decompose", "split a visible/thermal pair");
    dec->add_option("--ablate", ablate_mode,
                    "zero selected loss weights: full|recon-only|recon-edge|recon-ord|edge-ord");
    auto* lab = app.add_subcommand("label-pairs", "sample and classify point pairs");
    auto* eva = app.add_subcommand("evaluate", "score an estimate against ground truth");
    auto* abl = app.add_subcommand("ablate", "run the five loss-combination rows");
    auto* gra = app.add_subcommand("gradcheck", "finite-difference gradient audit");
    for (CLI::App* sub : {sim, dec, lab, eva, abl, gra}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (sim->parsed()) return cmd_simulate(config);
        if (dec->parsed()) {
            apply_ablate_mode(ablate_mode, config.solver.weights);
            return cmd_decompose(config);
        }
        if (lab->parsed()) return cmd_label_pairs(config);
        if (eva->parsed()) return cmd_evaluate(config);
        if (abl->parsed()) return cmd_ablate(config);
        if (gra->parsed()) return cmd_gradcheck(config);
        std::cerr << "usage error: no subcommand\n";
        return kExitUsage;
    } catch (const solver_failure& e) {
        std::cerr << "solver failure: " << e.what() << " (residual " << e.residual() << ")\n";
        return kExitSolver;
    } catch (const invalid_input& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const io_error& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
}
