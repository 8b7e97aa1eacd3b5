#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "vti/errors.hpp"
#include "vti/image.hpp"
#include "vti/metrics.hpp"
#include "vti/objective.hpp"
#include "vti/ordinality.hpp"
#include "vti/rng.hpp"
#include "vti/simulate.hpp"
#include "vti/solver.hpp"

using namespace vti;

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Scale-only visible normalization (offset would break the multiplicative
// model) and full affine thermal normalization.
ImageGrid scaled_visible(const ImageGrid& vis) {
    ImageGrid out = vis;
    const double peak = vis.max();
    for (double& v : out.data) v /= peak;
    return out;
}

struct DecomposeInputs {
    ImageGrid visible;
    ImageGrid thermal;
};

DecomposeInputs scene_inputs(SceneKind kind, int h, int w, std::uint64_t seed) {
    const SceneTruth scene = make_scene(kind, h, w, seed);
    return {scaled_visible(render_visible(scene)),
            normalize01(render_absorbed(scene)).image};
}

}  // namespace

TEST_CASE("init_params matches the documented seeding rule") {
    ImageGrid vis(6, 6, 3, 0.5);
    const IntrinsicEstimate est = init_params(vis, 7);
    for (double s : est.shading_raw.data) CHECK(s == doctest::Approx(0.6));

    // ratio = 0.5 / 0.6; jitter has stddev 0.01 on the logits.
    const double expected_logit = std::log((0.5 / 0.6) / (1.0 - 0.5 / 0.6));
    for (double z : est.albedo_logits.data)
        CHECK(z == doctest::Approx(expected_logit).epsilon(0.03));

    const ImageGrid decoded = est.decoded_albedo();
    for (double a : decoded.data) {
        CHECK(a > 0.0);
        CHECK(a < 1.0);
        CHECK(a == doctest::Approx(0.5 / 0.6).epsilon(0.01));
    }

    const IntrinsicEstimate again = init_params(vis, 7);
    CHECK(again.albedo_logits.data == est.albedo_logits.data);
    const IntrinsicEstimate other = init_params(vis, 8);
    CHECK(other.albedo_logits.data != est.albedo_logits.data);

    // A structured image still starts from a flat shading field at the
    // spatial mean plus 0.1; the structure goes into the albedo logits.
    ImageGrid varied(4, 4, 1);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) varied.at(y, x) = 0.1 + 0.05 * (y * 4 + x);
    const IntrinsicEstimate flat = init_params(varied, 3);
    for (double s : flat.shading_raw.data) CHECK(s == doctest::Approx(0.575));

    // Extreme ratios are clamped into [0.02, 0.98] before the logit.
    ImageGrid dark(2, 2, 1, 1e-9);
    const IntrinsicEstimate low = init_params(dark, 1);
    const double lo_logit = std::log(0.02 / 0.98);
    for (double z : low.albedo_logits.data)
        CHECK(z == doctest::Approx(lo_logit).epsilon(0.02));

    CHECK_THROWS_AS(init_params(ImageGrid{}, 1), invalid_input);
}

TEST_CASE("decoded albedo is the clamped logistic of the logits") {
    IntrinsicEstimate est;
    est.albedo_logits = ImageGrid(1, 4, 1);
    est.shading_raw = ImageGrid(1, 4, 1, 0.5);
    est.albedo_logits.at(0, 0) = 0.0;
    est.albedo_logits.at(0, 1) = 2.0;
    est.albedo_logits.at(0, 2) = 50.0;    // clamps to 12
    est.albedo_logits.at(0, 3) = -50.0;   // clamps to -12
    const ImageGrid a = est.decoded_albedo();
    CHECK(a.at(0, 0) == doctest::Approx(0.5));
    CHECK(a.at(0, 1) == doctest::Approx(logistic(2.0)));
    CHECK(a.at(0, 2) == doctest::Approx(logistic(12.0)));
    CHECK(a.at(0, 3) == doctest::Approx(logistic(-12.0)));
}

TEST_CASE("chain_to_logits applies the logistic derivative inside the clamp") {
    ImageGrid logits(1, 3, 1);
    logits.at(0, 0) = 1.0;
    logits.at(0, 1) = 20.0;   // outside the clamp: frozen parameter
    logits.at(0, 2) = -20.0;
    ImageGrid upstream(1, 3, 1, 2.0);
    const ImageGrid g = chain_to_logits(upstream, logits);
    const double a = logistic(1.0);
    CHECK(g.at(0, 0) == doctest::Approx(2.0 * a * (1.0 - a)));
    CHECK(g.at(0, 1) == 0.0);
    CHECK(g.at(0, 2) == 0.0);
}

TEST_CASE("adam_step first update moves by roughly the learning rate") {
    IntrinsicEstimate est;
    est.albedo_logits = ImageGrid(1, 1, 1, 0.0);
    est.shading_raw = ImageGrid(1, 1, 1, 0.5);
    AdamState state;
    SolverConfig cfg;
    cfg.learning_rate = 0.05;

    ImageGrid ga(1, 1, 1, 0.3);
    ImageGrid gs(1, 1, 1, -0.2);
    adam_step(est, ga, gs, state, cfg);
    CHECK(est.albedo_logits.at(0, 0) ==
          doctest::Approx(-0.05 * 0.3 / (0.3 + 1e-8)).epsilon(1e-9));
    CHECK(est.shading_raw.at(0, 0) ==
          doctest::Approx(0.5 + 0.05 * 0.2 / (0.2 + 1e-8)).epsilon(1e-9));
    CHECK(state.step_count == 1);

    // Zero gradient leaves parameters where they are.
    IntrinsicEstimate still;
    still.albedo_logits = ImageGrid(1, 1, 1, 1.5);
    still.shading_raw = ImageGrid(1, 1, 1, 0.7);
    AdamState idle;
    adam_step(still, ImageGrid(1, 1, 1, 0.0), ImageGrid(1, 1, 1, 0.0), idle, cfg);
    CHECK(still.albedo_logits.at(0, 0) == 1.5);
    CHECK(still.shading_raw.at(0, 0) == 0.7);

    ImageGrid bad(1, 1, 1, std::nan(""));
    CHECK_THROWS_AS(adam_step(est, bad, gs, state, cfg), solver_failure);
}

TEST_CASE("decompose is deterministic and keeps albedo in (0,1)") {
    const DecomposeInputs in = scene_inputs(SceneKind::CheckerShadow, 32, 32, 3);
    SolverConfig cfg;
    cfg.iterations = 120;
    cfg.seed = 5;

    const DecomposeResult a = decompose(in.visible, in.thermal, cfg);
    const DecomposeResult b = decompose(in.visible, in.thermal, cfg);
    CHECK(a.albedo.data == b.albedo.data);
    CHECK(a.shading.data == b.shading.data);

    CHECK(a.albedo.min() > 0.0);
    CHECK(a.albedo.max() < 1.0);
    CHECK(a.albedo.channels == 3);
    CHECK(a.shading.channels == 1);
    REQUIRE(a.diagnostics.trace.size() == 120);
    CHECK(a.diagnostics.final_loss.recon <= a.diagnostics.trace.front().recon);
    CHECK(a.diagnostics.wall_time_seconds > 0.0);
    CHECK(a.diagnostics.pair_radius == 4);
    CHECK(a.diagnostics.edge_albedo + a.diagnostics.edge_shading +
              a.diagnostics.edge_none ==
          static_cast<std::size_t>(32) * 32);

    const SolverConfig defaults;
    CHECK(defaults.effective_radius(128, 128) == 4);
    CHECK(defaults.effective_radius(320, 640) == 10);
    SolverConfig fixed;
    fixed.pair_radius = 7;
    CHECK(fixed.effective_radius(128, 128) == 7);
}

TEST_CASE("decompose improves the loss and tracks a decreasing trend") {
    const DecomposeInputs in = scene_inputs(SceneKind::VoronoiSmooth, 32, 32, 9);
    SolverConfig cfg;
    cfg.iterations = 600;
    cfg.seed = 2;

    const DecomposeResult r = decompose(in.visible, in.thermal, cfg);
    const std::vector<LossTrace>& trace = r.diagnostics.trace;
    REQUIRE(trace.size() == 600);
    CHECK(r.diagnostics.final_loss.total < trace.front().total);

    // Averaging over one resampling period smooths the redraw jumps. Cycle
    // difficulty still varies with the draw, so block means are compared as
    // a trend: no block may exceed the starting level, the second half must
    // sit below the first, and the run must end materially below the start.
    // A runaway optimizer (noise injected faster than the losses remove it)
    // fails all three.
    const std::size_t window = 100;
    std::vector<double> blocks;
    for (std::size_t i = 0; i + window <= trace.size(); i += window) {
        double s = 0.0;
        for (std::size_t k = i; k < i + window; ++k) s += trace[k].total;
        blocks.push_back(s / window);
    }
    REQUIRE(blocks.size() >= 4);
    for (std::size_t i = 1; i < blocks.size(); ++i)
        CHECK(blocks[i] <= blocks.front() * (1.0 + 1e-9));
    double early = 0.0;
    double late = 0.0;
    const std::size_t half = blocks.size() / 2;
    for (std::size_t i = 0; i < half; ++i) early += blocks[i];
    for (std::size_t i = blocks.size() - half; i < blocks.size(); ++i) late += blocks[i];
    CHECK(late <= early);
    CHECK(blocks.back() <= 0.95 * blocks.front());
}

TEST_CASE("decompose output depends on the thermal image only through labels") {
    const SceneTruth scene = make_scene(SceneKind::Mondrian, 32, 32, 14);
    const ImageGrid vis = scaled_visible(render_visible(scene));
    const ImageGrid absorbed = render_absorbed(scene);
    ImageGrid rescaled = absorbed;
    for (double& v : rescaled.data) v = 2.5 * v + 1.0;

    SolverConfig cfg;
    cfg.iterations = 80;
    cfg.seed = 6;
    const DecomposeResult a =
        decompose(vis, normalize01(absorbed).image, cfg);
    const DecomposeResult b =
        decompose(vis, normalize01(rescaled).image, cfg);
    CHECK(a.albedo.data == b.albedo.data);
    CHECK(a.shading.data == b.shading.data);
}

TEST_CASE("decompose validates inputs") {
    SolverConfig cfg;
    cfg.iterations = 5;
    CHECK_THROWS_AS(decompose(ImageGrid(8, 8, 3, 0.5), ImageGrid(9, 8, 1, 0.5), cfg),
                    invalid_input);
    CHECK_THROWS_AS(decompose(ImageGrid(8, 8, 3, 0.5), ImageGrid(8, 8, 3, 0.5), cfg),
                    invalid_input);
    SolverConfig bad;
    bad.iterations = 0;
    CHECK_THROWS_AS(bad.validate(), invalid_input);
    bad = SolverConfig{};
    bad.learning_rate = -1.0;
    CHECK_THROWS_AS(bad.validate(), invalid_input);
    bad = SolverConfig{};
    bad.beta1 = 1.0;
    CHECK_THROWS_AS(bad.validate(), invalid_input);
    bad = SolverConfig{};
    bad.resample_interval = 0;
    CHECK_THROWS_AS(bad.validate(), invalid_input);
}

TEST_CASE("analytic gradients agree with finite differences") {
    const SceneTruth scene = make_scene(SceneKind::VoronoiSmooth, 16, 16, 21);
    const ImageGrid vis = scaled_visible(render_visible(scene));
    const ImageGrid thermal = normalize01(render_absorbed(scene)).image;

    ObjectiveData data;
    data.visible = vis;
    data.edges = classify_edges(to_grayscale(vis), thermal, EdgeClassifierConfig{});
    std::vector<PointPair> pairs = sample_point_pairs(16, 16, 4, 77);
    PairClassifierConfig pcfg;
    data.pairs = classify_pairs(to_grayscale(vis), thermal, pairs, pcfg);
    data.z_albedo = 1.0;
    data.z_shading = 1.0;

    const IntrinsicEstimate est = init_params(vis, 31);
    const GradCheckReport report =
        check_gradients(est, data, LossWeights{}, 300, 99);
    CHECK(report.trials_used > 0);
    CHECK(report.max_rel_error < 1e-4);

    // Determinism of the probe selection.
    const GradCheckReport again = check_gradients(est, data, LossWeights{}, 300, 99);
    CHECK(again.max_rel_error == report.max_rel_error);
    CHECK(again.worst_index == report.worst_index);
}

TEST_CASE("diagnostics serialize as one json object per line") {
    Diagnostics d;
    d.trace.push_back(LossTrace{0, 1.5, 1.0, 0.25, 0.15, 0.1});
    d.trace.push_back(LossTrace{1, 1.2, 0.9, 0.15, 0.1, 0.05});
    d.final_loss = LossTrace{1, 1.2, 0.9, 0.15, 0.1, 0.05};
    d.wall_time_seconds = 0.5;
    d.edge_albedo = 3;
    d.pair_radius = 4;
    d.z_visible = 0.8;

    const std::string path =
        (std::filesystem::temp_directory_path() / "vti_solver_diag.jsonl").string();
    write_diagnostics(d, path);
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    int lines = 0;
    int finals = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++lines;
        CHECK(line.front() == '{');
        CHECK(line.back() == '}');
        if (line.find("\"final\"") != std::string::npos) ++finals;
    }
    CHECK(lines == 3);
    CHECK(finals == 1);
    std::filesystem::remove(path);
}
