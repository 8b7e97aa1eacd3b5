#include "vti/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "vti/errors.hpp"
#include "vti/rng.hpp"

namespace vti {

namespace {

double decode_logit(double z) {
    const double c = std::min(std::max(z, -kLogitClamp), kLogitClamp);
    return 1.0 / (1.0 + std::exp(-c));
}

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

ImageGrid IntrinsicEstimate::decoded_albedo() const {
    ImageGrid out = albedo_logits;
    for (double& v : out.data) v = decode_logit(v);
    return out;
}

void SolverConfig::validate() const {
    if (iterations < 1) throw invalid_input("SolverConfig: iterations must be >= 1");
    if (!(learning_rate > 0.0)) throw invalid_input("SolverConfig: learning_rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw invalid_input("SolverConfig: moment decays must lie in [0,1)");
    if (resample_interval < 1)
        throw invalid_input("SolverConfig: resample_interval must be >= 1");
    if (pair_radius != 0 && pair_radius < 2)
        throw invalid_input("SolverConfig: pair_radius must be 0 (auto) or >= 2");
    weights.validate();
    edge_cfg.validate();
    pair_cfg.validate();
}

int SolverConfig::effective_radius(int height, int width) const {
    if (pair_radius > 0) return pair_radius;
    return std::max(4, std::min(height, width) / 32);
}

IntrinsicEstimate init_params(const ImageGrid& visible, std::uint64_t seed) {
    if (visible.empty()) throw invalid_input("init_params: empty visible image");
    const ImageGrid gray = to_grayscale(visible);

    // Flat start: all image structure begins in the albedo so the losses,
    // not the initializer, decide what moves into shading.
    double mean = 0.0;
    for (double v : gray.data) mean += v;
    mean /= static_cast<double>(gray.size());
    const double eta = mean + 0.1;

    IntrinsicEstimate est;
    est.shading_raw = ImageGrid(visible.height, visible.width, 1, eta);
    est.albedo_logits = ImageGrid(visible.height, visible.width, visible.channels);
    for (std::size_t q = 0; q < est.albedo_logits.size(); ++q) {
        const double ratio = std::min(std::max(visible.data[q] / eta, 0.02), 0.98);
        est.albedo_logits.data[q] = logit(ratio) + 0.01 * rng::gaussian_at(seed, q);
    }
    return est;
}

ImageGrid chain_to_logits(const ImageGrid& d_albedo, const ImageGrid& albedo_logits) {
    if (!d_albedo.same_shape(albedo_logits))
        throw invalid_input("chain_to_logits: shape mismatch");
    ImageGrid out(d_albedo.height, d_albedo.width, d_albedo.channels);
    for (std::size_t q = 0; q < out.size(); ++q) {
        const double z = albedo_logits.data[q];
        if (std::abs(z) >= kLogitClamp) continue;  // clamp active: flat decode
        const double a = decode_logit(z);
        out.data[q] = d_albedo.data[q] * a * (1.0 - a);
    }
    return out;
}

void adam_step(IntrinsicEstimate& estimate, const ImageGrid& grad_logits,
               const ImageGrid& grad_shading, AdamState& state, const SolverConfig& config) {
    if (!grad_logits.all_finite())
        throw solver_failure("adam_step: non-finite albedo gradient");
    if (!grad_shading.all_finite())
        throw solver_failure("adam_step: non-finite shading gradient");
    if (state.step_count == 0) {
        state.m_albedo = ImageGrid(grad_logits.height, grad_logits.width, grad_logits.channels);
        state.v_albedo = state.m_albedo;
        state.m_shading = ImageGrid(grad_shading.height, grad_shading.width, 1);
        state.v_shading = state.m_shading;
    }
    ++state.step_count;
    const double b1 = config.beta1;
    const double b2 = config.beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
    constexpr double kEps = 1e-8;

    auto update = [&](std::vector<double>& params, std::vector<double>& m, std::vector<double>& v,
                      const std::vector<double>& g) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double mh = m[i] / corr1;
            const double vh = v[i] / corr2;
            params[i] -= config.learning_rate * mh / (std::sqrt(vh) + kEps);
        }
    };
    update(estimate.albedo_logits.data, state.m_albedo.data, state.v_albedo.data,
           grad_logits.data);
    update(estimate.shading_raw.data, state.m_shading.data, state.v_shading.data,
           grad_shading.data);
}

namespace {

LossTrace to_trace(int iteration, const LossReport& report) {
    return LossTrace{iteration, report.total, report.recon, report.edge, report.ordinal,
                     report.nonneg};
}

void require_finite(const LossReport& report) {
    if (std::isfinite(report.total)) return;
    const char* term = "total";
    if (!std::isfinite(report.recon)) term = "recon";
    else if (!std::isfinite(report.edge)) term = "edge";
    else if (!std::isfinite(report.ordinal)) term = "ordinal";
    else if (!std::isfinite(report.nonneg)) term = "nonneg";
    throw solver_failure(std::string("decompose: non-finite loss term: ") + term);
}

double percentile_range(const ImageGrid& image) {
    const double z = percentile(image, 0.98) - percentile(image, 0.02);
    return std::max(z, 1e-6);
}

}  // namespace

DecomposeResult decompose(const ImageGrid& visible, const ImageGrid& thermal,
                          const SolverConfig& config) {
    config.validate();
    if (visible.empty() || thermal.empty())
        throw invalid_input("decompose: empty input image");
    if (thermal.channels != 1)
        throw invalid_input("decompose: thermal image must be single-channel");
    if (!visible.same_extent(thermal))
        throw invalid_input("decompose: visible and thermal extents differ");
    if (!visible.all_finite() || !thermal.all_finite())
        throw invalid_input("decompose: non-finite input");

    const auto t0 = std::chrono::steady_clock::now();
    const ImageGrid vis_gray = to_grayscale(visible);
    const int radius = config.effective_radius(visible.height, visible.width);

    Diagnostics diag;
    diag.pair_radius = radius;

    const EdgeLabelMap edges = classify_edges(vis_gray, thermal, config.edge_cfg);
    diag.edge_albedo = edges.count(EdgeClass::Albedo);
    diag.edge_shading = edges.count(EdgeClass::Shading);
    diag.edge_none = edges.count(EdgeClass::None);

    PairClassifierConfig pair_cfg = config.pair_cfg;
    pair_cfg.z_visible = percentile_range(vis_gray);
    pair_cfg.z_thermal = percentile_range(thermal);
    diag.z_visible = pair_cfg.z_visible;
    diag.z_thermal = pair_cfg.z_thermal;

    IntrinsicEstimate est = init_params(visible, rng::derive(config.seed, rng::kInitStream));
    AdamState state;

    ObjectiveData data;
    data.visible = visible;
    data.edges = edges;
    data.z_albedo = 1.0;
    data.z_shading = 1.0;

    const std::uint64_t sampler_root = rng::derive(config.seed, rng::kSamplerStream);
    diag.trace.reserve(static_cast<std::size_t>(config.iterations));

    for (int it = 0; it < config.iterations; ++it) {
        if (it % config.resample_interval == 0) {
            const std::uint64_t round = static_cast<std::uint64_t>(it) /
                                        config.resample_interval;
            const auto raw = sample_point_pairs(visible.height, visible.width, radius,
                                                rng::derive(sampler_root, round));
            data.pairs = classify_pairs(vis_gray, thermal, raw, pair_cfg);
            data.z_shading = std::max(percentile(est.shading_raw, 0.99), 1e-6);
        }
        const ImageGrid albedo = est.decoded_albedo();
        const LossReport report = total_objective(albedo, est.shading_raw, data, config.weights);
        require_finite(report);
        diag.trace.push_back(to_trace(it, report));

        const ImageGrid grad_logits = chain_to_logits(report.d_albedo, est.albedo_logits);
        adam_step(est, grad_logits, report.d_shading, state, config);
    }

    diag.z_shading = data.z_shading;
    for (const PointPair& p : data.pairs) {
        switch (*p.label) {
            case PairLabel::SPlus: ++diag.pair_s_plus; break;
            case PairLabel::SMinus: ++diag.pair_s_minus; break;
            case PairLabel::APlus: ++diag.pair_a_plus; break;
            case PairLabel::AMinus: ++diag.pair_a_minus; break;
            case PairLabel::None: ++diag.pair_none; break;
        }
    }

    DecomposeResult result;
    result.albedo = est.decoded_albedo();
    result.shading = est.shading_raw;
    const LossReport final_report =
        total_objective(result.albedo, result.shading, data, config.weights);
    require_finite(final_report);
    diag.final_loss = to_trace(config.iterations, final_report);

    // Reconstruction must not regress when it is part of the objective.
    if (config.weights.lambda_recon > 0.0 && !diag.trace.empty() &&
        diag.final_loss.recon > diag.trace.front().recon * (1.0 + 1e-12) + 1e-15)
        throw solver_failure("decompose: reconstruction loss increased",
                             diag.final_loss.recon);

    diag.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.diagnostics = std::move(diag);
    return result;
}

namespace {

// Kink-proximity masks: a parameter is excluded when a hinge argument it can
// move, the shading penalty kink, or the logit clamp edge lies within tol.
struct KinkMasks {
    std::vector<bool> albedo;   // per pixel (grayscale albedo enters the hinges)
    std::vector<bool> shading;  // per pixel
};

KinkMasks kink_masks(const ImageGrid& albedo_gray, const ImageGrid& shading,
                     const ObjectiveData& data, const LossWeights& weights, double tol) {
    KinkMasks masks;
    masks.albedo.assign(albedo_gray.size(), false);
    masks.shading.assign(shading.size(), false);
    auto mark = [&](std::vector<bool>& mask, const ImageGrid& field, const PixelCoord& lo,
                    const PixelCoord& hi, double z) {
        const double arg =
            (field.at(lo.y, lo.x) - field.at(hi.y, hi.x)) / z + weights.margin;
        if (std::abs(arg) < tol) {
            mask[field.index(lo.y, lo.x)] = true;
            mask[field.index(hi.y, hi.x)] = true;
        }
    };
    for (const PointPair& p : data.pairs) {
        if (!p.label) throw invalid_input("check_gradients: unlabeled pair");
        switch (*p.label) {
            case PairLabel::SPlus: mark(masks.shading, shading, p.j, p.i, data.z_shading); break;
            case PairLabel::SMinus: mark(masks.shading, shading, p.i, p.j, data.z_shading); break;
            case PairLabel::APlus: mark(masks.albedo, albedo_gray, p.j, p.i, data.z_albedo); break;
            case PairLabel::AMinus: mark(masks.albedo, albedo_gray, p.i, p.j, data.z_albedo); break;
            case PairLabel::None: break;
        }
    }
    for (std::size_t p = 0; p < shading.size(); ++p)
        if (std::abs(shading.data[p]) < tol) masks.shading[p] = true;
    return masks;
}

}  // namespace

GradCheckReport check_gradients(const IntrinsicEstimate& estimate, const ObjectiveData& data,
                                const LossWeights& weights, int trials, std::uint64_t seed) {
    if (trials < 1) throw invalid_input("check_gradients: trials must be >= 1");
    const std::size_t n_albedo = estimate.albedo_logits.size();
    const std::size_t n_shading = estimate.shading_raw.size();
    const int k = estimate.albedo_logits.channels;

    const ImageGrid albedo = estimate.decoded_albedo();
    const ImageGrid albedo_gray = to_grayscale(albedo);
    const LossReport report =
        total_objective(albedo, estimate.shading_raw, data, weights);
    const ImageGrid grad_logits = chain_to_logits(report.d_albedo, estimate.albedo_logits);

    constexpr double kTol = 1e-5;
    constexpr double kStep = 1e-6;
    const KinkMasks masks =
        kink_masks(albedo_gray, estimate.shading_raw, data, weights, kTol);

    auto eval_total = [&](const IntrinsicEstimate& est) {
        return total_objective(est.decoded_albedo(), est.shading_raw, data, weights).total;
    };

    GradCheckReport out;
    rng::Stream rs(seed);
    for (int t = 0; t < trials; ++t) {
        const std::size_t pick = static_cast<std::size_t>(
            rs.uniform() * static_cast<double>(n_albedo + n_shading));
        const bool is_albedo = pick < n_albedo;
        const std::size_t q = is_albedo ? pick : pick - n_albedo;

        if (is_albedo) {
            const double z = estimate.albedo_logits.data[q];
            if (std::abs(std::abs(z) - kLogitClamp) < kTol || masks.albedo[q / k]) {
                ++out.trials_skipped;
                continue;
            }
        } else if (masks.shading[q]) {
            ++out.trials_skipped;
            continue;
        }

        IntrinsicEstimate probe = estimate;
        double* slot = is_albedo ? &probe.albedo_logits.data[q] : &probe.shading_raw.data[q];
        const double saved = *slot;
        *slot = saved + kStep;
        const double f_plus = eval_total(probe);
        *slot = saved - kStep;
        const double f_minus = eval_total(probe);
        *slot = saved;

        const double numeric = (f_plus - f_minus) / (2.0 * kStep);
        const double analytic = is_albedo ? grad_logits.data[q] : report.d_shading.data[q];
        // Differences below finite-difference resolution count as agreement.
        const double rel = std::abs(analytic - numeric) /
                           std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        ++out.trials_used;
        if (rel > out.max_rel_error) {
            out.max_rel_error = rel;
            out.worst_block = is_albedo ? "albedo_logits" : "shading_raw";
            out.worst_index = q;
            out.worst_analytic = analytic;
            out.worst_numeric = numeric;
        }
    }
    return out;
}

void write_diagnostics(const Diagnostics& diagnostics, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("write_diagnostics: cannot open " + path);
    auto record = [](const LossTrace& t) {
        return nlohmann::json{{"iteration", t.iteration}, {"total", t.total},
                              {"recon", t.recon},         {"edge", t.edge},
                              {"ordinal", t.ordinal},     {"nonneg", t.nonneg}};
    };
    for (const LossTrace& t : diagnostics.trace) out << record(t).dump() << '\n';
    nlohmann::json summary = record(diagnostics.final_loss);
    summary["final"] = true;
    summary["wall_time_seconds"] = diagnostics.wall_time_seconds;
    summary["edge_counts"] = {{"albedo", diagnostics.edge_albedo},
                              {"shading", diagnostics.edge_shading},
                              {"none", diagnostics.edge_none}};
    summary["pair_counts"] = {{"s_plus", diagnostics.pair_s_plus},
                              {"s_minus", diagnostics.pair_s_minus},
                              {"a_plus", diagnostics.pair_a_plus},
                              {"a_minus", diagnostics.pair_a_minus},
                              {"none", diagnostics.pair_none}};
    summary["pair_radius"] = diagnostics.pair_radius;
    summary["z_visible"] = diagnostics.z_visible;
    summary["z_thermal"] = diagnostics.z_thermal;
    summary["z_shading"] = diagnostics.z_shading;
    out << summary.dump() << '\n';
    if (!out) throw io_error("write_diagnostics: write failed for " + path);
}

}  // namespace vti
