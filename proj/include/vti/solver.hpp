#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vti/image.hpp"
#include "vti/objective.hpp"
#include "vti/ordinality.hpp"

namespace vti {

// Per-pixel parameterization: albedo through a logistic squashing (logits
// clamped to [-12, 12] before decode so the chain factor never degenerates
// silently), shading unbounded.
struct IntrinsicEstimate {
    ImageGrid albedo_logits;  // k channels
    ImageGrid shading_raw;    // 1 channel

    ImageGrid decoded_albedo() const;
    const ImageGrid& decoded_shading() const { return shading_raw; }
};

inline constexpr double kLogitClamp = 12.0;

struct SolverConfig {
    // The step size is kept well below the hinge margin scale: sparse pair
    // gradients under adaptive moment normalization overshoot by up to ~9x
    // the learning rate, and overshoot past a satisfied hinge leaves gauge
    // noise that freshly resampled pairs then flag as new violations.
    int iterations = 3000;
    double learning_rate = 0.002;
    double beta1 = 0.9;
    double beta2 = 0.999;
    int resample_interval = 100;  // iterations between pair redraws
    int pair_radius = 0;          // Poisson-disk spacing; 0 = max(4, min(H,W)/32)
    std::uint64_t seed = 0;
    LossWeights weights;
    EdgeClassifierConfig edge_cfg;
    PairClassifierConfig pair_cfg;

    void validate() const;
    int effective_radius(int height, int width) const;
};

// Adaptive moment estimation state, one slot per parameter.
struct AdamState {
    ImageGrid m_albedo, v_albedo;
    ImageGrid m_shading, v_shading;
    long long step_count = 0;
};

struct LossTrace {
    int iteration = 0;
    double total = 0.0;
    double recon = 0.0;
    double edge = 0.0;
    double ordinal = 0.0;
    double nonneg = 0.0;
};

struct Diagnostics {
    std::vector<LossTrace> trace;  // one record per iteration
    LossTrace final_loss;          // evaluated after the last step
    double wall_time_seconds = 0.0;
    std::size_t edge_albedo = 0, edge_shading = 0, edge_none = 0;
    std::size_t pair_s_plus = 0, pair_s_minus = 0;  // last resampling round
    std::size_t pair_a_plus = 0, pair_a_minus = 0, pair_none = 0;
    int pair_radius = 0;
    double z_visible = 0.0, z_thermal = 0.0, z_shading = 0.0;
};

struct DecomposeResult {
    ImageGrid albedo;
    ImageGrid shading;
    Diagnostics diagnostics;
};

// shading = spatial mean of the channel-mean visible + 0.1, constant across
// the image; logits = logit of the per-channel visible/shading ratio clamped
// into [0.02, 0.98], plus Gaussian jitter of stddev 0.01.
IntrinsicEstimate init_params(const ImageGrid& visible, std::uint64_t seed);

// One optimizer update in place. Gradients must be parameter-space (chain
// through the logistic decode already applied).
void adam_step(IntrinsicEstimate& estimate, const ImageGrid& grad_logits,
               const ImageGrid& grad_shading, AdamState& state, const SolverConfig& config);

// Converts field gradients (d decoded albedo, d shading) to parameter space.
ImageGrid chain_to_logits(const ImageGrid& d_albedo, const ImageGrid& albedo_logits);

// Full pipeline: classify edges once, initialize, iterate with periodic pair
// resampling, return decoded fields plus the loss trace.
DecomposeResult decompose(const ImageGrid& visible, const ImageGrid& thermal,
                          const SolverConfig& config);

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_block;  // "albedo_logits" or "shading_raw"
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    int trials_used = 0;
    int trials_skipped = 0;  // parameters too close to a kink or clamp edge
};

// Central finite differences (step 1e-6) against the analytic parameter
// gradient at randomly chosen parameters. Parameters within 1e-5 of a hinge
// kink, the shading penalty kink at 0, or the logit clamp edge are skipped;
// a pair of exact zeros counts as error 0.
GradCheckReport check_gradients(const IntrinsicEstimate& estimate, const ObjectiveData& data,
                                const LossWeights& weights, int trials, std::uint64_t seed);

// One JSON object per line: the per-iteration trace, then a summary record.
void write_diagnostics(const Diagnostics& diagnostics, const std::string& path);

}  // namespace vti
