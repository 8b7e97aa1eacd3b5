#pragma once

#include <vector>

#include "vti/image.hpp"
#include "vti/ordinality.hpp"

namespace vti {

struct LossWeights {
    double lambda_recon = 1.0;   // reconstruction weight (0 disables the term)
    double lambda_edge = 1.0;    // edge-consistency weight
    double lambda_ord = 1.0;     // ordinal hinge weight
    double lambda_nonneg = 10.0; // negative-shading penalty weight
    double margin = 0.05;        // hinge margin on normalized differences

    void validate() const;
};

// One loss term with its gradient fields. d_albedo matches the albedo layout
// handed in (k channels for recon, grayscale for edge/ordinal); d_shading is
// always single-channel.
struct LossTerm {
    double value = 0.0;
    ImageGrid d_albedo;
    ImageGrid d_shading;
};

// Inputs the total objective needs besides the current estimate. Pairs must
// be labeled; z constants normalize estimate differences in the hinge terms.
struct ObjectiveData {
    ImageGrid visible;  // k-channel target
    EdgeLabelMap edges;
    std::vector<PointPair> pairs;
    double z_albedo = 1.0;
    double z_shading = 1.0;
};

struct LossReport {
    double total = 0.0;
    double recon = 0.0;
    double edge = 0.0;
    double ordinal = 0.0;
    double nonneg = 0.0;
    ImageGrid d_albedo;   // k channels, aligned with the albedo estimate
    ImageGrid d_shading;  // 1 channel
};

// Mean squared reconstruction error of albedo * shading against the visible
// image, averaged over pixels and channels.
LossTerm recon_loss(const ImageGrid& albedo, const ImageGrid& shading, const ImageGrid& visible);

// Penalizes grayscale-albedo gradients on shading-labeled pixels and shading
// gradients on albedo-labeled pixels, averaged over all pixels. Gradients
// backpropagate through the difference stencils.
LossTerm edge_loss(const ImageGrid& albedo_gray, const ImageGrid& shading,
                   const EdgeLabelMap& labels);

// Hinge loss on normalized estimate differences per pair label, averaged over
// the full pair list (None pairs contribute zero). Subgradient 0 at the kink.
LossTerm ordinal_loss(const ImageGrid& albedo_gray, const ImageGrid& shading,
                      const std::vector<PointPair>& pairs, const LossWeights& weights,
                      double z_albedo, double z_shading);

// Mean of max(-shading, 0)^2.
LossTerm nonneg_penalty(const ImageGrid& shading);

// Weighted sum of the four terms. Edge and ordinal losses act on the
// channel-mean albedo; their gradients spread back to channels with factor
// 1/k by the chain rule.
LossReport total_objective(const ImageGrid& albedo, const ImageGrid& shading,
                           const ObjectiveData& data, const LossWeights& weights);

}  // namespace vti
