#include "vti/objective.hpp"

#include <cmath>

#include "vti/errors.hpp"

namespace vti {

void LossWeights::validate() const {
    const double all[] = {lambda_recon, lambda_edge, lambda_ord, lambda_nonneg, margin};
    for (double w : all)
        if (!std::isfinite(w) || w < 0.0)
            throw invalid_input("LossWeights: weights must be finite and >= 0");
    if (!(margin > 0.0)) throw invalid_input("LossWeights: margin must be > 0");
}

LossTerm recon_loss(const ImageGrid& albedo, const ImageGrid& shading, const ImageGrid& visible) {
    if (!albedo.same_shape(visible))
        throw invalid_input("recon_loss: albedo and visible shapes differ");
    if (shading.channels != 1 || !shading.same_extent(albedo))
        throw invalid_input("recon_loss: shading must be single-channel and match extents");

    LossTerm term;
    term.d_albedo = ImageGrid(albedo.height, albedo.width, albedo.channels);
    term.d_shading = ImageGrid(albedo.height, albedo.width, 1);
    const int k = albedo.channels;
    const double n = static_cast<double>(albedo.size());
    for (std::size_t p = 0; p < shading.size(); ++p) {
        const double eta = shading.data[p];
        double d_eta = 0.0;
        for (int c = 0; c < k; ++c) {
            const std::size_t q = p * k + c;
            const double resid = albedo.data[q] * eta - visible.data[q];
            term.value += resid * resid;
            term.d_albedo.data[q] = 2.0 * resid * eta / n;
            d_eta += 2.0 * resid * albedo.data[q];
        }
        term.d_shading.data[p] = d_eta / n;
    }
    term.value /= n;
    return term;
}

LossTerm edge_loss(const ImageGrid& albedo_gray, const ImageGrid& shading,
                   const EdgeLabelMap& labels) {
    if (albedo_gray.channels != 1 || shading.channels != 1)
        throw invalid_input("edge_loss: fields must be single-channel");
    if (!albedo_gray.same_extent(shading))
        throw invalid_input("edge_loss: albedo and shading extents differ");
    if (labels.height != albedo_gray.height || labels.width != albedo_gray.width)
        throw invalid_input("edge_loss: label map size mismatch");
    if (albedo_gray.height < 2 || albedo_gray.width < 2)
        throw invalid_input("edge_loss: image too small for gradients");

    const int h = albedo_gray.height;
    const int w = albedo_gray.width;
    const double n = static_cast<double>(albedo_gray.size());

    LossTerm term;
    term.d_albedo = ImageGrid(h, w, 1);
    term.d_shading = ImageGrid(h, w, 1);

    // One penalized field per pixel: the one whose gradient should vanish
    // there. Each squared stencil difference feeds gradient back to the two
    // referenced pixels.
    auto accumulate = [&](const ImageGrid& field, ImageGrid& grad, int y, int x) {
        const DiffStencil sx = diff_stencil(x, w);
        const double gx = sx.w * (field.at(y, sx.b) - field.at(y, sx.a));
        const DiffStencil sy = diff_stencil(y, h);
        const double gy = sy.w * (field.at(sy.b, x) - field.at(sy.a, x));
        term.value += gx * gx + gy * gy;
        grad.at(y, sx.b) += 2.0 * gx * sx.w / n;
        grad.at(y, sx.a) -= 2.0 * gx * sx.w / n;
        grad.at(sy.b, x) += 2.0 * gy * sy.w / n;
        grad.at(sy.a, x) -= 2.0 * gy * sy.w / n;
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const EdgeClass c = labels.at(y, x);
            if (c == EdgeClass::Shading)
                accumulate(albedo_gray, term.d_albedo, y, x);
            else if (c == EdgeClass::Albedo)
                accumulate(shading, term.d_shading, y, x);
        }
    }
    term.value /= n;
    return term;
}

LossTerm ordinal_loss(const ImageGrid& albedo_gray, const ImageGrid& shading,
                      const std::vector<PointPair>& pairs, const LossWeights& weights,
                      double z_albedo, double z_shading) {
    weights.validate();
    if (albedo_gray.channels != 1 || shading.channels != 1)
        throw invalid_input("ordinal_loss: fields must be single-channel");
    if (!albedo_gray.same_extent(shading))
        throw invalid_input("ordinal_loss: albedo and shading extents differ");
    if (!(z_albedo > 0.0) || !(z_shading > 0.0))
        throw invalid_input("ordinal_loss: normalization constants must be > 0");

    LossTerm term;
    term.d_albedo = ImageGrid(albedo_gray.height, albedo_gray.width, 1);
    term.d_shading = ImageGrid(albedo_gray.height, albedo_gray.width, 1);
    if (pairs.empty()) return term;

    const double np = static_cast<double>(pairs.size());
    // Hinge per label: the estimate difference that should be positive enters
    // negated, so satisfied pairs with margin-wide separation contribute 0.
    auto hinge = [&](const ImageGrid& field, ImageGrid& grad, const PixelCoord& lo,
                     const PixelCoord& hi, double z) {
        const double arg = (field.at(lo.y, lo.x) - field.at(hi.y, hi.x)) / z + weights.margin;
        if (arg > 0.0) {
            term.value += arg;
            grad.at(lo.y, lo.x) += 1.0 / (z * np);
            grad.at(hi.y, hi.x) -= 1.0 / (z * np);
        }
    };
    for (const PointPair& p : pairs) {
        if (!p.label) throw invalid_input("ordinal_loss: unlabeled pair");
        switch (*p.label) {
            case PairLabel::SPlus: hinge(shading, term.d_shading, p.j, p.i, z_shading); break;
            case PairLabel::SMinus: hinge(shading, term.d_shading, p.i, p.j, z_shading); break;
            case PairLabel::APlus: hinge(albedo_gray, term.d_albedo, p.j, p.i, z_albedo); break;
            case PairLabel::AMinus: hinge(albedo_gray, term.d_albedo, p.i, p.j, z_albedo); break;
            case PairLabel::None: break;
        }
    }
    term.value /= np;
    return term;
}

LossTerm nonneg_penalty(const ImageGrid& shading) {
    if (shading.channels != 1)
        throw invalid_input("nonneg_penalty: shading must be single-channel");
    LossTerm term;
    term.d_shading = ImageGrid(shading.height, shading.width, 1);
    const double n = static_cast<double>(shading.size());
    for (std::size_t p = 0; p < shading.size(); ++p) {
        const double neg = std::max(-shading.data[p], 0.0);
        term.value += neg * neg;
        term.d_shading.data[p] = -2.0 * neg / n;
    }
    term.value /= n;
    return term;
}

LossReport total_objective(const ImageGrid& albedo, const ImageGrid& shading,
                           const ObjectiveData& data, const LossWeights& weights) {
    weights.validate();
    const ImageGrid albedo_gray = to_grayscale(albedo);
    const int k = albedo.channels;

    const LossTerm rec = recon_loss(albedo, shading, data.visible);
    const LossTerm edg = edge_loss(albedo_gray, shading, data.edges);
    const LossTerm ord =
        ordinal_loss(albedo_gray, shading, data.pairs, weights, data.z_albedo, data.z_shading);
    const LossTerm non = nonneg_penalty(shading);

    LossReport report;
    report.recon = rec.value;
    report.edge = edg.value;
    report.ordinal = ord.value;
    report.nonneg = non.value;
    report.total = weights.lambda_recon * rec.value + weights.lambda_edge * edg.value +
                   weights.lambda_ord * ord.value + weights.lambda_nonneg * non.value;

    report.d_albedo = ImageGrid(albedo.height, albedo.width, k);
    report.d_shading = ImageGrid(albedo.height, albedo.width, 1);
    for (std::size_t p = 0; p < report.d_shading.size(); ++p) {
        const double gray = weights.lambda_edge * edg.d_albedo.data[p] +
                            weights.lambda_ord * ord.d_albedo.data[p];
        for (int c = 0; c < k; ++c) {
            const std::size_t q = p * k + c;
            report.d_albedo.data[q] =
                weights.lambda_recon * rec.d_albedo.data[q] + gray / k;
        }
        report.d_shading.data[p] = weights.lambda_recon * rec.d_shading.data[p] +
                                   weights.lambda_edge * edg.d_shading.data[p] +
                                   weights.lambda_ord * ord.d_shading.data[p] +
                                   weights.lambda_nonneg * non.d_shading.data[p];
    }
    return report;
}

}  // namespace vti
