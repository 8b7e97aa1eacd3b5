#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vti/image.hpp"

namespace vti {

enum class EdgeClass : std::uint8_t { None = 0, Shading = 1, Albedo = 2 };

// Dense per-pixel edge classification of a visible/thermal pair.
struct EdgeLabelMap {
    int height = 0;
    int width = 0;
    std::vector<EdgeClass> labels;

    EdgeLabelMap() = default;
    EdgeLabelMap(int h, int w)
        : height(h), width(w), labels(static_cast<std::size_t>(h) * w, EdgeClass::None) {}

    std::size_t index(int y, int x) const { return static_cast<std::size_t>(y) * width + x; }
    EdgeClass& at(int y, int x) { return labels[index(y, x)]; }
    EdgeClass at(int y, int x) const { return labels[index(y, x)]; }
    std::size_t count(EdgeClass c) const;
};

struct EdgeClassifierConfig {
    double mag_threshold = 0.015;    // minimum visible gradient norm, intensity/pixel
    double cos_threshold = 0.5;      // gradient-cosine decision band, in (0,1)
    double thermal_blur_sigma = 2.0; // pixels; 0 disables smoothing

    void validate() const;
};

enum class PairLabel : std::uint8_t { SPlus, SMinus, APlus, AMinus, None };

std::string pair_label_name(PairLabel label);
PairLabel parse_pair_label(const std::string& name);

struct PixelCoord {
    int y = 0;
    int x = 0;
    bool operator==(const PixelCoord&) const = default;
};

// Anchor/partner pixel pair. label stays unset until classification; None is
// itself a classification outcome (no consistent ordinal signal).
struct PointPair {
    PixelCoord i;
    PixelCoord j;
    std::optional<PairLabel> label;
    double delta_v = 0.0;  // normalized visible difference at classification time
    double delta_t = 0.0;  // normalized thermal difference
};

struct PairClassifierConfig {
    double diff_threshold = 0.05;  // epsilon on normalized differences
    double z_visible = 1.0;        // visible normalization constant, > 0
    double z_thermal = 1.0;        // thermal normalization constant, > 0

    void validate() const;
};

// Gradient-direction edge classes: blur the thermal image, compare gradient
// orientations. Opposed gradients mark reflectance changes, aligned gradients
// mark illumination changes, everything else stays unlabeled.
EdgeLabelMap classify_edges(const ImageGrid& vis_gray, const ImageGrid& thermal,
                            const EdgeClassifierConfig& cfg);

// Poisson-disk anchors (Bridson dart throwing, min spacing = radius) each
// paired with a partner drawn uniformly from the [radius, 3*radius] annulus;
// out-of-bounds partners reflect across the violated border. Labels unset.
std::vector<PointPair> sample_point_pairs(int height, int width, int radius, std::uint64_t seed);

// Ordinal comparison of one pair: normalized differences of the two inputs,
// thresholded into the four sign cases or None.
PointPair classify_pair(const ImageGrid& vis_gray, const ImageGrid& thermal,
                        const PointPair& pair, const PairClassifierConfig& cfg);

std::vector<PointPair> classify_pairs(const ImageGrid& vis_gray, const ImageGrid& thermal,
                                      const std::vector<PointPair>& pairs,
                                      const PairClassifierConfig& cfg);

// JSON array of labeled pairs; round-trips losslessly through import_labels.
void export_labels(const std::vector<PointPair>& pairs, const std::string& path);
std::vector<PointPair> import_labels(const std::string& path);

// 8-bit grayscale visualization: 0 = None, 128 = Shading, 255 = Albedo.
void export_edge_png(const EdgeLabelMap& map, const std::string& path);
EdgeLabelMap import_edge_png(const std::string& path);

}  // namespace vti
