#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "vti/image.hpp"
#include "vti/ordinality.hpp"
#include "vti/simulate.hpp"

namespace vti {

// Mean squared error after fitting one global scale (no offset) to the
// estimate; removes the inherent scale ambiguity of the decomposition.
double si_mse(const ImageGrid& estimate, const ImageGrid& truth);

double mse(const ImageGrid& estimate, const ImageGrid& truth);

// Per-class pair-label accuracy. Fractions are empty when the class has no
// labeled pairs (None pairs never enter a denominator).
struct OrdinalAccuracyReport {
    std::size_t albedo_total = 0, albedo_correct = 0;
    std::size_t shading_total = 0, shading_correct = 0;

    std::optional<double> albedo_accuracy() const;
    std::optional<double> shading_accuracy() const;
    std::optional<double> overall_accuracy() const;
};

// A+/A- claims are checked against the channel-mean ground-truth albedo,
// S+/S- against ground-truth shading; strict ordering required.
OrdinalAccuracyReport ordinal_accuracy(const std::vector<PointPair>& pairs,
                                       const SceneTruth& truth);

// 3x3 confusion over {Albedo, Shading, None}. Ground truth per pixel comes
// from which product-rule term dominates: |grad albedo_gray| * shading versus
// albedo_gray * |grad shading|, dominance ratio 4:1. Pixels where neither
// term exceeds mag_threshold are true None; pixels with both terms active but
// no 4:1 dominance are Mixed and excluded (counted separately).
struct EdgeConfusion {
    // counts[truth][predicted], indices 0 = Albedo, 1 = Shading, 2 = None.
    std::array<std::array<std::size_t, 3>, 3> counts{};
    std::size_t mixed_excluded = 0;

    std::size_t tallied() const;
    // Correct fraction over pixels where both truth and prediction commit to
    // Albedo or Shading.
    std::optional<double> decision_accuracy() const;
};

EdgeConfusion edge_accuracy(const EdgeLabelMap& labels, const SceneTruth& truth,
                            double mag_threshold);

struct EvalReport {
    double si_mse_albedo = 0.0;
    double si_mse_shading = 0.0;
    std::optional<OrdinalAccuracyReport> ordinal;
    std::optional<EdgeConfusion> edges;
};

void write_eval_report(const EvalReport& report, const std::string& path);

std::string eval_csv_header();
std::string eval_csv_row(const std::string& scene, const EvalReport& report);

}  // namespace vti
