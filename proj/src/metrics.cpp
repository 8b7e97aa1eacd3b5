#include "vti/metrics.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vti/errors.hpp"

namespace vti {

double si_mse(const ImageGrid& estimate, const ImageGrid& truth) {
    if (!estimate.same_shape(truth)) throw invalid_input("si_mse: shape mismatch");
    if (estimate.empty()) throw invalid_input("si_mse: empty inputs");
    double et = 0.0;
    double ee = 0.0;
    bool truth_nonzero = false;
    for (std::size_t i = 0; i < estimate.size(); ++i) {
        et += estimate.data[i] * truth.data[i];
        ee += estimate.data[i] * estimate.data[i];
        truth_nonzero = truth_nonzero || truth.data[i] != 0.0;
    }
    if (!truth_nonzero) throw invalid_input("si_mse: truth is identically zero");
    const double alpha = ee > 0.0 ? et / ee : 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < estimate.size(); ++i) {
        const double r = alpha * estimate.data[i] - truth.data[i];
        acc += r * r;
    }
    return acc / static_cast<double>(estimate.size());
}

double mse(const ImageGrid& estimate, const ImageGrid& truth) {
    if (!estimate.same_shape(truth)) throw invalid_input("mse: shape mismatch");
    if (estimate.empty()) throw invalid_input("mse: empty inputs");
    double acc = 0.0;
    for (std::size_t i = 0; i < estimate.size(); ++i) {
        const double r = estimate.data[i] - truth.data[i];
        acc += r * r;
    }
    return acc / static_cast<double>(estimate.size());
}

namespace {

std::optional<double> fraction(std::size_t num, std::size_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::optional<double> OrdinalAccuracyReport::albedo_accuracy() const {
    return fraction(albedo_correct, albedo_total);
}
std::optional<double> OrdinalAccuracyReport::shading_accuracy() const {
    return fraction(shading_correct, shading_total);
}
std::optional<double> OrdinalAccuracyReport::overall_accuracy() const {
    return fraction(albedo_correct + shading_correct, albedo_total + shading_total);
}

OrdinalAccuracyReport ordinal_accuracy(const std::vector<PointPair>& pairs,
                                       const SceneTruth& truth) {
    truth.validate();
    const ImageGrid albedo_gray = to_grayscale(truth.albedo);
    auto in_bounds = [&](const PixelCoord& p) {
        return p.y >= 0 && p.y < albedo_gray.height && p.x >= 0 && p.x < albedo_gray.width;
    };
    OrdinalAccuracyReport report;
    for (const PointPair& p : pairs) {
        if (!p.label) throw invalid_input("ordinal_accuracy: unlabeled pair");
        if (*p.label == PairLabel::None) continue;
        if (!in_bounds(p.i) || !in_bounds(p.j))
            throw invalid_input("ordinal_accuracy: pair out of bounds");
        switch (*p.label) {
            case PairLabel::APlus:
                ++report.albedo_total;
                if (albedo_gray.at(p.i.y, p.i.x) > albedo_gray.at(p.j.y, p.j.x))
                    ++report.albedo_correct;
                break;
            case PairLabel::AMinus:
                ++report.albedo_total;
                if (albedo_gray.at(p.i.y, p.i.x) < albedo_gray.at(p.j.y, p.j.x))
                    ++report.albedo_correct;
                break;
            case PairLabel::SPlus:
                ++report.shading_total;
                if (truth.shading.at(p.i.y, p.i.x) > truth.shading.at(p.j.y, p.j.x))
                    ++report.shading_correct;
                break;
            case PairLabel::SMinus:
                ++report.shading_total;
                if (truth.shading.at(p.i.y, p.i.x) < truth.shading.at(p.j.y, p.j.x))
                    ++report.shading_correct;
                break;
            case PairLabel::None: break;
        }
    }
    return report;
}

std::size_t EdgeConfusion::tallied() const {
    std::size_t n = 0;
    for (const auto& row : counts)
        for (std::size_t c : row) n += c;
    return n;
}

std::optional<double> EdgeConfusion::decision_accuracy() const {
    std::size_t correct = counts[0][0] + counts[1][1];
    std::size_t total = 0;
    for (int t = 0; t < 2; ++t)
        for (int p = 0; p < 2; ++p) total += counts[t][p];
    return fraction(correct, total);
}

EdgeConfusion edge_accuracy(const EdgeLabelMap& labels, const SceneTruth& truth,
                            double mag_threshold) {
    truth.validate();
    if (labels.height != truth.shading.height || labels.width != truth.shading.width)
        throw invalid_input("edge_accuracy: label map size mismatch");
    if (!(mag_threshold > 0.0))
        throw invalid_input("edge_accuracy: mag_threshold must be > 0");

    const ImageGrid albedo_gray = to_grayscale(truth.albedo);
    const GradientField grad_a = gradient(albedo_gray);
    const GradientField grad_s = gradient(truth.shading);

    auto pred_index = [](EdgeClass c) {
        switch (c) {
            case EdgeClass::Albedo: return 0;
            case EdgeClass::Shading: return 1;
            case EdgeClass::None: return 2;
        }
        return 2;
    };

    EdgeConfusion confusion;
    for (std::size_t p = 0; p < labels.labels.size(); ++p) {
        const double na = std::hypot(grad_a.gx.data[p], grad_a.gy.data[p]);
        const double ns = std::hypot(grad_s.gx.data[p], grad_s.gy.data[p]);
        const double a_term = na * truth.shading.data[p];
        const double s_term = albedo_gray.data[p] * ns;
        int truth_idx;
        if (std::max(a_term, s_term) <= mag_threshold)
            truth_idx = 2;
        else if (a_term > 4.0 * s_term)
            truth_idx = 0;
        else if (s_term > 4.0 * a_term)
            truth_idx = 1;
        else {
            ++confusion.mixed_excluded;
            continue;
        }
        ++confusion.counts[static_cast<std::size_t>(truth_idx)]
                          [static_cast<std::size_t>(pred_index(labels.labels[p]))];
    }
    return confusion;
}

namespace {

nlohmann::json optional_to_json(const std::optional<double>& v) {
    if (!v) return nullptr;
    return *v;
}

nlohmann::json ordinal_to_json(const OrdinalAccuracyReport& r) {
    return {{"albedo_total", r.albedo_total},
            {"albedo_correct", r.albedo_correct},
            {"shading_total", r.shading_total},
            {"shading_correct", r.shading_correct},
            {"albedo_accuracy", optional_to_json(r.albedo_accuracy())},
            {"shading_accuracy", optional_to_json(r.shading_accuracy())},
            {"overall_accuracy", optional_to_json(r.overall_accuracy())}};
}

nlohmann::json edges_to_json(const EdgeConfusion& e) {
    return {{"counts", e.counts},
            {"mixed_excluded", e.mixed_excluded},
            {"decision_accuracy", optional_to_json(e.decision_accuracy())},
            {"classes", {"albedo", "shading", "none"}}};
}

std::string format_optional(const std::optional<double>& v) {
    if (!v) return "";
    std::ostringstream out;
    out << *v;
    return out.str();
}

}  // namespace

void write_eval_report(const EvalReport& report, const std::string& path) {
    nlohmann::json j{{"si_mse_albedo", report.si_mse_albedo},
                     {"si_mse_shading", report.si_mse_shading}};
    j["ordinal"] = report.ordinal ? ordinal_to_json(*report.ordinal) : nlohmann::json(nullptr);
    j["edges"] = report.edges ? edges_to_json(*report.edges) : nlohmann::json(nullptr);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("write_eval_report: cannot open " + path);
    out << j.dump(2) << '\n';
    if (!out) throw io_error("write_eval_report: write failed for " + path);
}

std::string eval_csv_header() {
    return "scene,si_mse_albedo,si_mse_shading,ordinal_overall,edge_decision_accuracy";
}

std::string eval_csv_row(const std::string& scene, const EvalReport& report) {
    std::ostringstream out;
    out << scene << ',' << report.si_mse_albedo << ',' << report.si_mse_shading << ',';
    if (report.ordinal) out << format_optional(report.ordinal->overall_accuracy());
    out << ',';
    if (report.edges) out << format_optional(report.edges->decision_accuracy());
    return out.str();
}

}  // namespace vti
