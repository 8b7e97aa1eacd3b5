#include "vti/ordinality.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "vti/errors.hpp"
#include "vti/image_io.hpp"
#include "vti/rng.hpp"

namespace vti {

std::size_t EdgeLabelMap::count(EdgeClass c) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), c));
}

void EdgeClassifierConfig::validate() const {
    if (!(mag_threshold > 0.0))
        throw invalid_input("EdgeClassifierConfig: mag_threshold must be > 0");
    if (!(cos_threshold > 0.0 && cos_threshold < 1.0))
        throw invalid_input("EdgeClassifierConfig: cos_threshold must be in (0,1)");
    if (thermal_blur_sigma < 0.0)
        throw invalid_input("EdgeClassifierConfig: thermal_blur_sigma must be >= 0");
}

void PairClassifierConfig::validate() const {
    if (!(diff_threshold > 0.0))
        throw invalid_input("PairClassifierConfig: diff_threshold must be > 0");
    if (!(z_visible > 0.0) || !(z_thermal > 0.0))
        throw invalid_input("PairClassifierConfig: normalization constants must be > 0");
}

std::string pair_label_name(PairLabel label) {
    switch (label) {
        case PairLabel::SPlus: return "S+";
        case PairLabel::SMinus: return "S-";
        case PairLabel::APlus: return "A+";
        case PairLabel::AMinus: return "A-";
        case PairLabel::None: return "None";
    }
    throw invalid_input("unknown pair label enum value");
}

PairLabel parse_pair_label(const std::string& name) {
    if (name == "S+") return PairLabel::SPlus;
    if (name == "S-") return PairLabel::SMinus;
    if (name == "A+") return PairLabel::APlus;
    if (name == "A-") return PairLabel::AMinus;
    if (name == "None") return PairLabel::None;
    throw invalid_input("unknown pair label: " + name);
}

EdgeLabelMap classify_edges(const ImageGrid& vis_gray, const ImageGrid& thermal,
                            const EdgeClassifierConfig& cfg) {
    cfg.validate();
    if (vis_gray.channels != 1 || thermal.channels != 1)
        throw invalid_input("classify_edges: inputs must be single-channel");
    if (!vis_gray.same_extent(thermal))
        throw invalid_input("classify_edges: visible and thermal extents differ");
    if (vis_gray.height < 2 || vis_gray.width < 2)
        throw invalid_input("classify_edges: image too small for gradients");

    const ImageGrid smoothed = gaussian_blur(thermal, cfg.thermal_blur_sigma);
    const GradientField gv = gradient(vis_gray);
    const GradientField gt = gradient(smoothed);

    EdgeLabelMap map(vis_gray.height, vis_gray.width);
    for (std::size_t p = 0; p < map.labels.size(); ++p) {
        const double vx = gv.gx.data[p];
        const double vy = gv.gy.data[p];
        const double tx = gt.gx.data[p];
        const double ty = gt.gy.data[p];
        const double nv = std::sqrt(vx * vx + vy * vy);
        if (!(nv > cfg.mag_threshold)) continue;
        const double nt = std::sqrt(tx * tx + ty * ty);
        if (nt == 0.0) continue;  // cosine undefined on flat thermal patches
        const double c = (vx * tx + vy * ty) / (nv * nt);
        if (c < -cfg.cos_threshold)
            map.labels[p] = EdgeClass::Albedo;
        else if (c > cfg.cos_threshold)
            map.labels[p] = EdgeClass::Shading;
    }
    return map;
}

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

int reflect_into(int v, int n) {
    while (v < 0 || v > n - 1) {
        if (v < 0) v = -v;
        if (v > n - 1) v = 2 * (n - 1) - v;
    }
    return v;
}

}  // namespace

std::vector<PointPair> sample_point_pairs(int height, int width, int radius, std::uint64_t seed) {
    if (radius < 2) throw invalid_input("sample_point_pairs: radius must be >= 2");
    if (height < 2 * radius || width < 2 * radius)
        throw invalid_input("sample_point_pairs: image must span 2*radius per side");

    rng::Stream rs(seed);
    const double r = radius;
    const double cell = r / std::sqrt(2.0);
    const int gw = static_cast<int>(std::ceil(width / cell));
    const int gh = static_cast<int>(std::ceil(height / cell));
    std::vector<int> grid(static_cast<std::size_t>(gw) * gh, -1);
    std::vector<PixelCoord> samples;
    std::vector<int> active;

    auto cell_of = [&](const PixelCoord& p) {
        const int cx = std::min(static_cast<int>(p.x / cell), gw - 1);
        const int cy = std::min(static_cast<int>(p.y / cell), gh - 1);
        return static_cast<std::size_t>(cy) * gw + cx;
    };
    auto admissible = [&](const PixelCoord& p) {
        const int cx = std::min(static_cast<int>(p.x / cell), gw - 1);
        const int cy = std::min(static_cast<int>(p.y / cell), gh - 1);
        if (grid[static_cast<std::size_t>(cy) * gw + cx] >= 0) return false;
        for (int dy = -2; dy <= 2; ++dy) {
            for (int dx = -2; dx <= 2; ++dx) {
                const int ny = cy + dy;
                const int nx = cx + dx;
                if (ny < 0 || ny >= gh || nx < 0 || nx >= gw) continue;
                const int s = grid[static_cast<std::size_t>(ny) * gw + nx];
                if (s < 0) continue;
                const double ddx = samples[s].x - p.x;
                const double ddy = samples[s].y - p.y;
                if (ddx * ddx + ddy * ddy < r * r) return false;
            }
        }
        return true;
    };
    auto push = [&](const PixelCoord& p) {
        grid[cell_of(p)] = static_cast<int>(samples.size());
        active.push_back(static_cast<int>(samples.size()));
        samples.push_back(p);
    };

    const PixelCoord first{static_cast<int>(std::lround(rs.uniform() * (height - 1))),
                           static_cast<int>(std::lround(rs.uniform() * (width - 1)))};
    push(first);

    constexpr int kAttempts = 30;
    while (!active.empty()) {
        const std::size_t pick = static_cast<std::size_t>(rs.uniform_int(
            0, static_cast<int>(active.size()) - 1));
        const PixelCoord base = samples[static_cast<std::size_t>(active[pick])];
        bool placed = false;
        for (int t = 0; t < kAttempts; ++t) {
            const double d = rs.uniform(r, 2.0 * r);
            const double ang = rs.uniform(0.0, kTwoPi);
            const PixelCoord cand{static_cast<int>(std::lround(base.y + d * std::sin(ang))),
                                  static_cast<int>(std::lround(base.x + d * std::cos(ang)))};
            if (cand.y < 0 || cand.y >= height || cand.x < 0 || cand.x >= width) continue;
            if (!admissible(cand)) continue;
            push(cand);
            placed = true;
            break;
        }
        if (!placed) {
            active[pick] = active.back();
            active.pop_back();
        }
    }

    std::vector<PointPair> pairs;
    pairs.reserve(samples.size());
    for (const PixelCoord& anchor : samples) {
        PixelCoord partner = anchor;
        while (partner == anchor) {
            const double d = rs.uniform(r, 3.0 * r);
            const double ang = rs.uniform(0.0, kTwoPi);
            partner.y = reflect_into(
                static_cast<int>(std::lround(anchor.y + d * std::sin(ang))), height);
            partner.x = reflect_into(
                static_cast<int>(std::lround(anchor.x + d * std::cos(ang))), width);
        }
        pairs.push_back(PointPair{anchor, partner, std::nullopt, 0.0, 0.0});
    }
    return pairs;
}

PointPair classify_pair(const ImageGrid& vis_gray, const ImageGrid& thermal,
                        const PointPair& pair, const PairClassifierConfig& cfg) {
    cfg.validate();
    if (vis_gray.channels != 1 || thermal.channels != 1)
        throw invalid_input("classify_pair: inputs must be single-channel");
    if (!vis_gray.same_extent(thermal))
        throw invalid_input("classify_pair: visible and thermal extents differ");
    auto in_bounds = [&](const PixelCoord& p) {
        return p.y >= 0 && p.y < vis_gray.height && p.x >= 0 && p.x < vis_gray.width;
    };
    if (!in_bounds(pair.i) || !in_bounds(pair.j))
        throw invalid_input("classify_pair: coordinates out of bounds");
    if (pair.i == pair.j) throw invalid_input("classify_pair: pair points coincide");

    PointPair out = pair;
    out.delta_v = (vis_gray.at(pair.i.y, pair.i.x) - vis_gray.at(pair.j.y, pair.j.x)) /
                  cfg.z_visible;
    out.delta_t = (thermal.at(pair.i.y, pair.i.x) - thermal.at(pair.j.y, pair.j.x)) /
                  cfg.z_thermal;
    const double e = cfg.diff_threshold;
    if (out.delta_v > e && out.delta_t > e)
        out.label = PairLabel::SPlus;
    else if (out.delta_v < -e && out.delta_t < -e)
        out.label = PairLabel::SMinus;
    else if (out.delta_v > e && out.delta_t < -e)
        out.label = PairLabel::APlus;
    else if (out.delta_v < -e && out.delta_t > e)
        out.label = PairLabel::AMinus;
    else
        out.label = PairLabel::None;
    return out;
}

std::vector<PointPair> classify_pairs(const ImageGrid& vis_gray, const ImageGrid& thermal,
                                      const std::vector<PointPair>& pairs,
                                      const PairClassifierConfig& cfg) {
    std::vector<PointPair> out;
    out.reserve(pairs.size());
    for (const PointPair& p : pairs) out.push_back(classify_pair(vis_gray, thermal, p, cfg));
    return out;
}

void export_labels(const std::vector<PointPair>& pairs, const std::string& path) {
    nlohmann::json arr = nlohmann::json::array();
    for (const PointPair& p : pairs) {
        if (!p.label) throw invalid_input("export_labels: unlabeled pair");
        arr.push_back({{"i", {p.i.y, p.i.x}},
                       {"j", {p.j.y, p.j.x}},
                       {"label", pair_label_name(*p.label)},
                       {"delta_v", p.delta_v},
                       {"delta_t", p.delta_t}});
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("export_labels: cannot open " + path);
    out << arr.dump(2) << '\n';
    if (!out) throw io_error("export_labels: write failed for " + path);
}

std::vector<PointPair> import_labels(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("import_labels: cannot open " + path);
    nlohmann::json arr;
    try {
        in >> arr;
    } catch (const nlohmann::json::exception& e) {
        throw io_error("import_labels: " + std::string(e.what()));
    }
    if (!arr.is_array()) throw io_error("import_labels: expected a JSON array");
    std::vector<PointPair> pairs;
    pairs.reserve(arr.size());
    for (const nlohmann::json& rec : arr) {
        PointPair p;
        p.i = {rec.at("i").at(0).get<int>(), rec.at("i").at(1).get<int>()};
        p.j = {rec.at("j").at(0).get<int>(), rec.at("j").at(1).get<int>()};
        p.label = parse_pair_label(rec.at("label").get<std::string>());
        p.delta_v = rec.at("delta_v").get<double>();
        p.delta_t = rec.at("delta_t").get<double>();
        pairs.push_back(p);
    }
    return pairs;
}

namespace {

std::uint8_t edge_byte(EdgeClass c) {
    switch (c) {
        case EdgeClass::None: return 0;
        case EdgeClass::Shading: return 128;
        case EdgeClass::Albedo: return 255;
    }
    throw invalid_input("unknown edge class enum value");
}

EdgeClass edge_from_byte(std::uint8_t b) {
    if (b == 0) return EdgeClass::None;
    if (b == 128) return EdgeClass::Shading;
    if (b == 255) return EdgeClass::Albedo;
    throw io_error("edge label PNG holds a byte outside {0, 128, 255}");
}

}  // namespace

void export_edge_png(const EdgeLabelMap& map, const std::string& path) {
    std::vector<std::uint8_t> bytes(map.labels.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = edge_byte(map.labels[i]);
    write_png_raw8(path, bytes, map.height, map.width);
}

EdgeLabelMap import_edge_png(const std::string& path) {
    int h = 0;
    int w = 0;
    const std::vector<std::uint8_t> bytes = read_png_raw8(path, h, w);
    EdgeLabelMap map(h, w);
    for (std::size_t i = 0; i < bytes.size(); ++i) map.labels[i] = edge_from_byte(bytes[i]);
    return map;
}

}  // namespace vti
