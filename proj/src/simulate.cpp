#include "vti/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "vti/errors.hpp"
#include "vti/rng.hpp"

namespace vti {

namespace {

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

constexpr double kAlbedoLo = 0.05;
constexpr double kAlbedoHi = 0.95;
constexpr double kShadingLo = 0.05;
constexpr double kShadingHi = 1.0;

}  // namespace

void SceneTruth::validate() const {
    if (albedo.empty() || shading.empty())
        throw invalid_input("SceneTruth: empty albedo or shading");
    if (shading.channels != 1)
        throw invalid_input("SceneTruth: shading must be single-channel");
    if (!albedo.same_extent(shading))
        throw invalid_input("SceneTruth: albedo and shading extents differ");
    if (!(gain > 0.0))
        throw invalid_input("SceneTruth: gain must be positive");
    if (!albedo.all_finite() || !shading.all_finite())
        throw invalid_input("SceneTruth: non-finite values");
    for (double v : albedo.data)
        if (!(v > 0.0 && v < 1.0))
            throw invalid_input("SceneTruth: albedo out of (0,1)");
    for (double v : shading.data)
        if (!(v > 0.0))
            throw invalid_input("SceneTruth: shading must be > 0");
}

void ThermalSceneParams::validate() const {
    if (!(emissivity > 0.0 && emissivity <= 1.0))
        throw invalid_input("ThermalSceneParams: emissivity out of (0,1]");
    if (!(response_gain > 0.0))
        throw invalid_input("ThermalSceneParams: response_gain must be positive");
    if (conductivity < 0.0)
        throw invalid_input("ThermalSceneParams: conductivity must be >= 0");
    if (!(stefan_boltzmann > 0.0))
        throw invalid_input("ThermalSceneParams: stefan_boltzmann must be positive");
    if (!(air_temp > 0.0) || !(surround_temp > 0.0))
        throw invalid_input("ThermalSceneParams: temperatures must be positive kelvin");
    if (!(thermal_slope() > 0.0))
        throw invalid_input("ThermalSceneParams: thermal slope must be positive");
}

SceneKind parse_scene_kind(const std::string& name) {
    if (name == "mondrian") return SceneKind::Mondrian;
    if (name == "checker_shadow") return SceneKind::CheckerShadow;
    if (name == "color_chart") return SceneKind::ColorChart;
    if (name == "voronoi_smooth") return SceneKind::VoronoiSmooth;
    throw invalid_input("unknown scene kind: " + name);
}

std::string scene_kind_name(SceneKind kind) {
    switch (kind) {
        case SceneKind::Mondrian: return "mondrian";
        case SceneKind::CheckerShadow: return "checker_shadow";
        case SceneKind::ColorChart: return "color_chart";
        case SceneKind::VoronoiSmooth: return "voronoi_smooth";
    }
    throw invalid_input("unknown scene kind enum value");
}

ImageGrid render_visible(const SceneTruth& scene) {
    scene.validate();
    ImageGrid out(scene.albedo.height, scene.albedo.width, scene.albedo.channels);
    const int k = scene.albedo.channels;
    for (std::size_t p = 0; p < scene.shading.size(); ++p) {
        const double ge = scene.gain * scene.shading.data[p];
        for (int c = 0; c < k; ++c)
            out.data[p * k + c] = ge * scene.albedo.data[p * k + c];
    }
    return out;
}

ImageGrid render_absorbed(const SceneTruth& scene) {
    return render_absorbed_broadband(scene, SpectralConfig{});
}

ImageGrid render_absorbed_broadband(const SceneTruth& scene, const SpectralConfig& spectral) {
    scene.validate();
    const double beta = spectral.beta();
    if (!(beta >= 1.0))
        throw invalid_input("SpectralConfig: beta must be >= 1");
    ImageGrid out(scene.albedo.height, scene.albedo.width, 1);
    const int k = scene.albedo.channels;
    for (std::size_t p = 0; p < out.size(); ++p) {
        double mean = 0.0;
        for (int c = 0; c < k; ++c) mean += scene.albedo.data[p * k + c];
        mean /= k;
        out.data[p] = (beta - mean) * scene.shading.data[p];
    }
    return out;
}

ImageGrid steady_state_temperature(const ImageGrid& absorbed, const ThermalSceneParams& params) {
    params.validate();
    if (absorbed.empty() || absorbed.channels != 1)
        throw invalid_input("steady_state_temperature: absorbed light must be single-channel");
    if (absorbed.min() < 0.0)
        throw invalid_input("steady_state_temperature: absorbed light must be >= 0");

    const double a = params.absorption_coeff();
    const double b = params.ambient_load();
    const double kappa = params.conductivity;

    ImageGrid temp(absorbed.height, absorbed.width, 1);
    for (std::size_t i = 0; i < temp.size(); ++i)
        temp.data[i] = (absorbed.data[i] + b) / a;
    if (kappa == 0.0) return temp;

    // Jacobi sweeps on (a + m kappa) T(x) = S(x) + b + kappa sum_nb T(nb),
    // where a border neighbor reflects onto the cell itself and is folded out
    // of both sides (m = count of distinct neighbors). Diagonal dominance
    // a > 0 guarantees convergence; the closed-form field above seeds it.
    const int h = absorbed.height;
    const int w = absorbed.width;
    double rhs_scale = 0.0;
    for (double s : absorbed.data) rhs_scale = std::max(rhs_scale, std::abs(s + b));
    rhs_scale = std::max(rhs_scale, 1e-300);

    constexpr double kRelTol = 1e-9;
    constexpr int kMaxSweeps = 200000;
    ImageGrid next(h, w, 1);
    double rel_residual = 0.0;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double max_abs_residual = 0.0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const int ys[2] = {reflect_index(y - 1, h), reflect_index(y + 1, h)};
                const int xs[2] = {reflect_index(x - 1, w), reflect_index(x + 1, w)};
                double nb_sum = 0.0;
                int m = 0;
                for (int yy : ys)
                    if (yy != y) { nb_sum += temp.at(yy, x); ++m; }
                for (int xx : xs)
                    if (xx != x) { nb_sum += temp.at(y, xx); ++m; }
                const double diag = a + m * kappa;
                const double rhs = absorbed.at(y, x) + b + kappa * nb_sum;
                next.at(y, x) = rhs / diag;
                max_abs_residual =
                    std::max(max_abs_residual, std::abs(rhs - diag * temp.at(y, x)));
            }
        }
        std::swap(temp, next);
        rel_residual = max_abs_residual / rhs_scale;
        if (rel_residual < kRelTol) return temp;
    }
    throw solver_failure("steady_state_temperature: Jacobi iteration did not converge",
                         rel_residual);
}

ImageGrid thermal_camera(const ImageGrid& temperature, const ThermalSceneParams& params) {
    params.validate();
    if (temperature.empty() || temperature.channels != 1)
        throw invalid_input("thermal_camera: temperature must be single-channel");
    if (!(temperature.min() > 0.0))
        throw invalid_input("thermal_camera: temperature must be positive kelvin");
    const double eps = params.emissivity;
    const double reflected = (1.0 - eps) * params.surround_temp;
    ImageGrid out(temperature.height, temperature.width, 1);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data[i] =
            params.response_gain * (eps * temperature.data[i] + reflected) + params.response_offset;
    return out;
}

ImageGrid add_noise(const ImageGrid& image, double stddev, std::uint64_t seed) {
    if (stddev < 0.0) throw invalid_input("add_noise: stddev must be >= 0");
    ImageGrid out = image;
    if (stddev == 0.0) return out;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data[i] += stddev * rng::gaussian_at(seed, i);
    return out;
}

namespace {

SceneTruth make_mondrian(int h, int w, rng::Stream& rs) {
    SceneTruth scene;
    scene.albedo = ImageGrid(h, w, 3);
    scene.shading = ImageGrid(h, w, 1, 0.8);

    double base[3];
    for (double& c : base) c = rs.uniform(0.2, 0.8);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) scene.albedo.at(y, x, c) = base[c];

    const int rects = 14;
    for (int r = 0; r < rects; ++r) {
        const int rw = rs.uniform_int(w / 8, w / 2);
        const int rh = rs.uniform_int(h / 8, h / 2);
        const int x0 = rs.uniform_int(0, w - 1);
        const int y0 = rs.uniform_int(0, h - 1);
        double color[3];
        for (double& c : color) c = rs.uniform(kAlbedoLo, kAlbedoHi);
        for (int y = y0; y < std::min(y0 + rh, h); ++y)
            for (int x = x0; x < std::min(x0 + rw, w); ++x)
                for (int c = 0; c < 3; ++c) scene.albedo.at(y, x, c) = color[c];
    }
    return scene;
}

SceneTruth make_checker_shadow(int h, int w, rng::Stream& rs) {
    SceneTruth scene;
    scene.albedo = ImageGrid(h, w, 3);
    scene.shading = ImageGrid(h, w, 1);

    const int cell = std::max(4, std::min(h, w) / 8);
    double dark[3], light[3];
    for (double& c : dark) c = rs.uniform(0.35, 0.50);
    for (double& c : light) c = rs.uniform(0.68, 0.82);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const bool is_light = ((y / cell) + (x / cell)) % 2 == 0;
            const double* color = is_light ? light : dark;
            for (int c = 0; c < 3; ++c) scene.albedo.at(y, x, c) = color[c];
        }
    }

    // Smooth cast shadows: unit field minus narrow Gaussian occluder blobs.
    // Penumbra slopes stay above the gradient classifier's magnitude gate in
    // both checker shades; broad soft blobs would be invisible to it and the
    // shadow would be unrecoverable from reconstruction alone.
    const int blobs = 8;
    std::vector<double> cx(blobs), cy(blobs), sg(blobs), depth(blobs);
    for (int i = 0; i < blobs; ++i) {
        cx[i] = rs.uniform(0.12, 0.88) * (w - 1);
        cy[i] = rs.uniform(0.12, 0.88) * (h - 1);
        sg[i] = std::max(2.5, rs.uniform(0.020, 0.032) * std::min(h, w));
        depth[i] = rs.uniform(0.45, 0.75);
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double v = 1.0;
            for (int i = 0; i < blobs; ++i) {
                const double dx = (x - cx[i]) / sg[i];
                const double dy = (y - cy[i]) / sg[i];
                v -= depth[i] * std::exp(-0.5 * (dx * dx + dy * dy));
            }
            scene.shading.at(y, x) = clamp(v, kShadingLo, kShadingHi);
        }
    }
    return scene;
}

SceneTruth make_color_chart(int h, int w, rng::Stream& rs) {
    SceneTruth scene;
    scene.albedo = ImageGrid(h, w, 3);
    scene.shading = ImageGrid(h, w, 1);

    const int rows = 4;
    const int cols = 6;
    const int gap = std::max(1, std::min(h, w) / 64);
    std::vector<double> colors(static_cast<std::size_t>(rows) * cols * 3);
    for (double& c : colors) c = rs.uniform(0.10, 0.90);

    for (int y = 0; y < h; ++y) {
        const int ry = std::min(y * rows / h, rows - 1);
        const bool on_ygap = (y % std::max(h / rows, 1)) < gap;
        for (int x = 0; x < w; ++x) {
            const int cx = std::min(x * cols / w, cols - 1);
            const bool on_xgap = (x % std::max(w / cols, 1)) < gap;
            if (on_ygap || on_xgap) {
                for (int c = 0; c < 3; ++c) scene.albedo.at(y, x, c) = 0.08;
            } else {
                const std::size_t base = (static_cast<std::size_t>(ry) * cols + cx) * 3;
                for (int c = 0; c < 3; ++c) scene.albedo.at(y, x, c) = colors[base + c];
            }
        }
    }

    const double theta = rs.uniform(0.0, 6.283185307179586);
    const double dx = std::cos(theta);
    const double dy = std::sin(theta);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double t = (x * dx / std::max(w - 1, 1) + y * dy / std::max(h - 1, 1));
            scene.shading.at(y, x) = clamp(0.6 + 0.3 * t, kShadingLo, kShadingHi);
        }
    }
    return scene;
}

SceneTruth make_voronoi_smooth(int h, int w, rng::Stream& rs) {
    SceneTruth scene;
    scene.albedo = ImageGrid(h, w, 3);
    scene.shading = ImageGrid(h, w, 1);

    const int sites = 12;
    std::vector<double> sx(sites), sy(sites);
    std::vector<double> colors(static_cast<std::size_t>(sites) * 3);
    for (int i = 0; i < sites; ++i) {
        sx[i] = rs.uniform(0.0, 1.0) * (w - 1);
        sy[i] = rs.uniform(0.0, 1.0) * (h - 1);
    }
    // Mid-to-bright random colors: very dark cells would scale blob rim
    // gradients below the classifier's magnitude gate.
    for (double& c : colors) c = rs.uniform(0.45, kAlbedoHi);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int best = 0;
            double best_d = 1e300;
            for (int i = 0; i < sites; ++i) {
                const double dx = x - sx[i];
                const double dy = y - sy[i];
                const double d = dx * dx + dy * dy;
                if (d < best_d) {
                    best_d = d;
                    best = i;
                }
            }
            for (int c = 0; c < 3; ++c)
                scene.albedo.at(y, x, c) = colors[static_cast<std::size_t>(best) * 3 + c];
        }
    }

    // Smooth random shading: unit field minus scattered narrow Gaussian
    // blobs, steep enough at the rims for the gradient classifier.
    const int blobs = 7;
    std::vector<double> cx(blobs), cy(blobs), sg(blobs), depth(blobs);
    for (int i = 0; i < blobs; ++i) {
        cx[i] = rs.uniform(0.10, 0.90) * (w - 1);
        cy[i] = rs.uniform(0.10, 0.90) * (h - 1);
        sg[i] = std::max(2.5, rs.uniform(0.025, 0.038) * std::min(h, w));
        depth[i] = rs.uniform(0.45, 0.75);
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double v = 1.0;
            for (int i = 0; i < blobs; ++i) {
                const double dx = (x - cx[i]) / sg[i];
                const double dy = (y - cy[i]) / sg[i];
                v -= depth[i] * std::exp(-0.5 * (dx * dx + dy * dy));
            }
            scene.shading.at(y, x) = clamp(v, kShadingLo, kShadingHi);
        }
    }
    return scene;
}

}  // namespace

SceneTruth make_scene(SceneKind kind, int height, int width, std::uint64_t seed) {
    if (height < 16 || width < 16)
        throw invalid_input("make_scene: height and width must be >= 16");
    rng::Stream rs(rng::derive(seed, rng::kSceneStream));
    SceneTruth scene;
    switch (kind) {
        case SceneKind::Mondrian: scene = make_mondrian(height, width, rs); break;
        case SceneKind::CheckerShadow: scene = make_checker_shadow(height, width, rs); break;
        case SceneKind::ColorChart: scene = make_color_chart(height, width, rs); break;
        case SceneKind::VoronoiSmooth: scene = make_voronoi_smooth(height, width, rs); break;
        default: throw invalid_input("make_scene: unknown scene kind");
    }
    for (double& v : scene.albedo.data) v = clamp(v, kAlbedoLo, kAlbedoHi);
    for (double& v : scene.shading.data) v = clamp(v, kShadingLo, kShadingHi);
    scene.gain = 1.0;
    scene.validate();
    return scene;
}

}  // namespace vti
