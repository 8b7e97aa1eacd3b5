#pragma once

#include <cstdint>
#include <string>

#include "vti/image.hpp"

namespace vti {

// Ground-truth decomposition of a synthetic scene. Albedo is the per-channel
// reflected fraction in (0,1); shading is the channel-shared irradiance in
// arbitrary linear units (only ordinal structure survives normalization).
struct SceneTruth {
    ImageGrid albedo;   // k channels, values in (0, 1)
    ImageGrid shading;  // 1 channel, values > 0
    double gain = 1.0;  // positive global scale g

    void validate() const;  // throws invalid_input when the invariants fail
};

// Broadband illumination: the source carries invisible energy at intensity
// ratio l_i/l_v, absorbed with infrared albedo rho_i assumed locally constant.
struct SpectralConfig {
    double albedo_infrared = 1.0;  // rho_i in (0, 1]
    double intensity_ratio = 0.0;  // l_i / l_v >= 0

    // beta = 1 + (1 - rho_i) * l_i/l_v, the effective absorption ceiling.
    double beta() const { return 1.0 + (1.0 - albedo_infrared) * intensity_ratio; }
};

// Uniform thermal properties of a scene plus the camera's linearized response.
struct ThermalSceneParams {
    double convection_coeff = 10.0;             // h_c, W m^-2 K^-1
    double air_temp = 295.0;                    // T_a, K
    double surround_temp = 295.0;               // T_s, K
    double emissivity = 0.95;                   // eps in (0, 1]
    double conductivity = 0.0;                  // kappa, W m^-1 K^-1 (lattice units)
    double stefan_boltzmann = 5.670374419e-8;   // sigma, W m^-2 K^-4
    double heat_capacity = 0.0;                 // H, unused at steady state
    double response_gain = 1.0;                 // p1 > 0
    double response_offset = 0.0;               // p2

    // h_c + 4 eps sigma T_s^3, the linear radiative+convective coefficient.
    double absorption_coeff() const {
        const double ts3 = surround_temp * surround_temp * surround_temp;
        return convection_coeff + 4.0 * emissivity * stefan_boltzmann * ts3;
    }
    // h_c T_a + 4 eps sigma T_s^4, the environmental load.
    double ambient_load() const {
        const double ts3 = surround_temp * surround_temp * surround_temp;
        return convection_coeff * air_temp +
               4.0 * emissivity * stefan_boltzmann * ts3 * surround_temp;
    }
    // c1 = (h_c + 4 eps sigma T_s^3) / (eps p1); must be positive for the
    // monotone S -> I_t chain.
    double thermal_slope() const {
        return absorption_coeff() / (emissivity * response_gain);
    }

    void validate() const;
};

enum class SceneKind { Mondrian, CheckerShadow, ColorChart, VoronoiSmooth };

SceneKind parse_scene_kind(const std::string& name);
std::string scene_kind_name(SceneKind kind);

// I_v = g * rho * eta per channel (shading shared across channels).
ImageGrid render_visible(const SceneTruth& scene);

// S = (1 - rho_mean) * eta: the absorbed light acting as a heat source.
ImageGrid render_absorbed(const SceneTruth& scene);

// S = (beta - rho_mean) * eta for broadband illumination.
ImageGrid render_absorbed_broadband(const SceneTruth& scene, const SpectralConfig& spectral);

// Solves S = A*T - kappa*lap(T) - B for the steady-state temperature field.
// kappa = 0 has the closed form T = (S + B)/A; kappa > 0 runs Jacobi
// iteration to relative residual < 1e-9.
ImageGrid steady_state_temperature(const ImageGrid& absorbed, const ThermalSceneParams& params);

// I_t = p1*(eps*T + (1-eps)*T_s) + p2, the linearized camera response.
ImageGrid thermal_camera(const ImageGrid& temperature, const ThermalSceneParams& params);

// Adds i.i.d. Gaussian noise from a counter-based stream; deterministic per seed.
ImageGrid add_noise(const ImageGrid& image, double stddev, std::uint64_t seed);

// Deterministic synthetic scenes (3-channel albedo). Albedo is clamped to
// [0.05, 0.95] and shading to [0.05, 1.0].
SceneTruth make_scene(SceneKind kind, int height, int width, std::uint64_t seed);

}  // namespace vti
