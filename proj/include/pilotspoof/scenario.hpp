// SPDX-License-Identifier: Apache-2.0
//
// pilotspoof: pilot-level location spoofing for single-anchor mmWave positioning
// ------------------------------------------------------------------------

#ifndef PILOTSPOOF_SCENARIO_HPP
#define PILOTSPOOF_SCENARIO_HPP

#include <cstddef>
#include <random>
#include <vector>

#include "pilotspoof/common.hpp"

namespace pilotspoof
{
    // Position in meters and orientation in radians, stored wrapped to (-pi, pi].
    class Pose2D
    {
    public:
        Pose2D() = default;
        Pose2D(const Vec2 &position, double orientation_rad);

        const Vec2 &position() const { return position_; }
        double orientation() const { return orientation_; }

    private:
        Vec2 position_ = Vec2::Zero();
        double orientation_ = 0.0;
    };

    // Ground truth of the world: one LOS path plus one single-bounce NLOS path per
    // scatter point.
    struct ScenarioGeometry
    {
        Pose2D bs;
        Pose2D ue;
        std::vector<Vec2> scatter_points;
        double clock_bias_s = 0.0;
        double speed_of_light = kSpeedOfLight;

        // Throws ConfigError / DegenerateGeometry on violated invariants.
        void validate() const;
    };

    struct Path
    {
        double delay_s = 0.0;
        double aoa_rad = 0.0;
        double aod_rad = 0.0;
        cd gain{0.0, 0.0};
    };

    // Per-path delay, AoA, AoD and complex gain. Index 0 is the LOS path.
    struct PathParameterSet
    {
        std::vector<Path> paths;

        std::size_t size() const { return paths.size(); }
        bool empty() const { return paths.empty(); }
        const Path &operator[](std::size_t i) const { return paths[i]; }
        Path &operator[](std::size_t i) { return paths[i]; }

        CVec gains() const;
        void set_gains(const CVec &g);
    };

    struct GainModelConfig
    {
        double tx_power_w = 1.0;
        double g_bs_lin = 1.0;
        double g_ue_lin = 1.0;
        double rcs_m2 = 50.0;
        double carrier_hz = 28e9;
        std::uint64_t random_phase_seed = 0;

        void validate() const;
    };

    // Legs shorter than this are treated as coincident points.
    inline constexpr double kMinLegLength_m = 1e-6;

    // Geometry -> (delay, AoA, AoD) for every path; gains are left at zero.
    PathParameterSet forward_params(const ScenarioGeometry &geom);

    // Path powers from the free-space / bistatic radar equations, random phases
    // from the given generator. The transmit power is not included: it enters the
    // signal chain through the per-subcarrier energy of the channel model.
    std::vector<cd> path_gains(const ScenarioGeometry &geom, const GainModelConfig &cfg, std::mt19937_64 &rng);

    // Same, with the phase generator seeded from cfg.random_phase_seed.
    std::vector<cd> path_gains(const ScenarioGeometry &geom, const GainModelConfig &cfg);

    // forward_params() plus path_gains().
    PathParameterSet forward_params_with_gains(const ScenarioGeometry &geom, const GainModelConfig &cfg,
                                               std::mt19937_64 &rng);

    // Gaussian offsets on the UE position (std sigma_ue_m per axis) and on every
    // scatter point (std sigma_sp_m). Orientations and clock bias are untouched.
    ScenarioGeometry perturb(const ScenarioGeometry &geom, double sigma_ue_m, double sigma_sp_m, std::mt19937_64 &rng);

    // Power attenuation terms; exposed for tests and the rate heatmap.
    double los_attenuation(double distance_m, double carrier_hz);
    double bistatic_attenuation(double ue_sp_m, double sp_bs_m, double rcs_m2, double carrier_hz);
} // namespace pilotspoof

#endif
