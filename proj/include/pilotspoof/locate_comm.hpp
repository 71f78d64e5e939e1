// SPDX-License-Identifier: Apache-2.0
//
// pilotspoof: pilot-level location spoofing for single-anchor mmWave positioning
// ------------------------------------------------------------------------

#ifndef PILOTSPOOF_LOCATE_COMM_HPP
#define PILOTSPOOF_LOCATE_COMM_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "pilotspoof/channel.hpp"
#include "pilotspoof/estimate.hpp"
#include "pilotspoof/scenario.hpp"

namespace pilotspoof
{
    enum class PositionStatus
    {
        Valid,
        TooFewPaths,
        Degenerate,    // |denominator| < 1e-9, d0 <= 0 or non-finite
        OutOfCoverage, // farther than the coverage radius from the BS
    };

    const char *to_string(PositionStatus s);

    struct PositionEstimate
    {
        Vec2 position = Vec2::Constant(std::numeric_limits<double>::quiet_NaN());
        double d0_m = std::numeric_limits<double>::quiet_NaN();
        std::pair<std::size_t, std::size_t> used_paths{0, 0}; // (LOS, NLOS) indices into the input
        PositionStatus status = PositionStatus::TooFewPaths;

        bool valid() const { return status == PositionStatus::Valid; }
    };

    struct LocateConfig
    {
        double coverage_radius_m = 150.0; // <= 0 disables the filter
        double speed_of_light = kSpeedOfLight;
    };

    inline constexpr double kMinLawOfSinesDenominator = 1e-9;

    // LOS = smallest delay, NLOS = second smallest. d0 from the law of sines on
    // the BS-UE-SP triangle; p = p_BS + d0 [cos, sin](theta_0 + o_BS).
    PositionEstimate estimate_position(const PathParameterSet &params, const Pose2D &bs, const LocateConfig &cfg = {});
    PositionEstimate estimate_position(const EstimationResult &est, const Pose2D &bs, const LocateConfig &cfg = {});

    struct BeamSelection
    {
        std::size_t combiner = 0;
        std::size_t precoder = 0;
    };

    // argmax_{m,s} sum_k |Y[m,s,k]|^2, ties to the smallest (m, then s).
    BeamSelection select_beam_pair(const Tensor3 &y);

    struct RateReport
    {
        double rate_bps = 0.0;
        std::vector<double> per_subcarrier_snr; // gamma_k E_s / N_0
    };

    double rate_from_snr(std::span<const double> snr, double spacing_hz);

    // Rate with the selected beams on the physical channel.
    RateReport achievable_rate(const PathParameterSet &true_params, const BeamSelection &sel, const Codebooks &books,
                               const SystemConfig &cfg);

    // Per-subcarrier optimal unit-norm combiner/precoder: gamma_k = sigma_max(H_k)^2.
    RateReport perfect_csi_rate(const PathParameterSet &true_params, const SystemConfig &cfg);

    struct HeatmapGridSpec
    {
        double min_angle_rad = -kPi / 3.0; // relative to the BS orientation
        double max_angle_rad = kPi / 3.0;
        double radius_m = 50.0;
        double step_m = 1.0;

        void validate() const;
    };

    // Lattice points (multiples of step) with 0 < range <= radius inside the sector.
    std::vector<Vec2> heatmap_grid(const HeatmapGridSpec &spec, const Pose2D &bs);

    // Candidate spoofing geometry: UE moved to `position`, scatter points
    // co-translated, orientation and clock bias kept.
    ScenarioGeometry translated_target(const ScenarioGeometry &truth, const Vec2 &position);

    // Per candidate: oracle pilot towards translated_target (lambda = true gains),
    // beams re-selected on the noisy spoofed signal (noise stream of
    // TrialRng(seed, cell)), rate evaluated on the true channel.
    std::vector<double> rate_heatmap(const ScenarioGeometry &truth, const PathParameterSet &true_params,
                                     const std::vector<Vec2> &candidates, const Codebooks &books,
                                     const SystemConfig &cfg, std::uint64_t seed, std::size_t threads = 1);

    void write_position_csv_header(std::ostream &os);
    void write_position_csv_row(std::ostream &os, std::size_t trial_id, const PositionEstimate &p);
    void write_heatmap_csv(std::ostream &os, const std::vector<Vec2> &cells, const std::vector<double> &rates);
} // namespace pilotspoof

#endif
