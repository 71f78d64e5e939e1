// SPDX-License-Identifier: Apache-2.0
//
// pilotspoof: pilot-level location spoofing for single-anchor mmWave positioning
// ------------------------------------------------------------------------

#ifndef PILOTSPOOF_ESTIMATE_HPP
#define PILOTSPOOF_ESTIMATE_HPP

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "pilotspoof/channel.hpp"
#include "pilotspoof/scenario.hpp"

namespace pilotspoof
{
    struct Spectrum
    {
        std::vector<double> grid;
        std::vector<double> power;

        std::size_t argmax() const;
    };

    struct CfarConfig
    {
        std::size_t guard_cells = 2;
        std::size_t training_cells = 16; // per side
        double pfa = 1e-4;

        void validate() const;
        // CA-CFAR multiplier N (pfa^(-1/N) - 1), N = 2 * training_cells.
        double threshold_factor() const;
    };

    struct EstimatedPath
    {
        double delay_s = 0.0;
        double aoa_rad = 0.0;
        double aod_rad = 0.0;
        double peak_power = 0.0; // periodogram value of the detection cell
        cd gain{0.0, 0.0};       // LS amplitude of the fitted rank-one term
        bool reliable = true;
    };

    struct EstimationResult
    {
        std::vector<EstimatedPath> paths; // sorted by delay
        std::size_t detected_count = 0;

        // Geometric part only; gains copied from the fitted amplitudes.
        PathParameterSet to_params() const;
    };

    struct FlexConfig
    {
        CfarConfig cfar;
        std::size_t max_paths = 6;
        double stop_energy_ratio = 1e-10; // residual / input energy
        double exclusion_bins = 1.0;      // new detections this close to an accepted path are ignored
        std::size_t refine_sweeps = 8;
    };

    using Dictionary = std::function<CVec(double)>;

    // Columns of the returned matrix are snapshots of the given mode:
    // 0 -> M x (S K), 1 -> S x (M K), 2 -> K x (M S).
    CMat unfold(const Tensor3 &t, int mode);

    std::vector<double> uniform_grid(double lo, double hi, double step);

    // power[i] = sum_j |a(g_i)^H y_j|^2 / ||a(g_i)||^2 over snapshot columns y_j.
    Spectrum mf_spectrum(const CMat &snapshots, const Dictionary &dict, std::span<const double> grid);
    Spectrum mf_spectrum(const CVec &y, const Dictionary &dict, std::span<const double> grid);

    Dictionary aoa_dictionary(const Codebooks &books);
    Dictionary aod_dictionary(const Codebooks &books);
    Dictionary delay_dictionary(const SystemConfig &cfg);

    // P(n) = (1 / MS) sum_{m,s} |IDFT_K(Y[m,s,:])[n]|^2 with a unitary IDFT;
    // grid in seconds, bin n at n / (K df).
    Spectrum delay_periodogram(const Tensor3 &y, const SystemConfig &cfg);

    // Cell-averaging CFAR with a circular window; detections that are not
    // local maxima among their detected neighbours are dropped.
    std::vector<std::size_t> cfar_detect(std::span<const double> power, const CfarConfig &cfg);

    // Single-source TLS ESPRIT on a ULA response; returns the angle in
    // [-pi/2, pi/2]. reliable is cleared when the rotation modulus is off the
    // unit circle by more than 0.2.
    double esprit_angle(const CVec &response, bool *reliable = nullptr);

    // Periodogram -> CFAR -> per-path phase compensation, element-space ESPRIT and
    // delay refinement, with successive cancellation of accepted paths.
    EstimationResult flex_estimate(const Tensor3 &y, const Codebooks &books, const SystemConfig &cfg,
                                   const FlexConfig &flex = {});

    void write_estimation_csv_header(std::ostream &os);
    void write_estimation_csv_rows(std::ostream &os, std::size_t trial_id, const EstimationResult &est);
} // namespace pilotspoof

#endif
