// SPDX-License-Identifier: Apache-2.0
//
// pilotspoof: pilot-level location spoofing for single-anchor mmWave positioning
// ------------------------------------------------------------------------

#ifndef PILOTSPOOF_SPOOF_BLIND_HPP
#define PILOTSPOOF_SPOOF_BLIND_HPP

#include <cstddef>
#include <optional>
#include <vector>

#include "pilotspoof/channel.hpp"
#include "pilotspoof/scenario.hpp"
#include "pilotspoof/spoof_oracle.hpp"

namespace pilotspoof
{
    struct AlternatingConfig
    {
        std::size_t max_iters = 10;
        double energy_budget = 0.0; // <= 0 means "number of pilot entries"
        double convergence_tol = 1e-6;

        void validate() const;
    };

    struct FakePathPlan
    {
        std::vector<double> delay_offsets_s;
        CVec amplitudes;

        // Equal-power plan, amplitudes 1/sqrt(L_s).
        static FakePathPlan equal_power(std::vector<double> offsets_s);
        void validate() const;
    };

    // x = scale * v_spoof ./ v_true. Throws NumericalDegeneracy naming the index
    // of a near-zero entry of v_true.
    CVec blind_single_path_pilot(const CVec &v_true, const CVec &v_spoof, cd scale = cd(1.0, 0.0));

    struct AlternatingResult
    {
        CVec pilot;
        CMat mixer;                        // Omega, L x L
        std::vector<double> residual_history; // ||M_spoof Omega - diag(x) M_true||^2 after each sweep
        std::vector<std::size_t> zero_rows; // rows of M_true that are all zero (pilot entry forced to 0)
        std::size_t iterations = 0;
        std::size_t constrained_steps = 0; // sweeps where the sphere-constrained step replaced the rescaled one
    };

    // Alternating minimisation of ||M_spoof Omega - diag(x) M_true||^2 subject to
    // ||x||^2 = budget, started from Omega = I. The residual history is
    // non-increasing. Throws NumericalDegeneracy if M_spoof is rank deficient.
    AlternatingResult blind_multipath_angle_pilot(const CMat &m_true, const CMat &m_spoof,
                                                  const AlternatingConfig &cfg = {});

    struct ImpossibilityCertificate
    {
        bool exact_generic = false;     // M < L^2 / (L - 1), or L == 1
        double min_singular_value = 0.0; // of the ML x (M + L^2) homogeneous system, columns unit-normalised
        double alternating_residual = 0.0; // final residual of the alternating solver, relative to ||M_spoof||^2
    };

    ImpossibilityCertificate blind_impossibility_certificate(const CMat &m_true, const CMat &m_spoof,
                                                             const AlternatingConfig &cfg = {});

    // Sum_i lambda_i d(offset_i).
    CVec fake_path_pilot(const FakePathPlan &plan, std::size_t k_count, double spacing_hz);

    // vec(X) = x_b (x) x_c (x) x_d; energy budget set to M*S*K, entries not rescaled.
    PilotTensor blind_kronecker_pilot(const CVec &x_b, const CVec &x_c, const CVec &x_d);

    struct BlindDesignOptions
    {
        AlternatingConfig alternating;
        bool angle_only = false;          // x_d = 1 (AoB-HT)
        bool joint_angle_matrix = false;  // angle part from the joint (m, s) ratio with unit gains
        std::optional<FakePathPlan> plan; // overrides the anchor-delay plan derived from the target
    };

    struct BlindDesign
    {
        PilotTensor pilot;
        FakePathPlan plan;                 // empty when angle_only
        std::size_t expected_paths = 0;    // observed path count L * L_s
        std::vector<std::size_t> aoa_permutation; // true path l appears at spoofed AoA index [l]
        std::vector<std::size_t> aod_permutation;
        std::vector<double> aoa_residuals;
        std::vector<double> aod_residuals;
    };

    // Anchor-delay plan for a two-or-more path target: offsets tau_bar_0 - tau_0
    // and tau_bar_1 - tau_0. Throws ConfigError if |tau_bar_1 - tau_bar_0| is not
    // smaller than tau_1 - tau_0.
    FakePathPlan anchor_delay_plan(const PathParameterSet &true_params, const PathParameterSet &target_params);

    // Gain-free composition: per-factor angle pilots and a fake-path delay pilot,
    // combined with blind_kronecker_pilot and scaled to ||X||^2 = M*S*K. Only the
    // geometric part of true_params is read.
    BlindDesign design_blind_full(const PathParameterSet &true_params, const SpoofTarget &target,
                                  const Codebooks &books, const SystemConfig &cfg,
                                  const BlindDesignOptions &opts = {});
} // namespace pilotspoof

#endif
