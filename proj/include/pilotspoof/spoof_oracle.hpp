// SPDX-License-Identifier: Apache-2.0
//
// pilotspoof: pilot-level location spoofing for single-anchor mmWave positioning
// ------------------------------------------------------------------------

#ifndef PILOTSPOOF_SPOOF_ORACLE_HPP
#define PILOTSPOOF_SPOOF_ORACLE_HPP

#include <optional>

#include "pilotspoof/channel.hpp"
#include "pilotspoof/scenario.hpp"

namespace pilotspoof
{
    // Denominator entries with modulus below this are rejected.
    inline constexpr double kMinDenominator = 1e-12;

    // Fictitious world the UE wants the BS to see.
    struct SpoofTarget
    {
        ScenarioGeometry target_geometry;
        PathParameterSet target_params; // delays/angles from forward_params(target_geometry)
        CVec design_gains;              // lambda, one per target path

        // target_params from the geometry; lambda must have one entry per path and
        // must not be the zero vector.
        static SpoofTarget from_geometry(const ScenarioGeometry &target, const CVec &lambda);
        void validate() const;
    };

    struct SpoofResidual
    {
        double value = 0.0;
    };

    // Scales x in place so that ||x||^2 == budget; returns the applied factor.
    double normalize_energy(CVec &x, double budget);
    double normalize_energy(Tensor3 &x, double budget);

    // Single-factor perfect spoofing pilot: diag(x) M_true g = M_spoof lambda,
    // i.e. x = (M_spoof lambda) ./ (M_true g). Works for the AoA (B), AoD (C) and
    // delay (D) factors alike. With a budget, lambda is scaled uniformly so that
    // ||x||^2 == *energy_budget. Throws NumericalDegeneracy naming the index of the
    // first near-zero entry of M_true g.
    CVec design_subspace_pilot(const CMat &m_true, const CVec &gains, const CMat &m_spoof, const CVec &lambda,
                               std::optional<double> energy_budget = std::nullopt);

    // Joint AoA/AoD pilot: X = (Bs diag(lambda) Cs^T) ./ (B diag(g) C^T).
    CMat design_joint_angle_pilot(const CMat &B, const CMat &C, const CVec &gains, const CMat &B_spoof,
                                  const CMat &C_spoof, const CVec &lambda,
                                  std::optional<double> energy_budget = std::nullopt);

    // Full (m, s, k) pilot: target CP tensor divided entrywise by the true CP
    // tensor, then scaled so ||X||^2 == M*S*K. true_params must carry the gains.
    // The applied factor (the effective lambda is factor * lambda) is written to
    // *lambda_scale when given.
    PilotTensor design_full_pilot_tensor(const PathParameterSet &true_params, const SpoofTarget &target,
                                         const Codebooks &books, const SystemConfig &cfg,
                                         double *lambda_scale = nullptr);

    // Unnormalised variant (lambda used as given).
    Tensor3 design_full_pilot_raw(const PathParameterSet &true_params, const SpoofTarget &target,
                                  const Codebooks &books, const SystemConfig &cfg);

    // ||H(rho, alpha) (.) X - H(rho', alpha')||^2; both parameter sets carry gains.
    SpoofResidual spoof_residual(const Tensor3 &pilot, const PathParameterSet &true_params,
                                 const PathParameterSet &candidate_params, const Codebooks &books,
                                 const SystemConfig &cfg);
} // namespace pilotspoof

#endif
