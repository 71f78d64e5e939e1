// SPDX-License-Identifier: Apache-2.0
//
// pilotspoof: pilot-level location spoofing for single-anchor mmWave positioning
// ------------------------------------------------------------------------

#include "pilotspoof/spoof_oracle.hpp"

#include <cmath>
#include <string>

namespace pilotspoof
{
    SpoofTarget SpoofTarget::from_geometry(const ScenarioGeometry &target, const CVec &lambda)
    {
        SpoofTarget t;
        t.target_geometry = target;
        t.target_params = forward_params(target);
        t.design_gains = lambda;
        t.validate();
        return t;
    }

    void SpoofTarget::validate() const
    {
        if (static_cast<std::size_t>(design_gains.size()) != target_params.size())
            throw DimensionMismatch("spoof target: lambda length " + std::to_string(design_gains.size()) +
                                    " differs from target path count " + std::to_string(target_params.size()));
        if (design_gains.size() == 0 || design_gains.isZero(0.0))
            throw ConfigError("spoof target: lambda must not be the zero vector");
    }

    double normalize_energy(CVec &x, double budget)
    {
        const double e = x.squaredNorm();
        if (!(e > 0.0))
            throw NumericalDegeneracy("cannot normalise an all-zero pilot");
        const double f = std::sqrt(budget / e);
        x *= f;
        return f;
    }

    double normalize_energy(Tensor3 &x, double budget)
    {
        const double e = x.energy();
        if (!(e > 0.0))
            throw NumericalDegeneracy("cannot normalise an all-zero pilot");
        const double f = std::sqrt(budget / e);
        x *= cd(f, 0.0);
        return f;
    }

    CVec design_subspace_pilot(const CMat &m_true, const CVec &gains, const CMat &m_spoof, const CVec &lambda,
                               std::optional<double> energy_budget)
    {
        if (m_true.cols() != gains.size() || m_spoof.cols() != lambda.size() || m_true.rows() != m_spoof.rows())
            throw DimensionMismatch("design_subspace_pilot: inconsistent factor/gain dimensions");
        const CVec den = m_true * gains;
        const CVec num = m_spoof * lambda;
        CVec x(den.size());
        for (Eigen::Index i = 0; i < den.size(); ++i)
        {
            if (std::abs(den(i)) < kMinDenominator)
                throw NumericalDegeneracy("design_subspace_pilot: zero denominator at index " + std::to_string(i));
            x(i) = num(i) / den(i);
        }
        if (energy_budget)
            normalize_energy(x, *energy_budget);
        return x;
    }

    CMat design_joint_angle_pilot(const CMat &B, const CMat &C, const CVec &gains, const CMat &B_spoof,
                                  const CMat &C_spoof, const CVec &lambda, std::optional<double> energy_budget)
    {
        if (B.cols() != gains.size() || C.cols() != gains.size() || B_spoof.cols() != lambda.size() ||
            C_spoof.cols() != lambda.size() || B.rows() != B_spoof.rows() || C.rows() != C_spoof.rows())
            throw DimensionMismatch("design_joint_angle_pilot: inconsistent factor/gain dimensions");
        const CMat den = B * gains.asDiagonal() * C.transpose();
        const CMat num = B_spoof * lambda.asDiagonal() * C_spoof.transpose();
        CMat x(den.rows(), den.cols());
        for (Eigen::Index m = 0; m < den.rows(); ++m)
            for (Eigen::Index s = 0; s < den.cols(); ++s)
            {
                if (std::abs(den(m, s)) < kMinDenominator)
                    throw NumericalDegeneracy("design_joint_angle_pilot: zero denominator at (m, s) = (" +
                                              std::to_string(m) + ", " + std::to_string(s) + ")");
                x(m, s) = num(m, s) / den(m, s);
            }
        if (energy_budget)
        {
            const double e = x.squaredNorm();
            if (!(e > 0.0))
                throw NumericalDegeneracy("cannot normalise an all-zero pilot");
            x *= std::sqrt(*energy_budget / e);
        }
        return x;
    }

    Tensor3 design_full_pilot_raw(const PathParameterSet &true_params, const SpoofTarget &target,
                                  const Codebooks &books, const SystemConfig &cfg)
    {
        target.validate();
        if (target.target_params.size() != true_params.size())
            throw DimensionMismatch("oracle design requires the target path count to equal the true path count");

        // sqrt(E_s) multiplies numerator and denominator alike and is left out.
        const FactorMatrices f_true = factor_matrices(true_params, books, cfg);
        const FactorMatrices f_spoof = factor_matrices(target.target_params, books, cfg);
        const Tensor3 den = cp_tensor(f_true.B, f_true.C, f_true.D, true_params.gains());
        Tensor3 x = cp_tensor(f_spoof.B, f_spoof.C, f_spoof.D, target.design_gains);

        for (std::size_t m = 0; m < x.dim_m(); ++m)
            for (std::size_t s = 0; s < x.dim_s(); ++s)
                for (std::size_t k = 0; k < x.dim_k(); ++k)
                {
                    const cd d = den(m, s, k);
                    if (std::abs(d) < kMinDenominator)
                        throw NumericalDegeneracy("design_full_pilot_tensor: zero denominator at (m, s, k) = (" +
                                                  std::to_string(m) + ", " + std::to_string(s) + ", " +
                                                  std::to_string(k) + ")");
                    x(m, s, k) /= d;
                }
        return x;
    }

    PilotTensor design_full_pilot_tensor(const PathParameterSet &true_params, const SpoofTarget &target,
                                         const Codebooks &books, const SystemConfig &cfg, double *lambda_scale)
    {
        PilotTensor p;
        p.entries = design_full_pilot_raw(true_params, target, books, cfg);
        p.energy_budget = static_cast<double>(p.entries.size());
        const double f = normalize_energy(p.entries, p.energy_budget);
        if (lambda_scale)
            *lambda_scale = f;
        return p;
    }

    SpoofResidual spoof_residual(const Tensor3 &pilot, const PathParameterSet &true_params,
                                 const PathParameterSet &candidate_params, const Codebooks &books,
                                 const SystemConfig &cfg)
    {
        const Tensor3 spoofed = hadamard(channel_tensor(true_params, books, cfg), pilot);
        const Tensor3 model = channel_tensor(candidate_params, books, cfg);
        return {(spoofed - model).energy()};
    }
} // namespace pilotspoof
