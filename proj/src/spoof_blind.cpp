// SPDX-License-Identifier: Apache-2.0
//
// pilotspoof: pilot-level location spoofing for single-anchor mmWave positioning
// ------------------------------------------------------------------------

#include "pilotspoof/spoof_blind.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pilotspoof
{
    void AlternatingConfig::validate() const
    {
        if (max_iters < 1)
            throw ConfigError("alternating solver: max_iters must be >= 1");
        if (!(convergence_tol > 0))
            throw ConfigError("alternating solver: convergence_tol must be positive");
    }

    FakePathPlan FakePathPlan::equal_power(std::vector<double> offsets_s)
    {
        FakePathPlan p;
        const auto n = static_cast<Eigen::Index>(offsets_s.size());
        p.delay_offsets_s = std::move(offsets_s);
        p.amplitudes = CVec::Constant(n, cd(1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(n, 1))), 0.0));
        return p;
    }

    void FakePathPlan::validate() const
    {
        if (delay_offsets_s.empty())
            throw ConfigError("fake-path plan: at least one offset required");
        if (static_cast<std::size_t>(amplitudes.size()) != delay_offsets_s.size())
            throw ConfigError("fake-path plan: amplitude count differs from offset count");
        for (std::size_t i = 0; i < delay_offsets_s.size(); ++i)
        {
            if (!std::isfinite(delay_offsets_s[i]))
                throw ConfigError("fake-path plan: non-finite offset");
            for (std::size_t j = 0; j < i; ++j)
                if (delay_offsets_s[i] == delay_offsets_s[j])
                    throw ConfigError("fake-path plan: offsets must be distinct");
        }
    }

    CVec blind_single_path_pilot(const CVec &v_true, const CVec &v_spoof, cd scale)
    {
        if (v_true.size() != v_spoof.size())
            throw DimensionMismatch("blind_single_path_pilot: vector lengths differ");
        CVec x(v_true.size());
        for (Eigen::Index i = 0; i < x.size(); ++i)
        {
            if (std::abs(v_true(i)) < kMinDenominator)
                throw NumericalDegeneracy("blind_single_path_pilot: zero entry at index " + std::to_string(i));
            x(i) = scale * v_spoof(i) / v_true(i);
        }
        return x;
    }

    namespace
    {
        double residual(const CMat &m_true, const CMat &m_spoof, const CVec &x, const CMat &omega)
        {
            return (m_spoof * omega - x.asDiagonal() * m_true).squaredNorm();
        }

        // argmin sum_n beta_n |x_n|^2 - 2 Re(conj(x_n) c_n) on ||x||^2 = budget,
        // x_n = c_n / (beta_n + mu) with mu from the secular equation.
        CVec sphere_step(const RVec &beta, const CVec &c, double budget, const std::vector<bool> &active)
        {
            double beta_min = std::numeric_limits<double>::infinity();
            double csum = 0.0;
            for (Eigen::Index n = 0; n < beta.size(); ++n)
                if (active[static_cast<std::size_t>(n)])
                {
                    beta_min = std::min(beta_min, beta(n));
                    csum += std::norm(c(n));
                }
            CVec x = CVec::Zero(c.size());
            if (!(csum > 0.0))
                return x;

            auto g = [&](double mu)
            {
                double s = 0.0;
                for (Eigen::Index n = 0; n < beta.size(); ++n)
                    if (active[static_cast<std::size_t>(n)])
                        s += std::norm(c(n)) / ((beta(n) + mu) * (beta(n) + mu));
                return s;
            };

            double lo = -beta_min;
            double hi = std::sqrt(csum / budget) - beta_min;
            if (hi <= lo)
                hi = lo + std::sqrt(csum / budget);
            const double span = hi - lo;
            lo += 1e-15 * std::max(span, 1.0);
            if (g(lo) > budget)
            {
                for (int it = 0; it < 200; ++it)
                {
                    const double mid = 0.5 * (lo + hi);
                    (g(mid) > budget ? lo : hi) = mid;
                    if (hi - lo <= 1e-15 * std::max(std::abs(hi), 1.0))
                        break;
                }
            }
            const double mu = 0.5 * (lo + hi);
            for (Eigen::Index n = 0; n < c.size(); ++n)
                if (active[static_cast<std::size_t>(n)])
                    x(n) = c(n) / (beta(n) + mu);
            // Scale onto the sphere exactly; this absorbs the bisection tolerance.
            const double e = x.squaredNorm();
            if (e > 0.0)
                x *= std::sqrt(budget / e);
            return x;
        }
    } // namespace

    AlternatingResult blind_multipath_angle_pilot(const CMat &m_true, const CMat &m_spoof, const AlternatingConfig &cfg)
    {
        cfg.validate();
        if (m_true.rows() != m_spoof.rows() || m_true.cols() != m_spoof.cols())
            throw DimensionMismatch("blind_multipath_angle_pilot: factor shapes differ");
        const Eigen::Index N = m_true.rows();
        const Eigen::Index L = m_true.cols();
        const double budget = cfg.energy_budget > 0.0 ? cfg.energy_budget : static_cast<double>(N);

        Eigen::ColPivHouseholderQR<CMat> qr(m_spoof);
        qr.setThreshold(1e-10);
        if (qr.rank() < L)
            throw NumericalDegeneracy("blind_multipath_angle_pilot: spoofed factor matrix is rank deficient");
        const CMat gram = m_spoof.adjoint() * m_spoof;
        const Eigen::LDLT<CMat> gram_solver(gram);

        AlternatingResult out;
        out.mixer = CMat::Identity(L, L);
        std::vector<bool> active(static_cast<std::size_t>(N));
        RVec beta(N);
        for (Eigen::Index n = 0; n < N; ++n)
        {
            beta(n) = m_true.row(n).squaredNorm();
            active[static_cast<std::size_t>(n)] = beta(n) > 0.0;
            if (!active[static_cast<std::size_t>(n)])
                out.zero_rows.push_back(static_cast<std::size_t>(n));
        }

        CVec x;
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t it = 0; it < cfg.max_iters; ++it)
        {
            const CMat r = m_spoof * out.mixer;
            CVec c(N);
            CVec ls(N);
            for (Eigen::Index n = 0; n < N; ++n)
            {
                c(n) = m_true.row(n).dot(r.row(n)); // sum_l conj(m_nl) r_nl
                ls(n) = active[static_cast<std::size_t>(n)] ? c(n) / beta(n) : cd(0.0, 0.0);
            }
            // Row-wise LS then a positive rescale onto the budget.
            CVec cand = ls;
            const double e = cand.squaredNorm();
            bool use_sphere = !(e > 0.0);
            if (!use_sphere)
            {
                cand *= std::sqrt(budget / e);
                if (x.size() == N && residual(m_true, m_spoof, cand, out.mixer) > residual(m_true, m_spoof, x, out.mixer))
                    use_sphere = true;
            }
            if (use_sphere)
            {
                cand = sphere_step(beta, c, budget, active);
                ++out.constrained_steps;
            }
            x = cand;

            out.mixer = gram_solver.solve(m_spoof.adjoint() * x.asDiagonal() * m_true);
            const double f = residual(m_true, m_spoof, x, out.mixer);
            out.residual_history.push_back(f);
            out.iterations = it + 1;
            const double scale = std::max(prev, std::numeric_limits<double>::min());
            if (f <= 1e-28 * budget || (std::isfinite(prev) && std::abs(prev - f) / scale < cfg.convergence_tol))
                break;
            prev = f;
        }
        out.pilot = x;
        return out;
    }

    ImpossibilityCertificate blind_impossibility_certificate(const CMat &m_true, const CMat &m_spoof,
                                                             const AlternatingConfig &cfg)
    {
        if (m_true.rows() != m_spoof.rows() || m_true.cols() != m_spoof.cols())
            throw DimensionMismatch("blind_impossibility_certificate: factor shapes differ");
        const Eigen::Index N = m_true.rows();
        const Eigen::Index L = m_true.cols();

        ImpossibilityCertificate cert;
        cert.exact_generic = L == 1 || N * (L - 1) < L * L;

        // Unknowns z = [x; vec(Omega)], rows indexed (n, l).
        CMat A = CMat::Zero(N * L, N + L * L);
        for (Eigen::Index l = 0; l < L; ++l)
            for (Eigen::Index n = 0; n < N; ++n)
            {
                const Eigen::Index row = l * N + n;
                A(row, n) = -m_true(n, l);
                for (Eigen::Index j = 0; j < L; ++j)
                    A(row, N + l * L + j) = m_spoof(n, j);
            }
        for (Eigen::Index col = 0; col < A.cols(); ++col)
        {
            const double nrm = A.col(col).norm();
            if (nrm > 0.0)
                A.col(col) /= nrm;
        }
        if (A.cols() > A.rows())
            cert.min_singular_value = 0.0;
        else
        {
            Eigen::JacobiSVD<CMat> svd(A);
            cert.min_singular_value = svd.singularValues().minCoeff();
        }

        const AlternatingResult alt = blind_multipath_angle_pilot(m_true, m_spoof, cfg);
        cert.alternating_residual = alt.residual_history.back() / m_spoof.squaredNorm();
        return cert;
    }

    CVec fake_path_pilot(const FakePathPlan &plan, std::size_t k_count, double spacing_hz)
    {
        plan.validate();
        CVec x = CVec::Zero(static_cast<Eigen::Index>(k_count));
        for (std::size_t i = 0; i < plan.delay_offsets_s.size(); ++i)
            x += plan.amplitudes(static_cast<Eigen::Index>(i)) *
                 delay_steering(k_count, spacing_hz, plan.delay_offsets_s[i]);
        return x;
    }

    PilotTensor blind_kronecker_pilot(const CVec &x_b, const CVec &x_c, const CVec &x_d)
    {
        if (x_b.size() == 0 || x_c.size() == 0 || x_d.size() == 0)
            throw DimensionMismatch("blind_kronecker_pilot: empty component");
        PilotTensor p;
        p.entries = Tensor3(static_cast<std::size_t>(x_b.size()), static_cast<std::size_t>(x_c.size()),
                            static_cast<std::size_t>(x_d.size()));
        p.energy_budget = static_cast<double>(p.entries.size());
        for (Eigen::Index m = 0; m < x_b.size(); ++m)
            for (Eigen::Index s = 0; s < x_c.size(); ++s)
            {
                const cd bc = x_b(m) * x_c(s);
                std::span<cd> fib = p.entries.fiber(static_cast<std::size_t>(m), static_cast<std::size_t>(s));
                for (Eigen::Index k = 0; k < x_d.size(); ++k)
                    fib[static_cast<std::size_t>(k)] = bc * x_d(k);
            }
        return p;
    }

    FakePathPlan anchor_delay_plan(const PathParameterSet &true_params, const PathParameterSet &target_params)
    {
        if (true_params.size() < 2 || target_params.size() < 2)
            throw ConfigError("anchor delay plan: true and target need at least two paths");
        const double tdoa_true = true_params[1].delay_s - true_params[0].delay_s;
        const double tdoa_target = std::abs(target_params[1].delay_s - target_params[0].delay_s);
        if (!(tdoa_target < tdoa_true))
            throw ConfigError("anchor delay plan: target TDoA " + std::to_string(tdoa_target) +
                              " s is not below the true TDoA " + std::to_string(tdoa_true) + " s");
        return FakePathPlan::equal_power(
            {target_params[0].delay_s - true_params[0].delay_s, target_params[1].delay_s - true_params[0].delay_s});
    }

    namespace
    {
        std::vector<std::size_t> dominant_rows(const CMat &omega)
        {
            std::vector<std::size_t> perm(static_cast<std::size_t>(omega.cols()));
            for (Eigen::Index l = 0; l < omega.cols(); ++l)
            {
                Eigen::Index j = 0;
                omega.col(l).cwiseAbs().maxCoeff(&j);
                perm[static_cast<std::size_t>(l)] = static_cast<std::size_t>(j);
            }
            return perm;
        }
    } // namespace

    BlindDesign design_blind_full(const PathParameterSet &true_params, const SpoofTarget &target,
                                  const Codebooks &books, const SystemConfig &cfg, const BlindDesignOptions &opts)
    {
        if (true_params.size() != target.target_params.size())
            throw DimensionMismatch("design_blind_full: target path count differs from true path count");
        const FactorMatrices f = factor_matrices(true_params, books, cfg);
        const FactorMatrices fb = factor_matrices(target.target_params, books, cfg);
        const std::size_t L = true_params.size();

        BlindDesign out;
        const auto K = static_cast<Eigen::Index>(cfg.n_subcarriers);
        CVec x_d = CVec::Ones(K);
        if (!opts.angle_only)
        {
            if (opts.plan)
                out.plan = *opts.plan;
            else if (L == 1)
                out.plan = FakePathPlan::equal_power({target.target_params[0].delay_s - true_params[0].delay_s});
            else
                out.plan = anchor_delay_plan(true_params, target.target_params);
            x_d = fake_path_pilot(out.plan, cfg.n_subcarriers, cfg.subcarrier_spacing_hz);
        }
        out.expected_paths = L * (opts.angle_only ? 1 : out.plan.delay_offsets_s.size());

        if (opts.joint_angle_matrix)
        {
            const CVec unit = CVec::Ones(static_cast<Eigen::Index>(L));
            const CMat xbc = design_joint_angle_pilot(f.B, f.C, unit, fb.B, fb.C, unit);
            out.pilot.entries = Tensor3(cfg.n_combiners, cfg.n_precoders, cfg.n_subcarriers);
            for (std::size_t m = 0; m < cfg.n_combiners; ++m)
                for (std::size_t s = 0; s < cfg.n_precoders; ++s)
                {
                    std::span<cd> fib = out.pilot.entries.fiber(m, s);
                    const cd v = xbc(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(s));
                    for (Eigen::Index k = 0; k < K; ++k)
                        fib[static_cast<std::size_t>(k)] = v * x_d(k);
                }
            out.aoa_permutation.resize(L);
            out.aod_permutation.resize(L);
            for (std::size_t l = 0; l < L; ++l)
                out.aoa_permutation[l] = out.aod_permutation[l] = l;
        }
        else
        {
            CVec x_b, x_c;
            if (L == 1)
            {
                x_b = blind_single_path_pilot(f.B.col(0), fb.B.col(0));
                x_c = blind_single_path_pilot(f.C.col(0), fb.C.col(0));
                out.aoa_permutation = out.aod_permutation = {0};
                out.aoa_residuals = out.aod_residuals = {0.0};
            }
            else
            {
                const AlternatingResult rb = blind_multipath_angle_pilot(f.B, fb.B, opts.alternating);
                const AlternatingResult rc = blind_multipath_angle_pilot(f.C, fb.C, opts.alternating);
                x_b = rb.pilot;
                x_c = rc.pilot;
                out.aoa_permutation = dominant_rows(rb.mixer);
                out.aod_permutation = dominant_rows(rc.mixer);
                out.aoa_residuals = rb.residual_history;
                out.aod_residuals = rc.residual_history;
            }
            out.pilot = blind_kronecker_pilot(x_b, x_c, x_d);
        }
        out.pilot.energy_budget = static_cast<double>(out.pilot.entries.size());
        normalize_energy(out.pilot.entries, out.pilot.energy_budget);
        return out;
    }
} // namespace pilotspoof
