// SPDX-License-Identifier: Apache-2.0
//
// pilotspoof: pilot-level location spoofing for single-anchor mmWave positioning
// ------------------------------------------------------------------------

#include "pilotspoof/channel.hpp"

#include <cmath>

namespace pilotspoof
{
    double SystemConfig::symbol_energy() const
    {
        return tx_power_w / bandwidth_hz();
    }

    void SystemConfig::validate() const
    {
        if (n_rx == 0 || n_tx == 0 || n_combiners == 0 || n_precoders == 0 || n_subcarriers == 0)
            throw ConfigError("system config: all counts must be >= 1");
        if (!(subcarrier_spacing_hz > 0) || !(carrier_hz > 0))
            throw ConfigError("system config: subcarrier spacing and carrier must be positive");
        if (!(tx_power_w > 0) || !(symbol_energy() > 0))
            throw ConfigError("system config: transmit power must be positive");
        if (!(noise_psd_w_per_hz >= 0))
            throw ConfigError("system config: noise density must be nonnegative");
    }

    double Tensor3::energy() const
    {
        double e = 0.0;
        for (const cd &v : data_)
            e += std::norm(v);
        return e;
    }

    Tensor3 &Tensor3::operator*=(cd a)
    {
        for (cd &v : data_)
            v *= a;
        return *this;
    }

    Tensor3 &Tensor3::operator+=(const Tensor3 &o)
    {
        if (!same_shape(o))
            throw DimensionMismatch("tensor shapes differ");
        for (std::size_t i = 0; i < data_.size(); ++i)
            data_[i] += o.data_[i];
        return *this;
    }

    Tensor3 &Tensor3::operator-=(const Tensor3 &o)
    {
        if (!same_shape(o))
            throw DimensionMismatch("tensor shapes differ");
        for (std::size_t i = 0; i < data_.size(); ++i)
            data_[i] -= o.data_[i];
        return *this;
    }

    Tensor3 hadamard(const Tensor3 &a, const Tensor3 &b)
    {
        if (!a.same_shape(b))
            throw DimensionMismatch("hadamard: tensor shapes differ");
        Tensor3 out = a;
        for (std::size_t i = 0; i < out.data_.size(); ++i)
            out.data_[i] *= b.data_[i];
        return out;
    }

    Tensor3 operator-(Tensor3 a, const Tensor3 &b)
    {
        a -= b;
        return a;
    }

    PilotTensor PilotTensor::nominal(const SystemConfig &cfg)
    {
        PilotTensor x;
        x.entries = Tensor3(cfg.n_combiners, cfg.n_precoders, cfg.n_subcarriers, cd(1.0, 0.0));
        x.energy_budget = static_cast<double>(x.entries.size());
        return x;
    }

    CVec ula_steering(std::size_t n, double angle_rad)
    {
        CVec a(static_cast<Eigen::Index>(n));
        const double s = std::sin(angle_rad);
        for (std::size_t i = 0; i < n; ++i)
            a(static_cast<Eigen::Index>(i)) = std::polar(1.0, kPi * static_cast<double>(i) * s);
        return a;
    }

    CVec delay_steering(std::size_t k_count, double spacing_hz, double delay_s)
    {
        CVec d(static_cast<Eigen::Index>(k_count));
        const double w = -2.0 * kPi * spacing_hz * delay_s;
        for (std::size_t k = 0; k < k_count; ++k)
            d(static_cast<Eigen::Index>(k)) = std::polar(1.0, w * static_cast<double>(k));
        return d;
    }

    namespace
    {
        CMat dft_codebook(std::size_t n, std::size_t beams)
        {
            CMat w(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(beams));
            const double scale = 1.0 / std::sqrt(static_cast<double>(n));
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t b = 0; b < beams; ++b)
                {
                    // phase index reduced mod beams
                    const std::size_t idx = (i * b) % beams;
                    const double ph = 2.0 * kPi * static_cast<double>(idx) / static_cast<double>(beams);
                    w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = std::polar(scale, ph);
                }
            return w;
        }

        CMat random_codebook(std::size_t n, std::size_t beams, std::mt19937_64 &rng)
        {
            std::normal_distribution<double> g(0.0, 1.0);
            CMat w(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(beams));
            for (Eigen::Index b = 0; b < w.cols(); ++b)
            {
                for (Eigen::Index i = 0; i < w.rows(); ++i)
                {
                    const double re = g(rng);
                    w(i, b) = cd(re, g(rng));
                }
                w.col(b).normalize();
            }
            return w;
        }
    } // namespace

    Codebooks build_codebooks(const SystemConfig &cfg)
    {
        cfg.validate();
        Codebooks books;
        if (cfg.codebook == CodebookKind::Dft)
        {
            books.combiners = dft_codebook(cfg.n_rx, cfg.n_combiners);
            books.precoders = dft_codebook(cfg.n_tx, cfg.n_precoders);
        }
        else
        {
            std::mt19937_64 rng(cfg.codebook_seed);
            books.combiners = random_codebook(cfg.n_rx, cfg.n_combiners, rng);
            books.precoders = random_codebook(cfg.n_tx, cfg.n_precoders, rng);
        }
        return books;
    }

    CMat beamspace_response(const CMat &codebook, std::span<const double> angles)
    {
        const auto n = static_cast<std::size_t>(codebook.rows());
        CMat A(codebook.rows(), static_cast<Eigen::Index>(angles.size()));
        for (std::size_t l = 0; l < angles.size(); ++l)
            A.col(static_cast<Eigen::Index>(l)) = ula_steering(n, angles[l]);
        return codebook.adjoint() * A;
    }

    FactorMatrices factor_matrices(const PathParameterSet &params, const Codebooks &books, const SystemConfig &cfg)
    {
        if (params.empty())
            throw DimensionMismatch("factor_matrices: at least one path required");
        if (static_cast<std::size_t>(books.combiners.rows()) != cfg.n_rx ||
            static_cast<std::size_t>(books.combiners.cols()) != cfg.n_combiners ||
            static_cast<std::size_t>(books.precoders.rows()) != cfg.n_tx ||
            static_cast<std::size_t>(books.precoders.cols()) != cfg.n_precoders)
            throw DimensionMismatch("factor_matrices: codebook shape differs from system config");

        std::vector<double> aoa, aod;
        for (const Path &p : params.paths)
        {
            aoa.push_back(p.aoa_rad);
            aod.push_back(p.aod_rad);
        }
        FactorMatrices f;
        f.B = beamspace_response(books.combiners, aoa);
        f.C = beamspace_response(books.precoders, aod);
        f.D.resize(static_cast<Eigen::Index>(cfg.n_subcarriers), static_cast<Eigen::Index>(params.size()));
        for (std::size_t l = 0; l < params.size(); ++l)
            f.D.col(static_cast<Eigen::Index>(l)) =
                delay_steering(cfg.n_subcarriers, cfg.subcarrier_spacing_hz, params[l].delay_s);
        return f;
    }

    Tensor3 cp_tensor(const CMat &B, const CMat &C, const CMat &D, const CVec &weights)
    {
        const Eigen::Index L = weights.size();
        if (B.cols() != L || C.cols() != L || D.cols() != L)
            throw DimensionMismatch("cp_tensor: factor column counts differ from weight length");
        const auto M = static_cast<std::size_t>(B.rows());
        const auto S = static_cast<std::size_t>(C.rows());
        const auto K = static_cast<std::size_t>(D.rows());
        Tensor3 H(M, S, K);
        CVec coef(L);
        for (std::size_t m = 0; m < M; ++m)
            for (std::size_t s = 0; s < S; ++s)
            {
                for (Eigen::Index l = 0; l < L; ++l)
                    coef(l) = weights(l) * B(static_cast<Eigen::Index>(m), l) * C(static_cast<Eigen::Index>(s), l);
                std::span<cd> fib = H.fiber(m, s);
                for (std::size_t k = 0; k < K; ++k)
                {
                    cd acc(0.0, 0.0);
                    for (Eigen::Index l = 0; l < L; ++l)
                        acc += coef(l) * D(static_cast<Eigen::Index>(k), l);
                    fib[k] = acc;
                }
            }
        return H;
    }

    Tensor3 channel_tensor(const PathParameterSet &params, const Codebooks &books, const SystemConfig &cfg)
    {
        const FactorMatrices f = factor_matrices(params, books, cfg);
        return cp_tensor(f.B, f.C, f.D, std::sqrt(cfg.symbol_energy()) * params.gains());
    }

    ReceivedTensor synthesize_received(const Tensor3 &H, const PilotTensor &X, const SystemConfig &cfg,
                                       std::mt19937_64 &rng)
    {
        if (!H.same_shape(X.entries))
            throw DimensionMismatch("synthesize_received: channel and pilot shapes differ");
        if (H.dim_m() != cfg.n_combiners || H.dim_s() != cfg.n_precoders || H.dim_k() != cfg.n_subcarriers)
            throw DimensionMismatch("synthesize_received: tensor shape differs from system config");
        ReceivedTensor y{hadamard(H, X.entries)};
        if (cfg.noise_psd_w_per_hz > 0.0)
        {
            std::normal_distribution<double> g(0.0, std::sqrt(cfg.noise_psd_w_per_hz / 2.0));
            for (cd &v : y.entries.flat())
            {
                const double re = g(rng);
                const double im = g(rng);
                v += cd(re, im);
            }
        }
        return y;
    }
} // namespace pilotspoof
