// SPDX-License-Identifier: Apache-2.0
//
// pilotspoof: pilot-level location spoofing for single-anchor mmWave positioning
// ------------------------------------------------------------------------

#ifndef PILOTSPOOF_CHANNEL_HPP
#define PILOTSPOOF_CHANNEL_HPP

#include <cstddef>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pilotspoof/common.hpp"
#include "pilotspoof/scenario.hpp"

namespace pilotspoof
{
    // Thermal noise density at 290 K.
    inline constexpr double kThermalNoiseDbmPerHz = -174.0;

    enum class CodebookKind
    {
        Dft,
        Random,
    };

    struct SystemConfig
    {
        std::size_t n_rx = 24;
        std::size_t n_tx = 16;
        std::size_t n_combiners = 24;
        std::size_t n_precoders = 16;
        std::size_t n_subcarriers = 256;
        double subcarrier_spacing_hz = 120e3;
        double carrier_hz = 27.8e9;
        double noise_psd_w_per_hz = dbm_to_watt(kThermalNoiseDbmPerHz);
        double tx_power_w = dbm_to_watt(35.0);
        CodebookKind codebook = CodebookKind::Dft;
        std::uint64_t codebook_seed = 0;

        // Energy per subcarrier E_s = P_t / (K * delta_f).
        double symbol_energy() const;
        double bandwidth_hz() const { return static_cast<double>(n_subcarriers) * subcarrier_spacing_hz; }
        // Delay spanned by one inverse-DFT bin, 1 / (K * delta_f).
        double delay_bin_s() const { return 1.0 / bandwidth_hz(); }
        void validate() const;
    };

    // Combiners W (N_R x M) and precoders F (N_T x S), unit-norm columns.
    struct Codebooks
    {
        CMat combiners;
        CMat precoders;

        bool square() const
        {
            return combiners.rows() == combiners.cols() && precoders.rows() == precoders.cols();
        }
    };

    // Dense complex order-3 tensor indexed (m, s, k) with k fastest. The flat
    // storage equals vec of the mode-3 unfolding, i.e. element (m, s, k) sits at
    // (m * S + s) * K + k, which matches the Kronecker order b (x) c (x) d.
    class Tensor3
    {
    public:
        Tensor3() = default;
        Tensor3(std::size_t m, std::size_t s, std::size_t k, cd fill = cd(0.0, 0.0))
            : m_(m), s_(s), k_(k), data_(m * s * k, fill)
        {
        }

        std::size_t dim_m() const { return m_; }
        std::size_t dim_s() const { return s_; }
        std::size_t dim_k() const { return k_; }
        std::size_t size() const { return data_.size(); }

        cd &operator()(std::size_t m, std::size_t s, std::size_t k) { return data_[(m * s_ + s) * k_ + k]; }
        const cd &operator()(std::size_t m, std::size_t s, std::size_t k) const { return data_[(m * s_ + s) * k_ + k]; }

        std::span<cd> flat() { return data_; }
        std::span<const cd> flat() const { return data_; }

        // Subcarrier vector for snapshot (m, s).
        std::span<cd> fiber(std::size_t m, std::size_t s) { return {data_.data() + (m * s_ + s) * k_, k_}; }
        std::span<const cd> fiber(std::size_t m, std::size_t s) const { return {data_.data() + (m * s_ + s) * k_, k_}; }

        bool same_shape(const Tensor3 &o) const { return m_ == o.m_ && s_ == o.s_ && k_ == o.k_; }

        // Squared Frobenius norm.
        double energy() const;

        Tensor3 &operator*=(cd a);
        Tensor3 &operator+=(const Tensor3 &o);
        Tensor3 &operator-=(const Tensor3 &o);

        friend Tensor3 hadamard(const Tensor3 &a, const Tensor3 &b);
        friend bool operator==(const Tensor3 &a, const Tensor3 &b) = default;

    private:
        std::size_t m_ = 0, s_ = 0, k_ = 0;
        std::vector<cd> data_;
    };

    Tensor3 hadamard(const Tensor3 &a, const Tensor3 &b);
    Tensor3 operator-(Tensor3 a, const Tensor3 &b);

    struct PilotTensor
    {
        Tensor3 entries;
        double energy_budget = 0.0;

        // All-ones pilot with budget M*S*K.
        static PilotTensor nominal(const SystemConfig &cfg);
    };

    struct ReceivedTensor
    {
        Tensor3 entries;
    };

    struct FactorMatrices
    {
        CMat B; // M x L, W^H A_R
        CMat C; // S x L, F^H A_T
        CMat D; // K x L, delay steering columns
    };

    // [1, e^{j pi sin(angle)}, ..., e^{j pi (n-1) sin(angle)}]
    CVec ula_steering(std::size_t n, double angle_rad);

    // [1, e^{-j 2 pi df tau}, ..., e^{-j 2 pi (K-1) df tau}]
    CVec delay_steering(std::size_t k_count, double spacing_hz, double delay_s);

    // Unit-norm DFT columns (square: unitary); random unit-norm columns when
    // cfg.codebook == Random.
    Codebooks build_codebooks(const SystemConfig &cfg);

    // Columns of W^H A(angles) for a list of angles.
    CMat beamspace_response(const CMat &codebook, std::span<const double> angles);

    FactorMatrices factor_matrices(const PathParameterSet &params, const Codebooks &books, const SystemConfig &cfg);

    // H[m,s,k] = sqrt(E_s) * sum_l alpha_l B[m,l] C[s,l] D[k,l]
    Tensor3 channel_tensor(const PathParameterSet &params, const Codebooks &books, const SystemConfig &cfg);

    // Same from explicit factor matrices and per-path weights (weights already
    // include any sqrt(E_s) scaling the caller wants).
    Tensor3 cp_tensor(const CMat &B, const CMat &C, const CMat &D, const CVec &weights);

    // Y = H (.) X + Q, Q i.i.d. CN(0, N_0).
    ReceivedTensor synthesize_received(const Tensor3 &H, const PilotTensor &X, const SystemConfig &cfg,
                                       std::mt19937_64 &rng);

    // Tensor dump: 3 x uint64 dimension header (M, S, K) then interleaved re/im
    // float64 in (m, s, k) order, k fastest; all little-endian.
    void write_tensor(std::ostream &os, const Tensor3 &t);
    Tensor3 read_tensor(std::istream &is);
    void write_tensor_file(const std::string &path, const Tensor3 &t);
    Tensor3 read_tensor_file(const std::string &path);
} // namespace pilotspoof

#endif
