// SPDX-License-Identifier: Apache-2.0
//
// pilotspoof: pilot-level location spoofing for single-anchor mmWave positioning
// ------------------------------------------------------------------------

#ifndef PILOTSPOOF_COMMON_HPP
#define PILOTSPOOF_COMMON_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pilotspoof
{
    using cd = std::complex<double>;
    using CVec = Eigen::VectorXcd;
    using CMat = Eigen::MatrixXcd;
    using RVec = Eigen::VectorXd;
    using Vec2 = Eigen::Vector2d;

    inline constexpr double kPi = std::numbers::pi;
    inline constexpr double kSpeedOfLight = 299792458.0;

    // Geometry with a zero-length leg (coincident points).
    class DegenerateGeometry : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Division by a (numerically) zero denominator or a rank-deficient solve.
    class NumericalDegeneracy : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    class DimensionMismatch : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    // Invalid user configuration (files, flags, out-of-range parameters).
    class ConfigError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Wraps an angle to (-pi, pi].
    double wrap_angle(double x_rad);

    inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
    inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
    inline double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

    // Independent random streams derived from (seed, trial, stream). Streams with
    // different ids never share state, so e.g. path phases stay fixed while the
    // noise realisation or the pilot changes.
    enum class Stream : std::uint64_t
    {
        GainPhase = 1,
        Noise = 2,
        Perturb = 3,
        Codebook = 4,
        Misc = 5,
    };

    class TrialRng
    {
    public:
        TrialRng(std::uint64_t seed, std::uint64_t trial_id) : seed_(seed), trial_(trial_id) {}

        std::mt19937_64 stream(Stream id) const
        {
            std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                              static_cast<std::uint32_t>(trial_), static_cast<std::uint32_t>(trial_ >> 32),
                              static_cast<std::uint32_t>(id), 0x9e3779b9u};
            return std::mt19937_64(seq);
        }

        std::uint64_t seed() const { return seed_; }
        std::uint64_t trial_id() const { return trial_; }

    private:
        std::uint64_t seed_;
        std::uint64_t trial_;
    };
} // namespace pilotspoof

#endif
