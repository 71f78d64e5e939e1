// SPDX-License-Identifier: Apache-2.0
//
// pilotspoof: pilot-level location spoofing for single-anchor mmWave positioning
// ------------------------------------------------------------------------
//
// Shared test fixtures: the reference two-path world and its spoofing target.

#ifndef PILOTSPOOF_TEST_FIXTURES_HPP
#define PILOTSPOOF_TEST_FIXTURES_HPP

#include <random>

#include "pilotspoof/channel.hpp"
#include "pilotspoof/scenario.hpp"

namespace fixture
{
    using namespace pilotspoof;

    inline ScenarioGeometry truth()
    {
        ScenarioGeometry g;
        g.bs = Pose2D(Vec2(0.0, 0.0), 0.0);
        g.ue = Pose2D(Vec2(10.0, 5.0), 4.0 * kPi / 3.0);
        g.scatter_points = {Vec2(7.0, -15.0)};
        return g;
    }

    // Location #1.
    inline ScenarioGeometry spoof()
    {
        ScenarioGeometry g;
        g.bs = Pose2D(Vec2(0.0, 0.0), 0.0);
        g.ue = Pose2D(Vec2(30.0, -20.0), kPi / 2.0);
        g.scatter_points = {Vec2(40.0, -10.0)};
        return g;
    }

    inline GainModelConfig gain(double tx_dbm = 35.0)
    {
        GainModelConfig c;
        c.tx_power_w = dbm_to_watt(tx_dbm);
        c.g_bs_lin = db_to_lin(7.0);
        c.g_ue_lin = db_to_lin(3.0);
        c.rcs_m2 = 50.0;
        c.carrier_hz = 27.8e9;
        return c;
    }

    inline SystemConfig system(std::size_t k = 256, double tx_dbm = 35.0)
    {
        SystemConfig c;
        c.n_subcarriers = k;
        c.tx_power_w = dbm_to_watt(tx_dbm);
        return c;
    }

    inline PathParameterSet truth_params(std::uint64_t seed = 7)
    {
        std::mt19937_64 rng(seed);
        return forward_params_with_gains(truth(), gain(), rng);
    }

    inline CVec random_cvec(Eigen::Index n, std::mt19937_64 &rng)
    {
        std::normal_distribution<double> g(0.0, 1.0);
        CVec v(n);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const double re = g(rng);
            const double im = g(rng);
            v(i) = cd(re, im);
        }
        return v;
    }

    inline double rel_err(const Tensor3 &a, const Tensor3 &b)
    {
        return std::sqrt((a - b).energy() / b.energy());
    }
} // namespace fixture

#endif
