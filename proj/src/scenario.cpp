// SPDX-License-Identifier: Apache-2.0
//
// pilotspoof: pilot-level location spoofing for single-anchor mmWave positioning
// ------------------------------------------------------------------------

#include "pilotspoof/scenario.hpp"

#include <cmath>
#include <string>

namespace pilotspoof
{
    double wrap_angle(double x_rad)
    {
        double r = std::remainder(x_rad, 2.0 * kPi); // [-pi, pi]
        if (r <= -kPi)
            r += 2.0 * kPi;
        return r;
    }

    Pose2D::Pose2D(const Vec2 &position, double orientation_rad)
        : position_(position), orientation_(wrap_angle(orientation_rad))
    {
        if (!position.allFinite() || !std::isfinite(orientation_rad))
            throw ConfigError("Pose2D: non-finite position or orientation");
    }

    namespace
    {
        double leg(const Vec2 &a, const Vec2 &b, const char *what)
        {
            const double d = (a - b).norm();
            if (d < kMinLegLength_m)
                throw DegenerateGeometry(std::string("degenerate geometry: zero-length leg ") + what);
            return d;
        }

        double bearing(const Vec2 &from, const Vec2 &to)
        {
            const Vec2 d = to - from;
            return std::atan2(d.y(), d.x());
        }
    } // namespace

    void ScenarioGeometry::validate() const
    {
        if (!std::isfinite(clock_bias_s))
            throw ConfigError("clock bias must be finite");
        if (!(speed_of_light > 0.0))
            throw ConfigError("speed of light must be positive");
        leg(bs.position(), ue.position(), "BS-UE");
        for (std::size_t i = 0; i < scatter_points.size(); ++i)
        {
            if (!scatter_points[i].allFinite())
                throw ConfigError("scatter point " + std::to_string(i) + " is not finite");
            leg(scatter_points[i], bs.position(), "SP-BS");
            leg(scatter_points[i], ue.position(), "UE-SP");
        }
    }

    CVec PathParameterSet::gains() const
    {
        CVec g(static_cast<Eigen::Index>(paths.size()));
        for (std::size_t i = 0; i < paths.size(); ++i)
            g(static_cast<Eigen::Index>(i)) = paths[i].gain;
        return g;
    }

    void PathParameterSet::set_gains(const CVec &g)
    {
        if (static_cast<std::size_t>(g.size()) != paths.size())
            throw DimensionMismatch("set_gains: gain vector length differs from path count");
        for (std::size_t i = 0; i < paths.size(); ++i)
            paths[i].gain = g(static_cast<Eigen::Index>(i));
    }

    void GainModelConfig::validate() const
    {
        if (!(tx_power_w > 0 && g_bs_lin > 0 && g_ue_lin > 0 && rcs_m2 > 0 && carrier_hz > 0))
            throw ConfigError("gain model parameters must be strictly positive");
    }

    PathParameterSet forward_params(const ScenarioGeometry &geom)
    {
        geom.validate();
        const Vec2 &p_bs = geom.bs.position();
        const Vec2 &p_ue = geom.ue.position();
        const double c = geom.speed_of_light;

        PathParameterSet out;
        out.paths.reserve(geom.scatter_points.size() + 1);

        Path los;
        los.delay_s = leg(p_bs, p_ue, "BS-UE") / c + geom.clock_bias_s;
        los.aoa_rad = wrap_angle(bearing(p_bs, p_ue) - geom.bs.orientation());
        los.aod_rad = wrap_angle(bearing(p_ue, p_bs) - geom.ue.orientation());
        out.paths.push_back(los);

        for (const Vec2 &sp : geom.scatter_points)
        {
            Path nlos;
            nlos.delay_s = (leg(p_ue, sp, "UE-SP") + leg(sp, p_bs, "SP-BS")) / c + geom.clock_bias_s;
            nlos.aoa_rad = wrap_angle(bearing(p_bs, sp) - geom.bs.orientation());
            nlos.aod_rad = wrap_angle(bearing(p_ue, sp) - geom.ue.orientation());
            out.paths.push_back(nlos);
        }
        return out;
    }

    double los_attenuation(double distance_m, double carrier_hz)
    {
        if (distance_m < kMinLegLength_m)
            throw DegenerateGeometry("degenerate geometry: zero LOS distance");
        const double r = kSpeedOfLight / (4.0 * kPi * carrier_hz * distance_m);
        return r * r;
    }

    double bistatic_attenuation(double ue_sp_m, double sp_bs_m, double rcs_m2, double carrier_hz)
    {
        if (ue_sp_m < kMinLegLength_m || sp_bs_m < kMinLegLength_m)
            throw DegenerateGeometry("degenerate geometry: zero bistatic leg");
        const double four_pi = 4.0 * kPi;
        return rcs_m2 * kSpeedOfLight * kSpeedOfLight /
               (four_pi * four_pi * four_pi * carrier_hz * carrier_hz * ue_sp_m * ue_sp_m * sp_bs_m * sp_bs_m);
    }

    std::vector<cd> path_gains(const ScenarioGeometry &geom, const GainModelConfig &cfg, std::mt19937_64 &rng)
    {
        geom.validate();
        cfg.validate();
        const Vec2 &p_bs = geom.bs.position();
        const Vec2 &p_ue = geom.ue.position();
        const double g_ant = cfg.g_bs_lin * cfg.g_ue_lin;
        std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);

        std::vector<cd> out;
        out.reserve(geom.scatter_points.size() + 1);
        const double eta0 = los_attenuation((p_bs - p_ue).norm(), cfg.carrier_hz);
        out.push_back(std::polar(std::sqrt(eta0 * g_ant), phase(rng)));
        for (const Vec2 &sp : geom.scatter_points)
        {
            const double eta = bistatic_attenuation((p_ue - sp).norm(), (sp - p_bs).norm(), cfg.rcs_m2, cfg.carrier_hz);
            out.push_back(std::polar(std::sqrt(eta * g_ant), phase(rng)));
        }
        return out;
    }

    std::vector<cd> path_gains(const ScenarioGeometry &geom, const GainModelConfig &cfg)
    {
        std::mt19937_64 rng(cfg.random_phase_seed);
        return path_gains(geom, cfg, rng);
    }

    PathParameterSet forward_params_with_gains(const ScenarioGeometry &geom, const GainModelConfig &cfg,
                                               std::mt19937_64 &rng)
    {
        PathParameterSet ps = forward_params(geom);
        const std::vector<cd> g = path_gains(geom, cfg, rng);
        for (std::size_t i = 0; i < ps.size(); ++i)
            ps[i].gain = g[i];
        return ps;
    }

    ScenarioGeometry perturb(const ScenarioGeometry &geom, double sigma_ue_m, double sigma_sp_m, std::mt19937_64 &rng)
    {
        if (sigma_ue_m < 0 || sigma_sp_m < 0)
            throw ConfigError("perturb: standard deviations must be nonnegative");
        ScenarioGeometry out = geom;
        std::normal_distribution<double> n01(0.0, 1.0);
        auto draw = [&]
        {
            const double x = n01(rng);
            return Vec2(x, n01(rng));
        };
        // offsets drawn even for sigma == 0
        const Vec2 d_ue = draw();
        out.ue = Pose2D(geom.ue.position() + sigma_ue_m * d_ue, geom.ue.orientation());
        for (Vec2 &sp : out.scatter_points)
        {
            sp += sigma_sp_m * draw();
        }
        return out;
    }
} // namespace pilotspoof
