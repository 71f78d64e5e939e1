// SPDX-License-Identifier: Apache-2.0
//
// pilotspoof: pilot-level location spoofing for single-anchor mmWave positioning
// ------------------------------------------------------------------------

#include "pilotspoof/locate_comm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "pilotspoof/parallel.hpp"
#include "pilotspoof/spoof_oracle.hpp"

namespace pilotspoof
{
    const char *to_string(PositionStatus s)
    {
        switch (s)
        {
        case PositionStatus::Valid:
            return "valid";
        case PositionStatus::TooFewPaths:
            return "too_few_paths";
        case PositionStatus::Degenerate:
            return "degenerate";
        case PositionStatus::OutOfCoverage:
            return "out_of_coverage";
        }
        return "unknown";
    }

    PositionEstimate estimate_position(const PathParameterSet &params, const Pose2D &bs, const LocateConfig &cfg)
    {
        PositionEstimate out;
        if (params.size() < 2)
            return out;

        std::vector<std::size_t> order(params.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return params[a].delay_s < params[b].delay_s; });
        const Path &p0 = params[order[0]];
        const Path &p1 = params[order[1]];
        out.used_paths = {order[0], order[1]};

        const double dtau = p1.delay_s - p0.delay_s;
        const double dth = std::abs(wrap_angle(p1.aoa_rad - p0.aoa_rad));
        const double dph = std::abs(wrap_angle(p1.aod_rad - p0.aod_rad));
        const double s = std::sin(dth + dph);
        const double den = std::sin(dth) + std::sin(dph) - s;

        out.status = PositionStatus::Degenerate;
        if (std::abs(den) < kMinLawOfSinesDenominator)
            return out;
        const double d0 = cfg.speed_of_light * dtau * s / den;
        if (!std::isfinite(d0) || d0 <= 0.0)
            return out;

        const double phi = p0.aoa_rad + bs.orientation();
        out.d0_m = d0;
        out.position = bs.position() + d0 * Vec2(std::cos(phi), std::sin(phi));
        if (!out.position.allFinite())
            return out;
        out.status = (cfg.coverage_radius_m > 0.0 && d0 > cfg.coverage_radius_m) ? PositionStatus::OutOfCoverage
                                                                                  : PositionStatus::Valid;
        return out;
    }

    PositionEstimate estimate_position(const EstimationResult &est, const Pose2D &bs, const LocateConfig &cfg)
    {
        return estimate_position(est.to_params(), bs, cfg);
    }

    BeamSelection select_beam_pair(const Tensor3 &y)
    {
        BeamSelection best;
        double best_e = -1.0;
        for (std::size_t m = 0; m < y.dim_m(); ++m)
            for (std::size_t s = 0; s < y.dim_s(); ++s)
            {
                double e = 0.0;
                for (const cd &v : y.fiber(m, s))
                    e += std::norm(v);
                if (e > best_e)
                {
                    best_e = e;
                    best = {m, s};
                }
            }
        return best;
    }

    double rate_from_snr(std::span<const double> snr, double spacing_hz)
    {
        double r = 0.0;
        for (double x : snr)
            r += spacing_hz * std::log2(1.0 + x);
        return r;
    }

    namespace
    {
        double snr_of(double gamma, const SystemConfig &cfg)
        {
            if (gamma == 0.0)
                return 0.0;
            if (cfg.noise_psd_w_per_hz == 0.0)
                return std::numeric_limits<double>::infinity();
            return gamma * cfg.symbol_energy() / cfg.noise_psd_w_per_hz;
        }
    } // namespace

    RateReport achievable_rate(const PathParameterSet &true_params, const BeamSelection &sel, const Codebooks &books,
                               const SystemConfig &cfg)
    {
        RateReport rep;
        rep.per_subcarrier_snr.assign(cfg.n_subcarriers, 0.0);
        if (true_params.empty())
            return rep;
        if (sel.combiner >= cfg.n_combiners || sel.precoder >= cfg.n_precoders)
            throw DimensionMismatch("achievable_rate: beam index out of range");
        const FactorMatrices f = factor_matrices(true_params, books, cfg);
        const auto m = static_cast<Eigen::Index>(sel.combiner);
        const auto s = static_cast<Eigen::Index>(sel.precoder);
        const CVec coef = true_params.gains().cwiseProduct(f.B.row(m).transpose()).cwiseProduct(f.C.row(s).transpose());
        const CVec h = f.D * coef;
        for (std::size_t k = 0; k < cfg.n_subcarriers; ++k)
            rep.per_subcarrier_snr[k] = snr_of(std::norm(h(static_cast<Eigen::Index>(k))), cfg);
        rep.rate_bps = rate_from_snr(rep.per_subcarrier_snr, cfg.subcarrier_spacing_hz);
        return rep;
    }

    RateReport perfect_csi_rate(const PathParameterSet &true_params, const SystemConfig &cfg)
    {
        RateReport rep;
        rep.per_subcarrier_snr.assign(cfg.n_subcarriers, 0.0);
        if (true_params.empty())
            return rep;
        const auto L = static_cast<Eigen::Index>(true_params.size());
        CMat ar(static_cast<Eigen::Index>(cfg.n_rx), L), at(static_cast<Eigen::Index>(cfg.n_tx), L);
        for (Eigen::Index l = 0; l < L; ++l)
        {
            ar.col(l) = ula_steering(cfg.n_rx, true_params[static_cast<std::size_t>(l)].aoa_rad);
            at.col(l) = ula_steering(cfg.n_tx, true_params[static_cast<std::size_t>(l)].aod_rad);
        }
        const CVec g = true_params.gains();
        for (std::size_t k = 0; k < cfg.n_subcarriers; ++k)
        {
            CVec w(L);
            for (Eigen::Index l = 0; l < L; ++l)
                w(l) = g(l) * std::polar(1.0, -2.0 * kPi * static_cast<double>(k) * cfg.subcarrier_spacing_hz *
                                                  true_params[static_cast<std::size_t>(l)].delay_s);
            const CMat hk = ar * w.asDiagonal() * at.transpose();
            const Eigen::JacobiSVD<CMat> svd(hk);
            const double smax = svd.singularValues()(0);
            rep.per_subcarrier_snr[k] = snr_of(smax * smax, cfg);
        }
        rep.rate_bps = rate_from_snr(rep.per_subcarrier_snr, cfg.subcarrier_spacing_hz);
        return rep;
    }

    void HeatmapGridSpec::validate() const
    {
        if (!(radius_m > 0.0) || !(step_m > 0.0))
            throw ConfigError("heatmap grid: radius and step must be positive");
        if (!(max_angle_rad >= min_angle_rad))
            throw ConfigError("heatmap grid: max angle below min angle");
    }

    std::vector<Vec2> heatmap_grid(const HeatmapGridSpec &spec, const Pose2D &bs)
    {
        spec.validate();
        std::vector<Vec2> cells;
        const auto n = static_cast<long>(std::floor(spec.radius_m / spec.step_m + 1e-9));
        for (long ix = -n; ix <= n; ++ix)
            for (long iy = -n; iy <= n; ++iy)
            {
                const Vec2 off(static_cast<double>(ix) * spec.step_m, static_cast<double>(iy) * spec.step_m);
                const double r = off.norm();
                if (!(r > 0.0) || r > spec.radius_m * (1.0 + 1e-12))
                    continue;
                const double ang = wrap_angle(std::atan2(off.y(), off.x()) - bs.orientation());
                if (ang < spec.min_angle_rad - 1e-12 || ang > spec.max_angle_rad + 1e-12)
                    continue;
                cells.push_back(bs.position() + off);
            }
        return cells;
    }

    ScenarioGeometry translated_target(const ScenarioGeometry &truth, const Vec2 &position)
    {
        ScenarioGeometry t = truth;
        const Vec2 shift = position - truth.ue.position();
        t.ue = Pose2D(position, truth.ue.orientation());
        for (Vec2 &sp : t.scatter_points)
            sp += shift;
        return t;
    }

    std::vector<double> rate_heatmap(const ScenarioGeometry &truth, const PathParameterSet &true_params,
                                     const std::vector<Vec2> &candidates, const Codebooks &books,
                                     const SystemConfig &cfg, std::uint64_t seed, std::size_t threads)
    {
        std::vector<double> rates(candidates.size(), 0.0);
        const Tensor3 h = channel_tensor(true_params, books, cfg);
        const CVec lambda = true_params.gains();
        parallel_for(candidates.size(), threads, [&](std::size_t i)
        {
            const SpoofTarget target = SpoofTarget::from_geometry(translated_target(truth, candidates[i]), lambda);
            const PilotTensor x = design_full_pilot_tensor(true_params, target, books, cfg);
            std::mt19937_64 rng = TrialRng(seed, i).stream(Stream::Noise);
            const ReceivedTensor y = synthesize_received(h, x, cfg, rng);
            rates[i] = achievable_rate(true_params, select_beam_pair(y.entries), books, cfg).rate_bps;
        });
        return rates;
    }

    void write_position_csv_header(std::ostream &os)
    {
        os << "trial_id,x_m,y_m,d0_m,valid\n";
    }

    void write_position_csv_row(std::ostream &os, std::size_t trial_id, const PositionEstimate &p)
    {
        const auto old = os.precision(17);
        os << trial_id << ',' << p.position.x() << ',' << p.position.y() << ',' << p.d0_m << ',' << (p.valid() ? 1 : 0)
           << '\n';
        os.precision(old);
    }

    void write_heatmap_csv(std::ostream &os, const std::vector<Vec2> &cells, const std::vector<double> &rates)
    {
        if (cells.size() != rates.size())
            throw DimensionMismatch("write_heatmap_csv: cell and rate counts differ");
        const auto old = os.precision(17);
        os << "x_m,y_m,rate_bps\n";
        for (std::size_t i = 0; i < cells.size(); ++i)
            os << cells[i].x() << ',' << cells[i].y() << ',' << rates[i] << '\n';
        os.precision(old);
    }
} // namespace pilotspoof
