// SPDX-License-Identifier: Apache-2.0
//
// pilotspoof: pilot-level location spoofing for single-anchor mmWave positioning
// ------------------------------------------------------------------------

#include "pilotspoof/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "pilotspoof/parallel.hpp"
#include "pilotspoof/spoof_oracle.hpp"

namespace pilotspoof
{
    const char *to_string(Method m)
    {
        switch (m)
        {
        case Method::NoSpoof:
            return "no_spoof";
        case Method::Oht:
            return "oht";
        case Method::Bht:
            return "bht";
        case Method::AobHt:
            return "aobht";
        case Method::Dais:
            return "dais";
        }
        return "unknown";
    }

    Method parse_method(const std::string &tag)
    {
        for (Method m : {Method::NoSpoof, Method::Oht, Method::Bht, Method::AobHt, Method::Dais})
            if (tag == to_string(m))
                return m;
        throw ConfigError("unknown method '" + tag + "' (expected one of: no_spoof, oht, bht, aobht, dais)");
    }

    void Experiment::rebuild_codebooks()
    {
        books = build_codebooks(system);
    }

    double Experiment::spoof_offset_m() const
    {
        return (target.ue.position() - truth.ue.position()).norm();
    }

    EstimationResult dais_baseline(const EstimationResult &est, double dtau_s, double dphi_rad)
    {
        EstimationResult out = est;
        for (EstimatedPath &p : out.paths)
        {
            p.delay_s += dtau_s;
            p.aod_rad = wrap_angle(p.aod_rad + dphi_rad);
        }
        return out;
    }

    double rmse(std::span<const double> values)
    {
        double s = 0.0;
        std::size_t n = 0;
        for (double v : values)
            if (!std::isnan(v))
            {
                s += v * v;
                ++n;
            }
        return n == 0 ? std::numeric_limits<double>::quiet_NaN() : std::sqrt(s / static_cast<double>(n));
    }

    namespace
    {
        PilotTensor design_pilot(const Experiment &exp, Method method, const PathParameterSet &true_params,
                                 const TrialRng &trng)
        {
            const SystemConfig &cfg = exp.system;
            switch (method)
            {
            case Method::NoSpoof:
            case Method::Dais:
                return PilotTensor::nominal(cfg);
            case Method::Oht:
            {
                std::mt19937_64 prng = trng.stream(Stream::Perturb);
                const ScenarioGeometry seen = perturb(exp.truth, exp.sigma_ue_m, exp.sigma_sp_m, prng);
                std::mt19937_64 grng = trng.stream(Stream::GainPhase);
                const PathParameterSet design = forward_params_with_gains(seen, exp.gain, grng);
                const SpoofTarget target = SpoofTarget::from_geometry(exp.target, design.gains());
                return design_full_pilot_tensor(design, target, exp.books, cfg);
            }
            case Method::Bht:
            case Method::AobHt:
            {
                const SpoofTarget target = SpoofTarget::from_geometry(exp.target, true_params.gains());
                BlindDesignOptions opts;
                opts.alternating = exp.alternating;
                opts.angle_only = method == Method::AobHt;
                PathParameterSet geometric = true_params;
                for (Path &p : geometric.paths)
                    p.gain = cd(0.0, 0.0);
                return design_blind_full(geometric, target, exp.books, cfg, opts).pilot;
            }
            }
            throw ConfigError("unhandled method");
        }

        PathParameterSet sorted_by_delay(PathParameterSet p)
        {
            std::stable_sort(p.paths.begin(), p.paths.end(),
                             [](const Path &a, const Path &b) { return a.delay_s < b.delay_s; });
            return p;
        }
    } // namespace

    TrialOutcome run_trial(const Experiment &exp, Method method, std::uint64_t seed, std::size_t trial_id)
    {
        TrialOutcome out;
        out.trial_id = trial_id;
        out.method = method;
        const TrialRng trng(seed, trial_id);

        std::mt19937_64 grng = trng.stream(Stream::GainPhase);
        const PathParameterSet truth = forward_params_with_gains(exp.truth, exp.gain, grng);
        const Tensor3 h = channel_tensor(truth, exp.books, exp.system);

        try
        {
            const PilotTensor x = design_pilot(exp, method, truth, trng);
            std::mt19937_64 nrng = trng.stream(Stream::Noise);
            const ReceivedTensor y = synthesize_received(h, x, exp.system, nrng);
            out.rate_bps = achievable_rate(truth, select_beam_pair(y.entries), exp.books, exp.system).rate_bps;

            EstimationResult est = flex_estimate(y.entries, exp.books, exp.system, exp.flex);
            if (method == Method::Dais)
                est = dais_baseline(est, exp.dais_dtau_s, exp.dais_dphi_rad);
            out.detected_paths = est.paths.size();
            out.position = estimate_position(est, exp.truth.bs, exp.locate);
            if (out.position.valid())
            {
                out.eps_est_m = (out.position.position - exp.truth.ue.position()).norm();
                out.eps_dev_m = (out.position.position - exp.target.ue.position()).norm();
            }

            const bool spoofing = method == Method::Oht || method == Method::Bht || method == Method::AobHt;
            const PathParameterSet desired = sorted_by_delay(forward_params(spoofing ? exp.target : exp.truth));
            for (std::size_t i = 0; i < 2 && i < est.paths.size() && i < desired.size(); ++i)
            {
                out.dev_aoa_rad[i] = std::abs(wrap_angle(est.paths[i].aoa_rad - desired[i].aoa_rad));
                out.dev_aod_rad[i] = std::abs(wrap_angle(est.paths[i].aod_rad - desired[i].aod_rad));
            }
            if (est.paths.size() >= 2 && desired.size() >= 2)
                out.dev_tdoa_s = std::abs((est.paths[1].delay_s - est.paths[0].delay_s) -
                                          (desired[1].delay_s - desired[0].delay_s));
        }
        catch (const NumericalDegeneracy &e)
        {
            out.error = e.what();
        }
        catch (const DegenerateGeometry &e)
        {
            out.error = e.what();
        }
        return out;
    }

    const SweepPoint &SweepReport::at(double axis, Method m) const
    {
        for (const SweepPoint &p : points)
            if (p.axis == axis && p.method == m)
                return p;
        throw ConfigError("sweep report has no point for the requested axis value and method");
    }

    namespace
    {
        SweepPoint summarize(double axis, Method m, const std::vector<TrialOutcome> &outs)
        {
            SweepPoint p;
            p.axis = axis;
            p.method = m;
            p.total = outs.size();
            std::vector<double> est, dev, aoa0, aoa1, aod0, aod1, tdoa;
            double rate = 0.0;
            for (const TrialOutcome &o : outs)
            {
                rate += o.rate_bps;
                if (!o.valid())
                    continue;
                ++p.valid;
                est.push_back(o.eps_est_m);
                dev.push_back(o.eps_dev_m);
                aoa0.push_back(o.dev_aoa_rad[0]);
                aoa1.push_back(o.dev_aoa_rad[1]);
                aod0.push_back(o.dev_aod_rad[0]);
                aod1.push_back(o.dev_aod_rad[1]);
                tdoa.push_back(o.dev_tdoa_s);
            }
            p.rmse_eps_est_m = rmse(est);
            p.rmse_eps_dev_m = rmse(dev);
            p.rmse_aoa_rad[0] = rmse(aoa0);
            p.rmse_aoa_rad[1] = rmse(aoa1);
            p.rmse_aod_rad[0] = rmse(aod0);
            p.rmse_aod_rad[1] = rmse(aod1);
            p.rmse_tdoa_s = rmse(tdoa);
            p.mean_rate_bps = outs.empty() ? 0.0 : rate / static_cast<double>(outs.size());
            return p;
        }

        struct Job
        {
            std::size_t point;
            std::size_t trial;
        };

        SweepReport run_grid(const std::vector<Experiment> &exps, const std::vector<double> &axis,
                             const std::vector<Method> &methods, std::size_t trials, std::uint64_t seed,
                             std::size_t threads)
        {
            const std::size_t n_points = axis.size() * methods.size();
            std::vector<std::vector<TrialOutcome>> outs(n_points, std::vector<TrialOutcome>(trials));
            parallel_for(n_points * trials, threads, [&](std::size_t j)
            {
                const std::size_t point = j / trials;
                const std::size_t trial = j % trials;
                const std::size_t ai = point / methods.size();
                outs[point][trial] = run_trial(exps[ai], methods[point % methods.size()], seed, trial);
            });

            SweepReport rep;
            rep.eps_off_m = exps.empty() ? 0.0 : exps.front().spoof_offset_m();
            for (std::size_t point = 0; point < n_points; ++point)
            {
                const double a = axis[point / methods.size()];
                rep.points.push_back(summarize(a, methods[point % methods.size()], outs[point]));
                for (const TrialOutcome &o : outs[point])
                    rep.trials.push_back({a, o});
            }
            return rep;
        }
    } // namespace

    SweepReport power_sweep(const Experiment &exp, const std::vector<Method> &methods,
                            const std::vector<double> &tx_power_dbm, std::size_t trials, std::uint64_t seed,
                            std::size_t threads)
    {
        if (trials < 1)
            throw ConfigError("sweep: at least one trial required");
        std::vector<Experiment> exps;
        for (double p : tx_power_dbm)
        {
            Experiment e = exp;
            e.system.tx_power_w = dbm_to_watt(p);
            e.gain.tx_power_w = e.system.tx_power_w;
            exps.push_back(std::move(e));
        }
        SweepReport rep = run_grid(exps, tx_power_dbm, methods, trials, seed, threads);
        rep.axis_name = "tx_power_dbm";
        return rep;
    }

    SweepReport measurement_deviation_sweep(const Experiment &exp, const std::vector<Method> &methods,
                                            const std::vector<double> &tx_power_dbm, std::size_t trials,
                                            std::uint64_t seed, std::size_t threads)
    {
        return power_sweep(exp, methods, tx_power_dbm, trials, seed, threads);
    }

    SweepReport uncertainty_sweep(const Experiment &exp, const std::vector<double> &sigma_ue_m, double sigma_sp_m,
                                  std::size_t trials, std::uint64_t seed, std::size_t threads)
    {
        if (trials < 1)
            throw ConfigError("sweep: at least one trial required");
        std::vector<Experiment> exps;
        for (double s : sigma_ue_m)
        {
            if (!(s >= 0.0) || !(sigma_sp_m >= 0.0))
                throw ConfigError("uncertainty sweep: sigmas must be nonnegative");
            Experiment e = exp;
            e.sigma_ue_m = s;
            e.sigma_sp_m = sigma_sp_m;
            exps.push_back(std::move(e));
        }
        SweepReport rep = run_grid(exps, sigma_ue_m, {Method::Oht}, trials, seed, threads);
        rep.axis_name = "sigma_ue_m";
        return rep;
    }

    void write_trials_csv(std::ostream &os, const SweepReport &rep)
    {
        const auto old = os.precision(17);
        os << rep.axis_name << ",trial_id,method,valid,status,x_m,y_m,d0_m,eps_est_m,eps_dev_m,dev_aoa_los_rad,"
           << "dev_aoa_nlos_rad,dev_aod_los_rad,dev_aod_nlos_rad,dev_tdoa_s,rate_bps,detected_paths\n";
        for (const SweepRecord &r : rep.trials)
        {
            const TrialOutcome &o = r.outcome;
            os << r.axis << ',' << o.trial_id << ',' << to_string(o.method) << ',' << (o.valid() ? 1 : 0) << ','
               << (o.error.empty() ? to_string(o.position.status) : "numerical_error") << ','
               << o.position.position.x() << ',' << o.position.position.y() << ',' << o.position.d0_m << ','
               << o.eps_est_m << ',' << o.eps_dev_m << ',' << o.dev_aoa_rad[0] << ',' << o.dev_aoa_rad[1] << ','
               << o.dev_aod_rad[0] << ',' << o.dev_aod_rad[1] << ',' << o.dev_tdoa_s << ',' << o.rate_bps << ','
               << o.detected_paths << '\n';
        }
        os.precision(old);
    }

    void write_summary_csv(std::ostream &os, const SweepReport &rep)
    {
        const auto old = os.precision(17);
        os << rep.axis_name << ",method,total,valid,dropped,rmse_eps_est_m,rmse_eps_dev_m,rmse_aoa_los_rad,"
           << "rmse_aoa_nlos_rad,rmse_aod_los_rad,rmse_aod_nlos_rad,rmse_tdoa_s,mean_rate_bps,eps_off_m\n";
        for (const SweepPoint &p : rep.points)
            os << p.axis << ',' << to_string(p.method) << ',' << p.total << ',' << p.valid << ','
               << (p.total - p.valid) << ',' << p.rmse_eps_est_m << ',' << p.rmse_eps_dev_m << ','
               << p.rmse_aoa_rad[0] << ',' << p.rmse_aoa_rad[1] << ',' << p.rmse_aod_rad[0] << ','
               << p.rmse_aod_rad[1] << ',' << p.rmse_tdoa_s << ',' << p.mean_rate_bps << ',' << rep.eps_off_m
               << '\n';
        os.precision(old);
    }
} // namespace pilotspoof
