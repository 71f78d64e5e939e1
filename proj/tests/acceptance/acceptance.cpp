// SPDX-License-Identifier: Apache-2.0
//
// pilotspoof: pilot-level location spoofing for single-anchor mmWave positioning
// ------------------------------------------------------------------------
//
// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   pilotspoof_acceptance [threads] [--known-fail N]...
//
// A criterion named by --known-fail still prints its FAIL line but does not
// set the exit status.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "pilotspoof/estimate.hpp"
#include "pilotspoof/evalharness.hpp"
#include "pilotspoof/locate_comm.hpp"
#include "pilotspoof/spoof_blind.hpp"
#include "pilotspoof/spoof_oracle.hpp"

using namespace pilotspoof;

namespace
{
    constexpr std::uint64_t kSeed = 1;
    constexpr std::size_t kTrials = 50;
    constexpr double kEpsOff = 32.0156;

    std::size_t g_threads = 1;

    struct Verdict
    {
        bool pass = false;
        std::string detail;
    };

    std::string fmt(const char *f, double a)
    {
        char buf[128];
        std::snprintf(buf, sizeof buf, f, a);
        return buf;
    }

    Experiment desk_experiment()
    {
        Experiment e;
        e.truth = fixture::truth();
        e.target = fixture::spoof();
        e.gain = fixture::gain();
        e.system = fixture::system(256);
        e.rebuild_codebooks();
        return e;
    }

    // Shared across criteria 3-5.
    const SweepReport &power_report()
    {
        static const SweepReport rep = power_sweep(desk_experiment(), {Method::NoSpoof, Method::Oht, Method::Dais},
                                                   {25.0, 35.0, 45.0}, kTrials, kSeed, g_threads);
        return rep;
    }

    Verdict c1_geometry()
    {
        const PathParameterSet t = forward_params(fixture::truth());
        const PathParameterSet s = forward_params(fixture::spoof());
        const double want[8] = {11.18, 36.78, 0.46, -1.13, 36.06, 55.37, -0.59, -0.24};
        const double got[8] = {t[0].delay_s * kSpeedOfLight, t[1].delay_s * kSpeedOfLight, t[0].aoa_rad, t[1].aoa_rad,
                               s[0].delay_s * kSpeedOfLight, s[1].delay_s * kSpeedOfLight, s[0].aoa_rad, s[1].aoa_rad};
        double worst = 0.0;
        for (int i = 0; i < 8; ++i)
            worst = std::max(worst, std::abs(got[i] - want[i]));
        return {worst <= 0.01, fmt("max |fixture error| = %.4f", worst)};
    }

    Verdict c2_oracle()
    {
        const SystemConfig cfg = fixture::system(256);
        const Codebooks books = build_codebooks(cfg);
        const PathParameterSet p = fixture::truth_params();
        const SpoofTarget target = SpoofTarget::from_geometry(fixture::spoof(), p.gains());
        double scale = 0.0;
        const PilotTensor x = design_full_pilot_tensor(p, target, books, cfg, &scale);
        PathParameterSet tgt = target.target_params;
        tgt.set_gains(scale * p.gains());
        const Tensor3 hbar = channel_tensor(tgt, books, cfg);
        const Tensor3 spoofed = hadamard(channel_tensor(p, books, cfg), x.entries);
        double worst = 0.0;
        for (std::size_t i = 0; i < hbar.size(); ++i)
            worst = std::max(worst, std::abs(spoofed.flat()[i] - hbar.flat()[i]) / std::abs(hbar.flat()[i]));
        const double rel = spoof_residual(x.entries, p, tgt, books, cfg).value / hbar.energy();
        return {rel < 1e-9 && worst < 1e-10,
                fmt("residual/||Hbar||^2 = %.2e", rel) + fmt(", entrywise rel = %.2e", worst)};
    }

    Verdict c3_oht()
    {
        const SweepPoint &o = power_report().at(35.0, Method::Oht);
        const double est_rel = std::abs(o.rmse_eps_est_m - kEpsOff) / kEpsOff;
        return {o.rmse_eps_dev_m < 0.5 && est_rel < 0.02 && o.valid > 0,
                fmt("RMSE eps_dev = %.4f m", o.rmse_eps_dev_m) + fmt(", RMSE eps_est = %.4f m", o.rmse_eps_est_m) +
                    fmt(" (%.3f%% off)", 100.0 * est_rel) + fmt(", valid %.0f/50", static_cast<double>(o.valid))};
    }

    Verdict c4_no_spoof()
    {
        const SweepReport &r = power_report();
        const double a = r.at(25.0, Method::NoSpoof).rmse_eps_est_m;
        const double b = r.at(35.0, Method::NoSpoof).rmse_eps_est_m;
        const double c = r.at(45.0, Method::NoSpoof).rmse_eps_est_m;
        return {b < 0.2 && a > b && b > c, fmt("RMSE 25/35/45 dBm = %.4f", a) + fmt(" / %.4f", b) + fmt(" / %.5f m", c)};
    }

    Verdict c5_dais()
    {
        Experiment e = desk_experiment();
        e.system.noise_psd_w_per_hz = 0.0;
        const TrialOutcome ns = run_trial(e, Method::NoSpoof, kSeed, 0);
        const TrialOutcome da = run_trial(e, Method::Dais, kSeed, 0);
        const double shift = (ns.position.position - da.position.position).norm();

        const SweepReport &r = power_report();
        double worst = 0.0;
        bool within = true;
        for (double p : {25.0, 35.0, 45.0})
        {
            const double x = r.at(p, Method::NoSpoof).rmse_eps_est_m;
            const double y = r.at(p, Method::Dais).rmse_eps_est_m;
            const double se = x / std::sqrt(2.0 * static_cast<double>(kTrials));
            worst = std::max(worst, std::abs(x - y) / se);
            within = within && std::abs(x - y) <= 2.0 * se;
        }
        return {ns.valid() && da.valid() && shift < 1e-9 && within,
                fmt("noise-free |p_dais - p| = %.2e m", shift) + fmt(", max |RMSE diff| = %.2e standard errors", worst)};
    }

    Verdict c6_blind_single()
    {
        const SystemConfig cfg = fixture::system(16);
        const Codebooks books = build_codebooks(cfg);
        const PathParameterSet p = forward_params(fixture::truth());
        const PathParameterSet t = forward_params(fixture::spoof());
        const CVec b = books.combiners.adjoint() * ula_steering(24, p[0].aoa_rad);
        const CVec bb = books.combiners.adjoint() * ula_steering(24, t[0].aoa_rad);
        const CVec c = books.precoders.adjoint() * ula_steering(16, p[0].aod_rad);
        const CVec cb = books.precoders.adjoint() * ula_steering(16, t[0].aod_rad);
        const CVec xb = blind_single_path_pilot(b, bb);
        const CVec xc = blind_single_path_pilot(c, cb);
        const CMat xj = design_joint_angle_pilot(b, c, CVec::Ones(1), bb, cb, CVec::Ones(1));

        const std::vector<double> grid = uniform_grid(-kPi / 2, kPi / 2, 1e-3);
        const Dictionary da = aoa_dictionary(books), dd = aod_dictionary(books);
        auto hit = [&](const Spectrum &sp, double want) { return std::abs(grid[sp.argmax()] - want) <= 0.5e-3 + 1e-12; };

        std::mt19937_64 rng(kSeed);
        int aoa = 0, aod = 0, joint = 0;
        for (int i = 0; i < 100; ++i)
        {
            const cd alpha = fixture::random_cvec(1, rng)(0) * 1e-4;
            aoa += hit(mf_spectrum(CVec(xb.cwiseProduct(alpha * b)), da, grid), t[0].aoa_rad);
            aod += hit(mf_spectrum(CVec(xc.cwiseProduct(alpha * c)), dd, grid), t[0].aod_rad);
            const CMat y = xj.cwiseProduct(alpha * b * c.transpose());
            joint += hit(mf_spectrum(y, da, grid), t[0].aoa_rad) && hit(mf_spectrum(CMat(y.transpose()), dd, grid), t[0].aod_rad);
        }
        return {aoa == 100 && aod == 100 && joint == 100,
                "AoA " + std::to_string(aoa) + "/100, AoD " + std::to_string(aod) + "/100, joint " +
                    std::to_string(joint) + "/100"};
    }

    Verdict c7_blind_multi()
    {
        const Codebooks books = build_codebooks(fixture::system(16));
        std::mt19937_64 rng(kSeed);
        std::uniform_real_distribution<double> u(-1.2, 1.2);
        auto steer = [&](std::size_t n)
        {
            CMat m(static_cast<Eigen::Index>(n), 2);
            m.col(0) = ula_steering(n, u(rng));
            m.col(1) = ula_steering(n, u(rng));
            return m;
        };
        int monotone = 0;
        for (int i = 0; i < 100; ++i)
        {
            const CMat mt = books.combiners.adjoint() * steer(24);
            const CMat ms = books.combiners.adjoint() * steer(24);
            const AlternatingResult r = blind_multipath_angle_pilot(mt, ms);
            bool ok = true;
            for (std::size_t k = 1; k < r.residual_history.size(); ++k)
                ok = ok && r.residual_history[k] <= r.residual_history[k - 1] * (1.0 + 1e-12);
            monotone += ok;
        }
        int big_positive = 0, small_exact = 0;
        double min_res = 1e300;
        for (int i = 0; i < 20; ++i)
        {
            const ImpossibilityCertificate big = blind_impossibility_certificate(steer(24), steer(24));
            big_positive += !big.exact_generic && big.alternating_residual > 0.0 && big.min_singular_value > 1e-8;
            min_res = std::min(min_res, big.alternating_residual);
            const ImpossibilityCertificate small = blind_impossibility_certificate(steer(3), steer(3));
            small_exact += small.exact_generic && small.min_singular_value < 1e-10;
        }
        return {monotone == 100 && big_positive == 20 && small_exact == 20,
                "non-increasing " + std::to_string(monotone) + "/100, M=24 residual > 0 " + std::to_string(big_positive) +
                    "/20" + fmt(" (min rel %.3f)", min_res) + ", M=3 exact " + std::to_string(small_exact) + "/20"};
    }

    Verdict c8_fake_paths()
    {
        // full-scale K; at 256 two injected delays share a bin
        const SystemConfig cfg = fixture::system(3300);
        const Codebooks books = build_codebooks(cfg);
        const PathParameterSet p = fixture::truth_params();
        const PathParameterSet t = forward_params(fixture::spoof());
        const FakePathPlan plan = anchor_delay_plan(p, t);
        const CVec xd = fake_path_pilot(plan, cfg.n_subcarriers, cfg.subcarrier_spacing_hz);
        const Tensor3 h = channel_tensor(p, books, cfg);
        const Tensor3 y = hadamard(h, blind_kronecker_pilot(CVec::Ones(24), CVec::Ones(16), xd).entries);

        const Spectrum sp = delay_periodogram(y, cfg);
        const double top = *std::max_element(sp.power.begin(), sp.power.end());
        std::vector<double> peaks;
        const std::size_t n = sp.power.size();
        for (std::size_t i = 0; i < n; ++i)
        {
            const double v = sp.power[i];
            if (v > 1e-8 * top && v > sp.power[(i + n - 1) % n] && v > sp.power[(i + 1) % n])
                peaks.push_back(sp.grid[i]);
        }
        std::vector<double> predicted;
        for (const Path &path : p.paths)
            for (double off : plan.delay_offsets_s)
                predicted.push_back(path.delay_s + off);
        std::sort(predicted.begin(), predicted.end());
        const double bin = cfg.delay_bin_s();
        bool placed = peaks.size() == predicted.size();
        for (std::size_t i = 0; placed && i < peaks.size(); ++i)
            placed = std::abs(peaks[i] - predicted[i]) <= bin;

        const EstimationResult est = flex_estimate(y, books, cfg);
        const double want = std::abs(t[1].delay_s - t[0].delay_s);
        const double tdoa = est.paths.size() >= 2 ? est.paths[1].delay_s - est.paths[0].delay_s : 0.0;
        const bool tdoa_ok = std::abs(tdoa - want) <= bin;

        // L_s = 1: a pure delay shift must not move the position.
        const FakePathPlan shift = FakePathPlan::equal_power({plan.delay_offsets_s[0]});
        const CVec xs = fake_path_pilot(shift, cfg.n_subcarriers, cfg.subcarrier_spacing_hz);
        const Tensor3 ys = hadamard(h, blind_kronecker_pilot(CVec::Ones(24), CVec::Ones(16), xs).entries);
        const PositionEstimate p0 = estimate_position(flex_estimate(h, books, cfg), fixture::truth().bs);
        const PositionEstimate p1 = estimate_position(flex_estimate(ys, books, cfg), fixture::truth().bs);
        const double moved = (p0.position - p1.position).norm();

        return {placed && tdoa_ok && p0.valid() && p1.valid() && moved < 1e-6,
                std::to_string(peaks.size()) + " peaks" + (placed ? " at predicted bins" : " (misplaced)") +
                    fmt(", TDoA %.3f m", tdoa * kSpeedOfLight) + fmt(" vs %.3f m", want * kSpeedOfLight) +
                    fmt(", L_s=1 shift moves p by %.1e m", moved)};
    }

    Verdict c9_rate()
    {
        const SystemConfig base = fixture::system(256);
        const Codebooks books = build_codebooks(base);
        const PathParameterSet p = fixture::truth_params();
        const BeamSelection sel = select_beam_pair(channel_tensor(p, books, base));
        bool increasing = true;
        double last = 0.0;
        for (double dbm = 15.0; dbm <= 45.0; dbm += 5.0)
        {
            SystemConfig c = base;
            c.tx_power_w = dbm_to_watt(dbm);
            const double r = achievable_rate(p, sel, books, c).rate_bps;
            increasing = increasing && r > last;
            last = r;
        }

        std::mt19937_64 rng(kSeed);
        std::uniform_real_distribution<double> ang(-1.3, 1.3), del(1e-8, 3e-7);
        int dominated = 0;
        for (int i = 0; i < 100; ++i)
        {
            PathParameterSet q;
            const CVec g = 1e-4 * fixture::random_cvec(2, rng);
            for (int l = 0; l < 2; ++l)
            {
                const double d = del(rng);
                const double a = ang(rng);
                q.paths.push_back(Path{d, a, ang(rng), g(l)});
            }
            const BeamSelection s = select_beam_pair(channel_tensor(q, books, base));
            dominated += perfect_csi_rate(q, base).rate_bps >= achievable_rate(q, s, books, base).rate_bps;
        }

        const std::vector<Vec2> cells = {Vec2(10.0, 5.0), Vec2(30.0, -20.0), Vec2(30.0, 15.0)};
        const std::vector<double> r = rate_heatmap(fixture::truth(), p, cells, books, base, kSeed, g_threads);
        const double ns = achievable_rate(p, sel, books, base).rate_bps;
        const double truth_rel = std::abs(r[0] - ns) / ns;
        const bool order = std::abs(r[2] - ns) <= 0.05 * ns && r[2] >= r[1];
        return {increasing && dominated == 100 && truth_rel <= 1e-12 && order,
                std::string("increasing in P_t: ") + (increasing ? "yes" : "no") + ", perfect CSI >= codebook " +
                    std::to_string(dominated) + "/100" + fmt(", truth cell rel diff %.1e", truth_rel) +
                    fmt(", rates no-spoof %.3e", ns) + fmt(" / loc2 %.3e", r[2]) + fmt(" / loc1 %.3e bit/s", r[1])};
    }

    Verdict c10_estimator()
    {
        const SystemConfig cfg = fixture::system(256);
        const Codebooks books = build_codebooks(cfg);
        const PathParameterSet p = fixture::truth_params();
        PathParameterSet q = p;
        for (Path &path : q.paths)
            path.delay_s += 37e-9;
        std::mt19937_64 r1(kSeed), r2(kSeed);
        const PilotTensor ones = PilotTensor::nominal(cfg);
        const EstimationResult a = flex_estimate(synthesize_received(channel_tensor(p, books, cfg), ones, cfg, r1).entries, books, cfg);
        const EstimationResult b = flex_estimate(synthesize_received(channel_tensor(q, books, cfg), ones, cfg, r2).entries, books, cfg);
        double tdoa_diff = 1e300;
        if (a.paths.size() >= 2 && b.paths.size() >= 2)
            tdoa_diff = std::abs((a.paths[1].delay_s - a.paths[0].delay_s) - (b.paths[1].delay_s - b.paths[0].delay_s)) /
                        cfg.delay_bin_s();

        CfarConfig cf;
        cf.pfa = 1e-3;
        std::mt19937_64 rng(kSeed);
        std::exponential_distribution<double> e(1.0);
        std::size_t alarms = 0;
        for (int block = 0; block < 100; ++block)
        {
            std::vector<double> noise(1000);
            for (double &v : noise)
                v = e(rng);
            alarms += cfar_detect(noise, cf).size();
        }
        const double pfa = static_cast<double>(alarms) / 1e5;

        const SystemConfig c512 = fixture::system(512);
        const Codebooks b512 = build_codebooks(c512);
        const EstimationResult rt = flex_estimate(channel_tensor(p, b512, c512), b512, c512);
        double dtau = 1e300, dang = 1e300;
        if (rt.paths.size() == 2)
        {
            dtau = dang = 0.0;
            for (std::size_t l = 0; l < 2; ++l)
            {
                dtau = std::max(dtau, std::abs(rt.paths[l].delay_s - p[l].delay_s) * kSpeedOfLight);
                dang = std::max({dang, std::abs(rt.paths[l].aoa_rad - p[l].aoa_rad), std::abs(rt.paths[l].aod_rad - p[l].aod_rad)});
            }
        }
        return {tdoa_diff < 0.01 && pfa > cf.pfa / 2 && pfa < 2 * cf.pfa && dtau < 0.05 && dang < 1e-3,
                fmt("TDoA change under clock shift %.1e bin", tdoa_diff) + fmt(", CFAR pfa %.2e (configured 1e-3)", pfa) +
                    fmt(", round trip |dtau|c %.1e m", dtau) + fmt(", |dangle| %.1e rad", dang)};
    }

    Verdict c11_uncertainty()
    {
        Experiment e = desk_experiment();
        const SweepReport r = uncertainty_sweep(e, {0.0, 0.5, 1.0}, 0.1, kTrials, kSeed, g_threads);
        bool band = true, rising = true;
        std::string detail = "eps_est/eps_dev RMSE:";
        for (std::size_t i = 0; i < r.points.size(); ++i)
        {
            const SweepPoint &pt = r.points[i];
            band = band && pt.rmse_eps_est_m >= 0.8 * kEpsOff && pt.rmse_eps_est_m <= 1.5 * kEpsOff;
            if (i > 0)
                rising = rising && pt.rmse_eps_dev_m > r.points[i - 1].rmse_eps_dev_m;
            detail += fmt(" s=%.1f:", pt.axis) + fmt(" %.3f", pt.rmse_eps_est_m) + fmt("/%.3f m", pt.rmse_eps_dev_m);
        }
        return {band && rising, detail};
    }
} // namespace

int main(int argc, char **argv)
{
    std::vector<int> known;
    for (int i = 1; i < argc; ++i)
    {
        const std::string a = argv[i];
        if (a == "--known-fail" && i + 1 < argc)
            known.push_back(std::atoi(argv[++i]));
        else
            g_threads = static_cast<std::size_t>(std::strtoul(argv[i], nullptr, 10));
    }

    struct Item
    {
        int id;
        double limit_s; // <= 0: no limit
        std::function<Verdict()> run;
    };
    const std::vector<Item> items = {
        {1, 1.0, c1_geometry},   {2, 5.0, c2_oracle},   {3, 300.0, c3_oht},       {4, 0.0, c4_no_spoof},
        {5, 0.0, c5_dais},       {6, 0.0, c6_blind_single}, {7, 0.0, c7_blind_multi}, {8, 0.0, c8_fake_paths},
        {9, 0.0, c9_rate},       {10, 0.0, c10_estimator},  {11, 0.0, c11_uncertainty},
    };

    int failed = 0, excused = 0;
    for (const Item &it : items)
    {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try
        {
            v = it.run();
        }
        catch (const std::exception &ex)
        {
            v = {false, std::string("exception: ") + ex.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (it.limit_s > 0.0 && secs >= it.limit_s)
        {
            v.pass = false;
            v.detail += fmt(" [over the %.0f s limit]", it.limit_s);
        }
        const bool is_known = std::find(known.begin(), known.end(), it.id) != known.end();
        if (!v.pass)
            ++(is_known ? excused : failed);
        std::printf("criterion %2d: %s  %s (%.2f s)%s\n", it.id, v.pass ? "PASS" : "FAIL", v.detail.c_str(), secs,
                    !v.pass && is_known ? " [known failure]" : "");
        std::fflush(stdout);
    }
    if (excused > 0)
        std::printf("%d known failure(s) not counted in the exit status\n", excused);
    return failed == 0 ? 0 : 1;
}
