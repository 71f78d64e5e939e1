// SPDX-License-Identifier: Apache-2.0
//
// pilotspoof: pilot-level location spoofing for single-anchor mmWave positioning
// ------------------------------------------------------------------------

#include "doctest.h"
#include "fixtures.hpp"

#include <cmath>
#include <sstream>

#include "pilotspoof/locate_comm.hpp"

using namespace pilotspoof;

TEST_CASE("law-of-sines localisation on exact parameters")
{
    const Pose2D bs = fixture::truth().bs;
    const PositionEstimate t = estimate_position(forward_params(fixture::truth()), bs);
    REQUIRE(t.valid());
    CHECK((t.position - Vec2(10.0, 5.0)).norm() < 1e-9);
    CHECK(t.d0_m == doctest::Approx(std::hypot(10.0, 5.0)));
    CHECK(t.used_paths == std::pair<std::size_t, std::size_t>{0, 1});

    const PositionEstimate s = estimate_position(forward_params(fixture::spoof()), bs);
    REQUIRE(s.valid());
    CHECK((s.position - Vec2(30.0, -20.0)).norm() < 1e-9);
    CHECK((s.position - t.position).norm() == doctest::Approx(32.0156).epsilon(1e-5));
}

TEST_CASE("clock offset and AoD shift invariance")
{
    const Pose2D bs = fixture::truth().bs;
    const PathParameterSet p = forward_params(fixture::truth());
    const PositionEstimate ref = estimate_position(p, bs);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> dt(-2e-7, 2e-7), dp(-0.3, 0.3);
    for (int i = 0; i < 50; ++i)
    {
        PathParameterSet q = p;
        const double a = dt(rng), b = dp(rng);
        for (Path &path : q.paths)
        {
            path.delay_s += a;
            path.aod_rad += b;
        }
        CHECK((estimate_position(q, bs).position - ref.position).norm() < 1e-9);
    }
}

TEST_CASE("localisation failure modes")
{
    const Pose2D bs;
    PathParameterSet one = forward_params(fixture::truth());
    one.paths.pop_back();
    CHECK(estimate_position(one, bs).status == PositionStatus::TooFewPaths);

    PathParameterSet same = forward_params(fixture::truth());
    same.paths[1].aoa_rad = same[0].aoa_rad;
    same.paths[1].aod_rad = same[0].aod_rad;
    const PositionEstimate d = estimate_position(same, bs);
    CHECK(d.status == PositionStatus::Degenerate);
    CHECK(!d.valid());
    CHECK(std::isnan(d.position.x()));

    LocateConfig tight;
    tight.coverage_radius_m = 5.0;
    CHECK(estimate_position(forward_params(fixture::truth()), bs, tight).status == PositionStatus::OutOfCoverage);
    CHECK(std::string(to_string(PositionStatus::OutOfCoverage)).size() > 0);
}

TEST_CASE("beam selection")
{
    const SystemConfig cfg = fixture::system(16);
    const Codebooks books = build_codebooks(cfg);
    PathParameterSet p;
    p.paths = {Path{3e-8, 0.31, -0.47, cd(0.2, 0.1)}};
    Tensor3 h = channel_tensor(p, books, cfg);
    const BeamSelection sel = select_beam_pair(h);
    // Exhaustive oracle on |b[m]| |c[s]|.
    const FactorMatrices f = factor_matrices(p, books, cfg);
    Eigen::Index bm = 0, bs = 0;
    f.B.col(0).cwiseAbs().maxCoeff(&bm);
    f.C.col(0).cwiseAbs().maxCoeff(&bs);
    CHECK(sel.combiner == static_cast<std::size_t>(bm));
    CHECK(sel.precoder == static_cast<std::size_t>(bs));

    h *= cd(1e5, 0.0);
    const BeamSelection scaled = select_beam_pair(h);
    CHECK(scaled.combiner == sel.combiner);
    CHECK(scaled.precoder == sel.precoder);

    const BeamSelection zero = select_beam_pair(Tensor3(4, 3, 2));
    CHECK(zero.combiner == 0);
    CHECK(zero.precoder == 0);
}

TEST_CASE("achievable rate")
{
    SystemConfig cfg = fixture::system(64);
    const Codebooks books = build_codebooks(cfg);
    PathParameterSet p = fixture::truth_params();
    const BeamSelection sel = select_beam_pair(channel_tensor(p, books, cfg));

    const RateReport r = achievable_rate(p, sel, books, cfg);
    REQUIRE(r.per_subcarrier_snr.size() == 64);
    CHECK(r.rate_bps > 0.0);
    double recomputed = 0.0;
    for (double s : r.per_subcarrier_snr)
        recomputed += cfg.subcarrier_spacing_hz * std::log2(1.0 + s);
    CHECK(recomputed == doctest::Approx(r.rate_bps).epsilon(1e-12));
    CHECK(rate_from_snr(r.per_subcarrier_snr, cfg.subcarrier_spacing_hz) == doctest::Approx(r.rate_bps).epsilon(1e-12));

    PathParameterSet silent = p;
    silent.set_gains(CVec::Zero(2));
    CHECK(achievable_rate(silent, sel, books, cfg).rate_bps == 0.0);

    double last = 0.0;
    for (double dbm : {15.0, 25.0, 35.0, 45.0})
    {
        cfg.tx_power_w = dbm_to_watt(dbm);
        const double rate = achievable_rate(p, sel, books, cfg).rate_bps;
        CHECK(rate > last);
        last = rate;
    }
}

TEST_CASE("perfect CSI bound dominates codebook rate")
{
    SystemConfig cfg = fixture::system(32);
    const Codebooks books = build_codebooks(cfg);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> ang(-1.3, 1.3), del(1e-8, 3e-7);
    for (int t = 0; t < 100; ++t)
    {
        PathParameterSet p;
        const CVec g = 1e-4 * fixture::random_cvec(3, rng);
        for (int l = 0; l < 3; ++l)
        {
            const double d = del(rng);
            const double a = ang(rng);
            p.paths.push_back(Path{d, a, ang(rng), g(l)});
        }
        const BeamSelection sel = select_beam_pair(channel_tensor(p, books, cfg));
        const RateReport code = achievable_rate(p, sel, books, cfg);
        const RateReport best = perfect_csi_rate(p, cfg);
        CHECK(best.rate_bps >= code.rate_bps * (1.0 - 1e-12));
        for (std::size_t k = 0; k < 32; ++k)
            CHECK(best.per_subcarrier_snr[k] >= code.per_subcarrier_snr[k] * (1.0 - 1e-9));
    }
}

TEST_CASE("heatmap grid and spoof-at-truth cell")
{
    HeatmapGridSpec spec;
    const Pose2D bs;
    const std::vector<Vec2> cells = heatmap_grid(spec, bs);
    std::size_t count = 0;
    for (int x = -50; x <= 50; ++x)
        for (int y = -50; y <= 50; ++y)
        {
            const double r = std::hypot(x, y);
            if (r > 0.0 && r <= 50.0 && std::abs(std::atan2(y, x)) <= kPi / 3.0 + 1e-12)
                ++count;
        }
    CHECK(cells.size() == count);

    const SystemConfig cfg = fixture::system(64);
    const Codebooks books = build_codebooks(cfg);
    const PathParameterSet p = fixture::truth_params();
    const std::vector<double> rates =
        rate_heatmap(fixture::truth(), p, {Vec2(10.0, 5.0), Vec2(30.0, -20.0)}, books, cfg, 1);
    const double ref = achievable_rate(p, select_beam_pair(channel_tensor(p, books, cfg)), books, cfg).rate_bps;
    CHECK(std::abs(rates[0] - ref) <= 1e-12 * ref);
    CHECK(rates[1] <= ref);

    const ScenarioGeometry moved = translated_target(fixture::truth(), Vec2(30.0, 15.0));
    CHECK((moved.scatter_points[0] - moved.ue.position()).isApprox(Vec2(-3.0, -20.0)));

    // thread count does not change the result
    const std::vector<double> again =
        rate_heatmap(fixture::truth(), p, {Vec2(10.0, 5.0), Vec2(30.0, -20.0)}, books, cfg, 1, 2);
    CHECK(again == rates);

    HeatmapGridSpec bad;
    bad.step_m = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("position CSV")
{
    std::ostringstream os;
    write_position_csv_header(os);
    PositionEstimate p;
    write_position_csv_row(os, 2, p);
    CHECK(os.str().rfind("trial_id,x_m,y_m,d0_m,valid\n2,", 0) == 0);
}
