// SPDX-License-Identifier: Apache-2.0
//
// pilotspoof: pilot-level location spoofing for single-anchor mmWave positioning
// ------------------------------------------------------------------------

#include "doctest.h"
#include "fixtures.hpp"

#include <cmath>
#include <sstream>

using namespace pilotspoof;

namespace
{
    cd expj(double ph) { return {std::cos(ph), std::sin(ph)}; }

    // w_m^H a_R(theta) * a_T(phi)^T conj(f_s) * e^{-j 2 pi k df tau}, element by element.
    cd scalar_model(const PathParameterSet &p, const Codebooks &books, const SystemConfig &cfg, Eigen::Index m,
                    Eigen::Index s, std::size_t k)
    {
        cd acc(0.0, 0.0);
        for (const Path &path : p.paths)
        {
            cd bm(0.0, 0.0), cs(0.0, 0.0);
            for (Eigen::Index n = 0; n < books.combiners.rows(); ++n)
                bm += std::conj(books.combiners(n, m)) * expj(kPi * n * std::sin(path.aoa_rad));
            for (Eigen::Index n = 0; n < books.precoders.rows(); ++n)
                cs += expj(kPi * n * std::sin(path.aod_rad)) * std::conj(books.precoders(n, s));
            acc += path.gain * bm * cs *
                   expj(-2.0 * kPi * static_cast<double>(k) * cfg.subcarrier_spacing_hz * path.delay_s);
        }
        return std::sqrt(cfg.symbol_energy()) * acc;
    }
} // namespace

TEST_CASE("ula_steering")
{
    CHECK(ula_steering(4, 0.0).isApprox(CVec::Ones(4)));
    const CVec v = ula_steering(2, kPi / 2);
    CHECK(std::abs(v(1) - cd(-1.0, 0.0)) < 1e-12);
    const CVec w = ula_steering(8, 0.4636);
    for (int n = 0; n < 8; ++n)
        CHECK(std::abs(w(n) - expj(kPi * n * std::sin(0.4636))) < 1e-13);
}

TEST_CASE("delay_steering")
{
    CHECK(delay_steering(16, 120e3, 0.0).isApprox(CVec::Ones(16)));
    const CVec alt = delay_steering(6, 120e3, 0.5 / 120e3);
    for (int k = 0; k < 6; ++k)
        CHECK(std::abs(alt(k) - cd(k % 2 ? -1.0 : 1.0, 0.0)) < 1e-12);
    const double tau = 11.18 / kSpeedOfLight;
    const CVec d = delay_steering(128, 120e3, tau);
    for (int k = 0; k < 128; ++k)
        CHECK(std::abs(d(k) - expj(-2.0 * kPi * k * 120e3 * tau)) < 1e-12);
}

TEST_CASE("DFT codebooks")
{
    SystemConfig cfg;
    cfg.n_rx = cfg.n_combiners = 2;
    cfg.n_tx = cfg.n_precoders = 2;
    const Codebooks small = build_codebooks(cfg);
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(small.combiners(0, 0) - r) < 1e-15);
    CHECK(std::abs(small.combiners(1, 0) - r) < 1e-15);
    CHECK(std::abs(small.combiners(1, 1) + r) < 1e-15);

    const Codebooks books = build_codebooks(fixture::system());
    REQUIRE(books.square());
    CHECK((books.combiners.adjoint() * books.combiners - CMat::Identity(24, 24)).norm() < 1e-12);
    CHECK((books.precoders.adjoint() * books.precoders - CMat::Identity(16, 16)).norm() < 1e-12);
    // Gram entries by explicit sums.
    for (int a = 0; a < 24; a += 5)
        for (int b = 0; b < 24; b += 7)
        {
            cd g(0.0, 0.0);
            for (int n = 0; n < 24; ++n)
                g += std::conj(books.combiners(n, a)) * books.combiners(n, b);
            CHECK(std::abs(g - (a == b ? 1.0 : 0.0)) < 1e-12);
        }

    SystemConfig rc = fixture::system();
    rc.codebook = CodebookKind::Random;
    rc.n_combiners = 30;
    const Codebooks rb = build_codebooks(rc);
    CHECK(rb.combiners.cols() == 30);
    CHECK(!rb.square());
    CHECK(rb.combiners.colwise().norm().maxCoeff() == doctest::Approx(1.0));
    CHECK(build_codebooks(rc).combiners == rb.combiners);
}

TEST_CASE("factor_matrices")
{
    const SystemConfig cfg = fixture::system(32);
    const Codebooks books = build_codebooks(cfg);
    PathParameterSet p;
    p.paths = {Path{0.0, 0.0, 0.0, cd(1.0, 0.0)}, Path{1e-7, 0.3, -0.2, cd(0.5, 0.1)}};
    const FactorMatrices f = factor_matrices(p, books, cfg);
    CHECK(f.B.rows() == 24);
    CHECK(f.B.cols() == 2);
    CHECK(f.C.rows() == 16);
    CHECK(f.D.rows() == 32);
    CHECK(f.D.col(0).isApprox(CVec::Ones(32)));
    const CVec dft_of_ones = books.combiners.adjoint() * CVec::Ones(24);
    CHECK((f.B.col(0) - dft_of_ones).norm() < 1e-12);
    CHECK(std::abs(f.B(0, 0) - std::sqrt(24.0)) < 1e-12);
}

TEST_CASE("channel_tensor matches the scalar model")
{
    const SystemConfig cfg = fixture::system(48);
    const Codebooks books = build_codebooks(cfg);
    const PathParameterSet p = fixture::truth_params();
    const Tensor3 h = channel_tensor(p, books, cfg);
    double worst = 0.0;
    for (Eigen::Index m = 0; m < 24; ++m)
        for (Eigen::Index s = 0; s < 16; ++s)
            for (std::size_t k = 0; k < 48; k += 5)
            {
                const cd ref = scalar_model(p, books, cfg, m, s, k);
                worst = std::max(worst, std::abs(h(m, s, k) - ref) / std::max(std::abs(ref), 1e-30));
            }
    CHECK(worst < 1e-10);
}

TEST_CASE("Khatri-Rao identity for the mode-3 vectorisation")
{
    const SystemConfig cfg = fixture::system(20);
    const Codebooks books = build_codebooks(cfg);
    const PathParameterSet p = fixture::truth_params();
    const FactorMatrices f = factor_matrices(p, books, cfg);
    const Tensor3 h = channel_tensor(p, books, cfg);
    const CVec g = p.gains();
    CVec kr = CVec::Zero(24 * 16 * 20);
    for (Eigen::Index l = 0; l < 2; ++l)
    {
        Eigen::Index i = 0;
        for (Eigen::Index m = 0; m < 24; ++m)
            for (Eigen::Index s = 0; s < 16; ++s)
                for (Eigen::Index k = 0; k < 20; ++k)
                    kr(i++) += f.B(m, l) * f.C(s, l) * f.D(k, l) * g(l);
    }
    kr *= std::sqrt(cfg.symbol_energy());
    const Eigen::Map<const CVec> flat(h.flat().data(), static_cast<Eigen::Index>(h.size()));
    CHECK((flat - kr).norm() / kr.norm() < 1e-12);
}

TEST_CASE("multilinearity and Hadamard/Kronecker identity")
{
    const SystemConfig cfg = fixture::system(16);
    const Codebooks books = build_codebooks(cfg);
    PathParameterSet p = fixture::truth_params();
    const Tensor3 h = channel_tensor(p, books, cfg);
    PathParameterSet only0 = p, only1 = p;
    only0.paths[1].gain = 0.0;
    only1.paths[0].gain = 0.0;
    p.paths[1].gain *= cd(0.0, 3.0);
    Tensor3 expect = channel_tensor(only1, books, cfg);
    expect *= cd(0.0, 3.0);
    expect += channel_tensor(only0, books, cfg);
    CHECK(fixture::rel_err(channel_tensor(p, books, cfg), expect) < 1e-12);
    CHECK(fixture::rel_err(h, h) == 0.0);

    std::mt19937_64 rng(2);
    const CVec a1 = fixture::random_cvec(3, rng), a2 = fixture::random_cvec(4, rng), a3 = fixture::random_cvec(5, rng);
    const CVec b1 = fixture::random_cvec(3, rng), b2 = fixture::random_cvec(4, rng), b3 = fixture::random_cvec(5, rng);
    const CVec w = CVec::Ones(1);
    const Tensor3 lhs = hadamard(cp_tensor(a1, a2, a3, w), cp_tensor(b1, b2, b3, w));
    const Tensor3 rhs = cp_tensor(a1.cwiseProduct(b1), a2.cwiseProduct(b2), a3.cwiseProduct(b3), w);
    CHECK(fixture::rel_err(lhs, rhs) < 1e-12);
}

TEST_CASE("single beam, zero angles")
{
    SystemConfig cfg = fixture::system(8);
    cfg.n_rx = cfg.n_combiners = cfg.n_tx = cfg.n_precoders = 1;
    const Codebooks books = build_codebooks(cfg);
    PathParameterSet p;
    p.paths = {Path{0.0, 0.0, 0.0, cd(1.0, 0.0)}};
    const Tensor3 h = channel_tensor(p, books, cfg);
    for (const cd &v : h.flat())
        CHECK(std::abs(v - std::sqrt(cfg.symbol_energy())) < 1e-15);
}

TEST_CASE("synthesize_received")
{
    SystemConfig cfg = fixture::system(256);
    const Codebooks books = build_codebooks(cfg);
    const Tensor3 h = channel_tensor(fixture::truth_params(), books, cfg);
    const PilotTensor ones = PilotTensor::nominal(cfg);
    CHECK(ones.entries.energy() == doctest::Approx(24.0 * 16 * 256));
    CHECK(ones.energy_budget == doctest::Approx(24.0 * 16 * 256));

    SystemConfig quiet = cfg;
    quiet.noise_psd_w_per_hz = 0.0;
    std::mt19937_64 rng(1);
    CHECK(synthesize_received(h, ones, quiet, rng).entries == h);

    PilotTensor holed = ones;
    holed.entries(3, 4, 5) = 0.0;
    CHECK(synthesize_received(h, holed, quiet, rng).entries(3, 4, 5) == cd(0.0, 0.0));

    Tensor3 zero(24, 16, 256);
    const Tensor3 q = synthesize_received(zero, ones, cfg, rng).entries;
    const double var = q.energy() / static_cast<double>(q.size());
    CHECK(std::abs(var / cfg.noise_psd_w_per_hz - 1.0) < 0.02);

    std::mt19937_64 r1(4), r2(4);
    CHECK(synthesize_received(h, ones, cfg, r1).entries == synthesize_received(h, ones, cfg, r2).entries);

    SystemConfig other = cfg;
    other.n_subcarriers = 128;
    CHECK_THROWS_AS(synthesize_received(h, PilotTensor::nominal(other), cfg, rng), DimensionMismatch);
}

TEST_CASE("tensor dump round trip")
{
    std::mt19937_64 rng(3);
    Tensor3 t(2, 3, 4);
    const CVec v = fixture::random_cvec(24, rng);
    for (std::size_t i = 0; i < 24; ++i)
        t.flat()[i] = v(static_cast<Eigen::Index>(i));
    std::stringstream ss;
    write_tensor(ss, t);
    CHECK(ss.str().size() == 3 * 8 + 24 * 16);
    CHECK(read_tensor(ss) == t);
    std::stringstream bad("abc");
    CHECK_THROWS(read_tensor(bad));
}
