// SPDX-License-Identifier: Apache-2.0
//
// pilotspoof: pilot-level location spoofing for single-anchor mmWave positioning
// ------------------------------------------------------------------------

#include "pilotspoof/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>

#include <fftw3.h>

namespace pilotspoof
{
    std::size_t Spectrum::argmax() const
    {
        if (power.empty())
            return 0;
        return static_cast<std::size_t>(std::max_element(power.begin(), power.end()) - power.begin());
    }

    void CfarConfig::validate() const
    {
        if (training_cells < 1)
            throw ConfigError("cfar: training_cells must be >= 1");
        if (!(pfa > 0.0 && pfa < 1.0))
            throw ConfigError("cfar: pfa must lie in (0, 1)");
    }

    double CfarConfig::threshold_factor() const
    {
        const double n = 2.0 * static_cast<double>(training_cells);
        return n * (std::pow(pfa, -1.0 / n) - 1.0);
    }

    PathParameterSet EstimationResult::to_params() const
    {
        PathParameterSet p;
        for (const EstimatedPath &e : paths)
            p.paths.push_back({e.delay_s, e.aoa_rad, e.aod_rad, e.gain});
        return p;
    }

    CMat unfold(const Tensor3 &t, int mode)
    {
        const auto M = static_cast<Eigen::Index>(t.dim_m());
        const auto S = static_cast<Eigen::Index>(t.dim_s());
        const auto K = static_cast<Eigen::Index>(t.dim_k());
        CMat out;
        switch (mode)
        {
        case 0:
            out.resize(M, S * K);
            for (Eigen::Index m = 0; m < M; ++m)
                for (Eigen::Index s = 0; s < S; ++s)
                    for (Eigen::Index k = 0; k < K; ++k)
                        out(m, s * K + k) = t(m, s, k);
            break;
        case 1:
            out.resize(S, M * K);
            for (Eigen::Index m = 0; m < M; ++m)
                for (Eigen::Index s = 0; s < S; ++s)
                    for (Eigen::Index k = 0; k < K; ++k)
                        out(s, m * K + k) = t(m, s, k);
            break;
        case 2:
            out.resize(K, M * S);
            for (Eigen::Index m = 0; m < M; ++m)
                for (Eigen::Index s = 0; s < S; ++s)
                    for (Eigen::Index k = 0; k < K; ++k)
                        out(k, m * S + s) = t(m, s, k);
            break;
        default:
            throw DimensionMismatch("unfold: mode must be 0, 1 or 2");
        }
        return out;
    }

    std::vector<double> uniform_grid(double lo, double hi, double step)
    {
        if (!(step > 0.0) || !(hi >= lo))
            throw ConfigError("uniform_grid: need step > 0 and hi >= lo");
        const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
        std::vector<double> g(n);
        for (std::size_t i = 0; i < n; ++i)
            g[i] = lo + static_cast<double>(i) * step;
        return g;
    }

    Spectrum mf_spectrum(const CMat &snapshots, const Dictionary &dict, std::span<const double> grid)
    {
        if (grid.empty())
            throw ConfigError("mf_spectrum: empty grid");
        Spectrum sp;
        sp.grid.assign(grid.begin(), grid.end());
        sp.power.resize(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i)
        {
            const CVec a = dict(grid[i]);
            if (a.size() != snapshots.rows())
                throw DimensionMismatch("mf_spectrum: dictionary length differs from snapshot length");
            const double an = a.squaredNorm();
            sp.power[i] = an > 0.0 ? (a.adjoint() * snapshots).squaredNorm() / an : 0.0;
        }
        return sp;
    }

    Spectrum mf_spectrum(const CVec &y, const Dictionary &dict, std::span<const double> grid)
    {
        return mf_spectrum(CMat(y), dict, grid);
    }

    Dictionary aoa_dictionary(const Codebooks &books)
    {
        const CMat w = books.combiners;
        return [w](double th) -> CVec { return w.adjoint() * ula_steering(static_cast<std::size_t>(w.rows()), th); };
    }

    Dictionary aod_dictionary(const Codebooks &books)
    {
        const CMat f = books.precoders;
        return [f](double ph) -> CVec { return f.adjoint() * ula_steering(static_cast<std::size_t>(f.rows()), ph); };
    }

    Dictionary delay_dictionary(const SystemConfig &cfg)
    {
        const std::size_t k = cfg.n_subcarriers;
        const double df = cfg.subcarrier_spacing_hz;
        return [k, df](double tau) -> CVec { return delay_steering(k, df, tau); };
    }

    namespace
    {
        std::mutex &planner_mutex()
        {
            static std::mutex m;
            return m;
        }
    } // namespace

    Spectrum delay_periodogram(const Tensor3 &y, const SystemConfig &cfg)
    {
        const std::size_t K = y.dim_k();
        const std::size_t snapshots = y.dim_m() * y.dim_s();
        if (K != cfg.n_subcarriers)
            throw DimensionMismatch("delay_periodogram: tensor K differs from system config");
        if (snapshots == 0 || K == 0)
            throw DimensionMismatch("delay_periodogram: empty tensor");

        std::vector<cd> buf(y.flat().begin(), y.flat().end());
        auto *data = reinterpret_cast<fftw_complex *>(buf.data());
        const int n = static_cast<int>(K);
        fftw_plan plan;
        {
            std::lock_guard<std::mutex> lock(planner_mutex());
            plan = fftw_plan_many_dft(1, &n, static_cast<int>(snapshots), data, nullptr, 1, n, data, nullptr, 1, n,
                                      FFTW_BACKWARD, FFTW_ESTIMATE);
        }
        if (plan == nullptr)
            throw NumericalDegeneracy("delay_periodogram: FFT plan creation failed");
        fftw_execute(plan);
        {
            std::lock_guard<std::mutex> lock(planner_mutex());
            fftw_destroy_plan(plan);
        }

        Spectrum sp;
        sp.grid.resize(K);
        sp.power.assign(K, 0.0);
        const double bin = cfg.delay_bin_s();
        const double norm = 1.0 / (static_cast<double>(K) * static_cast<double>(snapshots));
        for (std::size_t k = 0; k < K; ++k)
            sp.grid[k] = static_cast<double>(k) * bin;
        for (std::size_t j = 0; j < snapshots; ++j)
            for (std::size_t k = 0; k < K; ++k)
                sp.power[k] += std::norm(buf[j * K + k]);
        for (double &p : sp.power)
            p *= norm;
        return sp;
    }

    std::vector<std::size_t> cfar_detect(std::span<const double> power, const CfarConfig &cfg)
    {
        cfg.validate();
        const std::size_t n = power.size();
        const std::size_t half = cfg.guard_cells + cfg.training_cells;
        if (n <= 2 * half)
            throw ConfigError("cfar: spectrum length " + std::to_string(n) + " does not exceed the window " +
                              std::to_string(2 * half + 1));
        const double alpha = cfg.threshold_factor();
        const double inv_train = 1.0 / (2.0 * static_cast<double>(cfg.training_cells));

        std::vector<char> hit(n, 0);
        for (std::size_t i = 0; i < n; ++i)
        {
            double noise = 0.0;
            for (std::size_t j = cfg.guard_cells + 1; j <= half; ++j)
                noise += power[(i + j) % n] + power[(i + n - j) % n];
            hit[i] = power[i] > alpha * noise * inv_train ? 1 : 0;
        }

        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < n; ++i)
        {
            if (!hit[i])
                continue;
            const std::size_t l = (i + n - 1) % n;
            const std::size_t r = (i + 1) % n;
            if (hit[l] && power[l] >= power[i])
                continue;
            if (hit[r] && power[r] > power[i])
                continue;
            out.push_back(i);
        }
        return out;
    }

    double esprit_angle(const CVec &response, bool *reliable)
    {
        const Eigen::Index n = response.size();
        if (n < 2)
        {
            if (reliable)
                *reliable = false;
            return 0.0;
        }
        CMat u(n - 1, 2);
        u.col(0) = response.head(n - 1);
        u.col(1) = response.tail(n - 1);
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(Eigen::Matrix2cd(u.adjoint() * u));
        const Eigen::Vector2cd v = es.eigenvectors().col(0);
        if (std::abs(v(1)) < std::numeric_limits<double>::epsilon())
        {
            if (reliable)
                *reliable = false;
            return 0.0;
        }
        const cd psi = -v(0) / v(1);
        if (reliable)
            *reliable = std::abs(std::abs(psi) - 1.0) <= 0.2;
        const double s = std::clamp(std::arg(psi) / kPi, -1.0, 1.0);
        return std::asin(s);
    }

    namespace
    {
        struct Atom
        {
            CVec b, c, d;
        };

        struct Context
        {
            const Codebooks &books;
            const SystemConfig &cfg;
            bool square;
            double omega; // 2 pi df

            Atom atom(double tau, double th, double ph) const
            {
                return {books.combiners.adjoint() * ula_steering(cfg.n_rx, th),
                        books.precoders.adjoint() * ula_steering(cfg.n_tx, ph),
                        delay_steering(cfg.n_subcarriers, cfg.subcarrier_spacing_hz, tau)};
            }
        };

        // (1/K) sum_k T[m,s,k] e^{+j omega k tau}
        CMat compensate(const Tensor3 &t, double u)
        {
            const std::size_t K = t.dim_k();
            std::vector<cd> ph(K);
            for (std::size_t k = 0; k < K; ++k)
                ph[k] = std::polar(1.0 / static_cast<double>(K), u * static_cast<double>(k));
            CMat g(static_cast<Eigen::Index>(t.dim_m()), static_cast<Eigen::Index>(t.dim_s()));
            for (std::size_t m = 0; m < t.dim_m(); ++m)
                for (std::size_t s = 0; s < t.dim_s(); ++s)
                {
                    std::span<const cd> f = t.fiber(m, s);
                    cd acc(0.0, 0.0);
                    for (std::size_t k = 0; k < K; ++k)
                        acc += f[k] * ph[k];
                    g(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(s)) = acc;
                }
            return g;
        }

        // argmax over angle of ||a(angle)^H G||^2 / ||a||^2, a = W^H ula(angle).
        double mf_angle(const CMat &g, const CMat &book)
        {
            const auto n = static_cast<std::size_t>(book.rows());
            auto score = [&](double th)
            {
                const CVec a = book.adjoint() * ula_steering(n, th);
                return (a.adjoint() * g).squaredNorm() / a.squaredNorm();
            };
            const double step = 1e-3;
            double best = -kPi / 2, best_v = -1.0;
            for (double th : uniform_grid(-kPi / 2, kPi / 2, step))
            {
                const double v = score(th);
                if (v > best_v)
                {
                    best_v = v;
                    best = th;
                }
            }
            double lo = best - step, hi = best + step;
            const double r = 0.5 * (std::sqrt(5.0) - 1.0);
            double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
            double f1 = score(x1), f2 = score(x2);
            for (int it = 0; it < 60; ++it)
            {
                if (f1 < f2)
                {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + r * (hi - lo);
                    f2 = score(x2);
                }
                else
                {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - r * (hi - lo);
                    f1 = score(x1);
                }
            }
            return 0.5 * (lo + hi);
        }

        struct Angles
        {
            double th = 0.0, ph = 0.0;
            bool reliable = true;
        };

        Angles estimate_angles(const CMat &g, const Context &ctx)
        {
            Angles a;
            if (ctx.square)
            {
                const CMat e = ctx.books.combiners * g * ctx.books.precoders.transpose();
                const Eigen::JacobiSVD<CMat> svd(e, Eigen::ComputeThinU | Eigen::ComputeThinV);
                bool r1 = true, r2 = true;
                a.th = esprit_angle(svd.matrixU().col(0), &r1);
                a.ph = esprit_angle(svd.matrixV().col(0).conjugate(), &r2);
                a.reliable = r1 && r2;
            }
            else
            {
                a.th = mf_angle(g, ctx.books.combiners);
                a.ph = mf_angle(g.transpose(), ctx.books.precoders);
            }
            return a;
        }

        // r[k] = sum_{m,s} conj(b_m c_s) T[m,s,k]
        CVec beamform(const Tensor3 &t, const CVec &b, const CVec &c)
        {
            CVec r = CVec::Zero(static_cast<Eigen::Index>(t.dim_k()));
            for (std::size_t m = 0; m < t.dim_m(); ++m)
                for (std::size_t s = 0; s < t.dim_s(); ++s)
                {
                    const cd w = std::conj(b(static_cast<Eigen::Index>(m)) * c(static_cast<Eigen::Index>(s)));
                    std::span<const cd> f = t.fiber(m, s);
                    for (std::size_t k = 0; k < f.size(); ++k)
                        r(static_cast<Eigen::Index>(k)) += w * f[k];
                }
            return r;
        }

        // Maximises |sum_k r_k e^{j k u}|^2 over u in [uc - w, uc + w]; u = omega * tau.
        double refine_phase_slope(const CVec &r, double uc, double w)
        {
            auto eval = [&](double u, cd *s1, cd *s2)
            {
                cd s0(0.0, 0.0);
                cd a1(0.0, 0.0), a2(0.0, 0.0);
                for (Eigen::Index k = 0; k < r.size(); ++k)
                {
                    const double kk = static_cast<double>(k);
                    const cd t = r(k) * std::polar(1.0, kk * u);
                    s0 += t;
                    if (s1)
                    {
                        a1 += cd(0.0, kk) * t;
                        a2 += -kk * kk * t;
                    }
                }
                if (s1)
                {
                    *s1 = a1;
                    *s2 = a2;
                }
                return s0;
            };
            auto j = [&](double u) { return std::norm(eval(u, nullptr, nullptr)); };

            constexpr int kCoarse = 32;
            double best = uc, best_v = -1.0;
            for (int i = 0; i <= kCoarse; ++i)
            {
                const double u = uc - w + 2.0 * w * i / kCoarse;
                const double v = j(u);
                if (v > best_v)
                {
                    best_v = v;
                    best = u;
                }
            }
            const double h = 2.0 * w / kCoarse;
            double lo = best - h, hi = best + h;
            const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
            double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
            double f1 = j(x1), f2 = j(x2);
            for (int it = 0; it < 40; ++it)
            {
                if (f1 < f2)
                {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + gr * (hi - lo);
                    f2 = j(x2);
                }
                else
                {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - gr * (hi - lo);
                    f1 = j(x1);
                }
            }
            double u = 0.5 * (lo + hi);
            const double blo = best - h, bhi = best + h;
            for (int it = 0; it < 6; ++it)
            {
                cd s1, s2;
                const cd s0 = eval(u, &s1, &s2);
                const double d1 = 2.0 * (std::conj(s0) * s1).real();
                const double d2 = 2.0 * (std::norm(s1) + (std::conj(s0) * s2).real());
                if (!(d2 < 0.0))
                    break;
                const double next = u - d1 / d2;
                if (!(next > blo && next < bhi))
                    break;
                if (std::abs(next - u) < 1e-15 * std::max(1.0, std::abs(u)))
                {
                    u = next;
                    break;
                }
                u = next;
            }
            return u;
        }

        EstimatedPath single_path(const Tensor3 &t, double tau0, const Context &ctx)
        {
            const double bin_u = 2.0 * kPi / static_cast<double>(ctx.cfg.n_subcarriers);
            double u = ctx.omega * tau0;
            Angles a;
            for (int it = 0; it < 3; ++it)
            {
                a = estimate_angles(compensate(t, u), ctx);
                const Atom at = ctx.atom(0.0, a.th, a.ph);
                u = refine_phase_slope(beamform(t, at.b, at.c), u, bin_u);
            }
            a = estimate_angles(compensate(t, u), ctx);
            EstimatedPath p;
            p.delay_s = u / ctx.omega;
            p.aoa_rad = a.th;
            p.aod_rad = a.ph;
            p.reliable = a.reliable;
            return p;
        }

        std::vector<Atom> atoms_of(const std::vector<EstimatedPath> &paths, const Context &ctx)
        {
            std::vector<Atom> out;
            for (const EstimatedPath &p : paths)
                out.push_back(ctx.atom(p.delay_s, p.aoa_rad, p.aod_rad));
            return out;
        }

        // LS amplitudes of the rank-one atoms against y.
        CVec ls_gains(const Tensor3 &y, const std::vector<Atom> &atoms)
        {
            const auto L = static_cast<Eigen::Index>(atoms.size());
            CMat gram(L, L);
            for (Eigen::Index i = 0; i < L; ++i)
                for (Eigen::Index j = 0; j < L; ++j)
                {
                    const Atom &a = atoms[static_cast<std::size_t>(i)];
                    const Atom &b = atoms[static_cast<std::size_t>(j)];
                    gram(i, j) = a.b.dot(b.b) * a.c.dot(b.c) * a.d.dot(b.d);
                }
            CVec rhs(L);
            for (Eigen::Index l = 0; l < L; ++l)
            {
                const Atom &a = atoms[static_cast<std::size_t>(l)];
                cd acc(0.0, 0.0);
                for (std::size_t m = 0; m < y.dim_m(); ++m)
                    for (std::size_t s = 0; s < y.dim_s(); ++s)
                    {
                        std::span<const cd> f = y.fiber(m, s);
                        cd inner(0.0, 0.0);
                        for (std::size_t k = 0; k < f.size(); ++k)
                            inner += std::conj(a.d(static_cast<Eigen::Index>(k))) * f[k];
                        acc += std::conj(a.b(static_cast<Eigen::Index>(m)) * a.c(static_cast<Eigen::Index>(s))) * inner;
                    }
                rhs(l) = acc;
            }
            return gram.completeOrthogonalDecomposition().solve(rhs);
        }

        void subtract_atom(Tensor3 &t, const Atom &a, cd g)
        {
            for (std::size_t m = 0; m < t.dim_m(); ++m)
                for (std::size_t s = 0; s < t.dim_s(); ++s)
                {
                    const cd w = g * a.b(static_cast<Eigen::Index>(m)) * a.c(static_cast<Eigen::Index>(s));
                    std::span<cd> f = t.fiber(m, s);
                    for (std::size_t k = 0; k < f.size(); ++k)
                        f[k] -= w * a.d(static_cast<Eigen::Index>(k));
                }
        }

        Tensor3 residual_without(const Tensor3 &y, const std::vector<Atom> &atoms, const CVec &g, std::size_t skip)
        {
            Tensor3 r = y;
            for (std::size_t j = 0; j < atoms.size(); ++j)
                if (j != skip)
                    subtract_atom(r, atoms[j], g(static_cast<Eigen::Index>(j)));
            return r;
        }

        double circular_bin_distance(double a_bins, double b_bins, double k)
        {
            double d = std::fmod(std::abs(a_bins - b_bins), k);
            return std::min(d, k - d);
        }
    } // namespace

    EstimationResult flex_estimate(const Tensor3 &y, const Codebooks &books, const SystemConfig &cfg,
                                   const FlexConfig &flex)
    {
        flex.cfar.validate();
        if (y.dim_m() != cfg.n_combiners || y.dim_s() != cfg.n_precoders || y.dim_k() != cfg.n_subcarriers)
            throw DimensionMismatch("flex_estimate: tensor shape differs from system config");
        const Context ctx{books, cfg, books.square(), 2.0 * kPi * cfg.subcarrier_spacing_hz};
        const double bin = cfg.delay_bin_s();
        const auto kbins = static_cast<double>(cfg.n_subcarriers);

        EstimationResult out;
        const double e0 = y.energy();
        if (!(e0 > 0.0))
            return out;

        std::vector<EstimatedPath> paths;
        Tensor3 resid = y;
        while (paths.size() < flex.max_paths)
        {
            if (resid.energy() < flex.stop_energy_ratio * e0)
                break;
            const Spectrum per = delay_periodogram(resid, cfg);
            const std::vector<std::size_t> det = cfar_detect(per.power, flex.cfar);

            std::size_t pick = per.power.size();
            for (std::size_t i : det)
            {
                bool near = false;
                for (const EstimatedPath &p : paths)
                    near = near || circular_bin_distance(static_cast<double>(i), p.delay_s / bin, kbins) <= flex.exclusion_bins;
                if (!near && (pick == per.power.size() || per.power[i] > per.power[pick]))
                    pick = i;
            }
            if (pick == per.power.size())
                break;

            const std::size_t n = per.power.size();
            const double pl = per.power[(pick + n - 1) % n];
            const double p0 = per.power[pick];
            const double pr = per.power[(pick + 1) % n];
            const double den = pl - 2.0 * p0 + pr;
            const double delta = den < 0.0 ? std::clamp(0.5 * (pl - pr) / den, -0.5, 0.5) : 0.0;

            EstimatedPath p = single_path(resid, (static_cast<double>(pick) + delta) * bin, ctx);
            p.peak_power = p0;
            paths.push_back(p);

            // Cyclic refinement of every accepted path against the others.
            for (std::size_t sweep = 0; sweep < flex.refine_sweeps && paths.size() > 1; ++sweep)
            {
                double change = 0.0;
                for (std::size_t l = 0; l < paths.size(); ++l)
                {
                    const std::vector<Atom> atoms = atoms_of(paths, ctx);
                    const CVec g = ls_gains(y, atoms);
                    const Tensor3 clean = residual_without(y, atoms, g, l);
                    EstimatedPath q = single_path(clean, paths[l].delay_s, ctx);
                    change = std::max({change, std::abs(q.delay_s - paths[l].delay_s) / bin,
                                       std::abs(q.aoa_rad - paths[l].aoa_rad), std::abs(q.aod_rad - paths[l].aod_rad)});
                    q.peak_power = paths[l].peak_power;
                    paths[l] = q;
                }
                if (change < 1e-12)
                    break;
            }

            const std::vector<Atom> atoms = atoms_of(paths, ctx);
            const CVec g = ls_gains(y, atoms);
            for (std::size_t l = 0; l < paths.size(); ++l)
                paths[l].gain = g(static_cast<Eigen::Index>(l));
            resid = residual_without(y, atoms, g, atoms.size());
        }

        std::sort(paths.begin(), paths.end(),
                  [](const EstimatedPath &a, const EstimatedPath &b) { return a.delay_s < b.delay_s; });
        out.paths = std::move(paths);
        out.detected_count = out.paths.size();
        return out;
    }

    void write_estimation_csv_header(std::ostream &os)
    {
        os << "trial_id,path_index,tau_s,aoa_rad,aod_rad,peak_power\n";
    }

    void write_estimation_csv_rows(std::ostream &os, std::size_t trial_id, const EstimationResult &est)
    {
        const auto old = os.precision(17);
        for (std::size_t i = 0; i < est.paths.size(); ++i)
        {
            const EstimatedPath &p = est.paths[i];
            os << trial_id << ',' << i << ',' << p.delay_s << ',' << p.aoa_rad << ',' << p.aod_rad << ','
               << p.peak_power << '\n';
        }
        os.precision(old);
    }
} // namespace pilotspoof
