// SPDX-License-Identifier: Apache-2.0
//
// pilotspoof: pilot-level location spoofing for single-anchor mmWave positioning
// ------------------------------------------------------------------------
//
// Command-line front end. Every command writes CSV artifacts plus a
// manifest.json into --out.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pilotspoof/config_io.hpp"
#include "pilotspoof/estimate.hpp"
#include "pilotspoof/evalharness.hpp"
#include "pilotspoof/locate_comm.hpp"
#include "pilotspoof/spoof_blind.hpp"
#include "pilotspoof/spoof_oracle.hpp"

namespace fs = std::filesystem;
using namespace pilotspoof;

namespace
{
    struct Global
    {
        std::uint64_t seed = 0;
        bool full = false;
        std::string out = "run";
        std::size_t threads = 1;
    };

    enum : int
    {
        kExitOk = 0,
        kExitConfig = 2,
        kExitNumerical = 3,
    };

    std::ofstream open_out(const Global &g, const std::string &name, RunManifest &m)
    {
        const fs::path p = fs::path(g.out) / name;
        std::ofstream os(p);
        if (!os)
            throw ConfigError("cannot write " + p.string());
        os.precision(17);
        m.outputs.push_back(name);
        return os;
    }

    RunManifest manifest(const Global &g, const std::string &cmd, std::vector<std::string> inputs)
    {
        fs::create_directories(g.out);
        RunManifest m;
        m.command = cmd;
        m.seed = g.seed;
        m.output_dir = g.out;
        m.full = g.full;
        m.threads = g.threads;
        m.inputs = std::move(inputs);
        return m;
    }

    ScenarioFile scenario_for(const Global &g, const std::string &path)
    {
        ScenarioFile sc = load_scenario(path);
        if (g.full)
            sc.system.n_subcarriers = ExperimentFile{}.full_subcarriers;
        return sc;
    }

    const ScenarioGeometry &require_target(const ScenarioFile &sc)
    {
        if (!sc.target)
            throw ConfigError(sc.source + ": a 'spoof' section is required for this command");
        return *sc.target;
    }

    // Trial-0 channel of the scenario: true parameters with gains.
    PathParameterSet true_params(const ScenarioFile &sc, std::uint64_t seed)
    {
        std::mt19937_64 rng = TrialRng(seed, 0).stream(Stream::GainPhase);
        return forward_params_with_gains(sc.truth, sc.gain, rng);
    }

    PilotTensor design_for(const std::string &method, const ScenarioFile &sc, const PathParameterSet &truth,
                           const Codebooks &books, double *lambda_scale = nullptr)
    {
        if (lambda_scale)
            *lambda_scale = 1.0;
        if (method == "no_spoof")
            return PilotTensor::nominal(sc.system);
        const SpoofTarget target = SpoofTarget::from_geometry(require_target(sc), truth.gains());
        if (method == "oht")
            return design_full_pilot_tensor(truth, target, books, sc.system, lambda_scale);
        if (method == "bht" || method == "aobht")
        {
            BlindDesignOptions opts;
            opts.angle_only = method == "aobht";
            opts.plan = sc.fake_paths;
            PathParameterSet geometric = truth;
            for (Path &p : geometric.paths)
                p.gain = cd(0.0, 0.0);
            const BlindDesign d = design_blind_full(geometric, target, books, sc.system, opts);
            std::cerr << "expected observed paths: " << d.expected_paths << "\n";
            return d.pilot;
        }
        throw ConfigError("unknown pilot method '" + method + "' (expected one of: no_spoof, oht, bht, aobht)");
    }

    void write_spectrum(std::ostream &os, const std::string &series, const Spectrum &sp)
    {
        for (std::size_t i = 0; i < sp.grid.size(); ++i)
            os << series << ',' << sp.grid[i] << ',' << sp.power[i] << '\n';
    }

    int cmd_spectra(const Global &g, const std::string &scenario_path, const std::string &method)
    {
        const ScenarioFile sc = scenario_for(g, scenario_path);
        RunManifest m = manifest(g, "spectra", {scenario_path});
        const Codebooks books = build_codebooks(sc.system);
        const PathParameterSet truth = true_params(sc, g.seed);
        const Tensor3 h = channel_tensor(truth, books, sc.system);
        const std::vector<double> angle_grid = uniform_grid(-kPi / 2, kPi / 2, 1e-3);

        auto noise = [&]() { return TrialRng(g.seed, 0).stream(Stream::Noise); };

        if (method == "aoa_oracle" || method == "aoa_blind")
        {
            // Single-snapshot AoA experiment: y = x (.) (sqrt(Es) B alpha) + n.
            const FactorMatrices f = factor_matrices(truth, books, sc.system);
            const PathParameterSet tgt = forward_params(require_target(sc));
            const FactorMatrices fb = factor_matrices(tgt, books, sc.system);
            const CVec y0 = std::sqrt(sc.system.symbol_energy()) * f.B * truth.gains();
            CVec x;
            if (method == "aoa_oracle")
                x = design_subspace_pilot(f.B, truth.gains(), fb.B, truth.gains(),
                                          static_cast<double>(sc.system.n_combiners));
            else
                x = blind_multipath_angle_pilot(f.B, fb.B).pilot;
            std::mt19937_64 rng = noise();
            std::normal_distribution<double> n01(0.0, std::sqrt(sc.system.noise_psd_w_per_hz / 2.0));
            CVec n(y0.size());
            for (Eigen::Index i = 0; i < n.size(); ++i)
            {
                const double re = n01(rng);
                const double im = n01(rng);
                n(i) = cd(re, im);
            }
            const Dictionary dict = aoa_dictionary(books);
            std::ofstream os = open_out(g, "spectrum_aoa.csv", m);
            os << "series,grid_rad,power\n";
            write_spectrum(os, "no_spoof", mf_spectrum(CVec(y0 + n), dict, angle_grid));
            write_spectrum(os, method, mf_spectrum(CVec(x.cwiseProduct(y0) + n), dict, angle_grid));
        }
        else
        {
            const std::vector<std::pair<std::string, PilotTensor>> runs = {
                {"no_spoof", PilotTensor::nominal(sc.system)}, {method, design_for(method, sc, truth, books)}};
            std::ofstream aoa = open_out(g, "spectrum_aoa.csv", m);
            std::ofstream aod = open_out(g, "spectrum_aod.csv", m);
            std::ofstream del = open_out(g, "spectrum_delay.csv", m);
            aoa << "series,grid_rad,power\n";
            aod << "series,grid_rad,power\n";
            del << "series,grid_s,power\n";
            const std::vector<double> delay_grid = uniform_grid(0.0, 120.0 / kSpeedOfLight, 0.1 / kSpeedOfLight);
            for (std::size_t r = 0; r < runs.size() && (r == 0 || method != "no_spoof"); ++r)
            {
                std::mt19937_64 rng = noise();
                const Tensor3 y = synthesize_received(h, runs[r].second, sc.system, rng).entries;
                write_spectrum(aoa, runs[r].first, mf_spectrum(unfold(y, 0), aoa_dictionary(books), angle_grid));
                write_spectrum(aod, runs[r].first, mf_spectrum(unfold(y, 1), aod_dictionary(books), angle_grid));
                write_spectrum(del, runs[r].first,
                               mf_spectrum(unfold(y, 2), delay_dictionary(sc.system), delay_grid));
            }
        }
        write_manifest(g.out, m, &sc, nullptr);
        return kExitOk;
    }

    int cmd_design(const Global &g, const std::string &scenario_path, const std::string &method)
    {
        const ScenarioFile sc = scenario_for(g, scenario_path);
        RunManifest m = manifest(g, "design", {scenario_path});
        const Codebooks books = build_codebooks(sc.system);
        const PathParameterSet truth = true_params(sc, g.seed);
        double scale = 1.0;
        const PilotTensor x = design_for(method, sc, truth, books, &scale);
        write_tensor_file((fs::path(g.out) / "pilot.bin").string(), x.entries);
        m.outputs.push_back("pilot.bin");

        std::ofstream os = open_out(g, "design.csv", m);
        os << "method,energy,energy_budget,lambda_scale,residual_at_target,target_energy\n";
        double res = std::numeric_limits<double>::quiet_NaN();
        double target_energy = std::numeric_limits<double>::quiet_NaN();
        if (sc.target)
        {
            PathParameterSet tgt = forward_params(*sc.target);
            tgt.set_gains(scale * truth.gains());
            res = spoof_residual(x.entries, truth, tgt, books, sc.system).value;
            target_energy = channel_tensor(tgt, books, sc.system).energy();
        }
        os << method << ',' << x.entries.energy() << ',' << x.energy_budget << ',' << scale << ',' << res << ','
           << target_energy << '\n';
        write_manifest(g.out, m, &sc, nullptr);
        return kExitOk;
    }

    Tensor3 received_for(const Global &g, const ScenarioFile &sc, const Codebooks &books, const std::string &method,
                         const std::string &received_path)
    {
        if (!received_path.empty())
            return read_tensor_file(received_path);
        const PathParameterSet truth = true_params(sc, g.seed);
        const PilotTensor x = design_for(method, sc, truth, books);
        std::mt19937_64 rng = TrialRng(g.seed, 0).stream(Stream::Noise);
        return synthesize_received(channel_tensor(truth, books, sc.system), x, sc.system, rng).entries;
    }

    int cmd_estimate(const Global &g, const std::string &scenario_path, const std::string &method,
                     const std::string &received_path, bool dump)
    {
        const ScenarioFile sc = scenario_for(g, scenario_path);
        std::vector<std::string> inputs{scenario_path};
        if (!received_path.empty())
            inputs.push_back(received_path);
        RunManifest m = manifest(g, "estimate", inputs);
        const Codebooks books = build_codebooks(sc.system);
        const Tensor3 y = received_for(g, sc, books, method, received_path);
        if (dump)
        {
            write_tensor_file((fs::path(g.out) / "received.bin").string(), y);
            m.outputs.push_back("received.bin");
        }
        const EstimationResult est = flex_estimate(y, books, sc.system);
        std::ofstream os = open_out(g, "estimates.csv", m);
        write_estimation_csv_header(os);
        write_estimation_csv_rows(os, 0, est);
        write_manifest(g.out, m, &sc, nullptr);
        return kExitOk;
    }

    EstimationResult read_estimates_csv(const std::string &path)
    {
        std::istringstream is(read_text_file(path));
        std::string line;
        std::getline(is, line);
        if (line.rfind("trial_id,path_index,tau_s,aoa_rad,aod_rad", 0) != 0)
            throw ConfigError(path + ": line 1: unexpected header");
        EstimationResult est;
        std::size_t lineno = 1;
        while (std::getline(is, line))
        {
            ++lineno;
            if (line.empty())
                continue;
            std::vector<std::string> f;
            std::stringstream ls(line);
            for (std::string cell; std::getline(ls, cell, ',');)
                f.push_back(cell);
            if (f.size() < 5)
                throw ConfigError(path + ": line " + std::to_string(lineno) + ": expected at least 5 columns");
            try
            {
                EstimatedPath p;
                p.delay_s = std::stod(f[2]);
                p.aoa_rad = std::stod(f[3]);
                p.aod_rad = std::stod(f[4]);
                p.peak_power = f.size() > 5 ? std::stod(f[5]) : 0.0;
                est.paths.push_back(p);
            }
            catch (const std::exception &)
            {
                throw ConfigError(path + ": line " + std::to_string(lineno) + ": malformed number");
            }
        }
        est.detected_count = est.paths.size();
        return est;
    }

    int cmd_locate(const Global &g, const std::string &scenario_path, const std::string &method,
                   const std::string &estimates_path)
    {
        const ScenarioFile sc = scenario_for(g, scenario_path);
        std::vector<std::string> inputs{scenario_path};
        if (!estimates_path.empty())
            inputs.push_back(estimates_path);
        RunManifest m = manifest(g, "locate", inputs);
        EstimationResult est;
        if (!estimates_path.empty())
            est = read_estimates_csv(estimates_path);
        else
        {
            const Codebooks books = build_codebooks(sc.system);
            est = flex_estimate(received_for(g, sc, books, method, ""), books, sc.system);
        }
        const PositionEstimate p = estimate_position(est, sc.truth.bs);
        std::ofstream os = open_out(g, "positions.csv", m);
        write_position_csv_header(os);
        write_position_csv_row(os, 0, p);
        write_manifest(g.out, m, &sc, nullptr);
        return kExitOk;
    }

    int cmd_sweep(const Global &g, const std::string &scenario_path, const std::string &experiment_path)
    {
        const ScenarioFile sc = load_scenario(scenario_path);
        const ExperimentFile ex = load_experiment(experiment_path);
        RunManifest m = manifest(g, "sweep", {scenario_path, experiment_path});
        Experiment exp = make_experiment(sc, ex, g.full);
        const std::size_t trials = g.full ? ex.full_trials : ex.trials;
        SweepReport rep;
        if (ex.kind == SweepKind::Power)
            rep = power_sweep(exp, ex.methods, ex.tx_power_dbm, trials, g.seed, g.threads);
        else
        {
            exp.system.tx_power_w = dbm_to_watt(ex.uncertainty_tx_power_dbm);
            exp.gain.tx_power_w = exp.system.tx_power_w;
            rep = uncertainty_sweep(exp, ex.sigma_ue_m, ex.sigma_sp_m, trials, g.seed, g.threads);
        }
        {
            std::ofstream os = open_out(g, "trials.csv", m);
            write_trials_csv(os, rep);
        }
        {
            std::ofstream os = open_out(g, "summary.csv", m);
            write_summary_csv(os, rep);
        }
        write_manifest(g.out, m, &sc, &ex);
        return kExitOk;
    }

    std::vector<Vec2> parse_cells(const std::string &spec)
    {
        std::vector<Vec2> cells;
        std::stringstream ss(spec);
        for (std::string item; std::getline(ss, item, ';');)
        {
            const auto comma = item.find(',');
            if (comma == std::string::npos)
                throw ConfigError("--cells: expected 'x,y;x,y;...', got '" + item + "'");
            try
            {
                cells.emplace_back(std::stod(item.substr(0, comma)), std::stod(item.substr(comma + 1)));
            }
            catch (const std::exception &)
            {
                throw ConfigError("--cells: malformed number in '" + item + "'");
            }
        }
        return cells;
    }

    int cmd_heatmap(const Global &g, const std::string &scenario_path, const HeatmapGridSpec &grid,
                    const std::string &cells_spec)
    {
        const ScenarioFile sc = scenario_for(g, scenario_path);
        RunManifest m = manifest(g, "heatmap", {scenario_path});
        const Codebooks books = build_codebooks(sc.system);
        const PathParameterSet truth = true_params(sc, g.seed);
        const std::vector<Vec2> cells = cells_spec.empty() ? heatmap_grid(grid, sc.truth.bs) : parse_cells(cells_spec);
        const std::vector<double> rates = rate_heatmap(sc.truth, truth, cells, books, sc.system, g.seed, g.threads);
        {
            std::ofstream os = open_out(g, "heatmap.csv", m);
            write_heatmap_csv(os, cells, rates);
        }
        {
            // Reference rates of the unspoofed link.
            std::mt19937_64 rng = TrialRng(g.seed, 0).stream(Stream::Noise);
            const Tensor3 y = synthesize_received(channel_tensor(truth, books, sc.system),
                                                  PilotTensor::nominal(sc.system), sc.system, rng)
                                  .entries;
            std::ofstream os = open_out(g, "heatmap_reference.csv", m);
            os << "series,rate_bps\n";
            os << "no_spoof," << achievable_rate(truth, select_beam_pair(y), books, sc.system).rate_bps << '\n';
            os << "perfect_csi," << perfect_csi_rate(truth, sc.system).rate_bps << '\n';
        }
        write_manifest(g.out, m, &sc, nullptr);
        return kExitOk;
    }
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"pilotspoof: pilot spoofing simulator for single-anchor mmWave positioning"};
    app.require_subcommand(1);
    Global g;
    app.add_option("--seed", g.seed, "base seed (default 0)");
    app.add_flag("--full", g.full, "full scale: K = 3300 and T = 250");
    app.add_option("--out", g.out, "output directory (default ./run)");
    app.add_option("--threads", g.threads, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);

    std::string scenario, experiment, method = "oht", received, estimates, cells;
    bool dump = false;
    HeatmapGridSpec grid;
    double min_deg = -60.0, max_deg = 60.0;

    auto *spectra = app.add_subcommand("spectra", "MF AoA/AoD/delay spectra with and without spoofing");
    spectra->add_option("scenario", scenario, "scenario JSON")->required();
    spectra->add_option("--method", method, "oht | bht | aobht | no_spoof | aoa_oracle | aoa_blind");

    auto *design = app.add_subcommand("design", "design a pilot tensor and dump it");
    design->add_option("scenario", scenario, "scenario JSON")->required();
    design->add_option("--method", method, "oht | bht | aobht | no_spoof");

    auto *estimate = app.add_subcommand("estimate", "run the channel-parameter estimator");
    estimate->add_option("scenario", scenario, "scenario JSON")->required();
    estimate->add_option("--method", method, "pilot used to synthesise Y: oht | bht | aobht | no_spoof");
    estimate->add_option("--received", received, "estimate from a dumped received tensor instead");
    estimate->add_flag("--dump-received", dump, "also write received.bin");

    auto *locate = app.add_subcommand("locate", "estimate the UE position");
    locate->add_option("scenario", scenario, "scenario JSON")->required();
    locate->add_option("--method", method, "pilot used to synthesise Y: oht | bht | aobht | no_spoof");
    locate->add_option("--estimates", estimates, "estimates CSV written by 'estimate'");

    auto *sweep = app.add_subcommand("sweep", "Monte Carlo power or uncertainty sweep");
    sweep->add_option("scenario", scenario, "scenario JSON")->required();
    sweep->add_option("experiment", experiment, "experiment JSON")->required();

    auto *heatmap = app.add_subcommand("heatmap", "rate for every candidate spoofing position");
    heatmap->add_option("scenario", scenario, "scenario JSON")->required();
    heatmap->add_option("--min-angle-deg", min_deg, "sector start relative to the BS orientation");
    heatmap->add_option("--max-angle-deg", max_deg, "sector end");
    heatmap->add_option("--radius", grid.radius_m, "sector radius in meters");
    heatmap->add_option("--step", grid.step_m, "grid step in meters");
    heatmap->add_option("--cells", cells, "explicit candidates 'x,y;x,y;...' instead of the grid");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError &e)
    {
        app.exit(e);
        return kExitConfig;
    }

    try
    {
        if (spectra->parsed())
            return cmd_spectra(g, scenario, method);
        if (design->parsed())
            return cmd_design(g, scenario, method);
        if (estimate->parsed())
            return cmd_estimate(g, scenario, method, received, dump);
        if (locate->parsed())
            return cmd_locate(g, scenario, method, estimates);
        if (sweep->parsed())
            return cmd_sweep(g, scenario, experiment);
        if (heatmap->parsed())
        {
            grid.min_angle_rad = min_deg * kPi / 180.0;
            grid.max_angle_rad = max_deg * kPi / 180.0;
            return cmd_heatmap(g, scenario, grid, cells);
        }
    }
    catch (const ConfigError &e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    catch (const DimensionMismatch &e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    catch (const NumericalDegeneracy &e)
    {
        std::cerr << "numerical degeneracy: " << e.what() << '\n';
        return kExitNumerical;
    }
    catch (const DegenerateGeometry &e)
    {
        std::cerr << "degenerate geometry: " << e.what() << '\n';
        return kExitNumerical;
    }
    catch (const fs::filesystem_error &e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitConfig;
}
