// SPDX-License-Identifier: Apache-2.0
//
// pilotspoof: pilot-level location spoofing for single-anchor mmWave positioning
// ------------------------------------------------------------------------

#ifndef PILOTSPOOF_CONFIG_IO_HPP
#define PILOTSPOOF_CONFIG_IO_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pilotspoof/channel.hpp"
#include "pilotspoof/evalharness.hpp"
#include "pilotspoof/locate_comm.hpp"
#include "pilotspoof/scenario.hpp"
#include "pilotspoof/spoof_blind.hpp"

namespace pilotspoof
{
    inline constexpr const char *kToolVersion = "0.1.0";

    // Resolved scenario file (JSON). dB / dBm fields are converted to linear
    // units on load; unknown keys are rejected.
    struct ScenarioFile
    {
        ScenarioGeometry truth;
        std::optional<ScenarioGeometry> target;
        GainModelConfig gain;
        SystemConfig system;
        double noise_figure_db = 0.0;
        std::optional<FakePathPlan> fake_paths;
        std::string source; // path or "<string>"
    };

    ScenarioFile parse_scenario(const std::string &text, const std::string &source = "<string>");
    ScenarioFile load_scenario(const std::string &path);

    enum class SweepKind
    {
        Power,
        Uncertainty,
    };

    struct ExperimentFile
    {
        SweepKind kind = SweepKind::Power;
        std::vector<Method> methods{Method::NoSpoof, Method::Oht};
        std::vector<double> tx_power_dbm{15.0, 25.0, 35.0, 45.0};
        double uncertainty_tx_power_dbm = 35.0;
        std::vector<double> sigma_ue_m{0.0, 0.5, 1.0};
        double sigma_sp_m = 0.1;
        std::size_t trials = 50;
        std::size_t full_trials = 250;
        std::size_t full_subcarriers = 3300;
        CfarConfig cfar;
        double coverage_radius_m = 150.0;
        double dais_dtau_s = 15.0 / kSpeedOfLight;
        double dais_dphi_rad = 0.17;
        std::size_t alternating_iters = 10;
        std::string source;
    };

    ExperimentFile parse_experiment(const std::string &text, const std::string &source = "<string>");
    ExperimentFile load_experiment(const std::string &path);

    // Experiment built from a scenario (requires a spoof target) and sweep
    // settings; `full` switches K and T to the full-scale values.
    Experiment make_experiment(const ScenarioFile &sc, const ExperimentFile &ex, bool full);

    struct RunManifest
    {
        std::string command;
        std::uint64_t seed = 0;
        std::string output_dir;
        bool full = false;
        std::size_t threads = 1;
        std::vector<std::string> inputs;
        std::vector<std::string> outputs;
    };

    // manifest.json with the resolved scenario/experiment snapshot.
    void write_manifest(const std::string &dir, const RunManifest &m, const ScenarioFile *sc,
                        const ExperimentFile *ex);

    std::string read_text_file(const std::string &path);
} // namespace pilotspoof

#endif
