// SPDX-License-Identifier: Apache-2.0
//
// pilotspoof: pilot-level location spoofing for single-anchor mmWave positioning
// ------------------------------------------------------------------------

#ifndef PILOTSPOOF_EVALHARNESS_HPP
#define PILOTSPOOF_EVALHARNESS_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pilotspoof/channel.hpp"
#include "pilotspoof/estimate.hpp"
#include "pilotspoof/locate_comm.hpp"
#include "pilotspoof/scenario.hpp"
#include "pilotspoof/spoof_blind.hpp"

namespace pilotspoof
{
    enum class Method
    {
        NoSpoof,
        Oht,   // oracle full-tensor pilot
        Bht,   // blind Kronecker pilot with fake-path delays
        AobHt, // blind angle-only pilot (x_d = 1)
        Dais,  // nominal pilot, estimates shifted by fixed offsets
    };

    const char *to_string(Method m);
    // Throws ConfigError listing the accepted tags.
    Method parse_method(const std::string &tag);

    // Everything a trial needs apart from the seed.
    struct Experiment
    {
        ScenarioGeometry truth;
        ScenarioGeometry target;
        GainModelConfig gain;
        SystemConfig system;
        Codebooks books;
        FlexConfig flex;
        LocateConfig locate;
        AlternatingConfig alternating;
        double dais_dtau_s = 15.0 / kSpeedOfLight;
        double dais_dphi_rad = 0.17;
        double sigma_ue_m = 0.0; // design-side position uncertainty for O-HT
        double sigma_sp_m = 0.0;

        // books rebuilt from system.
        void rebuild_codebooks();
        // ||p_target - p_true||
        double spoof_offset_m() const;
    };

    struct TrialOutcome
    {
        std::size_t trial_id = 0;
        Method method = Method::NoSpoof;
        PositionEstimate position;
        double eps_est_m = std::numeric_limits<double>::quiet_NaN();
        double eps_dev_m = std::numeric_limits<double>::quiet_NaN();
        // Deviation of the two earliest estimated paths from the two earliest
        // desired paths (truth for no_spoof/dais, target otherwise); NaN if missing.
        double dev_aoa_rad[2] = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
        double dev_aod_rad[2] = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
        double dev_tdoa_s = std::numeric_limits<double>::quiet_NaN();
        double rate_bps = 0.0;
        std::size_t detected_paths = 0;
        std::string error; // numerical failure inside the trial, empty otherwise

        bool valid() const { return error.empty() && position.valid(); }
    };

    // Channel, pilot, received tensor, estimation, localisation and rate for one
    // trial. Gain phases, noise and design perturbations come from separate
    // streams of TrialRng(seed, trial_id), so methods share channels and noise.
    TrialOutcome run_trial(const Experiment &exp, Method method, std::uint64_t seed, std::size_t trial_id);

    // Shifts every delay by dtau and every AoD by dphi.
    EstimationResult dais_baseline(const EstimationResult &est, double dtau_s, double dphi_rad);

    // sqrt(mean(x^2)); NaN entries skipped. NaN for an empty input.
    double rmse(std::span<const double> values);

    struct SweepPoint
    {
        double axis = 0.0;
        Method method = Method::NoSpoof;
        std::size_t total = 0;
        std::size_t valid = 0;
        double rmse_eps_est_m = 0.0;
        double rmse_eps_dev_m = 0.0;
        double rmse_aoa_rad[2] = {0.0, 0.0};
        double rmse_aod_rad[2] = {0.0, 0.0};
        double rmse_tdoa_s = 0.0;
        double mean_rate_bps = 0.0;
    };

    struct SweepRecord
    {
        double axis = 0.0;
        TrialOutcome outcome;
    };

    struct SweepReport
    {
        std::string axis_name;
        double eps_off_m = 0.0;
        std::vector<SweepPoint> points; // axis-major, methods in the requested order
        std::vector<SweepRecord> trials;

        const SweepPoint &at(double axis, Method m) const;
    };

    // Runs trials 0..T-1 for every (axis value, method); results do not depend
    // on the thread count.
    SweepReport power_sweep(const Experiment &exp, const std::vector<Method> &methods,
                            const std::vector<double> &tx_power_dbm, std::size_t trials, std::uint64_t seed,
                            std::size_t threads = 1);

    // Same trials as power_sweep; the angle/TDoA deviation columns are the output of interest.
    SweepReport measurement_deviation_sweep(const Experiment &exp, const std::vector<Method> &methods,
                                            const std::vector<double> &tx_power_dbm, std::size_t trials,
                                            std::uint64_t seed, std::size_t threads = 1);

    // O-HT designed from a perturbed geometry (UE sigma from the list, scatter
    // points sigma_sp_m) and evaluated on the true channel.
    SweepReport uncertainty_sweep(const Experiment &exp, const std::vector<double> &sigma_ue_m, double sigma_sp_m,
                                  std::size_t trials, std::uint64_t seed, std::size_t threads = 1);

    void write_trials_csv(std::ostream &os, const SweepReport &rep);
    void write_summary_csv(std::ostream &os, const SweepReport &rep);
} // namespace pilotspoof

#endif
