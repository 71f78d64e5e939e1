// SPDX-License-Identifier: Apache-2.0
//
// pilotspoof: pilot-level location spoofing for single-anchor mmWave positioning
// ------------------------------------------------------------------------

#include "pilotspoof/config_io.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace pilotspoof
{
    using nlohmann::json;

    namespace
    {
        [[noreturn]] void fail(const std::string &source, const std::string &where, const std::string &what)
        {
            throw ConfigError(source + ": " + (where.empty() ? "" : where + ": ") + what);
        }

        void check_keys(const json &obj, std::initializer_list<const char *> allowed, const std::string &source,
                        const std::string &where)
        {
            if (!obj.is_object())
                fail(source, where, "expected an object");
            for (auto it = obj.begin(); it != obj.end(); ++it)
            {
                bool ok = false;
                for (const char *k : allowed)
                    ok = ok || it.key() == k;
                if (!ok)
                    fail(source, where, "unknown key '" + it.key() + "'");
            }
        }

        std::string join(const std::string &where, const std::string &key)
        {
            return where.empty() ? key : where + "." + key;
        }

        double number(const json &obj, const char *key, const std::string &source, const std::string &where,
                      std::optional<double> def = std::nullopt)
        {
            if (!obj.contains(key))
            {
                if (def)
                    return *def;
                fail(source, join(where, key), "missing required number");
            }
            const json &v = obj.at(key);
            if (!v.is_number())
                fail(source, join(where, key), "expected a number");
            const double d = v.get<double>();
            if (!std::isfinite(d))
                fail(source, join(where, key), "must be finite");
            return d;
        }

        std::size_t count(const json &obj, const char *key, const std::string &source, const std::string &where,
                          std::size_t def)
        {
            if (!obj.contains(key))
                return def;
            const json &v = obj.at(key);
            if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
                fail(source, join(where, key), "expected a nonnegative integer");
            return v.get<std::size_t>();
        }

        Vec2 point(const json &v, const std::string &source, const std::string &where)
        {
            if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
                fail(source, where, "expected [x, y]");
            return {v[0].get<double>(), v[1].get<double>()};
        }

        std::vector<Vec2> points(const json &obj, const char *key, const std::string &source, const std::string &where)
        {
            std::vector<Vec2> out;
            if (!obj.contains(key))
                return out;
            const json &arr = obj.at(key);
            if (!arr.is_array())
                fail(source, join(where, key), "expected a list of [x, y]");
            for (std::size_t i = 0; i < arr.size(); ++i)
                out.push_back(point(arr[i], source, join(where, key) + "[" + std::to_string(i) + "]"));
            return out;
        }

        Pose2D pose(const json &obj, const std::string &source, const std::string &where, bool with_bias)
        {
            if (with_bias)
                check_keys(obj, {"position", "orientation", "clock_bias_s"}, source, where);
            else
                check_keys(obj, {"position", "orientation"}, source, where);
            if (!obj.contains("position"))
                fail(source, join(where, "position"), "missing");
            return Pose2D(point(obj.at("position"), source, join(where, "position")),
                          number(obj, "orientation", source, where, 0.0));
        }

        json parse_json(const std::string &text, const std::string &source)
        {
            try
            {
                return json::parse(text);
            }
            catch (const json::parse_error &e)
            {
                throw ConfigError(source + ": " + e.what());
            }
        }

        json pose_json(const Pose2D &p)
        {
            return {{"position", {p.position().x(), p.position().y()}}, {"orientation", p.orientation()}};
        }

        json points_json(const std::vector<Vec2> &pts)
        {
            json a = json::array();
            for (const Vec2 &p : pts)
                a.push_back({p.x(), p.y()});
            return a;
        }
    } // namespace

    std::string read_text_file(const std::string &path)
    {
        std::ifstream is(path);
        if (!is)
            throw ConfigError("cannot open '" + path + "'");
        std::ostringstream ss;
        ss << is.rdbuf();
        return ss.str();
    }

    ScenarioFile parse_scenario(const std::string &text, const std::string &source)
    {
        const json j = parse_json(text, source);
        check_keys(j, {"bs", "ue", "scatter_points", "gain", "carrier_hz", "system", "spoof"}, source, "");
        ScenarioFile sc;
        sc.source = source;
        if (!j.contains("bs") || !j.contains("ue"))
            fail(source, "", "both 'bs' and 'ue' are required");

        sc.truth.bs = pose(j.at("bs"), source, "bs", false);
        sc.truth.ue = pose(j.at("ue"), source, "ue", true);
        sc.truth.clock_bias_s = number(j.at("ue"), "clock_bias_s", source, "ue", 0.0);
        sc.truth.scatter_points = points(j, "scatter_points", source, "");

        const double carrier = number(j, "carrier_hz", source, "", 27.8e9);
        const json g = j.value("gain", json::object());
        check_keys(g, {"tx_power_dbm", "g_bs_dbi", "g_ue_dbi", "rcs_m2", "random_phase_seed"}, source, "gain");
        const double tx_dbm = number(g, "tx_power_dbm", source, "gain", 35.0);
        sc.gain.tx_power_w = dbm_to_watt(tx_dbm);
        sc.gain.g_bs_lin = db_to_lin(number(g, "g_bs_dbi", source, "gain", 7.0));
        sc.gain.g_ue_lin = db_to_lin(number(g, "g_ue_dbi", source, "gain", 3.0));
        sc.gain.rcs_m2 = number(g, "rcs_m2", source, "gain", 50.0);
        sc.gain.random_phase_seed = count(g, "random_phase_seed", source, "gain", 0);
        sc.gain.carrier_hz = carrier;

        const json s = j.value("system", json::object());
        check_keys(s,
                   {"n_rx", "n_tx", "n_combiners", "n_precoders", "n_subcarriers", "subcarrier_spacing_hz",
                    "noise_psd_dbm_per_hz", "noise_figure_db", "codebook", "codebook_seed"},
                   source, "system");
        SystemConfig &cfg = sc.system;
        cfg.n_rx = count(s, "n_rx", source, "system", cfg.n_rx);
        cfg.n_tx = count(s, "n_tx", source, "system", cfg.n_tx);
        cfg.n_combiners = count(s, "n_combiners", source, "system", cfg.n_rx);
        cfg.n_precoders = count(s, "n_precoders", source, "system", cfg.n_tx);
        cfg.n_subcarriers = count(s, "n_subcarriers", source, "system", cfg.n_subcarriers);
        cfg.subcarrier_spacing_hz = number(s, "subcarrier_spacing_hz", source, "system", cfg.subcarrier_spacing_hz);
        cfg.carrier_hz = carrier;
        sc.noise_figure_db = number(s, "noise_figure_db", source, "system", 0.0);
        const double psd_dbm = number(s, "noise_psd_dbm_per_hz", source, "system", kThermalNoiseDbmPerHz);
        cfg.noise_psd_w_per_hz = dbm_to_watt(psd_dbm) * db_to_lin(sc.noise_figure_db);
        cfg.tx_power_w = sc.gain.tx_power_w;
        if (s.contains("codebook"))
        {
            const json &cb = s.at("codebook");
            if (cb == "dft")
                cfg.codebook = CodebookKind::Dft;
            else if (cb == "random")
                cfg.codebook = CodebookKind::Random;
            else
                fail(source, "system.codebook", "expected \"dft\" or \"random\"");
        }
        cfg.codebook_seed = count(s, "codebook_seed", source, "system", 0);

        if (j.contains("spoof"))
        {
            const json &sp = j.at("spoof");
            check_keys(sp, {"ue", "scatter_points", "fake_paths"}, source, "spoof");
            if (!sp.contains("ue"))
                fail(source, "spoof", "'ue' is required");
            ScenarioGeometry t = sc.truth;
            t.ue = pose(sp.at("ue"), source, "spoof.ue", false);
            t.scatter_points = points(sp, "scatter_points", source, "spoof");
            sc.target = t;
            if (sp.contains("fake_paths"))
            {
                const json &fp = sp.at("fake_paths");
                if (!fp.is_array())
                    fail(source, "spoof.fake_paths", "expected a list");
                FakePathPlan plan;
                plan.amplitudes.resize(static_cast<Eigen::Index>(fp.size()));
                for (std::size_t i = 0; i < fp.size(); ++i)
                {
                    const std::string w = "spoof.fake_paths[" + std::to_string(i) + "]";
                    check_keys(fp[i], {"offset_s", "amp_re", "amp_im"}, source, w);
                    plan.delay_offsets_s.push_back(number(fp[i], "offset_s", source, w));
                    plan.amplitudes(static_cast<Eigen::Index>(i)) =
                        cd(number(fp[i], "amp_re", source, w, 1.0), number(fp[i], "amp_im", source, w, 0.0));
                }
                try
                {
                    plan.validate();
                }
                catch (const ConfigError &e)
                {
                    fail(source, "spoof.fake_paths", e.what());
                }
                sc.fake_paths = plan;
            }
        }

        try
        {
            sc.truth.validate();
            if (sc.target)
                sc.target->validate();
            sc.gain.validate();
            sc.system.validate();
        }
        catch (const ConfigError &e)
        {
            fail(source, "", e.what());
        }
        catch (const DegenerateGeometry &e)
        {
            fail(source, "", e.what());
        }
        return sc;
    }

    ScenarioFile load_scenario(const std::string &path)
    {
        return parse_scenario(read_text_file(path), path);
    }

    ExperimentFile parse_experiment(const std::string &text, const std::string &source)
    {
        const json j = parse_json(text, source);
        check_keys(j,
                   {"kind", "methods", "tx_power_dbm", "uncertainty_tx_power_dbm", "sigma_ue_m", "sigma_sp_m", "trials",
                    "full_trials", "full_subcarriers", "cfar", "coverage_radius_m", "dais", "alternating_iters"},
                   source, "");
        ExperimentFile ex;
        ex.source = source;
        if (j.contains("kind"))
        {
            const json &k = j.at("kind");
            if (k == "power")
                ex.kind = SweepKind::Power;
            else if (k == "uncertainty")
                ex.kind = SweepKind::Uncertainty;
            else
                fail(source, "kind", "expected \"power\" or \"uncertainty\"");
        }
        if (j.contains("methods"))
        {
            const json &m = j.at("methods");
            if (!m.is_array() || m.empty())
                fail(source, "methods", "expected a nonempty list of method tags");
            ex.methods.clear();
            for (const json &t : m)
            {
                if (!t.is_string())
                    fail(source, "methods", "expected strings");
                try
                {
                    ex.methods.push_back(parse_method(t.get<std::string>()));
                }
                catch (const ConfigError &e)
                {
                    fail(source, "methods", e.what());
                }
            }
        }
        auto number_list = [&](const char *key, std::vector<double> &dst)
        {
            if (!j.contains(key))
                return;
            const json &a = j.at(key);
            if (!a.is_array() || a.empty())
                fail(source, key, "expected a nonempty list of numbers");
            dst.clear();
            for (const json &v : a)
            {
                if (!v.is_number())
                    fail(source, key, "expected numbers");
                dst.push_back(v.get<double>());
            }
        };
        number_list("tx_power_dbm", ex.tx_power_dbm);
        number_list("sigma_ue_m", ex.sigma_ue_m);
        ex.uncertainty_tx_power_dbm = number(j, "uncertainty_tx_power_dbm", source, "", ex.uncertainty_tx_power_dbm);
        ex.sigma_sp_m = number(j, "sigma_sp_m", source, "", ex.sigma_sp_m);
        ex.trials = count(j, "trials", source, "", ex.trials);
        ex.full_trials = count(j, "full_trials", source, "", ex.full_trials);
        ex.full_subcarriers = count(j, "full_subcarriers", source, "", ex.full_subcarriers);
        ex.coverage_radius_m = number(j, "coverage_radius_m", source, "", ex.coverage_radius_m);
        ex.alternating_iters = count(j, "alternating_iters", source, "", ex.alternating_iters);
        if (j.contains("cfar"))
        {
            const json &c = j.at("cfar");
            check_keys(c, {"guard_cells", "training_cells", "pfa"}, source, "cfar");
            ex.cfar.guard_cells = count(c, "guard_cells", source, "cfar", ex.cfar.guard_cells);
            ex.cfar.training_cells = count(c, "training_cells", source, "cfar", ex.cfar.training_cells);
            ex.cfar.pfa = number(c, "pfa", source, "cfar", ex.cfar.pfa);
        }
        if (j.contains("dais"))
        {
            const json &d = j.at("dais");
            check_keys(d, {"dtau_s", "dphi_rad"}, source, "dais");
            ex.dais_dtau_s = number(d, "dtau_s", source, "dais", ex.dais_dtau_s);
            ex.dais_dphi_rad = number(d, "dphi_rad", source, "dais", ex.dais_dphi_rad);
        }
        if (ex.trials < 1 || ex.full_trials < 1)
            fail(source, "trials", "must be >= 1");
        if (ex.sigma_sp_m < 0.0)
            fail(source, "sigma_sp_m", "must be nonnegative");
        for (double s : ex.sigma_ue_m)
            if (s < 0.0)
                fail(source, "sigma_ue_m", "must be nonnegative");
        try
        {
            ex.cfar.validate();
        }
        catch (const ConfigError &e)
        {
            fail(source, "cfar", e.what());
        }
        return ex;
    }

    ExperimentFile load_experiment(const std::string &path)
    {
        return parse_experiment(read_text_file(path), path);
    }

    Experiment make_experiment(const ScenarioFile &sc, const ExperimentFile &ex, bool full)
    {
        if (!sc.target)
            throw ConfigError(sc.source + ": a 'spoof' section is required for experiments");
        Experiment e;
        e.truth = sc.truth;
        e.target = *sc.target;
        e.gain = sc.gain;
        e.system = sc.system;
        if (full)
            e.system.n_subcarriers = ex.full_subcarriers;
        e.system.validate();
        e.flex.cfar = ex.cfar;
        e.locate.coverage_radius_m = ex.coverage_radius_m;
        e.alternating.max_iters = ex.alternating_iters;
        e.dais_dtau_s = ex.dais_dtau_s;
        e.dais_dphi_rad = ex.dais_dphi_rad;
        e.rebuild_codebooks();
        return e;
    }

    void write_manifest(const std::string &dir, const RunManifest &m, const ScenarioFile *sc,
                        const ExperimentFile *ex)
    {
        json j;
        j["command"] = m.command;
        j["tool_version"] = kToolVersion;
        j["seed"] = m.seed;
        j["output_dir"] = m.output_dir;
        j["full"] = m.full;
        j["threads"] = m.threads;
        j["inputs"] = m.inputs;
        j["outputs"] = m.outputs;
        if (sc)
        {
            json s;
            s["source"] = sc->source;
            s["bs"] = pose_json(sc->truth.bs);
            s["ue"] = pose_json(sc->truth.ue);
            s["ue"]["clock_bias_s"] = sc->truth.clock_bias_s;
            s["scatter_points"] = points_json(sc->truth.scatter_points);
            s["gain"] = {{"tx_power_w", sc->gain.tx_power_w},
                         {"g_bs_lin", sc->gain.g_bs_lin},
                         {"g_ue_lin", sc->gain.g_ue_lin},
                         {"rcs_m2", sc->gain.rcs_m2},
                         {"random_phase_seed", sc->gain.random_phase_seed}};
            s["carrier_hz"] = sc->system.carrier_hz;
            const SystemConfig &c = sc->system;
            s["system"] = {{"n_rx", c.n_rx},
                           {"n_tx", c.n_tx},
                           {"n_combiners", c.n_combiners},
                           {"n_precoders", c.n_precoders},
                           {"n_subcarriers", c.n_subcarriers},
                           {"subcarrier_spacing_hz", c.subcarrier_spacing_hz},
                           {"noise_psd_w_per_hz", c.noise_psd_w_per_hz},
                           {"tx_power_w", c.tx_power_w},
                           {"codebook", c.codebook == CodebookKind::Dft ? "dft" : "random"},
                           {"codebook_seed", c.codebook_seed}};
            if (sc->target)
                s["spoof"] = {{"ue", pose_json(sc->target->ue)},
                              {"scatter_points", points_json(sc->target->scatter_points)}};
            j["scenario"] = s;
        }
        if (ex)
        {
            json e;
            e["source"] = ex->source;
            e["kind"] = ex->kind == SweepKind::Power ? "power" : "uncertainty";
            std::vector<std::string> tags;
            for (Method mm : ex->methods)
                tags.emplace_back(to_string(mm));
            e["methods"] = tags;
            e["tx_power_dbm"] = ex->tx_power_dbm;
            e["uncertainty_tx_power_dbm"] = ex->uncertainty_tx_power_dbm;
            e["sigma_ue_m"] = ex->sigma_ue_m;
            e["sigma_sp_m"] = ex->sigma_sp_m;
            e["trials"] = m.full ? ex->full_trials : ex->trials;
            e["n_subcarriers"] = m.full ? ex->full_subcarriers : (sc ? sc->system.n_subcarriers : 0);
            e["cfar"] = {{"guard_cells", ex->cfar.guard_cells},
                         {"training_cells", ex->cfar.training_cells},
                         {"pfa", ex->cfar.pfa}};
            e["coverage_radius_m"] = ex->coverage_radius_m;
            e["dais"] = {{"dtau_s", ex->dais_dtau_s}, {"dphi_rad", ex->dais_dphi_rad}};
            e["alternating_iters"] = ex->alternating_iters;
            j["experiment"] = e;
        }
        const std::filesystem::path p = std::filesystem::path(dir) / "manifest.json";
        std::ofstream os(p);
        if (!os)
            throw ConfigError("cannot write " + p.string());
        os << j.dump(2) << '\n';
    }
} // namespace pilotspoof
