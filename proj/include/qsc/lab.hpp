#ifndef QSC_LAB_HPP
#define QSC_LAB_HPP

#include <cstdint>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qsc/dynamics.hpp"
#include "qsc/iit3.hpp"
#include "qsc/netcore.hpp"
#include "qsc/qiit.hpp"

// Scenario files, experiment dispatch and result persistence. File formats
// are documented in docs/formats.md.
namespace qsc::lab {

using json = nlohmann::json;

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// round to 12 significant digits; summaries are hashed after this rounding so
// reruns with the same config and seed hash identically
inline double round_sig(double x) {
    if (x == 0.0 || !std::isfinite(x)) return x == 0.0 ? 0.0 : x;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return std::strtod(buf, nullptr);
}

inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// --- network files ---

inline int unit_index(const std::vector<std::string>& names, const std::string& name) {
    for (std::size_t k = 0; k < names.size(); ++k)
        if (names[k] == name) return int(k);
    throw ValidationError("rule references unknown unit '" + name + "'");
}

inline BinaryNetwork network_from_json(const json& j) {
    if (!j.contains("units") || !j["units"].is_array() || j["units"].empty())
        throw ValidationError("network: 'units' must be a nonempty array of names");
    std::vector<std::string> names = j["units"].get<std::vector<std::string>>();
    if (int(names.size()) > kMaxUnits)
        throw ValidationError("network: more than 12 units");
    if (!j.contains("rules") || !j["rules"].is_array() || j["rules"].size() != names.size())
        throw ValidationError("network: 'rules' must list one rule per unit");

    std::vector<UnitRule> rules(names.size());
    std::vector<bool> seen(names.size(), false);
    for (const auto& rj : j["rules"]) {
        if (!rj.contains("unit") || !rj.contains("type"))
            throw ValidationError("rule: 'unit' and 'type' are required");
        const int u = unit_index(names, rj["unit"].get<std::string>());
        if (seen[std::size_t(u)]) throw ValidationError("rule: duplicate rule for unit");
        seen[std::size_t(u)] = true;
        const std::string type = rj["type"].get<std::string>();
        auto inputs = [&](std::size_t want) {
            if (!rj.contains("inputs") || rj["inputs"].size() != want)
                throw ValidationError("rule '" + type + "': needs " + std::to_string(want) +
                                      " inputs");
            std::vector<int> in;
            for (const auto& nm : rj["inputs"]) in.push_back(unit_index(names, nm));
            return in;
        };
        if (type == "copy") {
            rules[std::size_t(u)] = UnitRule::copy_of(inputs(1)[0]);
        } else if (type == "not") {
            rules[std::size_t(u)] = UnitRule::not_of(inputs(1)[0]);
        } else if (type == "and") {
            auto in = inputs(2);
            rules[std::size_t(u)] = UnitRule::and_gate(in[0], in[1]);
        } else if (type == "or") {
            auto in = inputs(2);
            rules[std::size_t(u)] = UnitRule::or_gate(in[0], in[1]);
        } else if (type == "xor") {
            auto in = inputs(2);
            rules[std::size_t(u)] = UnitRule::xor_gate(in[0], in[1]);
        } else if (type == "coin") {
            rules[std::size_t(u)] = UnitRule::coin(rj.value("p", 0.5));
        } else if (type == "table") {
            std::vector<int> in;
            if (rj.contains("inputs"))
                for (const auto& nm : rj["inputs"]) in.push_back(unit_index(names, nm));
            if (!rj.contains("p_on"))
                throw ValidationError("rule 'table': 'p_on' is required");
            rules[std::size_t(u)] =
                UnitRule::table(std::move(in), rj["p_on"].get<std::vector<double>>());
        } else {
            throw ValidationError("rule: unknown type '" + type + "'");
        }
    }
    for (std::size_t u = 0; u < names.size(); ++u)
        if (!seen[u]) throw ValidationError("network: unit '" + names[u] + "' has no rule");
    try {
        return BinaryNetwork(std::move(names), std::move(rules));
    } catch (const std::invalid_argument& e) {
        throw ValidationError(e.what());
    }
}

inline json network_to_json(const BinaryNetwork& net) {
    json j;
    j["units"] = net.unit_names();
    j["rules"] = json::array();
    for (int u = 0; u < net.n_units(); ++u) {
        json rj;
        rj["unit"] = net.unit_names()[std::size_t(u)];
        rj["type"] = "table";
        json in = json::array();
        for (int v : net.rule(u).inputs) in.push_back(net.unit_names()[std::size_t(v)]);
        rj["inputs"] = in;
        rj["p_on"] = net.rule(u).p_on;
        j["rules"].push_back(rj);
    }
    return j;
}

// --- scenarios ---

enum class ScenarioMode { Collapse, Ensemble, Zeno, Ruin };

struct Scenario {
    std::string name;
    ScenarioMode mode = ScenarioMode::Ensemble;
    json network_json;
    std::optional<std::string> initial_network_state;
    // initial quantum state: amplitude per basis-state label
    std::vector<std::pair<std::string, qcore::cx>> amplitudes;
    bool amplitudes_renormalized = false;
    // hamiltonian
    std::string h_type = "none"; // none | pauli_x | diag
    std::string h_unit;
    double h_omega = 1.0;
    std::vector<double> h_diag;
    dynamics::DynamicsConfig config;
    std::size_t trials = 1000;
    // zeno mode
    std::vector<double> zeno_intervals;
    // ruin mode
    int stake1 = 60, stake2 = 40;
    json raw;
};

inline dynamics::NoiseMode noise_mode_from(const std::string& s) {
    if (s == "independent") return dynamics::NoiseMode::Independent;
    if (s == "correlated") return dynamics::NoiseMode::Correlated;
    throw ValidationError("dynamics.noise_mode must be 'independent' or 'correlated'");
}

inline qiit::OperatorVariant variant_from(const std::string& s) {
    if (s == "combined") return qiit::OperatorVariant::Combined;
    if (s == "split") return qiit::OperatorVariant::Split;
    if (s == "phi_only") return qiit::OperatorVariant::PhiOnly;
    throw ValidationError("dynamics.operator_variant must be combined|split|phi_only");
}

inline iit3::ShapeMetric metric_from(const std::string& s) {
    if (s == "xemd") return iit3::ShapeMetric::Xemd;
    if (s == "literal") return iit3::ShapeMetric::Literal;
    throw ValidationError("dynamics.qshape_metric must be 'xemd' or 'literal'");
}

inline Scenario scenario_from_json(const json& j) {
    Scenario sc;
    sc.raw = j;
    sc.name = j.value("name", "unnamed");
    const std::string mode = j.value("mode", "ensemble");
    if (mode == "collapse") sc.mode = ScenarioMode::Collapse;
    else if (mode == "ensemble") sc.mode = ScenarioMode::Ensemble;
    else if (mode == "zeno") sc.mode = ScenarioMode::Zeno;
    else if (mode == "ruin") sc.mode = ScenarioMode::Ruin;
    else throw ValidationError("scenario: unknown mode '" + mode + "'");

    if (sc.mode != ScenarioMode::Ruin) {
        if (!j.contains("network")) throw ValidationError("scenario: 'network' is required");
        sc.network_json = j["network"];
        network_from_json(sc.network_json); // validate early
        if (sc.network_json.contains("state"))
            sc.initial_network_state = sc.network_json["state"].get<std::string>();
    }

    if (j.contains("initial_state")) {
        const auto& st = j["initial_state"];
        if (st.contains("basis_state")) {
            sc.amplitudes.push_back({st["basis_state"].get<std::string>(), qcore::cx(1, 0)});
        } else if (st.contains("amplitudes")) {
            for (const auto& a : st["amplitudes"]) {
                if (!a.contains("state"))
                    throw ValidationError("initial_state.amplitudes: 'state' missing");
                sc.amplitudes.push_back(
                    {a["state"].get<std::string>(),
                     qcore::cx(a.value("re", 0.0), a.value("im", 0.0))});
            }
        } else {
            throw ValidationError("initial_state: need 'basis_state' or 'amplitudes'");
        }
    }

    if (j.contains("hamiltonian")) {
        const auto& h = j["hamiltonian"];
        sc.h_type = h.value("type", "none");
        if (sc.h_type == "pauli_x") {
            if (!h.contains("unit")) throw ValidationError("hamiltonian.pauli_x: 'unit' missing");
            sc.h_unit = h["unit"].get<std::string>();
            sc.h_omega = h.value("omega", 1.0);
        } else if (sc.h_type == "diag") {
            sc.h_diag = h.at("values").get<std::vector<double>>();
        } else if (sc.h_type != "none") {
            throw ValidationError("hamiltonian: unknown type '" + sc.h_type + "'");
        }
    }

    if (j.contains("dynamics")) {
        const auto& d = j["dynamics"];
        sc.config.lambda = d.value("lambda", sc.config.lambda);
        sc.config.dt = d.value("dt", sc.config.dt);
        sc.config.t_max = d.value("t_max", sc.config.t_max);
        sc.config.seed = d.value("seed", sc.config.seed);
        sc.config.superselection_dt = d.value("superselection_dt", sc.config.superselection_dt);
        sc.config.emd_cutoff = d.value("emd_cutoff", sc.config.emd_cutoff);
        sc.config.g_distance_scale = d.value("g_distance_scale", sc.config.g_distance_scale);
        sc.config.sample_every = d.value("sample_every", sc.config.sample_every);
        if (d.contains("noise_mode"))
            sc.config.noise_mode = noise_mode_from(d["noise_mode"].get<std::string>());
        if (d.contains("operator_variant"))
            sc.config.operator_variant = variant_from(d["operator_variant"].get<std::string>());
        if (d.contains("qshape_metric"))
            sc.config.qshape_metric = metric_from(d["qshape_metric"].get<std::string>());
        try {
            sc.config.validate();
        } catch (const std::invalid_argument& e) {
            throw ValidationError(e.what());
        }
    }
    sc.trials = j.value("trials", std::size_t(1000));
    if (sc.mode == ScenarioMode::Zeno) {
        if (j.contains("zeno") && j["zeno"].contains("intervals"))
            sc.zeno_intervals = j["zeno"]["intervals"].get<std::vector<double>>();
        else
            sc.zeno_intervals = {sc.config.superselection_dt}; // single-interval run
        if (sc.zeno_intervals.empty())
            throw ValidationError("zeno scenario: 'zeno.intervals' must be nonempty");
    }
    if (sc.mode == ScenarioMode::Ruin) {
        if (j.contains("ruin")) {
            sc.stake1 = j["ruin"].value("stake1", 60);
            sc.stake2 = j["ruin"].value("stake2", 40);
            if (sc.stake1 < 0 || sc.stake2 < 0 || sc.stake1 + sc.stake2 <= 0)
                throw ValidationError("ruin: stakes must be positive");
        }
    }
    return sc;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open scenario file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("scenario parse error: ") + e.what());
    }
    // a scenario may reference its network by file, relative to itself
    if (j.contains("network_file") && !j.contains("network")) {
        const auto np = std::filesystem::path(path).parent_path() /
                        j["network_file"].get<std::string>();
        std::ifstream nin(np);
        if (!nin) throw ValidationError("cannot open network file: " + np.string());
        json nj;
        try {
            nin >> nj;
        } catch (const json::exception& e) {
            throw ValidationError(std::string("network parse error: ") + e.what());
        }
        j["network"] = nj;
    }
    return scenario_from_json(j);
}

// initial quantum state from the amplitude list; auto-normalizes drifts below
// 1e-3 (noted in the bundle), rejects anything worse
inline qcore::QuantumState build_initial_state(Scenario& sc, const BinaryNetwork& net) {
    const Eigen::Index dim = Eigen::Index(net.n_states());
    qcore::Vec v = qcore::Vec::Zero(dim);
    if (sc.amplitudes.empty()) {
        std::string lbl = sc.initial_network_state.value_or(std::string(net.n_units(), '0'));
        auto st = NetworkState::from_label(lbl);
        if (st.n_units() != net.n_units())
            throw ValidationError("initial state label length does not match unit count");
        v[Eigen::Index(st.index)] = 1.0;
        return qcore::QuantumState(std::move(v));
    }
    for (const auto& [lbl, amp] : sc.amplitudes) {
        auto st = NetworkState::from_label(lbl);
        if (st.n_units() != net.n_units())
            throw ValidationError("amplitude state '" + lbl + "' does not match unit count");
        v[Eigen::Index(st.index)] += amp;
    }
    const double norm = v.norm();
    if (std::abs(norm - 1.0) > 1e-3)
        throw ValidationError("initial amplitudes are not normalized (|norm-1| > 1e-3)");
    if (std::abs(norm - 1.0) > 1e-9) sc.amplitudes_renormalized = true;
    v /= norm;
    return qcore::QuantumState(std::move(v));
}

inline std::optional<qcore::Mat> build_hamiltonian(const Scenario& sc,
                                                   const BinaryNetwork& net) {
    const Eigen::Index dim = Eigen::Index(net.n_states());
    if (sc.h_type == "none") return std::nullopt;
    if (sc.h_type == "pauli_x") {
        const int u = unit_index(net.unit_names(), sc.h_unit);
        qcore::Mat H = qcore::Mat::Zero(dim, dim);
        for (Eigen::Index s = 0; s < dim; ++s)
            H(s ^ (Eigen::Index(1) << u), s) = sc.h_omega;
        return H;
    }
    if (sc.h_type == "diag") {
        if (Eigen::Index(sc.h_diag.size()) != dim)
            throw ValidationError("hamiltonian.diag: wrong length");
        qcore::Mat H = qcore::Mat::Zero(dim, dim);
        for (Eigen::Index s = 0; s < dim; ++s) H(s, s) = sc.h_diag[std::size_t(s)];
        return H;
    }
    throw ValidationError("unknown hamiltonian type");
}

// --- result bundles ---

struct ResultBundle {
    std::string scenario_name;
    json summary;                 // machine-readable, values rounded to 12 sig digits
    std::string summary_text;     // human-readable
    std::uint64_t config_hash = 0;
    std::filesystem::path out_dir;
    std::vector<std::string> series_files;
};

namespace detail {

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
}

inline std::string csv_escape_free(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

} // namespace detail

inline void persist_bundle(ResultBundle& bundle,
                           const std::vector<std::pair<std::string, std::string>>& series) {
    namespace fs = std::filesystem;
    fs::create_directories(bundle.out_dir / "series");
    detail::write_file(bundle.out_dir / "bundle.json", bundle.summary.dump(2) + "\n");
    detail::write_file(bundle.out_dir / "summary.txt", bundle.summary_text);
    for (const auto& [name, content] : series) {
        detail::write_file(bundle.out_dir / "series" / name, content);
        bundle.series_files.push_back(name);
    }
}

// state labels of a group, e.g. "{00,01,10}"
inline std::string group_label(const dynamics::EigenspacePartition& spaces, int g, int n) {
    std::string s = "{";
    for (std::size_t k = 0; k < spaces.members[std::size_t(g)].size(); ++k) {
        if (k) s += ",";
        s += state_label(spaces.members[std::size_t(g)][k], n);
    }
    return s + "}";
}

struct PreparedSystem {
    BinaryNetwork net;
    qiit::QuasiClassicalBasis basis;
    qiit::CollapseOperatorSet ops;
    dynamics::CollapseSystem system;
};

inline PreparedSystem prepare_system(Scenario& sc) {
    BinaryNetwork net = network_from_json(sc.network_json);
    auto basis = qiit::build_basis(net, {}, sc.config.qshape_metric);
    auto ops = qiit::build_operators(basis, sc.config.operator_variant);
    auto psi0 = build_initial_state(sc, net);
    auto H = build_hamiltonian(sc, net);
    auto system = dynamics::make_system(ops, basis, sc.config, std::move(psi0), std::move(H));
    return {std::move(net), std::move(basis), std::move(ops), std::move(system)};
}

// --- runners ---

inline ResultBundle run_scenario(Scenario sc, const std::filesystem::path& out_root) {
    const auto wall_start = std::chrono::steady_clock::now();
    ResultBundle bundle;
    bundle.scenario_name = sc.name;
    bundle.out_dir = out_root / sc.name;

    json summary;
    summary["scenario"] = sc.raw;
    std::ostringstream text;
    text << "scenario: " << sc.name << "\n";
    std::vector<std::pair<std::string, std::string>> series;

    if (sc.mode == ScenarioMode::Ruin) {
        auto res = dynamics::gamblers_ruin(sc.stake1, sc.stake2, sc.trials, sc.config.seed);
        summary["mode"] = "ruin";
        summary["stake1"] = sc.stake1;
        summary["stake2"] = sc.stake2;
        summary["trials"] = res.trials;
        summary["frequency1"] = round_sig(res.frequency1);
        summary["expected_frequency1"] = round_sig(double(sc.stake1) / (sc.stake1 + sc.stake2));
        summary["mean_duration"] = round_sig(res.mean_duration);
        text << "gamblers ruin " << sc.stake1 << "/" << sc.stake2 << ": player 1 won "
             << res.frequency1 << " of " << res.trials << " games (stake fraction "
             << double(sc.stake1) / (sc.stake1 + sc.stake2) << ")\n";
        std::ostringstream csv;
        csv << "stake1,stake2,trials,frequency1\n"
            << sc.stake1 << "," << sc.stake2 << "," << res.trials << ","
            << detail::csv_escape_free(round_sig(res.frequency1)) << "\n";
        series.push_back({"ruin.csv", csv.str()});
    } else if (sc.mode == ScenarioMode::Zeno) {
        auto prep = prepare_system(sc);
        auto H = build_hamiltonian(sc, prep.net);
        if (!H) throw ValidationError("zeno scenario needs a hamiltonian");
        qcore::HermitianOperator Hop(*H);
        summary["mode"] = "zeno";
        summary["intervals"] = json::array();
        std::ostringstream csv;
        csv << "interval,measurements,survival,analytic\n";
        for (double dt_meas : sc.zeno_intervals) {
            auto z = dynamics::zeno_run(Hop, prep.system.spaces, prep.system.psi0, dt_meas,
                                        sc.config.t_max, int(sc.trials), sc.config.seed);
            // two-level analytic reference: cos^{2N}(omega dt)
            const double analytic =
                std::pow(std::cos(sc.h_omega * dt_meas), 2.0 * z.measurements_per_run);
            json row;
            row["interval"] = round_sig(dt_meas);
            row["measurements"] = z.measurements_per_run;
            row["survival"] = round_sig(z.survival);
            row["analytic_two_level"] = round_sig(analytic);
            summary["intervals"].push_back(row);
            text << "zeno dt=" << dt_meas << " N=" << z.measurements_per_run
                 << " survival=" << z.survival << " analytic=" << analytic << "\n";
            csv << detail::csv_escape_free(round_sig(dt_meas)) << "," << z.measurements_per_run
                << "," << detail::csv_escape_free(round_sig(z.survival)) << ","
                << detail::csv_escape_free(round_sig(analytic)) << "\n";
        }
        series.push_back({"zeno.csv", csv.str()});
    } else if (sc.mode == ScenarioMode::Collapse) {
        auto prep = prepare_system(sc);
        auto rec = dynamics::run_trajectory(sc.config, prep.system, 0);
        summary["mode"] = "collapse";
        summary["collapse_outcome"] =
            rec.collapse_outcome >= 0
                ? json(state_label(std::uint32_t(rec.collapse_outcome), prep.net.n_units()))
                : json(nullptr);
        summary["collapse_time"] = rec.collapse_time >= 0 ? json(round_sig(rec.collapse_time))
                                                          : json(nullptr);
        summary["steps"] = rec.steps;
        if (rec.psd_warning) summary["psd_warning"] = rec.psd_note;
        text << "single trajectory: outcome="
             << (rec.collapse_outcome >= 0
                     ? state_label(std::uint32_t(rec.collapse_outcome), prep.net.n_units())
                     : std::string("NONE"))
             << " collapse_time=" << rec.collapse_time << "\n";
        std::ostringstream csv;
        csv << "t";
        for (int g = 0; g < prep.system.spaces.n_groups; ++g)
            csv << ",w" << group_label(prep.system.spaces, g, prep.net.n_units());
        csv << ",pre_norm\n";
        for (std::size_t k = 0; k < rec.times.size(); ++k) {
            csv << detail::csv_escape_free(round_sig(rec.times[k]));
            for (double w : rec.group_weights[k])
                csv << "," << detail::csv_escape_free(round_sig(w));
            csv << "," << detail::csv_escape_free(round_sig(rec.norms[k])) << "\n";
        }
        series.push_back({"trajectory.csv", csv.str()});

        if (!rec.state_weights.empty()) { // per-basis-state snapshots
            std::ostringstream scsv;
            scsv << "t";
            for (std::uint32_t s = 0; s < prep.net.n_states(); ++s)
                scsv << ",w_" << state_label(s, prep.net.n_units());
            scsv << "\n";
            for (std::size_t k = 0; k < rec.times.size(); ++k) {
                scsv << detail::csv_escape_free(round_sig(rec.times[k]));
                for (double w : rec.state_weights[k])
                    scsv << "," << detail::csv_escape_free(round_sig(w));
                scsv << "\n";
            }
            series.push_back({"states.csv", scsv.str()});
        }
    } else { // Ensemble
        auto prep = prepare_system(sc);
        auto res = dynamics::run_ensemble(sc.config, prep.system, sc.trials);
        summary["mode"] = "ensemble";
        summary["trials"] = res.trials;
        summary["outcomes"] = json::array();
        for (const auto& o : res.outcomes) {
            json row;
            row["state"] = o.state >= 0
                               ? json(state_label(std::uint32_t(o.state), prep.net.n_units()))
                               : json(nullptr);
            row["count"] = o.count;
            row["frequency"] = round_sig(o.frequency);
            row["ci95_half_width"] = round_sig(o.ci_half_width);
            summary["outcomes"].push_back(row);
            text << "outcome "
                 << (o.state >= 0 ? state_label(std::uint32_t(o.state), prep.net.n_units())
                                  : std::string("NONE"))
                 << ": " << o.frequency << " +- " << o.ci_half_width << " (" << o.count
                 << ")\n";
        }
        summary["median_collapse_time"] =
            res.median_collapse_time >= 0 ? json(round_sig(res.median_collapse_time))
                                          : json(nullptr);
        if (res.psd_warning) summary["psd_warning"] = res.psd_note;
        text << "median collapse time: " << res.median_collapse_time << "\n";

        std::ostringstream csv;
        csv << "t";
        for (int g = 0; g < prep.system.spaces.n_groups; ++g)
            csv << ",mean_w" << group_label(prep.system.spaces, g, prep.net.n_units())
                << ",se_w" << group_label(prep.system.spaces, g, prep.net.n_units());
        csv << "\n";
        for (std::size_t k = 0; k < res.times.size(); ++k) {
            csv << detail::csv_escape_free(round_sig(res.times[k]));
            for (std::size_t g = 0; g < res.mean_group_weights[k].size(); ++g)
                csv << "," << detail::csv_escape_free(round_sig(res.mean_group_weights[k][g]))
                    << "," << detail::csv_escape_free(round_sig(res.se_group_weights[k][g]));
            csv << "\n";
        }
        series.push_back({"ensemble.csv", csv.str()});

        std::ostringstream ct;
        ct << "collapse_time\n";
        for (double t : res.collapse_times_sorted)
            ct << detail::csv_escape_free(round_sig(t)) << "\n";
        series.push_back({"collapse_times.csv", ct.str()});
    }

    if (sc.amplitudes_renormalized)
        summary["notice"] = "initial amplitudes were renormalized (drift < 1e-3)";
    bundle.summary_text = text.str();
    bundle.config_hash = fnv1a(bundle.summary_text + summary.dump());
    summary["config_hash"] = bundle.config_hash;
    bundle.summary = summary;
    persist_bundle(bundle, series);

    // wall-clock metadata lives outside the hashed summary so identical
    // (config, seed) reruns stay byte-identical in bundle.json and series/
    {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start)
                .count();
        json meta;
        meta["wall_clock_seconds"] = secs;
        meta["finished_unix"] = std::time(nullptr);
        detail::write_file(bundle.out_dir / "meta.json", meta.dump(2) + "\n");
    }
    return bundle;
}

inline ResultBundle run_scenario_file(const std::string& path,
                                      const std::filesystem::path& out_root) {
    return run_scenario(load_scenario(path), out_root);
}

// --- listing and validation ---

inline std::vector<std::string> list_scenarios(const std::filesystem::path& dir) {
    std::vector<std::string> names;
    if (!std::filesystem::is_directory(dir)) return names;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".json") names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

struct ValidationReport {
    bool ok = false;
    std::vector<std::string> errors;
};

inline ValidationReport validate_scenario(const std::string& path) {
    ValidationReport rep;
    try {
        Scenario sc = load_scenario(path);
        if (sc.mode != ScenarioMode::Ruin) {
            BinaryNetwork net = network_from_json(sc.network_json);
            build_initial_state(sc, net);
            build_hamiltonian(sc, net);
        }
        rep.ok = true;
    } catch (const std::exception& e) {
        rep.errors.push_back(e.what());
    }
    return rep;
}

} // namespace qsc::lab

#endif
