// qshape-collapse: command-line laboratory for Q-shape collapse models.
// Subcommands: phi qshape emd operators collapse ensemble zeno ruin run
//              validate list
// Exit codes: 0 success, 1 validation error, 2 runtime error.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "qsc/lab.hpp"
#include "qsc/qshape_metric.hpp"

using nlohmann::json;
namespace fs = std::filesystem;
using namespace qsc;

namespace {

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw lab::ValidationError("cannot open file: " + path);
    json j;
    in >> j;
    return j;
}

std::pair<BinaryNetwork, NetworkState> load_net_state(const std::string& path,
                                                      std::string state_override) {
    json j = load_json(path);
    BinaryNetwork net = lab::network_from_json(j);
    std::string lbl = state_override;
    if (lbl.empty()) {
        if (!j.contains("state"))
            throw lab::ValidationError("no state given: add \"state\" to the file or --state");
        lbl = j["state"].get<std::string>();
    }
    NetworkState st = NetworkState::from_label(lbl);
    if (st.n_units() != net.n_units())
        throw lab::ValidationError("state length does not match unit count");
    return {std::move(net), std::move(st)};
}

json units_json(const BinaryNetwork& net, const iit3::Units& us) {
    json a = json::array();
    for (int u : us) a.push_back(net.unit_names()[std::size_t(u)]);
    return a;
}

json vec_label_order(const std::vector<double>& v, int n) {
    json a = json::array();
    for (double x : to_label_order(v, n)) a.push_back(lab::round_sig(x));
    return a;
}

json qshape_json(const BinaryNetwork& net, const iit3::QShape& q) {
    json j;
    j["state"] = q.system_state.label();
    j["dimension"] = q.dimension();
    j["state_order"] = [&] {
        json a = json::array();
        for (auto idx : label_order(net.n_units())) a.push_back(state_label(idx, net.n_units()));
        return a;
    }();
    j["mechanisms"] = json::array();
    for (const auto& p : q.points) {
        json m;
        m["mechanism"] = units_json(net, p.mechanism);
        m["phi"] = lab::round_sig(p.phi);
        m["phi_cause"] = lab::round_sig(p.phi_cause);
        m["phi_effect"] = lab::round_sig(p.phi_effect);
        m["core_cause"] = units_json(net, p.core_cause);
        m["core_effect"] = units_json(net, p.core_effect);
        m["effect_location"] = vec_label_order(p.effect_location, net.n_units());
        m["cause_location"] = vec_label_order(p.cause_location, net.n_units());
        j["mechanisms"].push_back(m);
    }
    return j;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Q-shape collapse laboratory"};
    app.require_subcommand(1);

    std::string net_path, state, state_b, scenario_path, out_dir = "out";
    std::string dist_a, dist_b, metric_name = "xemd", variant_name = "combined";
    std::string format = "json", scen_dir = "scenarios";
    bool dump_plan = false;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t trials = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", out_dir, "output directory for result bundles");
        cmd->add_option("--format", format, "stdout format: json|csv")
            ->check(CLI::IsMember({"json", "csv"}));
        auto* s = cmd->add_option("--seed", seed, "override the scenario seed");
        s->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--trials", trials, "override the scenario trial count");
    };

    auto* phi_cmd = app.add_subcommand("phi", "mechanism phi table and system Phi");
    phi_cmd->add_option("network", net_path, "network spec file")->required();
    phi_cmd->add_option("--state", state, "state label, e.g. 10");
    phi_cmd->add_option("--metric", metric_name, "Q-shape metric: xemd|literal")
        ->check(CLI::IsMember({"xemd", "literal"}));

    auto* qshape_cmd = app.add_subcommand("qshape", "full Q-shape of a network state");
    qshape_cmd->add_option("network", net_path, "network spec file")->required();
    qshape_cmd->add_option("--state", state, "state label");

    auto* emd_cmd = app.add_subcommand("emd", "earth mover's distance");
    emd_cmd->add_option("a", dist_a, "distribution file (or network file with --state-a)")
        ->required();
    emd_cmd->add_option("b", dist_b, "distribution file (omit when using states)");
    emd_cmd->add_option("--state-a", state, "first network state (Q-shape distance mode)");
    emd_cmd->add_option("--state-b", state_b, "second network state");
    emd_cmd->add_flag("--plan", dump_plan, "dump the transport plan");

    auto* ops_cmd = app.add_subcommand("operators", "collapse-operator census");
    ops_cmd->add_option("network", net_path, "network spec file")->required();
    ops_cmd->add_option("--variant", variant_name, "combined|split|phi_only")
        ->check(CLI::IsMember({"combined", "split", "phi_only"}));

    auto* collapse_cmd = app.add_subcommand("collapse", "single stochastic trajectory");
    collapse_cmd->add_option("scenario", scenario_path, "scenario file")->required();
    add_common(collapse_cmd);

    auto* ens_cmd = app.add_subcommand("ensemble", "trajectory ensemble statistics");
    ens_cmd->add_option("scenario", scenario_path, "scenario file")->required();
    add_common(ens_cmd);

    auto* zeno_cmd = app.add_subcommand("zeno", "repeated-measurement survival sweep");
    zeno_cmd->add_option("scenario", scenario_path, "scenario file")->required();
    add_common(zeno_cmd);

    auto* ruin_cmd = app.add_subcommand("ruin", "gambler's ruin reference process");
    ruin_cmd->add_option("scenario", scenario_path, "scenario file")->required();
    add_common(ruin_cmd);

    auto* run_cmd = app.add_subcommand("run", "run a scenario in its own mode");
    run_cmd->add_option("scenario", scenario_path, "scenario file")->required();
    add_common(run_cmd);

    auto* val_cmd = app.add_subcommand("validate", "validate a scenario file");
    val_cmd->add_option("scenario", scenario_path, "scenario file")->required();

    auto* list_cmd = app.add_subcommand("list", "list bundled scenarios");
    list_cmd->add_option("--dir", scen_dir, "scenario directory");

    CLI11_PARSE(app, argc, argv);

    auto metric = metric_name == "literal" ? iit3::ShapeMetric::Literal
                                           : iit3::ShapeMetric::Xemd;

    if (phi_cmd->parsed()) {
        auto [net, st] = load_net_state(net_path, state);
        auto res = iit3::big_phi_full(net, st, metric);
        json j;
        j["state"] = st.label();
        j["metric"] = metric_name;
        j["phi_table"] = json::array();
        for (const auto& p : res.shape.points) {
            json m;
            m["mechanism"] = units_json(net, p.mechanism);
            m["phi"] = lab::round_sig(p.phi);
            m["phi_cause"] = lab::round_sig(p.phi_cause);
            m["phi_effect"] = lab::round_sig(p.phi_effect);
            j["phi_table"].push_back(m);
        }
        j["big_phi"] = lab::round_sig(res.phi);
        j["phi_max"] = lab::round_sig(iit3::phi_max(net, st, metric));
        j["mip_cut"] = {{"from", units_json(net, res.mip.from)},
                        {"to", units_json(net, res.mip.to)}};
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    if (qshape_cmd->parsed()) {
        auto [net, st] = load_net_state(net_path, state);
        std::cout << qshape_json(net, iit3::qshape(net, st)).dump(2) << "\n";
        return 0;
    }
    if (emd_cmd->parsed()) {
        json j;
        if (!state.empty() || !state_b.empty()) {
            if (state.empty() || state_b.empty())
                throw lab::ValidationError("emd: need both --state-a and --state-b");
            auto [net, sa] = load_net_state(dist_a, state);
            auto sb = NetworkState::from_label(state_b);
            if (sb.n_units() != net.n_units())
                throw lab::ValidationError("state length does not match unit count");
            auto qa = iit3::qshape(net, sa);
            auto qb = iit3::qshape(net, sb);
            j["state_a"] = sa.label();
            j["state_b"] = sb.label();
            j["emd_star_literal"] = lab::round_sig(transport::emd_star(qa, qb));
            j["emd_star_xemd"] = lab::round_sig(transport::emd_star_xemd(qa, qb));
        } else {
            if (dist_b.empty())
                throw lab::ValidationError("emd: need two distribution files or two states");
            auto pa = load_json(dist_a).get<std::vector<double>>();
            auto pb = load_json(dist_b).get<std::vector<double>>();
            auto plan = transport::emd_plan(pa, pb);
            j["emd"] = lab::round_sig(plan.cost < transport::kZeroTol ? 0.0 : plan.cost);
            if (dump_plan) {
                j["plan"] = json::array();
                for (const auto& f : plan.flows)
                    j["plan"].push_back({{"from", f.from}, {"to", f.to},
                                         {"mass", lab::round_sig(f.mass)}});
            }
        }
        std::cout << j.dump(2) << "\n";
        return 0;
    }
    if (ops_cmd->parsed()) {
        json nj = load_json(net_path);
        BinaryNetwork net = lab::network_from_json(nj);
        auto basis = qiit::build_basis(net);
        auto variant = variant_name == "split"      ? qiit::OperatorVariant::Split
                       : variant_name == "phi_only" ? qiit::OperatorVariant::PhiOnly
                                                    : qiit::OperatorVariant::Combined;
        auto set = qiit::build_operators(basis, variant);
        json j;
        j["n_units"] = net.n_units();
        j["variant"] = variant_name;
        j["factors_2N"] = set.n_factors;
        j["total_operators"] = set.total_count();
        j["active_operators"] = set.active_count();
        const std::size_t n = std::size_t(net.n_units());
        j["coordinate_count_formula"] =
            (std::size_t(1) << (2 * n + 1)) * ((std::size_t(1) << n) - 1);
        j["eigenvalue_table"] = json::array();
        for (std::uint32_t s = 0; s < net.n_states(); ++s) {
            json row;
            row["state"] = state_label(s, net.n_units());
            json evs = json::array();
            for (std::size_t a : set.active)
                evs.push_back(lab::round_sig(set.operators[a].diag[Eigen::Index(s)]));
            row["eigenvalues"] = evs;
            j["eigenvalue_table"].push_back(row);
        }
        json ops = json::array();
        for (std::size_t a : set.active) {
            const auto& op = set.operators[a];
            json o;
            o["k"] = op.k;
            o["mechanism"] = units_json(net, op.mechanism);
            if (op.i >= 0) { o["i"] = op.i; o["j"] = op.j; }
            o["direction"] = op.i < 0               ? "weight"
                             : op.direction == iit3::Direction::Effect ? "effect"
                                                                       : "cause";
            ops.push_back(o);
        }
        j["active"] = ops;
        std::cout << j.dump(2) << "\n";
        return 0;
    }

    if (val_cmd->parsed()) {
        auto rep = lab::validate_scenario(scenario_path);
        json j;
        j["ok"] = rep.ok;
        j["errors"] = rep.errors;
        std::cout << j.dump(2) << "\n";
        return rep.ok ? 0 : 1;
    }
    if (list_cmd->parsed()) {
        for (const auto& name : lab::list_scenarios(scen_dir)) std::cout << name << "\n";
        return 0;
    }

    // scenario runners
    lab::Scenario sc = lab::load_scenario(scenario_path);
    if (collapse_cmd->parsed()) sc.mode = lab::ScenarioMode::Collapse;
    if (ens_cmd->parsed()) sc.mode = lab::ScenarioMode::Ensemble;
    if (zeno_cmd->parsed()) sc.mode = lab::ScenarioMode::Zeno;
    if (ruin_cmd->parsed()) sc.mode = lab::ScenarioMode::Ruin;
    if (seed_set) sc.config.seed = seed;
    if (trials > 0) sc.trials = trials;

    auto bundle = lab::run_scenario(std::move(sc), out_dir);
    if (format == "csv") {
        for (const auto& f : bundle.series_files) {
            std::ifstream in(bundle.out_dir / "series" / f);
            std::cout << in.rdbuf();
        }
    } else {
        std::cout << bundle.summary.dump(2) << "\n";
    }
    std::cerr << "bundle written to " << bundle.out_dir.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const lab::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
