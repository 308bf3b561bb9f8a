#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <unistd.h>
#include <filesystem>
#include <fstream>

#include "qsc/lab.hpp"

using namespace qsc;
using lab::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("qsc_lab_test_" + std::to_string(std::uint64_t(::getpid())));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

json tiny_ensemble_scenario() {
    return json::parse(R"({
      "name": "tiny",
      "mode": "ensemble",
      "network": {
        "units": ["A", "B"],
        "rules": [
          {"unit": "A", "type": "and", "inputs": ["A", "B"]},
          {"unit": "B", "type": "and", "inputs": ["A", "B"]}
        ]
      },
      "initial_state": {
        "amplitudes": [
          {"state": "00", "re": 0.7745966692414834},
          {"state": "11", "re": 0.6324555320336759}
        ]
      },
      "dynamics": {"lambda": 1.0, "dt": 0.001, "t_max": 6.0, "seed": 5, "sample_every": 500},
      "trials": 64
    })");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

} // namespace

TEST_CASE("network json parsing", "[lab]") {
    auto j = json::parse(R"({
      "units": ["A", "B"],
      "rules": [
        {"unit": "A", "type": "copy", "inputs": ["B"]},
        {"unit": "B", "type": "copy", "inputs": ["A"]}
      ],
      "state": "10"
    })");
    auto net = lab::network_from_json(j);
    CHECK(net.n_units() == 2);
    CHECK(net.has_edge(1, 0));
    CHECK(net.deterministic());
    // round trip through the explicit table form
    auto net2 = lab::network_from_json(lab::network_to_json(net));
    CHECK(net2.tpm() == net.tpm());

    // unknown unit in a rule
    j["rules"][0]["inputs"][0] = "Z";
    CHECK_THROWS_AS(lab::network_from_json(j), lab::ValidationError);
}

TEST_CASE("scenario validation errors", "[lab]") {
    // malformed amplitude entry: missing state field
    auto j = tiny_ensemble_scenario();
    j["initial_state"]["amplitudes"][0].erase("state");
    CHECK_THROWS_WITH(lab::scenario_from_json(j),
                      Catch::Matchers::ContainsSubstring("state"));

    // unit cap
    j = tiny_ensemble_scenario();
    json units = json::array();
    json rules = json::array();
    for (int u = 0; u < 13; ++u) {
        units.push_back("U" + std::to_string(u));
        rules.push_back({{"unit", "U" + std::to_string(u)}, {"type", "coin"}, {"p", 0.5}});
    }
    j["network"] = {{"units", units}, {"rules", rules}};
    j.erase("initial_state");
    CHECK_THROWS_WITH(lab::scenario_from_json(j),
                      Catch::Matchers::ContainsSubstring("12 units"));

    // amplitudes far from normalized are rejected
    j = tiny_ensemble_scenario();
    j["initial_state"]["amplitudes"][0]["re"] = 0.4;
    auto sc = lab::scenario_from_json(j);
    auto net = lab::network_from_json(sc.network_json);
    CHECK_THROWS_AS(lab::build_initial_state(sc, net), lab::ValidationError);

    // small drift is renormalized and flagged
    j = tiny_ensemble_scenario();
    j["initial_state"]["amplitudes"][0]["re"] = 0.77465;
    sc = lab::scenario_from_json(j);
    auto psi = lab::build_initial_state(sc, lab::network_from_json(sc.network_json));
    CHECK(sc.amplitudes_renormalized);
    CHECK(std::abs(psi.norm() - 1.0) < 1e-12);
}

TEST_CASE("scenario round trips byte-identically", "[lab]") {
    TempDir tmp;
    auto sc1 = lab::scenario_from_json(tiny_ensemble_scenario());
    auto sc2 = lab::scenario_from_json(tiny_ensemble_scenario());
    auto b1 = lab::run_scenario(std::move(sc1), tmp.path / "run1");
    auto b2 = lab::run_scenario(std::move(sc2), tmp.path / "run2");
    CHECK(b1.config_hash == b2.config_hash);
    CHECK(slurp(b1.out_dir / "bundle.json") == slurp(b2.out_dir / "bundle.json"));
    CHECK(slurp(b1.out_dir / "summary.txt") == slurp(b2.out_dir / "summary.txt"));
    CHECK(slurp(b1.out_dir / "series" / "ensemble.csv") ==
          slurp(b2.out_dir / "series" / "ensemble.csv"));
    CHECK(fs::exists(b1.out_dir / "series" / "collapse_times.csv"));
    // outcome frequencies land in the bundle
    REQUIRE(b1.summary.contains("outcomes"));
    double total = 0;
    for (const auto& o : b1.summary["outcomes"]) total += o["frequency"].get<double>();
    CHECK(total == Catch::Approx(1.0));
}

TEST_CASE("bundled scenarios parse and validate", "[lab]") {
    const fs::path dir = fs::path(QSC_SOURCE_DIR) / "scenarios";
    auto names = lab::list_scenarios(dir);
    REQUIRE(names.size() == 5);
    CHECK(std::find(names.begin(), names.end(), "schroedingers_dyad_state.json") != names.end());
    CHECK(std::find(names.begin(), names.end(), "and_dyad_born.json") != names.end());
    CHECK(std::find(names.begin(), names.end(), "zeno_sweep.json") != names.end());
    CHECK(std::find(names.begin(), names.end(), "fredkin_feedforward.json") != names.end());
    CHECK(std::find(names.begin(), names.end(), "ruin_reference.json") != names.end());
    for (const auto& n : names) {
        auto rep = lab::validate_scenario((dir / n).string());
        INFO(n << ": " << (rep.errors.empty() ? "" : rep.errors.front()));
        CHECK(rep.ok);
    }
}

TEST_CASE("ruin and zeno scenario modes produce bundles", "[lab]") {
    TempDir tmp;
    auto ruin = lab::scenario_from_json(json::parse(R"({
      "name": "ruin_small", "mode": "ruin",
      "ruin": {"stake1": 50, "stake2": 50},
      "dynamics": {"seed": 3}, "trials": 400
    })"));
    auto rb = lab::run_scenario(std::move(ruin), tmp.path);
    CHECK(rb.summary["frequency1"].get<double>() == Catch::Approx(0.5).margin(0.1));

    auto zeno = lab::scenario_from_json(json::parse(R"({
      "name": "zeno_small", "mode": "zeno",
      "network": {"units": ["A"], "rules": [{"unit": "A", "type": "copy", "inputs": ["A"]}]},
      "initial_state": {"basis_state": "0"},
      "hamiltonian": {"type": "pauli_x", "unit": "A", "omega": 1.5707963267948966},
      "dynamics": {"t_max": 1.0, "seed": 7},
      "zeno": {"intervals": [0.5, 0.1]},
      "trials": 500
    })"));
    auto zb = lab::run_scenario(std::move(zeno), tmp.path);
    REQUIRE(zb.summary["intervals"].size() == 2);
    // finer measurement grid survives better
    const double s1 = zb.summary["intervals"][0]["survival"].get<double>();
    const double s2 = zb.summary["intervals"][1]["survival"].get<double>();
    CHECK(s2 > s1);
}

// the heavyweight Born ensemble is exercised by the acceptance suite; the
// other four bundles run end-to-end here
TEST_CASE("bundled scenarios run end-to-end", "[lab][bundled]") {
    TempDir tmp;
    const fs::path dir = fs::path(QSC_SOURCE_DIR) / "scenarios";
    for (const char* name : {"schroedingers_dyad_state.json", "zeno_sweep.json",
                             "fredkin_feedforward.json", "ruin_reference.json"}) {
        auto b = lab::run_scenario_file((dir / name).string(), tmp.path);
        CHECK(fs::exists(b.out_dir / "bundle.json"));
        CHECK(fs::exists(b.out_dir / "summary.txt"));
        CHECK(fs::exists(b.out_dir / "meta.json"));
        CHECK(!b.series_files.empty());
    }
    // the feedforward control never collapses
    auto j = json::parse(slurp(tmp.path / "fredkin_feedforward" / "bundle.json"));
    REQUIRE(j["outcomes"].size() == 1);
    CHECK(j["outcomes"][0]["state"].is_null());
    CHECK(j["outcomes"][0]["frequency"].get<double>() == 1.0);
}

TEST_CASE("collapse mode writes a trajectory series", "[lab]") {
    TempDir tmp;
    auto j = tiny_ensemble_scenario();
    j["mode"] = "collapse";
    auto b = lab::run_scenario(lab::scenario_from_json(j), tmp.path);
    CHECK(fs::exists(b.out_dir / "series" / "trajectory.csv"));
    CHECK(b.summary.contains("collapse_outcome"));
}

TEST_CASE("rounding helper", "[lab]") {
    CHECK(lab::round_sig(0.0) == 0.0);
    CHECK(lab::round_sig(1.0 / 3.0) == Catch::Approx(0.333333333333).epsilon(1e-12));
    CHECK(lab::round_sig(123456789.123456789) == Catch::Approx(123456789.123).epsilon(1e-12));
}
