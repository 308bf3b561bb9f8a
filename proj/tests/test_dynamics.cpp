#include <catch2/catch_amalgamated.hpp>

#include "qsc/dynamics.hpp"
#include "qsc/rng.hpp"

using namespace qsc;
using qcore::cx;

namespace {

std::uint32_t idx(const char* lbl) { return NetworkState::from_label(lbl).index; }

qcore::QuantumState two_branch(double w0, const char* a, const char* b, Eigen::Index dim) {
    qcore::Vec v = qcore::Vec::Zero(dim);
    v[Eigen::Index(idx(a))] = std::sqrt(w0);
    v[Eigen::Index(idx(b))] = std::sqrt(1.0 - w0);
    return qcore::QuantumState(std::move(v));
}

struct AndSetup {
    qiit::QuasiClassicalBasis basis;
    qiit::CollapseOperatorSet ops;
};

const AndSetup& and_setup() {
    static AndSetup s{qiit::build_basis(and_dyad()), {}};
    static bool once = [&] {
        s.ops = qiit::build_collapse_operators(s.basis);
        return true;
    }();
    (void)once;
    return s;
}

qcore::Mat pauli_x_on(int unit, int n_units, double omega) {
    const Eigen::Index dim = Eigen::Index(1) << n_units;
    qcore::Mat H = qcore::Mat::Zero(dim, dim);
    for (Eigen::Index s = 0; s < dim; ++s) H(s ^ (Eigen::Index(1) << unit), s) = omega;
    return H;
}

} // namespace

TEST_CASE("superselection step", "[dynamics]") {
    const auto& su = and_setup();
    dynamics::DynamicsConfig cfg;
    auto sys = dynamics::make_system(su.ops, su.basis, cfg,
                                     qcore::QuantumState::basis_state(4, idx("11")));
    auto rng = make_stream(3, 0);
    // quasi-classical states are left alone
    auto out = dynamics::superselection_step(sys.psi0, sys.spaces, rng);
    CHECK((out.amplitudes - sys.psi0.amplitudes).norm() < 1e-12);

    // Born frequencies for the half-half superposition
    auto psi = two_branch(0.5, "00", "11", 4);
    int to11 = 0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        auto r = make_stream(17, std::uint64_t(t));
        auto s = dynamics::superselection_step(psi, sys.spaces, r);
        if (s.weight(Eigen::Index(idx("11"))) > 0.5) ++to11;
    }
    CHECK(std::abs(double(to11) / trials - 0.5) < 0.02);

    // a superposition inside one joint eigenspace is untouched (every state
    // of the fork shares the all-zero eigenvalue tuple)
    BinaryNetwork fork({"S", "C", "D"},
                       {UnitRule::coin(0.5), UnitRule::copy_of(0), UnitRule::copy_of(0)});
    auto fb = qiit::build_basis(fork);
    auto fops = qiit::build_collapse_operators(fb);
    auto fsp = dynamics::joint_eigenspaces(fops);
    REQUIRE(fsp.n_groups == 1);
    qcore::Vec v = qcore::Vec::Zero(8);
    v[0] = std::sqrt(0.7);
    v[5] = std::sqrt(0.3);
    qcore::QuantumState inert(v);
    auto r2 = make_stream(18, 0);
    auto kept = dynamics::superselection_step(inert, fsp, r2);
    CHECK((kept.amplitudes - inert.amplitudes).norm() < 1e-12);
}

TEST_CASE("zeno survival follows the two-level law", "[dynamics]") {
    // one self-copying unit as the two-level system; its operators measure
    // the computational basis
    BinaryNetwork solo({"A"}, {UnitRule::copy_of(0)});
    auto basis = qiit::build_basis(solo);
    auto ops = qiit::build_collapse_operators(basis);
    dynamics::DynamicsConfig cfg;
    auto sys = dynamics::make_system(ops, basis, cfg, qcore::QuantumState::basis_state(2, 0));
    REQUIRE(sys.spaces.n_groups == 2);

    const double omega = M_PI / 2; // omega * t_max = pi/2 at t_max = 1
    qcore::HermitianOperator H(pauli_x_on(0, 1, omega));

    // single measurement at t_max: survival is the plain Born value cos^2(pi/2) = 0
    auto z1 = dynamics::zeno_run(H, sys.spaces, sys.psi0, 1.0, 1.0, 2000, 21);
    CHECK(z1.measurements_per_run == 1);
    CHECK(z1.survival == Catch::Approx(0.0).margin(2e-3));

    // N = 10: cos^20(pi/20)
    auto z10 = dynamics::zeno_run(H, sys.spaces, sys.psi0, 0.1, 1.0, 4000, 22);
    CHECK(std::abs(z10.survival - std::pow(std::cos(omega * 0.1), 20)) < 0.02);

    // freezing: more frequent measurement never hurts survival on average
    double last = -1.0;
    for (double dt : {0.5, 0.2, 0.1, 0.05}) {
        auto z = dynamics::zeno_run(H, sys.spaces, sys.psi0, dt, 1.0, 4000, 23);
        CHECK(z.survival >= last - 0.02);
        last = z.survival;
    }
}

TEST_CASE("csl with lambda 0 reduces to unitary evolution", "[dynamics]") {
    const auto& su = and_setup();
    dynamics::DynamicsConfig cfg;
    cfg.lambda = 0.0;
    cfg.dt = 1e-3;
    cfg.t_max = 1.0;
    // X on unit A: eigenvalues +-1, so the renormalized Euler flow stays tight
    qcore::Mat H = pauli_x_on(0, 2, 1.0);
    auto sys = dynamics::make_system(su.ops, su.basis, cfg,
                                     qcore::QuantumState::basis_state(4, idx("00")), H);
    qcore::QuantumState psi = sys.psi0;
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(sys.n_channels());
    for (int k = 0; k < 1000; ++k) dynamics::csl_step(psi, sys, cfg, xi);
    auto exact = qcore::unitary_step(sys.psi0, qcore::HermitianOperator(H), 1.0);
    CHECK((psi.amplitudes - exact.amplitudes).norm() < 1e-4);
}

TEST_CASE("quasi-classical states are fixed points", "[dynamics]") {
    const auto& su = and_setup();
    dynamics::DynamicsConfig cfg;
    auto sys = dynamics::make_system(su.ops, su.basis, cfg,
                                     qcore::QuantumState::basis_state(4, idx("11")));
    qcore::QuantumState psi = sys.psi0;
    auto rng = make_stream(9, 0);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd xi(sys.n_channels());
    for (int k = 0; k < 200; ++k) {
        for (Eigen::Index b = 0; b < xi.size(); ++b) xi[b] = gauss(rng);
        const double norm = dynamics::csl_step(psi, sys, cfg, xi);
        CHECK(std::abs(norm - 1.0) < 1e-8); // (Q - <Q>) psi = 0 exactly
    }
    CHECK(psi.weight(Eigen::Index(idx("11"))) == Catch::Approx(1.0));
}

TEST_CASE("born statistics and martingale on the AND dyad", "[dynamics]") {
    const auto& su = and_setup();
    dynamics::DynamicsConfig cfg;
    cfg.t_max = 20.0;
    cfg.seed = 31;
    cfg.sample_every = 500;
    auto sys = dynamics::make_system(su.ops, su.basis, cfg, two_branch(0.6, "00", "11", 4));
    auto res = dynamics::run_ensemble(cfg, sys, 2000);

    const double f00 = res.frequency_of_state(long(idx("00")));
    const double f11 = res.frequency_of_state(long(idx("11")));
    CHECK(f00 + f11 == Catch::Approx(1.0)); // everything collapsed
    CHECK(std::abs(f00 - 0.6) < 0.04);      // 3 sigma at 2000 trials is 0.033

    // martingale: the mean weight of each branch stays at its initial value
    const int g11 = sys.spaces.group(idx("11"));
    for (std::size_t k = 0; k < res.times.size(); k += res.times.size() / 6 + 1) {
        const double mean = res.mean_group_weights[k][std::size_t(g11)];
        const double se = res.se_group_weights[k][std::size_t(g11)];
        CHECK(std::abs(mean - 0.4) <= std::max(3.0 * se, 1e-12));
    }
}

TEST_CASE("equal-shape superpositions never collapse", "[dynamics]") {
    BinaryNetwork fork({"S", "C", "D"},
                       {UnitRule::coin(0.5), UnitRule::copy_of(0), UnitRule::copy_of(0)});
    auto basis = qiit::build_basis(fork);
    auto ops = qiit::build_collapse_operators(basis);
    CHECK(ops.active_count() == 0);
    dynamics::DynamicsConfig cfg;
    cfg.t_max = 2.0;
    auto sys = dynamics::make_system(ops, basis, cfg, two_branch(0.5, "000", "011", 8));
    for (std::uint64_t t = 0; t < 20; ++t) {
        auto rec = dynamics::run_trajectory(cfg, sys, t);
        CHECK(rec.collapse_outcome == -1);
        CHECK(rec.collapse_time == -1.0);
    }
}

TEST_CASE("phi-only operators leave the dyad superposition alone", "[dynamics]") {
    auto basis = qiit::build_basis(swap_dyad());
    auto ops = qiit::phi_only_operator_set(basis);
    dynamics::DynamicsConfig cfg;
    cfg.t_max = 5.0;
    cfg.operator_variant = qiit::OperatorVariant::PhiOnly;
    auto sys = dynamics::make_system(ops, basis, cfg, two_branch(0.5, "10", "00", 4));
    // every dyad state has Phi = 1, so the operator is the identity and its
    // eigenspace structure is a single block
    CHECK(sys.spaces.n_groups == 1);
    for (std::uint64_t t = 0; t < 10; ++t) {
        auto rec = dynamics::run_trajectory(cfg, sys, t);
        CHECK(rec.collapse_outcome == -1);
        // and the state itself is numerically frozen
        CHECK(rec.group_weights.back()[0] == Catch::Approx(1.0));
    }
}

TEST_CASE("combined operators collapse the dyad superposition", "[dynamics]") {
    auto basis = qiit::build_basis(swap_dyad());
    auto ops = qiit::build_collapse_operators(basis);
    dynamics::DynamicsConfig cfg;
    cfg.t_max = 25.0;
    cfg.seed = 77;
    auto sys = dynamics::make_system(ops, basis, cfg, two_branch(0.5, "10", "00", 4));
    REQUIRE(sys.spaces.group(idx("10")) != sys.spaces.group(idx("00")));
    int collapsed = 0;
    for (std::uint64_t t = 0; t < 50; ++t)
        if (dynamics::run_trajectory(cfg, sys, t).collapse_outcome >= 0) ++collapsed;
    CHECK(collapsed == 50);
}

TEST_CASE("trajectories are deterministic given seed and index", "[dynamics]") {
    const auto& su = and_setup();
    dynamics::DynamicsConfig cfg;
    cfg.t_max = 2.0;
    cfg.seed = 5150;
    auto sys = dynamics::make_system(su.ops, su.basis, cfg, two_branch(0.4, "00", "11", 4));
    auto a = dynamics::run_trajectory(cfg, sys, 7);
    auto b = dynamics::run_trajectory(cfg, sys, 7);
    REQUIRE(a.times == b.times);
    REQUIRE(a.group_weights == b.group_weights);
    REQUIRE(a.norms == b.norms);
    // ensembles reduce chunk-by-chunk in fixed order: identical reruns
    auto e1 = dynamics::run_ensemble(cfg, sys, 300);
    auto e2 = dynamics::run_ensemble(cfg, sys, 300);
    REQUIRE(e1.mean_group_weights == e2.mean_group_weights);
    REQUIRE(e1.outcomes.size() == e2.outcomes.size());
    for (std::size_t k = 0; k < e1.outcomes.size(); ++k)
        CHECK(e1.outcomes[k].count == e2.outcomes[k].count);
}

TEST_CASE("halving dt leaves ensemble statistics within noise", "[dynamics]") {
    const auto& su = and_setup();
    dynamics::DynamicsConfig coarse;
    coarse.t_max = 15.0;
    coarse.seed = 404;
    coarse.dt = 2e-3;
    coarse.sample_every = 250;
    auto sys = dynamics::make_system(su.ops, su.basis, coarse, two_branch(0.5, "00", "11", 4));
    auto base = dynamics::run_ensemble(coarse, sys, 1500);
    dynamics::DynamicsConfig fine = coarse;
    fine.dt = 1e-3;
    fine.sample_every = 500;
    auto half = dynamics::run_ensemble(fine, sys, 1500);
    const double fa = base.frequency_of_state(long(idx("00")));
    const double fb = half.frequency_of_state(long(idx("00")));
    // combined 3 sigma width at p ~ 0.5, n = 1500 is ~ 0.055
    CHECK(std::abs(fa - fb) < 0.055);
}

TEST_CASE("noise construction", "[dynamics]") {
    // single active operator: correlated and independent modes coincide
    BinaryNetwork solo({"A"}, {UnitRule::copy_of(0)});
    auto basis = qiit::build_basis(solo);
    qiit::CollapseOperatorSet one;
    one.variant = qiit::OperatorVariant::Combined;
    one.dim = 2;
    one.n_factors = 1;
    qiit::CollapseOperator op;
    op.diag = Eigen::VectorXd::Zero(2);
    op.diag[0] = 1.0;
    op.zero = false;
    one.operators.push_back(op);
    one.active.push_back(0);

    dynamics::DynamicsConfig ind, cor;
    cor.noise_mode = dynamics::NoiseMode::Correlated;
    auto np_i = dynamics::build_noise(one, basis, ind);
    auto np_c = dynamics::build_noise(one, basis, cor);
    CHECK(np_c.identity);
    CHECK((np_i.covariance - np_c.covariance).norm() == 0.0);
    auto sys_i = dynamics::make_system(one, basis, ind,
                                       qcore::QuantumState(qcore::Vec::Ones(2) / std::sqrt(2)));
    auto sys_c = dynamics::make_system(one, basis, cor,
                                       qcore::QuantumState(qcore::Vec::Ones(2) / std::sqrt(2)));
    auto ra = dynamics::run_trajectory(ind, sys_i, 3);
    auto rb = dynamics::run_trajectory(cor, sys_c, 3);
    CHECK(ra.group_weights == rb.group_weights); // bitwise identical paths

    // two basis states one unit of shape distance apart: off-diagonal entry 1
    auto sbasis = qiit::build_basis(swap_dyad(), {idx("00"), idx("10")});
    auto sops = qiit::build_collapse_operators(sbasis);
    dynamics::DynamicsConfig cfg;
    cfg.noise_mode = dynamics::NoiseMode::Correlated;
    CHECK(iit3::shape_distance(sbasis.shapes[0], sbasis.shapes[1], cfg.qshape_metric) ==
          Catch::Approx(1.0).margin(1e-10));
    auto np = dynamics::build_noise(sops, sbasis, cfg);
    bool off_diag_one = false;
    for (Eigen::Index a = 0; a < np.covariance.rows() && !off_diag_one; ++a)
        for (Eigen::Index b = 0; b < np.covariance.cols() && !off_diag_one; ++b)
            if (a != b && std::abs(np.covariance(a, b) - 1.0) < 1e-12) off_diag_one = true;
    CHECK(off_diag_one);
}

TEST_CASE("noise increments have the factored covariance", "[dynamics]") {
    auto basis = qiit::build_basis(swap_dyad());
    auto ops = qiit::build_collapse_operators(basis);
    dynamics::DynamicsConfig cfg;
    cfg.noise_mode = dynamics::NoiseMode::Correlated;
    auto np = dynamics::build_noise(ops, basis, cfg);
    const Eigen::Index n = np.channels();
    REQUIRE(n > 1);
    // empirical covariance of factor * xi over many draws
    auto rng = make_stream(61, 0);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    const int draws = 20000;
    for (int d = 0; d < draws; ++d) {
        Eigen::VectorXd xi(n);
        for (Eigen::Index b = 0; b < n; ++b) xi[b] = gauss(rng);
        Eigen::VectorXd w = np.factor * xi;
        acc += w * w.transpose();
        mean += w;
    }
    acc /= double(draws);
    mean /= double(draws);
    const Eigen::MatrixXd target = np.factor * np.factor.transpose();
    CHECK(mean.cwiseAbs().maxCoeff() < 0.05);
    CHECK((acc - target).cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("correlated noise keeps Born statistics", "[dynamics]") {
    const auto& su = and_setup();
    dynamics::DynamicsConfig cfg;
    cfg.t_max = 20.0;
    cfg.seed = 88;
    cfg.noise_mode = dynamics::NoiseMode::Correlated;
    auto sys = dynamics::make_system(su.ops, su.basis, cfg, two_branch(0.6, "00", "11", 4));
    auto res = dynamics::run_ensemble(cfg, sys, 1500);
    const double f00 = res.frequency_of_state(long(idx("00")));
    CHECK(std::abs(f00 - 0.6) < 0.04);
}

// On the swap dyad the operators anchor on all four states, so scaling the
// Q-shape distances that enter G weakens the cross-branch noise correlation
// and the ruin game between the branches speeds up.
TEST_CASE("wider shape separation collapses faster", "[dynamics]") {
    auto basis = qiit::build_basis(swap_dyad());
    auto ops = qiit::build_collapse_operators(basis);
    dynamics::DynamicsConfig near, far;
    for (auto* c : {&near, &far}) {
        c->t_max = 60.0;
        c->seed = 2024;
        c->noise_mode = dynamics::NoiseMode::Correlated;
        c->lambda = 1.0;
    }
    near.g_distance_scale = 1.0;
    far.g_distance_scale = 2.0; // double every Q-shape distance entering G
    auto sys_near = dynamics::make_system(ops, basis, near, two_branch(0.5, "10", "00", 4));
    auto sys_far = dynamics::make_system(ops, basis, far, two_branch(0.5, "10", "00", 4));
    auto rn = dynamics::run_ensemble(near, sys_near, 400);
    auto rf = dynamics::run_ensemble(far, sys_far, 400);
    REQUIRE(rn.median_collapse_time > 0);
    REQUIRE(rf.median_collapse_time > 0);
    CHECK(rf.median_collapse_time < rn.median_collapse_time);
}

TEST_CASE("raising lambda shortens collapse times", "[dynamics]") {
    const auto& su = and_setup();
    dynamics::DynamicsConfig slow, fast;
    for (auto* c : {&slow, &fast}) {
        c->t_max = 40.0;
        c->seed = 606;
    }
    slow.lambda = 0.5;
    fast.lambda = 2.0;
    auto psi = two_branch(0.5, "00", "11", 4);
    auto sys_slow = dynamics::make_system(su.ops, su.basis, slow, psi);
    auto sys_fast = dynamics::make_system(su.ops, su.basis, fast, psi);
    auto rs = dynamics::run_ensemble(slow, sys_slow, 300);
    auto rf = dynamics::run_ensemble(fast, sys_fast, 300);
    REQUIRE(rs.median_collapse_time > 0);
    REQUIRE(rf.median_collapse_time > 0);
    CHECK(rf.median_collapse_time < rs.median_collapse_time);
    // and with lambda this large, everything collapses long before t_max
    CHECK(rf.collapse_times_sorted.back() < 40.0 / 2.0);
}

TEST_CASE("gamblers ruin frequencies", "[dynamics]") {
    auto res = dynamics::gamblers_ruin(60, 40, 10000, 1234);
    CHECK(std::abs(res.frequency1 - 0.6) < 0.02);
    res = dynamics::gamblers_ruin(50, 50, 4000, 5);
    CHECK(std::abs(res.frequency1 - 0.5) < 0.03);
    res = dynamics::gamblers_ruin(100, 0, 100, 6);
    CHECK(res.frequency1 == 1.0);
    CHECK_THROWS_AS(dynamics::gamblers_ruin(0, 0, 10, 7), std::invalid_argument);
}

TEST_CASE("config validation", "[dynamics]") {
    dynamics::DynamicsConfig bad;
    bad.dt = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {};
    bad.lambda = -1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {};
    bad.emd_cutoff = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
