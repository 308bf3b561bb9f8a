#ifndef QSC_DYNAMICS_HPP
#define QSC_DYNAMICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qsc/qcore.hpp"
#include "qsc/qiit.hpp"
#include "qsc/rng.hpp"

// Collapse evolution engines.
//
// Discrete model: projective measurement of the joint eigenbasis of the
// collapse-operator set every superselection_dt. Continuous model: the
// nonlinear stochastic equation
//
//   d psi = [ -i H dt
//             + sqrt(lambda) sum_a (Q_a - <Q_a>) dW_a
//             - lambda/2 sum_ab S_ab (Q_a - <Q_a>)(Q_b - <Q_b>) dt ] psi
//
// integrated by Euler-Maruyama with post-step renormalization. S is the noise
// covariance (identity, or derived from pairwise inverse Q-shape distances).
// Because all collapse operators are diagonal in the computational basis, the
// correlated equation is integrated in a transformed channel basis W = L^T Q
// (S = L L^T) with independent increments, which is equal in law and keeps
// one code path.
namespace qsc::dynamics {

enum class NoiseMode { Independent, Correlated };

struct DynamicsConfig {
    double lambda = 1.0;
    double dt = 1e-3;
    double t_max = 10.0;
    std::uint64_t seed = 1;
    NoiseMode noise_mode = NoiseMode::Independent;
    qiit::OperatorVariant operator_variant = qiit::OperatorVariant::Combined;
    double superselection_dt = 0.1;
    double emd_cutoff = 1.0;     // floor for distances entering G = 1/EMD*
    double g_distance_scale = 1.0; // diagnostics knob: scales distances entering G
    iit3::ShapeMetric qshape_metric = iit3::ShapeMetric::Xemd;
    int sample_every = 100;
    int lockin_steps = 100;
    double lockin_threshold = 1.0 - 1e-6;

    void validate() const {
        if (lambda < 0) throw std::invalid_argument("config: lambda must be >= 0");
        if (dt <= 0) throw std::invalid_argument("config: dt must be > 0");
        if (t_max < dt) throw std::invalid_argument("config: t_max must be >= dt");
        if (emd_cutoff <= 0) throw std::invalid_argument("config: emd_cutoff must be > 0");
        if (superselection_dt <= 0)
            throw std::invalid_argument("config: superselection_dt must be > 0");
        if (sample_every < 1) throw std::invalid_argument("config: sample_every < 1");
    }
};

struct NoiseProcess {
    Eigen::MatrixXd covariance; // over active operator channels
    Eigen::MatrixXd factor;     // covariance = factor factor^T
    bool identity = true;
    bool psd_warning = false;
    std::string psd_note;
    Eigen::Index channels() const { return covariance.rows(); }
};

// Pairwise-distance noise: channel a is anchored at the quasi-classical state
// its operator weights most; cov[a][b] = 1 / max(D(anchor_a, anchor_b), cutoff)
// where D is the configured Q-shape distance. The matrix need not be positive
// semidefinite and is projected onto the PSD cone before factorization; a
// projection that moves an eigenvalue by more than 10% of the spectral radius
// is surfaced as a warning.
inline NoiseProcess build_noise(const qiit::CollapseOperatorSet& ops,
                                const qiit::QuasiClassicalBasis& basis,
                                const DynamicsConfig& config) {
    NoiseProcess np;
    const Eigen::Index n = Eigen::Index(ops.active.size());
    np.covariance = Eigen::MatrixXd::Identity(n, n);
    np.factor = Eigen::MatrixXd::Identity(n, n);
    if (config.noise_mode == NoiseMode::Independent || n == 0) return np;

    std::vector<std::size_t> anchor(static_cast<std::size_t>(n));
    for (Eigen::Index a = 0; a < n; ++a) {
        const auto& op = ops.operators[ops.active[std::size_t(a)]];
        double best = -1.0;
        std::size_t arg = 0;
        for (std::size_t s = 0; s < basis.states.size(); ++s) {
            const double v = std::abs(op.diag[Eigen::Index(basis.states[s])]);
            if (v > best + 1e-15) { best = v; arg = s; }
        }
        anchor[std::size_t(a)] = arg;
    }

    // distinct-anchor distances (shape metric evaluations are not cheap)
    std::vector<std::vector<double>> d(basis.states.size(),
                                       std::vector<double>(basis.states.size(), -1.0));
    auto dist = [&](std::size_t x, std::size_t y) {
        if (x == y) return 0.0;
        if (d[x][y] < 0) {
            d[x][y] = d[y][x] =
                iit3::shape_distance(basis.shapes[x], basis.shapes[y], config.qshape_metric) *
                config.g_distance_scale;
        }
        return d[x][y];
    };
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b)
            np.covariance(a, b) =
                1.0 / std::max(dist(anchor[std::size_t(a)], anchor[std::size_t(b)]),
                               config.emd_cutoff);

    np.identity = (np.covariance - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12;
    if (np.identity) return np;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(np.covariance);
    Eigen::VectorXd ev = es.eigenvalues();
    const double radius = ev.cwiseAbs().maxCoeff();
    double moved = 0.0;
    for (Eigen::Index k = 0; k < n; ++k)
        if (ev[k] < 0) { moved = std::max(moved, -ev[k]); ev[k] = 0.0; }
    if (radius > 0 && moved > 0.1 * radius) {
        np.psd_warning = true;
        std::ostringstream os;
        os << "PSD projection clamped an eigenvalue by " << moved << " (spectral radius "
           << radius << ")";
        np.psd_note = os.str();
    }
    // Normalize the factored matrix to unit spectral radius. Coherent noise
    // across many channels would otherwise multiply the total noise power by
    // up to the channel count, which has no analog in the independent mode
    // and blows through the per-step norm-drift bound. `covariance` keeps the
    // raw (pre-projection) matrix for inspection.
    const double top = ev.maxCoeff();
    if (top > 0) ev /= top;
    np.factor = es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
    return np;
}

// joint eigenspaces of a diagonal operator set: states grouped by their
// eigenvalue tuple
struct EigenspacePartition {
    std::vector<int> group_of; // per basis state
    int n_groups = 0;
    std::vector<std::vector<std::uint32_t>> members;

    int group(std::uint32_t state) const { return group_of[state]; }
};

inline EigenspacePartition joint_eigenspaces(const qiit::CollapseOperatorSet& ops,
                                             double tol = 1e-9) {
    const std::size_t dim = std::size_t(ops.dim);
    EigenspacePartition part;
    part.group_of.assign(dim, -1);
    std::vector<std::vector<double>> tuples(dim, std::vector<double>(ops.active.size()));
    for (std::size_t s = 0; s < dim; ++s)
        for (std::size_t a = 0; a < ops.active.size(); ++a)
            tuples[s][a] = ops.operators[ops.active[a]].diag[Eigen::Index(s)];
    for (std::size_t s = 0; s < dim; ++s) {
        if (part.group_of[s] >= 0) continue;
        const int g = part.n_groups++;
        part.members.push_back({std::uint32_t(s)});
        part.group_of[s] = g;
        for (std::size_t t = s + 1; t < dim; ++t) {
            if (part.group_of[t] >= 0) continue;
            bool same = true;
            for (std::size_t a = 0; a < tuples[s].size() && same; ++a)
                same = std::abs(tuples[s][a] - tuples[t][a]) <= tol;
            if (same) {
                part.group_of[t] = g;
                part.members[std::size_t(g)].push_back(std::uint32_t(t));
            }
        }
    }
    return part;
}

// Everything one trajectory needs, built once and shared read-only.
struct CollapseSystem {
    Eigen::Index dim = 0;
    Eigen::MatrixXd qdiag;      // n_active x dim eigenvalue table
    Eigen::MatrixXd channels;   // factor^T * qdiag (equals qdiag for identity noise)
    std::optional<qcore::Mat> hamiltonian;
    qcore::QuantumState psi0;
    EigenspacePartition spaces;
    NoiseProcess noise;

    Eigen::Index n_channels() const { return channels.rows(); }
};

// Superselection needs a commuting family. The operator sets built here are
// diagonal in the computational basis, so this holds by construction; the
// numerical check guards the representation on desk-scale instances.
inline void verify_commuting(const qiit::CollapseOperatorSet& ops, double tol = 1e-10) {
    if (ops.dim > 64 || ops.active.size() > 64) return; // structural guarantee only
    for (std::size_t a = 0; a < ops.active.size(); ++a)
        for (std::size_t b = a + 1; b < ops.active.size(); ++b) {
            const auto& da = ops.operators[ops.active[a]].diag;
            const auto& db = ops.operators[ops.active[b]].diag;
            // commutator of two diagonal matrices entrywise
            for (Eigen::Index i = 0; i < ops.dim; ++i)
                if (std::abs(da[i] * db[i] - db[i] * da[i]) > tol)
                    throw std::invalid_argument("collapse operators do not commute");
        }
}

inline CollapseSystem make_system(const qiit::CollapseOperatorSet& ops,
                                  const qiit::QuasiClassicalBasis& basis,
                                  const DynamicsConfig& config,
                                  qcore::QuantumState psi0,
                                  std::optional<qcore::Mat> hamiltonian = std::nullopt) {
    verify_commuting(ops);
    if (psi0.dim() != ops.dim)
        throw std::invalid_argument("make_system: state dimension does not match operators");
    if (!psi0.normalized())
        throw std::invalid_argument("make_system: initial state is not normalized");
    if (hamiltonian) {
        if (hamiltonian->rows() != ops.dim || hamiltonian->cols() != ops.dim)
            throw std::invalid_argument("make_system: Hamiltonian dimension mismatch");
        if (!qcore::is_hermitian(*hamiltonian))
            throw std::invalid_argument("make_system: Hamiltonian is not Hermitian");
    }
    CollapseSystem sys;
    sys.dim = ops.dim;
    sys.qdiag.resize(Eigen::Index(ops.active.size()), ops.dim);
    for (std::size_t a = 0; a < ops.active.size(); ++a)
        sys.qdiag.row(Eigen::Index(a)) = ops.operators[ops.active[a]].diag.transpose();
    sys.noise = build_noise(ops, basis, config);
    sys.channels = sys.noise.identity ? sys.qdiag : (sys.noise.factor.transpose() * sys.qdiag);
    sys.hamiltonian = std::move(hamiltonian);
    sys.psi0 = std::move(psi0);
    sys.spaces = joint_eigenspaces(ops);
    return sys;
}

// --- discrete superselection model ---

// Born-weighted projection onto a joint eigenspace of the operator set.
// The set is diagonal by construction (the commutation requirement); states
// already inside one eigenspace are left untouched.
inline qcore::QuantumState superselection_step(const qcore::QuantumState& psi,
                                               const EigenspacePartition& spaces,
                                               std::mt19937_64& rng) {
    std::vector<double> w(std::size_t(spaces.n_groups), 0.0);
    for (Eigen::Index i = 0; i < psi.dim(); ++i)
        w[std::size_t(spaces.group_of[std::size_t(i)])] += psi.weight(i);
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    const std::size_t g = pick(rng);
    qcore::Vec out = qcore::Vec::Zero(psi.dim());
    for (std::uint32_t s : spaces.members[g]) out[Eigen::Index(s)] = psi.amplitudes[Eigen::Index(s)];
    out /= std::sqrt(w[g]);
    return qcore::QuantumState(std::move(out));
}

struct ZenoResult {
    double survival = 0.0; // fraction of trajectories still in the initial eigenspace
    int trials = 0;
    int measurements_per_run = 0;
};

// Repeated measurement of the superselection observable at interval dt_meas
// under unitary drift H. psi0 must lie inside one joint eigenspace. A
// trajectory survives when every measurement keeps it in that eigenspace
// (the quantity the two-level cos^{2N} law describes); trajectories that
// leave and wander back are not counted.
inline ZenoResult zeno_run(const qcore::HermitianOperator& H,
                           const EigenspacePartition& spaces,
                           const qcore::QuantumState& psi0, double dt_meas, double t_max,
                           int trials, std::uint64_t seed) {
    if (dt_meas <= 0 || t_max < dt_meas)
        throw std::invalid_argument("zeno_run: need 0 < dt_meas <= t_max");
    int home = -1;
    for (Eigen::Index i = 0; i < psi0.dim(); ++i)
        if (psi0.weight(i) > 1e-12) {
            const int g = spaces.group_of[std::size_t(i)];
            if (home == -1) home = g;
            if (g != home)
                throw std::invalid_argument("zeno_run: psi0 is not a joint eigenvector");
        }
    const int n_meas = int(std::llround(t_max / dt_meas));
    qcore::Propagator U(H, dt_meas);
    int survived = 0;
    for (int t = 0; t < trials; ++t) {
        auto rng = make_stream(seed, std::uint64_t(t));
        qcore::QuantumState psi = psi0;
        bool stayed = true;
        for (int k = 0; k < n_meas && stayed; ++k) {
            psi = U.apply(psi);
            psi = superselection_step(psi, spaces, rng);
            for (Eigen::Index i = 0; i < psi.dim(); ++i)
                if (psi.weight(i) > 1e-9) {
                    stayed = spaces.group_of[std::size_t(i)] == home;
                    break;
                }
        }
        if (stayed) ++survived;
    }
    return {double(survived) / double(trials), trials, n_meas};
}

// --- continuous model ---

struct StepSizeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One Euler-Maruyama step; xi holds independent standard normals, one per
// channel. Returns the pre-renormalization norm.
inline double csl_step(qcore::QuantumState& psi, const CollapseSystem& sys,
                       const DynamicsConfig& config, const Eigen::VectorXd& xi) {
    const Eigen::Index dim = psi.dim();
    const Eigen::Index nc = sys.n_channels();
    const double sqldt = std::sqrt(config.lambda * config.dt);

    qcore::Vec next = psi.amplitudes;
    if (sys.hamiltonian)
        next += qcore::cx(0.0, -config.dt) * (*sys.hamiltonian * psi.amplitudes);

    if (nc > 0 && config.lambda > 0) {
        Eigen::VectorXd w(dim);
        for (Eigen::Index i = 0; i < dim; ++i) w[i] = psi.weight(i);
        const Eigen::VectorXd mean = sys.channels * w; // <W_b>
        for (Eigen::Index i = 0; i < dim; ++i) {
            double g = 0.0, c = 0.0;
            for (Eigen::Index b = 0; b < nc; ++b) {
                const double dev = sys.channels(b, i) - mean[b];
                g += dev * xi[b];
                c += dev * dev;
            }
            next[i] += psi.amplitudes[i] *
                       (sqldt * g - 0.5 * config.lambda * c * config.dt);
        }
    }

    const double pre_norm = next.norm();
    if (std::abs(pre_norm - 1.0) > 10.0 * config.dt) {
        std::ostringstream os;
        os << "csl_step: pre-renormalization norm " << pre_norm << " left [1-10dt, 1+10dt]"
           << "; reduce dt (lambda*dt*spread^2 should stay small)";
        throw StepSizeError(os.str());
    }
    psi.amplitudes = next / pre_norm;
    return pre_norm;
}

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<std::vector<double>> group_weights;   // per sample, per eigenspace
    std::vector<std::vector<double>> state_weights;   // per sample, per basis state (dim <= 64)
    std::vector<std::vector<double>> op_expectations; // per sample, per active operator
    std::vector<double> norms;                        // pre-renormalization, per sample
    long collapse_outcome = -1;                       // basis state index, -1 = NONE
    double collapse_time = -1.0;
    int collapse_group = -1;
    std::uint64_t steps = 0;
    bool psd_warning = false;
    std::string psd_note;
};

namespace detail {

inline std::vector<double> group_weights_of(const qcore::QuantumState& psi,
                                            const EigenspacePartition& spaces) {
    std::vector<double> w(std::size_t(spaces.n_groups), 0.0);
    for (Eigen::Index i = 0; i < psi.dim(); ++i)
        w[std::size_t(spaces.group_of[std::size_t(i)])] += psi.weight(i);
    return w;
}

inline std::vector<double> op_expectations_of(const qcore::QuantumState& psi,
                                              const Eigen::MatrixXd& qdiag) {
    std::vector<double> e(std::size_t(qdiag.rows()), 0.0);
    for (Eigen::Index a = 0; a < qdiag.rows(); ++a) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < psi.dim(); ++i) acc += qdiag(a, i) * psi.weight(i);
        e[std::size_t(a)] = acc;
    }
    return e;
}

} // namespace detail

// Integrate one trajectory of the continuous model. Deterministic for a given
// (config.seed, traj_index). Once a trajectory locks into an eigenspace and
// there is no Hamiltonian to move it, the remaining samples repeat the locked
// values instead of being integrated (eigenstates are fixed points).
inline TrajectoryRecord run_trajectory(const DynamicsConfig& config, const CollapseSystem& sys,
                                       std::uint64_t traj_index = 0) {
    config.validate();
    auto rng = make_stream(config.seed, traj_index);
    std::normal_distribution<double> gauss(0.0, 1.0);

    qcore::QuantumState psi = sys.psi0;
    const std::uint64_t n_steps = std::uint64_t(std::llround(config.t_max / config.dt));
    TrajectoryRecord rec;
    rec.psd_warning = sys.noise.psd_warning;
    rec.psd_note = sys.noise.psd_note;

    const bool snapshot_states = sys.dim <= 64;
    auto sample = [&](double t, double norm) {
        rec.times.push_back(t);
        rec.group_weights.push_back(detail::group_weights_of(psi, sys.spaces));
        rec.op_expectations.push_back(detail::op_expectations_of(psi, sys.qdiag));
        if (snapshot_states) {
            std::vector<double> w(std::size_t(sys.dim));
            for (Eigen::Index i = 0; i < sys.dim; ++i) w[std::size_t(i)] = psi.weight(i);
            rec.state_weights.push_back(std::move(w));
        }
        rec.norms.push_back(norm);
    };
    sample(0.0, 1.0);

    Eigen::VectorXd xi(sys.n_channels());
    int streak = 0;
    bool locked = false;
    for (std::uint64_t step = 1; step <= n_steps; ++step) {
        if (!locked) {
            for (Eigen::Index b = 0; b < xi.size(); ++b) xi[b] = gauss(rng);
            const double norm = csl_step(psi, sys, config, xi);
            ++rec.steps;

            // collapse means settling onto one quasi-classical state; a
            // superposition spread inside a degenerate eigenspace never gets
            // there and is reported as NONE
            Eigen::Index arg = 0;
            double wmax = 0.0;
            for (Eigen::Index i = 0; i < psi.dim(); ++i)
                if (psi.weight(i) > wmax) { wmax = psi.weight(i); arg = i; }
            if (wmax >= config.lockin_threshold) {
                if (++streak >= config.lockin_steps && rec.collapse_outcome < 0) {
                    rec.collapse_outcome = long(arg);
                    rec.collapse_group = sys.spaces.group_of[std::size_t(arg)];
                    rec.collapse_time = double(step - std::uint64_t(streak) + 1) * config.dt;
                    if (!sys.hamiltonian) locked = true;
                }
            } else {
                streak = 0;
            }
            if (step % std::uint64_t(config.sample_every) == 0)
                sample(double(step) * config.dt, norm);
        } else if (step % std::uint64_t(config.sample_every) == 0) {
            sample(double(step) * config.dt, 1.0);
        }
    }
    return rec;
}

struct OutcomeStat {
    long state = -1; // representative basis state (argmax weight at lock-in)
    int group = -1;
    std::size_t count = 0;
    double frequency = 0.0;
    double ci_half_width = 0.0; // 95% normal approximation
};

struct EnsembleResult {
    std::size_t trials = 0;
    std::vector<OutcomeStat> outcomes; // includes a state=-1 row for NONE if any
    std::vector<double> times;
    std::vector<std::vector<double>> mean_group_weights; // per sample, per group
    std::vector<std::vector<double>> se_group_weights;
    std::vector<std::vector<double>> mean_op_expectations;
    std::vector<double> collapse_times_sorted; // collapsed trajectories only
    double median_collapse_time = -1.0;
    bool psd_warning = false;
    std::string psd_note;

    double frequency_of_state(long s) const {
        for (const auto& o : outcomes)
            if (o.state == s) return o.frequency;
        return 0.0;
    }
};

// Embarrassingly parallel ensemble. Trajectories are assigned to fixed-size
// chunks and chunk results are merged in chunk order, so the summary is
// bit-identical no matter how many workers run.
inline EnsembleResult run_ensemble(const DynamicsConfig& config, const CollapseSystem& sys,
                                   std::size_t trials) {
    config.validate();
    if (trials < 1) throw std::invalid_argument("run_ensemble: trials must be >= 1");

    constexpr std::size_t kChunk = 64;
    const std::size_t n_chunks = (trials + kChunk - 1) / kChunk;

    struct ChunkAcc {
        std::vector<std::vector<double>> sum_w, sumsq_w, sum_e;
        std::vector<std::pair<int, long>> outcomes; // (group, state) per trajectory
        std::vector<double> collapse_times;
        std::size_t n_samples = 0;
    };
    std::vector<ChunkAcc> acc(n_chunks);

    auto work = [&](std::size_t chunk) {
        ChunkAcc& a = acc[chunk];
        const std::size_t lo = chunk * kChunk;
        const std::size_t hi = std::min(trials, lo + kChunk);
        for (std::size_t t = lo; t < hi; ++t) {
            TrajectoryRecord r = run_trajectory(config, sys, t);
            if (a.sum_w.empty()) {
                a.n_samples = r.times.size();
                a.sum_w.assign(a.n_samples,
                               std::vector<double>(r.group_weights[0].size(), 0.0));
                a.sumsq_w = a.sum_w;
                a.sum_e.assign(a.n_samples,
                               std::vector<double>(r.op_expectations[0].size(), 0.0));
            }
            for (std::size_t k = 0; k < a.n_samples; ++k) {
                for (std::size_t g = 0; g < r.group_weights[k].size(); ++g) {
                    a.sum_w[k][g] += r.group_weights[k][g];
                    a.sumsq_w[k][g] += r.group_weights[k][g] * r.group_weights[k][g];
                }
                for (std::size_t e = 0; e < r.op_expectations[k].size(); ++e)
                    a.sum_e[k][e] += r.op_expectations[k][e];
            }
            a.outcomes.push_back({r.collapse_group, r.collapse_outcome});
            if (r.collapse_time >= 0) a.collapse_times.push_back(r.collapse_time);
        }
    };

    const std::size_t n_workers =
        std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(),
                                                       n_chunks));
    std::vector<std::exception_ptr> chunk_error(n_chunks);
    auto guarded = [&](std::size_t c) {
        try {
            work(c);
        } catch (...) {
            chunk_error[c] = std::current_exception();
        }
    };
    if (n_workers == 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) guarded(c);
    } else {
        std::vector<std::thread> pool;
        std::size_t next_chunk = 0;
        std::mutex mu;
        for (std::size_t w = 0; w < n_workers; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t c;
                    {
                        std::lock_guard<std::mutex> lk(mu);
                        if (next_chunk >= n_chunks) return;
                        c = next_chunk++;
                    }
                    guarded(c);
                }
            });
        for (auto& th : pool) th.join();
    }
    for (std::size_t c = 0; c < n_chunks; ++c)
        if (chunk_error[c]) std::rethrow_exception(chunk_error[c]);

    EnsembleResult res;
    res.trials = trials;
    res.psd_warning = sys.noise.psd_warning;
    res.psd_note = sys.noise.psd_note;

    // reference time grid from a zero-step probe of sample times
    {
        const std::uint64_t n_steps = std::uint64_t(std::llround(config.t_max / config.dt));
        res.times.push_back(0.0);
        for (std::uint64_t s = std::uint64_t(config.sample_every); s <= n_steps;
             s += std::uint64_t(config.sample_every))
            res.times.push_back(double(s) * config.dt);
    }
    const std::size_t n_samples = res.times.size();
    const std::size_t n_groups = std::size_t(sys.spaces.n_groups);
    const std::size_t n_ops = std::size_t(sys.qdiag.rows());
    res.mean_group_weights.assign(n_samples, std::vector<double>(n_groups, 0.0));
    res.se_group_weights.assign(n_samples, std::vector<double>(n_groups, 0.0));
    res.mean_op_expectations.assign(n_samples, std::vector<double>(n_ops, 0.0));

    std::vector<std::vector<double>> sumsq(n_samples, std::vector<double>(n_groups, 0.0));
    std::map<std::pair<int, long>, std::size_t> counts;
    for (const auto& a : acc) {
        for (std::size_t k = 0; k < a.n_samples; ++k) {
            for (std::size_t g = 0; g < n_groups; ++g) {
                res.mean_group_weights[k][g] += a.sum_w[k][g];
                sumsq[k][g] += a.sumsq_w[k][g];
            }
            for (std::size_t e = 0; e < n_ops; ++e)
                res.mean_op_expectations[k][e] += a.sum_e[k][e];
        }
        for (auto o : a.outcomes) ++counts[o];
        res.collapse_times_sorted.insert(res.collapse_times_sorted.end(),
                                         a.collapse_times.begin(), a.collapse_times.end());
    }
    const double nt = double(trials);
    for (std::size_t k = 0; k < n_samples; ++k) {
        for (std::size_t g = 0; g < n_groups; ++g) {
            const double mean = res.mean_group_weights[k][g] / nt;
            res.mean_group_weights[k][g] = mean;
            const double var = std::max(0.0, sumsq[k][g] / nt - mean * mean);
            res.se_group_weights[k][g] = std::sqrt(var / nt);
        }
        for (std::size_t e = 0; e < n_ops; ++e) res.mean_op_expectations[k][e] /= nt;
    }
    for (const auto& [key, cnt] : counts) {
        OutcomeStat st;
        st.group = key.first;
        st.state = key.second;
        st.count = cnt;
        st.frequency = double(cnt) / nt;
        st.ci_half_width = 1.96 * std::sqrt(st.frequency * (1.0 - st.frequency) / nt);
        res.outcomes.push_back(st);
    }
    std::sort(res.outcomes.begin(), res.outcomes.end(),
              [](const OutcomeStat& a, const OutcomeStat& b) { return a.state < b.state; });
    std::sort(res.collapse_times_sorted.begin(), res.collapse_times_sorted.end());
    if (!res.collapse_times_sorted.empty())
        res.median_collapse_time =
            res.collapse_times_sorted[res.collapse_times_sorted.size() / 2];
    return res;
}

// --- gambler's ruin reference process ---

struct RuinResult {
    std::size_t trials = 0;
    std::size_t wins1 = 0;
    double frequency1 = 0.0; // fraction of games player 1 ends with everything
    double mean_duration = 0.0;
};

// Fair-coin dollar exchange until one side holds everything. The win
// frequency reproduces the initial stake fraction; the collapse dynamics'
// Born statistics are the continuous version of this process.
inline RuinResult gamblers_ruin(int stake1, int stake2, std::size_t trials,
                                std::uint64_t seed) {
    if (stake1 < 0 || stake2 < 0 || stake1 + stake2 <= 0)
        throw std::invalid_argument("gamblers_ruin: stakes must be non-negative and not both 0");
    RuinResult res;
    res.trials = trials;
    const int total = stake1 + stake2;
    double dur = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        auto rng = make_stream(seed, t);
        std::bernoulli_distribution coin(0.5);
        int x = stake1;
        std::uint64_t steps = 0;
        while (x > 0 && x < total) {
            x += coin(rng) ? 1 : -1;
            ++steps;
        }
        if (x == total) ++res.wins1;
        dur += double(steps);
    }
    res.frequency1 = double(res.wins1) / double(trials);
    res.mean_duration = dur / double(trials);
    return res;
}

} // namespace qsc::dynamics

#endif
