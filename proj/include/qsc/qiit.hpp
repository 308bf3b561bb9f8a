#ifndef QSC_QIIT_HPP
#define QSC_QIIT_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qsc/iit3.hpp"
#include "qsc/qcore.hpp"

// The quantum layer on top of classical IIT: computational-basis states are
// identified with the classical network states of the same index, inherit
// their Q-shapes, and generate the collapse-operator ensemble. Because the
// embedded repertoires are diagonal in the quasi-classical basis, every
// operator built here is diagonal in the computational basis; off-diagonal
// coordinates give identically zero operators, which are kept in the census
// but marked inert.
namespace qsc::qiit {

// classical distribution -> diagonal density operator
inline qcore::DensityOperator classical_embedding(const std::vector<double>& p) {
    double tot = 0.0;
    for (double v : p) tot += v;
    if (std::abs(tot - 1.0) > 1e-9)
        throw std::invalid_argument("classical_embedding: distribution is not normalized");
    qcore::Mat m = qcore::Mat::Zero(Eigen::Index(p.size()), Eigen::Index(p.size()));
    for (Eigen::Index i = 0; i < Eigen::Index(p.size()); ++i) m(i, i) = p[std::size_t(i)];
    return qcore::DensityOperator(std::move(m));
}

inline qcore::DensityOperator classical_embedding(const iit3::Repertoire& rep,
                                                  const BinaryNetwork& net) {
    return classical_embedding(iit3::expand_repertoire(net, rep));
}

// Quasi-classical states of a network's Hilbert space: a set of mutually
// orthogonal computational-basis states, each carrying the Q-shape of the
// classical network state with the same index.
struct QuasiClassicalBasis {
    BinaryNetwork net;
    std::vector<std::uint32_t> states;   // computational basis indices, ascending
    std::vector<iit3::QShape> shapes;    // per state
    std::vector<double> phi_max_values;  // per state (system-level)

    int n_units() const { return net.n_units(); }
    Eigen::Index dim() const { return Eigen::Index(net.n_states()); }

    bool in_basis(std::uint32_t s) const {
        return std::find(states.begin(), states.end(), s) != states.end();
    }
    std::size_t position(std::uint32_t s) const {
        return std::size_t(std::find(states.begin(), states.end(), s) - states.begin());
    }
};

inline QuasiClassicalBasis build_basis(const BinaryNetwork& net,
                                       std::vector<std::uint32_t> states = {},
                                       iit3::ShapeMetric metric = iit3::ShapeMetric::Xemd) {
    QuasiClassicalBasis b{net, std::move(states), {}, {}};
    if (b.states.empty())
        for (std::uint32_t s = 0; s < net.n_states(); ++s) b.states.push_back(s);
    for (std::uint32_t s : b.states) {
        auto st = NetworkState::from_index(s, net.n_units());
        b.shapes.push_back(iit3::qshape(net, st));
        b.phi_max_values.push_back(iit3::phi_max(net, st, metric));
    }
    return b;
}

// One coordinate of Q-shape space, lifted to an operator. k indexes the
// (subsystem, direction) factor; i, j index the density-operator coefficient.
struct CollapseOperator {
    int k = 0; // 0-based over 2N factors: (mechanism in (size,lex) order) x (effect, cause)
    iit3::Units mechanism;
    iit3::Direction direction = iit3::Direction::Effect;
    Eigen::Index i = 0, j = 0;
    Eigen::VectorXd diag; // computational-basis diagonal; empty matrix elsewhere
    bool zero = true;

    qcore::HermitianOperator dense() const { return qcore::HermitianOperator::diagonal(diag); }
    double eigenvalue_on(std::uint32_t state) const { return diag[Eigen::Index(state)]; }
};

enum class OperatorVariant { Combined, Split, PhiOnly };

struct CollapseOperatorSet {
    OperatorVariant variant = OperatorVariant::Combined;
    Eigen::Index dim = 0;
    int n_factors = 0; // 2N for the coordinate operators
    std::vector<CollapseOperator> operators; // full census, zeros included
    std::vector<std::size_t> active;         // indices of nonzero operators

    std::size_t total_count() const { return operators.size(); }
    std::size_t active_count() const { return active.size(); }
};

namespace detail {

// c^k_{ii}(psi): diagonal coefficient of the k-th embedded repertoire of the
// basis state psi. Null-weight points carry zero coefficients.
inline double coefficient(const iit3::QShape& shape, std::size_t mech_index,
                          iit3::Direction dir, std::uint32_t i) {
    const auto& pt = shape.points[mech_index];
    if (pt.phi <= iit3::kPhiTol) return 0.0;
    const auto& loc =
        dir == iit3::Direction::Effect ? pt.effect_location : pt.cause_location;
    return loc[i];
}

} // namespace detail

// The Eq.-style ensemble: one operator per Q-shape coordinate,
//   Q^k_ij = sum_psi phi^k(psi) (c_ij(psi) + c_ji(psi)) |psi><psi|,
// phi^k duplicated across the two directions of its mechanism.
inline CollapseOperatorSet build_collapse_operators(const QuasiClassicalBasis& basis) {
    CollapseOperatorSet set;
    set.variant = OperatorVariant::Combined;
    set.dim = basis.dim();

    iit3::Units universe;
    for (int u = 0; u < basis.n_units(); ++u) universe.push_back(u);
    const auto mechanisms = iit3::detail::subsets_by_size(universe);
    set.n_factors = int(mechanisms.size()) * 2;

    int k = 0;
    for (std::size_t m = 0; m < mechanisms.size(); ++m) {
        for (iit3::Direction dir : {iit3::Direction::Effect, iit3::Direction::Cause}) {
            for (Eigen::Index i = 0; i < set.dim; ++i) {
                for (Eigen::Index j = 0; j < set.dim; ++j) {
                    CollapseOperator op;
                    op.k = k;
                    op.mechanism = mechanisms[m];
                    op.direction = dir;
                    op.i = i;
                    op.j = j;
                    op.diag = Eigen::VectorXd::Zero(set.dim);
                    if (i == j) { // embedded repertoires are diagonal: c_ij = 0 off-diagonal
                        for (std::size_t s = 0; s < basis.states.size(); ++s) {
                            const double phi = basis.shapes[s].points[m].phi;
                            const double c = detail::coefficient(basis.shapes[s], m, dir,
                                                                 std::uint32_t(i));
                            op.diag[Eigen::Index(basis.states[s])] = phi * (c + c);
                        }
                    }
                    op.zero = op.diag.cwiseAbs().maxCoeff() <= 1e-15;
                    if (!op.zero) set.active.push_back(set.operators.size());
                    set.operators.push_back(std::move(op));
                }
            }
            ++k;
        }
    }
    return set;
}

// Footnote variant: coordinate operators without the weight, plus one weight
// operator B^l per mechanism.
inline CollapseOperatorSet build_split_operators(const QuasiClassicalBasis& basis) {
    CollapseOperatorSet set;
    set.variant = OperatorVariant::Split;
    set.dim = basis.dim();

    iit3::Units universe;
    for (int u = 0; u < basis.n_units(); ++u) universe.push_back(u);
    const auto mechanisms = iit3::detail::subsets_by_size(universe);
    set.n_factors = int(mechanisms.size()) * 2;

    int k = 0;
    for (std::size_t m = 0; m < mechanisms.size(); ++m) {
        for (iit3::Direction dir : {iit3::Direction::Effect, iit3::Direction::Cause}) {
            for (Eigen::Index i = 0; i < set.dim; ++i) {
                for (Eigen::Index j = 0; j < set.dim; ++j) {
                    CollapseOperator op;
                    op.k = k;
                    op.mechanism = mechanisms[m];
                    op.direction = dir;
                    op.i = i;
                    op.j = j;
                    op.diag = Eigen::VectorXd::Zero(set.dim);
                    if (i == j) {
                        for (std::size_t s = 0; s < basis.states.size(); ++s) {
                            const double c = detail::coefficient(basis.shapes[s], m, dir,
                                                                 std::uint32_t(i));
                            op.diag[Eigen::Index(basis.states[s])] = c + c;
                        }
                    }
                    op.zero = op.diag.cwiseAbs().maxCoeff() <= 1e-15;
                    if (!op.zero) set.active.push_back(set.operators.size());
                    set.operators.push_back(std::move(op));
                }
            }
            ++k;
        }
    }
    // weight operators B^l
    for (std::size_t m = 0; m < mechanisms.size(); ++m) {
        CollapseOperator op;
        op.k = set.n_factors + int(m);
        op.mechanism = mechanisms[m];
        op.i = op.j = -1;
        op.diag = Eigen::VectorXd::Zero(set.dim);
        for (std::size_t s = 0; s < basis.states.size(); ++s)
            op.diag[Eigen::Index(basis.states[s])] = basis.shapes[s].points[m].phi;
        op.zero = op.diag.cwiseAbs().maxCoeff() <= 1e-15;
        if (!op.zero) set.active.push_back(set.operators.size());
        set.operators.push_back(std::move(op));
    }
    return set;
}

// The rejected scalar model: a single operator whose eigenvalues are Phi^max.
// States of equal Phi are degenerate under it no matter how their Q-shapes
// differ, so superpositions of such states feel no collapse pressure.
inline CollapseOperatorSet phi_only_operator_set(const QuasiClassicalBasis& basis) {
    CollapseOperatorSet set;
    set.variant = OperatorVariant::PhiOnly;
    set.dim = basis.dim();
    set.n_factors = 1;
    CollapseOperator op;
    op.k = 0;
    op.i = op.j = -1;
    op.diag = Eigen::VectorXd::Zero(set.dim);
    for (std::size_t s = 0; s < basis.states.size(); ++s)
        op.diag[Eigen::Index(basis.states[s])] = basis.phi_max_values[s];
    op.zero = op.diag.cwiseAbs().maxCoeff() <= 1e-15;
    if (!op.zero) set.active.push_back(0);
    set.operators.push_back(std::move(op));
    return set;
}

inline qcore::HermitianOperator phi_only_operator(const QuasiClassicalBasis& basis) {
    return phi_only_operator_set(basis).operators.front().dense();
}

inline CollapseOperatorSet build_operators(const QuasiClassicalBasis& basis,
                                           OperatorVariant variant) {
    switch (variant) {
        case OperatorVariant::Combined: return build_collapse_operators(basis);
        case OperatorVariant::Split: return build_split_operators(basis);
        case OperatorVariant::PhiOnly: return phi_only_operator_set(basis);
    }
    throw std::logic_error("unknown operator variant");
}

// --- quantum Q-shape of a state vector ---

struct QuantumQShapeComponent {
    std::uint32_t state = 0;
    double weight = 0.0; // squared amplitude
    const iit3::QShape* shape = nullptr;
};

// Reporting record: a quasi-classical state carries its embedded classical
// Q-shape; a superposition is the weighted formal combination of the
// components' shapes. Dynamics never reads this record; it acts through the
// operator ensemble.
struct QuantumQShape {
    std::vector<QuantumQShapeComponent> components;
    bool quasi_classical = false;        // single basis component
    double outside_weight = 0.0;         // weight on states outside the declared basis
    bool non_quasi_classical_flag = false;

    double total_phi() const {
        double t = 0.0;
        for (const auto& c : components) t += c.weight * c.shape->total_phi();
        return t;
    }
};

inline QuantumQShape quantum_qshape(const QuasiClassicalBasis& basis,
                                    const qcore::QuantumState& psi,
                                    double amp_tol = 1e-12) {
    if (psi.dim() != basis.dim())
        throw std::invalid_argument("quantum_qshape: state dimension does not match basis");
    QuantumQShape out;
    for (std::uint32_t s = 0; s < std::uint32_t(psi.dim()); ++s) {
        const double w = psi.weight(Eigen::Index(s));
        if (w <= amp_tol) continue;
        if (!basis.in_basis(s)) {
            out.outside_weight += w;
            continue;
        }
        out.components.push_back({s, w, &basis.shapes[basis.position(s)]});
    }
    out.non_quasi_classical_flag = out.outside_weight > 1e-9;
    out.quasi_classical = !out.non_quasi_classical_flag && out.components.size() == 1;
    return out;
}

} // namespace qsc::qiit

#endif
