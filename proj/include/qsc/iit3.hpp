#ifndef QSC_IIT3_HPP
#define QSC_IIT3_HPP

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qsc/netcore.hpp"
#include "qsc/transport.hpp"

// Mechanism-level integrated information, Q-shapes and system-level Phi for
// small binary networks.
//
// Conventions, fixed by the golden dyad values and kept throughout:
//  - Exposed repertoires (the locations L(m) that make up a Q-shape): the
//    mechanism is clamped to its current values; every other input a purview
//    unit reads is marginalized uniformly and independently per target.
//    Purview-level repertoires expand to full-system vectors with the
//    unconstrained marginal on non-purview units.
//  - phi itself measures how much replacing the mechanism's cross-partition
//    influences with independent uniform noise perturbs the one-step dynamics
//    at the current state. Effect side: forward step from the current state
//    with severed edges noised. Cause side: Bayesian inversion of the
//    mechanism's current values (uniform prior) with severed edges noised in
//    the likelihood. phi(m) = min over directions of the purview-maximized
//    minimum-information-partition distance, all distances by EMD under the
//    Hamming metric.
//  - Partitions of a mechanism-purview pair are the bipartitions
//    (M1,P1)x(M2,P2); a partition severs the cross-factor edges only. Severing
//    an absent edge changes nothing, which is what makes self-less mechanisms
//    cheap to cut.
namespace qsc::iit3 {

inline constexpr double kPhiTol = 1e-12;

enum class Direction { Cause, Effect };

using Units = std::vector<int>; // sorted unit indices

struct Repertoire {
    Direction direction = Direction::Effect;
    Units purview;
    std::vector<double> probs; // over 2^|purview| packed purview states
};

namespace detail {

inline std::uint32_t pack(std::uint32_t full, const Units& subset) {
    std::uint32_t p = 0;
    for (std::size_t k = 0; k < subset.size(); ++k)
        p |= ((full >> subset[k]) & 1u) << k;
    return p;
}

inline bool contains(const Units& v, int u) {
    return std::find(v.begin(), v.end(), u) != v.end();
}

// all nonempty subsets of 0..n-1, ordered lexicographically by their sorted
// index sequence (deterministic tie-break for purview and partition searches)
inline std::vector<Units> subsets_lex(const Units& units) {
    std::vector<Units> out;
    const std::size_t n = units.size();
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        Units s;
        for (std::size_t k = 0; k < n; ++k)
            if ((mask >> k) & 1u) s.push_back(units[k]);
        out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end());
    return out;
}

// subsets in (size, lex) order: A, B, AB, ... used to enumerate mechanisms
inline std::vector<Units> subsets_by_size(const Units& units) {
    auto out = subsets_lex(units);
    std::stable_sort(out.begin(), out.end(),
                     [](const Units& a, const Units& b) { return a.size() < b.size(); });
    return out;
}

using Edge = std::pair<int, int>; // (source unit, target unit)

// p(target = 1) with: severed inputs -> independent uniform noise, clamped
// units at their given bits, free units marginalized uniformly.
inline double target_on_probability(const BinaryNetwork& net, int t,
                                    const std::vector<int>& bits,
                                    const std::set<int>& clamped,
                                    const std::set<Edge>& severed) {
    const UnitRule& r = net.rule(t);
    std::vector<std::size_t> open; // positions in r.inputs to average over
    std::uint32_t base = 0;
    for (std::size_t k = 0; k < r.inputs.size(); ++k) {
        const int v = r.inputs[k];
        if (severed.count({v, t}) || !clamped.count(v))
            open.push_back(k);
        else
            base |= std::uint32_t(bits[v]) << k;
    }
    double acc = 0.0;
    const std::uint32_t combos = 1u << open.size();
    for (std::uint32_t a = 0; a < combos; ++a) {
        std::uint32_t packed = base;
        for (std::size_t k = 0; k < open.size(); ++k)
            packed |= ((a >> k) & 1u) << open[k];
        acc += r.p_on[packed];
    }
    return acc / combos;
}

// product distribution over purview states from per-target on-probabilities
inline std::vector<double> purview_product(const std::vector<double>& p_on) {
    std::vector<double> out(std::size_t(1) << p_on.size());
    for (std::uint32_t s = 0; s < out.size(); ++s) {
        double pr = 1.0;
        for (std::size_t k = 0; k < p_on.size(); ++k)
            pr *= ((s >> k) & 1u) ? p_on[k] : 1.0 - p_on[k];
        out[s] = pr;
    }
    return out;
}

// forward distribution over purview P one step after the current state, with
// the mechanism's severed edges replaced by noise and every other input held
// at its current value
inline std::vector<double> forward_purview(const BinaryNetwork& net, const NetworkState& s,
                                           const Units& P, const std::set<Edge>& severed) {
    std::set<int> all;
    for (int u = 0; u < net.n_units(); ++u) all.insert(u);
    std::vector<double> pt;
    pt.reserve(P.size());
    for (int t : P) pt.push_back(target_on_probability(net, t, s.bits, all, severed));
    return purview_product(pt);
}

// posterior over previous purview-P states given the mechanism units' current
// values (uniform prior over previous states); severed edges noised in the
// likelihood. Empty result: the mechanism state has no possible cause.
inline std::optional<std::vector<double>> inverse_purview(const BinaryNetwork& net,
                                                          const NetworkState& s,
                                                          const Units& M, const Units& P,
                                                          const std::set<Edge>& severed) {
    const int n = net.n_units();
    std::vector<double> post(std::size_t(1) << n, 0.0);
    double total = 0.0;
    std::set<int> all;
    for (int u = 0; u < n; ++u) all.insert(u);
    for (std::uint32_t prev = 0; prev < (1u << n); ++prev) {
        auto pb = NetworkState::from_index(prev, n).bits;
        double like = 1.0;
        for (int u : M) {
            const double pon = target_on_probability(net, u, pb, all, severed);
            like *= s.bits[std::size_t(u)] ? pon : 1.0 - pon;
        }
        post[prev] = like;
        total += like;
    }
    if (total <= 0.0) return std::nullopt;
    std::vector<double> out(std::size_t(1) << P.size(), 0.0);
    for (std::uint32_t prev = 0; prev < (1u << n); ++prev)
        out[pack(prev, P)] += post[prev] / total;
    return out;
}

struct Bipartition {
    Units m1, p1, m2, p2;
};

inline std::vector<Bipartition> bipartitions(const Units& M, const Units& P) {
    std::vector<Bipartition> out;
    const std::size_t nm = M.size(), np = P.size();
    for (std::uint32_t mm = 0; mm < (1u << nm); ++mm) {
        for (std::uint32_t pm = 0; pm < (1u << np); ++pm) {
            const bool whole = (mm == (1u << nm) - 1) && (pm == (1u << np) - 1);
            const bool empty = (mm == 0) && (pm == 0);
            if (whole || empty) continue;
            Bipartition b;
            for (std::size_t k = 0; k < nm; ++k)
                ((mm >> k) & 1u ? b.m1 : b.m2).push_back(M[k]);
            for (std::size_t k = 0; k < np; ++k)
                ((pm >> k) & 1u ? b.p1 : b.p2).push_back(P[k]);
            out.push_back(std::move(b));
        }
    }
    return out;
}

// edges a partition severs: cross-factor mechanism->purview influences
inline std::set<Edge> severed_effect(const BinaryNetwork& net, const Bipartition& b) {
    std::set<Edge> e;
    for (const auto& [ms, ps] : {std::pair{&b.m1, &b.p2}, std::pair{&b.m2, &b.p1}})
        for (int u : *ms)
            for (int t : *ps)
                if (net.has_edge(u, t)) e.insert({u, t});
    return e;
}

// cause side: cross-factor purview->mechanism influences
inline std::set<Edge> severed_cause(const BinaryNetwork& net, const Bipartition& b) {
    std::set<Edge> e;
    for (const auto& [ms, ps] : {std::pair{&b.m1, &b.p2}, std::pair{&b.m2, &b.p1}})
        for (int u : *ms)
            for (int t : *ps)
                if (net.has_edge(t, u)) e.insert({t, u});
    return e;
}

} // namespace detail

// --- exposed repertoires (the Q-shape locations) ---

// Unconstrained effect repertoire over the full system: per-unit marginals of
// a uniformly perturbed network, taken independently.
inline std::vector<double> unconstrained_effect(const BinaryNetwork& net) {
    const int n = net.n_units();
    std::vector<double> pm(std::size_t(n), 0.0);
    for (int u = 0; u < n; ++u) {
        for (std::uint32_t prev = 0; prev < net.n_states(); ++prev)
            pm[std::size_t(u)] += net.p_on(u, prev);
        pm[std::size_t(u)] /= double(net.n_states());
    }
    std::vector<double> out(net.n_states());
    for (std::uint32_t st = 0; st < net.n_states(); ++st) {
        double pr = 1.0;
        for (int u = 0; u < n; ++u)
            pr *= ((st >> u) & 1u) ? pm[std::size_t(u)] : 1.0 - pm[std::size_t(u)];
        out[st] = pr;
    }
    return out;
}

inline std::vector<double> unconstrained_cause(const BinaryNetwork& net) {
    return std::vector<double>(net.n_states(), 1.0 / double(net.n_states()));
}

// p(purview state at t+1 | mechanism units fixed to the current state);
// non-mechanism inputs vary uniformly and independently per target.
inline Repertoire effect_repertoire(const BinaryNetwork& net, const NetworkState& s,
                                    const Units& mechanism, const Units& purview) {
    if (purview.empty()) throw std::invalid_argument("effect_repertoire: empty purview");
    std::set<int> clamped(mechanism.begin(), mechanism.end());
    std::vector<double> pt;
    for (int t : purview)
        pt.push_back(detail::target_on_probability(net, t, s.bits, clamped, {}));
    return {Direction::Effect, purview, detail::purview_product(pt)};
}

// p(purview state at t-1 | mechanism units' current values), uniform prior.
// A mechanism state no possible past can produce yields the uniform
// distribution (and zero cause power in small_phi).
inline Repertoire cause_repertoire(const BinaryNetwork& net, const NetworkState& s,
                                   const Units& mechanism, const Units& purview) {
    if (purview.empty()) throw std::invalid_argument("cause_repertoire: empty purview");
    if (mechanism.empty()) {
        return {Direction::Cause, purview,
                std::vector<double>(std::size_t(1) << purview.size(),
                                    1.0 / double(std::size_t(1) << purview.size()))};
    }
    auto post = detail::inverse_purview(net, s, mechanism, purview, {});
    if (!post)
        return {Direction::Cause, purview,
                std::vector<double>(std::size_t(1) << purview.size(),
                                    1.0 / double(std::size_t(1) << purview.size()))};
    return {Direction::Cause, purview, std::move(*post)};
}

// purview repertoire -> full-system vector; non-purview units carry the
// unconstrained marginal of their direction
inline std::vector<double> expand_repertoire(const BinaryNetwork& net, const Repertoire& rep) {
    const int n = net.n_units();
    Units comp;
    for (int u = 0; u < n; ++u)
        if (!detail::contains(rep.purview, u)) comp.push_back(u);
    const auto uc = rep.direction == Direction::Effect ? unconstrained_effect(net)
                                                       : unconstrained_cause(net);
    std::vector<double> ucm(std::size_t(1) << comp.size(), 0.0);
    for (std::uint32_t st = 0; st < net.n_states(); ++st)
        ucm[detail::pack(st, comp)] += uc[st];
    std::vector<double> out(net.n_states());
    for (std::uint32_t st = 0; st < net.n_states(); ++st)
        out[st] = rep.probs[detail::pack(st, rep.purview)] * ucm[detail::pack(st, comp)];
    return out;
}

// --- mechanism phi ---

struct DirectionResult {
    double phi = 0.0;
    Units core_purview; // empty when phi == 0 and no purview is preferred
};

namespace detail {

inline DirectionResult phi_direction(const BinaryNetwork& net, const NetworkState& s,
                                     const Units& M, const Units& universe, Direction dir) {
    DirectionResult best;
    if (dir == Direction::Cause) {
        // a mechanism state with no possible cause has no cause power
        if (!inverse_purview(net, s, M, universe, {})) return best;
    }
    for (const Units& P : subsets_lex(universe)) {
        std::vector<double> whole;
        if (dir == Direction::Effect) {
            whole = forward_purview(net, s, P, {});
        } else {
            auto w = inverse_purview(net, s, M, P, {});
            if (!w) return DirectionResult{};
            whole = std::move(*w);
        }
        double mip = std::numeric_limits<double>::infinity();
        for (const auto& b : bipartitions(M, P)) {
            std::vector<double> part;
            if (dir == Direction::Effect) {
                part = forward_purview(net, s, P, severed_effect(net, b));
            } else {
                auto p = inverse_purview(net, s, M, P, severed_cause(net, b));
                if (!p) continue; // noising cannot remove reachability
                part = std::move(*p);
            }
            mip = std::min(mip, transport::emd(whole, part));
            if (mip <= kPhiTol) break;
        }
        if (mip == std::numeric_limits<double>::infinity()) mip = 0.0;
        if (mip > best.phi + kPhiTol) {
            best.phi = mip;
            best.core_purview = P;
        }
    }
    if (best.phi <= kPhiTol) best = DirectionResult{};
    return best;
}

} // namespace detail

struct SmallPhiResult {
    double phi = 0.0;
    double phi_cause = 0.0;
    double phi_effect = 0.0;
    Units core_cause;
    Units core_effect;
    Repertoire cause_rep;
    Repertoire effect_rep;
};

inline SmallPhiResult small_phi(const BinaryNetwork& net, const NetworkState& s,
                                const Units& mechanism) {
    if (mechanism.empty()) throw std::invalid_argument("small_phi: empty mechanism");
    Units universe;
    for (int u = 0; u < net.n_units(); ++u) universe.push_back(u);

    SmallPhiResult r;
    const auto eff = detail::phi_direction(net, s, mechanism, universe, Direction::Effect);
    const auto cau = detail::phi_direction(net, s, mechanism, universe, Direction::Cause);
    r.phi_effect = eff.phi;
    r.phi_cause = cau.phi;
    r.phi = std::min(eff.phi, cau.phi);
    if (r.phi <= kPhiTol) r.phi = 0.0;
    // core purviews default to the full system when a side carries no phi,
    // so zero-weight points still have well-defined locations
    r.core_effect = eff.core_purview.empty() ? universe : eff.core_purview;
    r.core_cause = cau.core_purview.empty() ? universe : cau.core_purview;
    r.effect_rep = effect_repertoire(net, s, mechanism, r.core_effect);
    r.cause_rep = cause_repertoire(net, s, mechanism, r.core_cause);
    return r;
}

// --- Q-shape ---

struct MechanismPoint {
    Units mechanism;
    double phi = 0.0;
    double phi_cause = 0.0;
    double phi_effect = 0.0;
    Units core_cause;
    Units core_effect;
    std::vector<double> effect_location; // full-system, index order
    std::vector<double> cause_location;
};

struct QShape {
    int n_units = 0;
    NetworkState system_state;
    std::vector<MechanismPoint> points;    // all nonempty subsystems, (size, lex) order
    std::vector<double> uc_effect;         // unconstrained pair of the generating network
    std::vector<double> uc_cause;

    // (2^n - 1)(2^{n+1} + 1): per subsystem two full-system distributions
    // plus one weight
    std::size_t dimension() const {
        const std::size_t states = std::size_t(1) << n_units;
        return ((states - 1) * (2 * states + 1));
    }

    double total_phi() const {
        double t = 0;
        for (const auto& p : points) t += p.phi;
        return t;
    }

    // weight, effect location, cause location per subsystem, concatenated
    std::vector<double> flatten() const {
        std::vector<double> out;
        out.reserve(dimension());
        for (const auto& p : points) {
            out.insert(out.end(), p.effect_location.begin(), p.effect_location.end());
            out.insert(out.end(), p.cause_location.begin(), p.cause_location.end());
            out.push_back(p.phi);
        }
        return out;
    }
};

inline QShape qshape(const BinaryNetwork& net, const NetworkState& s) {
    if (s.n_units() != net.n_units())
        throw std::invalid_argument("qshape: state size does not match network");
    Units universe;
    for (int u = 0; u < net.n_units(); ++u) universe.push_back(u);

    QShape q;
    q.n_units = net.n_units();
    q.system_state = s;
    q.uc_effect = unconstrained_effect(net);
    q.uc_cause = unconstrained_cause(net);
    for (const Units& M : detail::subsets_by_size(universe)) {
        auto r = small_phi(net, s, M);
        MechanismPoint pt;
        pt.mechanism = M;
        pt.phi = r.phi;
        pt.phi_cause = r.phi_cause;
        pt.phi_effect = r.phi_effect;
        pt.core_cause = r.core_cause;
        pt.core_effect = r.core_effect;
        pt.effect_location = expand_repertoire(net, r.effect_rep);
        pt.cause_location = expand_repertoire(net, r.cause_rep);
        q.points.push_back(std::move(pt));
    }
    return q;
}

// --- system partitions and Phi ---

// network with every existing edge from S1 into S2 replaced by independent
// uniform noise (the noise is marginalized into the target rule tables)
inline BinaryNetwork cut_network(const BinaryNetwork& net, const Units& s1, const Units& s2) {
    std::vector<UnitRule> rules;
    for (int u = 0; u < net.n_units(); ++u) {
        const UnitRule& r = net.rule(u);
        std::vector<std::size_t> severed_pos;
        if (detail::contains(s2, u))
            for (std::size_t k = 0; k < r.inputs.size(); ++k)
                if (detail::contains(s1, r.inputs[k])) severed_pos.push_back(k);
        if (severed_pos.empty()) {
            rules.push_back(r);
            continue;
        }
        UnitRule nr;
        std::vector<std::size_t> kept_pos;
        for (std::size_t k = 0; k < r.inputs.size(); ++k)
            if (std::find(severed_pos.begin(), severed_pos.end(), k) == severed_pos.end()) {
                kept_pos.push_back(k);
                nr.inputs.push_back(r.inputs[k]);
            }
        nr.p_on.assign(std::size_t(1) << nr.inputs.size(), 0.0);
        for (std::uint32_t kp = 0; kp < (1u << nr.inputs.size()); ++kp) {
            double acc = 0.0;
            for (std::uint32_t a = 0; a < (1u << severed_pos.size()); ++a) {
                std::uint32_t packed = 0;
                for (std::size_t k = 0; k < kept_pos.size(); ++k)
                    packed |= ((kp >> k) & 1u) << kept_pos[k];
                for (std::size_t k = 0; k < severed_pos.size(); ++k)
                    packed |= ((a >> k) & 1u) << severed_pos[k];
                acc += r.p_on[packed];
            }
            nr.p_on[kp] = acc / double(1u << severed_pos.size());
        }
        rules.push_back(std::move(nr));
    }
    return BinaryNetwork(net.unit_names(), std::move(rules));
}

enum class ShapeMetric {
    Literal, // the per-mechanism weighted sum, eq-by-eq
    Xemd     // transport of phi mass between mechanism points
};

// declared here, defined in qshape_metric.hpp (transport module)
inline double shape_distance(const QShape& q1, const QShape& q2, ShapeMetric metric);

struct SystemCut {
    Units from, to;
    double distance = 0.0;
};

struct BigPhiResult {
    double phi = 0.0;
    SystemCut mip;
    QShape shape;
};

// Minimal Q-shape distance to any unidirectionally partitioned version of the
// system. Partitions degrade mechanisms; a point the intact system lacks is
// not credited to the partitioned shape.
inline BigPhiResult big_phi_full(const BinaryNetwork& net, const NetworkState& s,
                                 ShapeMetric metric = ShapeMetric::Xemd) {
    BigPhiResult res;
    res.shape = qshape(net, s);
    if (net.n_units() < 2) return res; // a single element admits no partition

    Units universe;
    for (int u = 0; u < net.n_units(); ++u) universe.push_back(u);
    double best = std::numeric_limits<double>::infinity();
    SystemCut best_cut;
    for (const Units& s1 : detail::subsets_lex(universe)) {
        if (s1.size() == universe.size()) continue;
        Units s2;
        for (int u : universe)
            if (!detail::contains(s1, u)) s2.push_back(u);
        auto cut = cut_network(net, s1, s2);
        QShape qc = qshape(cut, s);
        for (std::size_t k = 0; k < qc.points.size(); ++k)
            if (res.shape.points[k].phi <= kPhiTol) qc.points[k].phi = 0.0;
        const double d = shape_distance(res.shape, qc, metric);
        if (d < best) {
            best = d;
            best_cut = {s1, s2, d};
        }
    }
    res.phi = best < transport::kZeroTol ? 0.0 : best;
    res.mip = best_cut;
    return res;
}

inline double big_phi(const BinaryNetwork& net, const NetworkState& s,
                      ShapeMetric metric = ShapeMetric::Xemd) {
    return big_phi_full(net, s, metric).phi;
}

// candidate subsystem with the rest of the network frozen at the current state
inline std::pair<BinaryNetwork, NetworkState> freeze_background(const BinaryNetwork& net,
                                                                const Units& subsystem,
                                                                const NetworkState& s) {
    std::vector<UnitRule> rules;
    std::vector<std::string> names;
    std::vector<int> remap(std::size_t(net.n_units()), -1);
    for (std::size_t k = 0; k < subsystem.size(); ++k) remap[std::size_t(subsystem[k])] = int(k);
    for (int u : subsystem) {
        const UnitRule& r = net.rule(u);
        UnitRule nr;
        std::vector<std::size_t> kept_pos;
        for (std::size_t k = 0; k < r.inputs.size(); ++k)
            if (detail::contains(subsystem, r.inputs[k])) {
                kept_pos.push_back(k);
                nr.inputs.push_back(remap[std::size_t(r.inputs[k])]);
            }
        nr.p_on.assign(std::size_t(1) << nr.inputs.size(), 0.0);
        for (std::uint32_t kp = 0; kp < (1u << nr.inputs.size()); ++kp) {
            std::uint32_t packed = 0;
            for (std::size_t k = 0; k < r.inputs.size(); ++k) {
                const int v = r.inputs[k];
                std::uint32_t b;
                if (detail::contains(subsystem, v)) {
                    const auto it = std::find(kept_pos.begin(), kept_pos.end(), k);
                    b = (kp >> std::distance(kept_pos.begin(), it)) & 1u;
                } else {
                    b = std::uint32_t(s.bits[std::size_t(v)]);
                }
                packed |= b << k;
            }
            nr.p_on[kp] = r.p_on[packed];
        }
        rules.push_back(std::move(nr));
        names.push_back(net.unit_names()[std::size_t(u)]);
    }
    std::vector<int> bits;
    for (int u : subsystem) bits.push_back(s.bits[std::size_t(u)]);
    return {BinaryNetwork(std::move(names), std::move(rules)), NetworkState(std::move(bits))};
}

// Phi if the network (treated as causally isolated) out-integrates every
// proper subsystem, else 0.
inline double phi_max(const BinaryNetwork& net, const NetworkState& s,
                      ShapeMetric metric = ShapeMetric::Xemd) {
    const double whole = big_phi(net, s, metric);
    if (whole <= 0.0) return 0.0;
    Units universe;
    for (int u = 0; u < net.n_units(); ++u) universe.push_back(u);
    for (const Units& sub : detail::subsets_lex(universe)) {
        if (sub.size() == universe.size()) continue;
        auto [subnet, substate] = freeze_background(net, sub, s);
        if (big_phi(subnet, substate, metric) >= whole) return 0.0;
    }
    return whole;
}

} // namespace qsc::iit3

#include "qsc/qshape_metric.hpp"

#endif
