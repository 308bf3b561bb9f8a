#ifndef QSC_NETCORE_HPP
#define QSC_NETCORE_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qsc {

// Exact IIT analysis is exponential in the unit count; instances in this
// repository are desk scale.
inline constexpr int kMaxUnits = 12;

inline int hamming(std::uint32_t a, std::uint32_t b) {
    return std::popcount(a ^ b);
}

// One binary unit's update rule: p(unit=1 at t+1 | packed input bits at t).
// Input bit k of the packed index is the state of unit inputs[k].
struct UnitRule {
    std::vector<int> inputs;
    std::vector<double> p_on;

    static UnitRule copy_of(int src) { return {{src}, {0.0, 1.0}}; }
    static UnitRule not_of(int src) { return {{src}, {1.0, 0.0}}; }
    static UnitRule and_gate(int a, int b) { return {{a, b}, {0.0, 0.0, 0.0, 1.0}}; }
    static UnitRule or_gate(int a, int b) { return {{a, b}, {0.0, 1.0, 1.0, 1.0}}; }
    static UnitRule xor_gate(int a, int b) { return {{a, b}, {0.0, 1.0, 1.0, 0.0}}; }
    // no inputs: next value is an independent coin flip
    static UnitRule coin(double p) { return {{}, {p}}; }
    static UnitRule table(std::vector<int> ins, std::vector<double> p) {
        return {std::move(ins), std::move(p)};
    }

    bool deterministic() const {
        for (double p : p_on)
            if (p != 0.0 && p != 1.0) return false;
        return true;
    }
};

// State of an n-unit network. Unit 0 is the least significant bit of `index`.
// The printable label lists unit 0 first, e.g. index 1 of a dyad is "10".
struct NetworkState {
    std::vector<int> bits;
    std::uint32_t index = 0;

    NetworkState() = default;
    NetworkState(std::vector<int> b) : bits(std::move(b)) {
        index = 0;
        for (std::size_t u = 0; u < bits.size(); ++u) {
            if (bits[u] != 0 && bits[u] != 1)
                throw std::invalid_argument("state bits must be 0/1");
            index |= std::uint32_t(bits[u]) << u;
        }
    }
    static NetworkState from_index(std::uint32_t idx, int n) {
        std::vector<int> b(n);
        for (int u = 0; u < n; ++u) b[u] = (idx >> u) & 1;
        return NetworkState(std::move(b));
    }
    static NetworkState from_label(const std::string& s) {
        std::vector<int> b;
        for (char c : s) {
            if (c == '[' || c == ']' || c == ' ') continue;
            if (c != '0' && c != '1') throw std::invalid_argument("bad state label: " + s);
            b.push_back(c - '0');
        }
        if (b.empty()) throw std::invalid_argument("empty state label");
        return NetworkState(std::move(b));
    }
    std::string label() const {
        std::string s;
        for (int b : bits) s.push_back(char('0' + b));
        return s;
    }
    int n_units() const { return int(bits.size()); }
};

inline std::string state_label(std::uint32_t idx, int n) {
    return NetworkState::from_index(idx, n).label();
}

// Permutation mapping position-in-label-sorted-order -> state index.
// Reports print distribution vectors in label order ("00","01","10","11",...),
// matching the usual left-to-right notation; internal vectors are index ordered.
inline std::vector<std::uint32_t> label_order(int n) {
    std::vector<std::uint32_t> idx(std::size_t(1) << n);
    for (std::uint32_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [n](std::uint32_t a, std::uint32_t b) {
        return state_label(a, n) < state_label(b, n);
    });
    return idx;
}

inline std::vector<double> to_label_order(const std::vector<double>& v, int n) {
    auto ord = label_order(n);
    std::vector<double> out(v.size());
    for (std::size_t k = 0; k < ord.size(); ++k) out[k] = v[ord[k]];
    return out;
}

class BinaryNetwork {
public:
    BinaryNetwork(std::vector<std::string> names, std::vector<UnitRule> rules)
        : names_(std::move(names)), rules_(std::move(rules)) {
        if (rules_.empty()) throw std::invalid_argument("network needs at least one unit");
        if (int(rules_.size()) > kMaxUnits)
            throw std::invalid_argument("network exceeds the configured cap of 12 units");
        if (names_.size() != rules_.size())
            throw std::invalid_argument("unit name/rule count mismatch");
        for (const auto& r : rules_) {
            if (r.p_on.size() != (std::size_t(1) << r.inputs.size()))
                throw std::invalid_argument("rule table size must be 2^inputs");
            for (int in : r.inputs)
                if (in < 0 || in >= int(rules_.size()))
                    throw std::invalid_argument("rule references a unit outside the network");
            for (double p : r.p_on)
                if (!(p >= 0.0 && p <= 1.0))
                    throw std::invalid_argument("rule probabilities must lie in [0,1]");
        }
    }

    static BinaryNetwork with_rules(std::vector<UnitRule> rules) {
        std::vector<std::string> names;
        for (std::size_t u = 0; u < rules.size(); ++u)
            names.push_back(std::string(1, char('A' + u % 26)));
        return BinaryNetwork(std::move(names), std::move(rules));
    }

    int n_units() const { return int(rules_.size()); }
    std::uint32_t n_states() const { return std::uint32_t(1) << n_units(); }
    const std::vector<UnitRule>& rules() const { return rules_; }
    const UnitRule& rule(int u) const { return rules_[std::size_t(u)]; }
    const std::vector<std::string>& unit_names() const { return names_; }

    bool has_edge(int src, int dst) const {
        const auto& in = rules_[std::size_t(dst)].inputs;
        return std::find(in.begin(), in.end(), src) != in.end();
    }

    bool deterministic() const {
        for (const auto& r : rules_)
            if (!r.deterministic()) return false;
        return true;
    }

    // p(unit u = 1 at t+1 | full previous state)
    double p_on(int u, std::uint32_t prev) const {
        const auto& r = rules_[std::size_t(u)];
        std::uint32_t packed = 0;
        for (std::size_t k = 0; k < r.inputs.size(); ++k)
            packed |= ((prev >> r.inputs[k]) & 1u) << k;
        return r.p_on[packed];
    }

    // Full transition row: p(next | prev). Unit updates are conditionally
    // independent given the previous state.
    std::vector<double> transition_row(std::uint32_t prev) const {
        const int n = n_units();
        std::vector<double> pu(static_cast<std::size_t>(n));
        for (int u = 0; u < n; ++u) pu[std::size_t(u)] = p_on(u, prev);
        std::vector<double> row(n_states());
        for (std::uint32_t nxt = 0; nxt < n_states(); ++nxt) {
            double pr = 1.0;
            for (int u = 0; u < n; ++u)
                pr *= ((nxt >> u) & 1u) ? pu[std::size_t(u)] : 1.0 - pu[std::size_t(u)];
            row[nxt] = pr;
        }
        return row;
    }

    std::vector<std::vector<double>> tpm() const {
        std::vector<std::vector<double>> m(n_states());
        for (std::uint32_t s = 0; s < n_states(); ++s) m[s] = transition_row(s);
        return m;
    }

private:
    std::vector<std::string> names_;
    std::vector<UnitRule> rules_;
};

inline BinaryNetwork build_network(std::vector<UnitRule> rules) {
    return BinaryNetwork::with_rules(std::move(rules));
}

inline std::vector<double> next_state_distribution(const BinaryNetwork& net,
                                                   const NetworkState& s) {
    if (s.n_units() != net.n_units())
        throw std::invalid_argument("state size does not match network");
    return net.transition_row(s.index);
}

// --- stock instances used throughout tests and bundled scenarios ---

// Two units that swap their values each step.
inline BinaryNetwork swap_dyad() {
    return BinaryNetwork({"A", "B"}, {UnitRule::copy_of(1), UnitRule::copy_of(0)});
}

// Two AND gates, each reading itself and the other unit. 00 and 11 are fixed
// points; everything else falls to 00.
inline BinaryNetwork and_dyad() {
    return BinaryNetwork({"A", "B"}, {UnitRule::and_gate(0, 1), UnitRule::and_gate(0, 1)});
}

inline BinaryNetwork disconnected_dyad() {
    return BinaryNetwork({"A", "B"}, {UnitRule::coin(0.5), UnitRule::coin(0.5)});
}

} // namespace qsc

#endif
