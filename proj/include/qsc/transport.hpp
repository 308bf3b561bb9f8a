#ifndef QSC_TRANSPORT_HPP
#define QSC_TRANSPORT_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "qsc/netcore.hpp"

namespace qsc::transport {

inline constexpr double kMassTol = 1e-12;
inline constexpr double kZeroTol = 1e-10; // values below this report as exactly 0

struct Flow {
    std::uint32_t from;
    std::uint32_t to;
    double mass;
};

struct TransportPlan {
    std::vector<Flow> flows;
    double cost = 0.0;
};

namespace detail {

// Exact balanced transportation problem via successive shortest augmenting
// paths with Johnson potentials. Ground costs must be non-negative so Dijkstra
// stays exact. Supplies/demands are consumed in place.
inline TransportPlan solve_transport(std::size_t ns, std::size_t nd,
                                     const std::function<double(std::size_t, std::size_t)>& cost,
                                     std::vector<double> supply,
                                     std::vector<double> demand) {
    TransportPlan plan;
    if (ns == 0 || nd == 0) return plan;

    std::vector<std::vector<double>> flow(ns, std::vector<double>(nd, 0.0));
    std::vector<double> pot_s(ns, 0.0), pot_d(nd, 0.0);
    for (std::size_t j = 0; j < nd; ++j) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < ns; ++i) m = std::min(m, cost(i, j));
        pot_d[j] = m;
    }

    double remaining = 0.0;
    for (double s : supply) remaining += s;

    while (remaining > kMassTol) {
        // Dijkstra over the residual bipartite graph from every source with
        // leftover supply; node ids: [0,ns) sources, [ns,ns+nd) sinks.
        const std::size_t nn = ns + nd;
        const double inf = std::numeric_limits<double>::infinity();
        std::vector<double> dist(nn, inf);
        std::vector<int> prev(nn, -1);
        std::vector<char> done(nn, 0);
        for (std::size_t i = 0; i < ns; ++i)
            if (supply[i] > kMassTol) dist[i] = 0.0;

        for (;;) {
            std::size_t u = nn;
            double best = inf;
            for (std::size_t v = 0; v < nn; ++v)
                if (!done[v] && dist[v] < best) { best = dist[v]; u = v; }
            if (u == nn) break;
            done[u] = 1;
            if (u < ns) {
                for (std::size_t j = 0; j < nd; ++j) {
                    double rc = cost(u, j) + pot_s[u] - pot_d[j];
                    if (rc < 0) rc = 0; // fp guard; invariant keeps rc >= 0
                    if (dist[u] + rc < dist[ns + j] - 1e-15) {
                        dist[ns + j] = dist[u] + rc;
                        prev[ns + j] = int(u);
                    }
                }
            } else {
                const std::size_t j = u - ns;
                for (std::size_t i = 0; i < ns; ++i) {
                    if (flow[i][j] > kMassTol) { // residual backward arc
                        double rc = -(cost(i, j) + pot_s[i] - pot_d[j]);
                        if (rc < 0) rc = 0;
                        if (dist[u] + rc < dist[i] - 1e-15) {
                            dist[i] = dist[u] + rc;
                            prev[i] = int(u);
                        }
                    }
                }
            }
        }

        // closest sink with leftover demand
        std::size_t tj = nd;
        double best = inf;
        for (std::size_t j = 0; j < nd; ++j)
            if (demand[j] > kMassTol && dist[ns + j] < best) { best = dist[ns + j]; tj = j; }
        if (tj == nd) throw std::runtime_error("transport: no augmenting path (unbalanced?)");

        // bottleneck along the augmenting path
        double push = demand[tj];
        for (int v = int(ns + tj); prev[v] != -1; v = prev[v]) {
            const int p = prev[v];
            if (v >= int(ns)) {
                if (prev[p] == -1) push = std::min(push, supply[std::size_t(p)]);
            } else {
                push = std::min(push, flow[std::size_t(v)][std::size_t(p) - ns]);
            }
        }
        for (int v = int(ns + tj); prev[v] != -1; v = prev[v]) {
            const int p = prev[v];
            if (v >= int(ns))
                flow[std::size_t(p)][std::size_t(v) - ns] += push;
            else
                flow[std::size_t(v)][std::size_t(p) - ns] -= push;
        }
        {
            int v = int(ns + tj);
            while (prev[v] != -1) v = prev[v];
            supply[std::size_t(v)] -= push;
        }
        demand[tj] -= push;
        remaining -= push;

        for (std::size_t i = 0; i < ns; ++i)
            if (dist[i] < inf) pot_s[i] += dist[i];
        for (std::size_t j = 0; j < nd; ++j)
            if (dist[ns + j] < inf) pot_d[j] += dist[ns + j];
    }

    for (std::size_t i = 0; i < ns; ++i)
        for (std::size_t j = 0; j < nd; ++j)
            if (flow[i][j] > kMassTol) {
                plan.flows.push_back({std::uint32_t(i), std::uint32_t(j), flow[i][j]});
                plan.cost += flow[i][j] * cost(i, j);
            }
    return plan;
}

} // namespace detail

// Optimal-transport plan turning p1 into p2 under the Hamming ground metric
// on state indices. Flows are reported between state indices.
inline TransportPlan emd_plan(const std::vector<double>& p1, const std::vector<double>& p2) {
    if (p1.size() != p2.size())
        throw std::invalid_argument("emd: distributions live on different state spaces");
    std::vector<std::uint32_t> si, di;
    std::vector<double> sup, dem;
    for (std::uint32_t k = 0; k < p1.size(); ++k) {
        const double d = p1[k] - p2[k];
        if (d > kMassTol) { si.push_back(k); sup.push_back(d); }
        else if (d < -kMassTol) { di.push_back(k); dem.push_back(-d); }
    }
    double ts = 0, td = 0;
    for (double v : sup) ts += v;
    for (double v : dem) td += v;
    if (sup.empty() || dem.empty()) return {};
    // balance fp residue
    if (ts > td) sup.back() -= (ts - td); else dem.back() -= (td - ts);

    auto cost = [&](std::size_t i, std::size_t j) { return double(hamming(si[i], di[j])); };
    TransportPlan plan = detail::solve_transport(si.size(), di.size(), cost,
                                                 std::move(sup), std::move(dem));
    for (auto& f : plan.flows) { f.from = si[f.from]; f.to = di[f.to]; }
    return plan;
}

// Earth mover's distance; exact, symmetric, zero iff p1 == p2 (within kZeroTol).
inline double emd(const std::vector<double>& p1, const std::vector<double>& p2) {
    const double c = emd_plan(p1, p2).cost;
    return c < kZeroTol ? 0.0 : c;
}

} // namespace qsc::transport

#endif
