#ifndef QSC_QSHAPE_METRIC_HPP
#define QSC_QSHAPE_METRIC_HPP

#include "qsc/iit3.hpp"
#include "qsc/transport.hpp"

// Distances between Q-shapes. Two forms are exposed and must not be conflated:
//
//  emd_star       the literal per-mechanism sum
//                     sum_i |phi1(m_i) - phi2(m_i)| * (EMD(p_i1, p_i2) + EMD(p'_i1, p'_i2))
//                 with a zero-weight point located at its shape's unconstrained
//                 pair. It is blind to location differences between points of
//                 equal weight.
//
//  emd_star_xemd  transport of phi mass between mechanism points, ground
//                 distance = effect EMD + cause EMD; any imbalance in total
//                 phi is carried to the other shape's unconstrained pair.
//                 This is the form collapse dynamics uses, since it separates
//                 shapes that agree in every weight but differ in location.
namespace qsc::transport {

inline void check_same_space(const iit3::QShape& a, const iit3::QShape& b) {
    if (a.n_units != b.n_units || a.points.size() != b.points.size())
        throw std::invalid_argument("Q-shape distance: shapes live on different systems");
}

inline double emd_star(const iit3::QShape& q1, const iit3::QShape& q2) {
    check_same_space(q1, q2);
    double total = 0.0;
    for (std::size_t k = 0; k < q1.points.size(); ++k) {
        const auto& a = q1.points[k];
        const auto& b = q2.points[k];
        const double dw = std::abs(a.phi - b.phi);
        if (dw <= iit3::kPhiTol) continue;
        const auto& ae = a.phi > iit3::kPhiTol ? a.effect_location : q1.uc_effect;
        const auto& ac = a.phi > iit3::kPhiTol ? a.cause_location : q1.uc_cause;
        const auto& be = b.phi > iit3::kPhiTol ? b.effect_location : q2.uc_effect;
        const auto& bc = b.phi > iit3::kPhiTol ? b.cause_location : q2.uc_cause;
        total += dw * (emd(ae, be) + emd(ac, bc));
    }
    return total < kZeroTol ? 0.0 : total;
}

inline double emd_star_xemd(const iit3::QShape& q1, const iit3::QShape& q2) {
    check_same_space(q1, q2);
    std::vector<const iit3::MechanismPoint*> c1, c2;
    double t1 = 0, t2 = 0;
    for (const auto& p : q1.points)
        if (p.phi > iit3::kPhiTol) { c1.push_back(&p); t1 += p.phi; }
    for (const auto& p : q2.points)
        if (p.phi > iit3::kPhiTol) { c2.push_back(&p); t2 += p.phi; }

    std::vector<double> sup, dem;
    for (auto* p : c1) sup.push_back(p->phi);
    for (auto* p : c2) dem.push_back(p->phi);
    const bool null_sink = t1 > t2 + kMassTol;   // excess of q1 flows to q2's p_uc
    const bool null_source = t2 > t1 + kMassTol; // and vice versa
    if (null_sink) dem.push_back(t1 - t2);
    if (null_source) sup.push_back(t2 - t1);
    if (sup.empty() || dem.empty()) return 0.0;

    auto eff = [&](bool from_q1, std::size_t k) -> const std::vector<double>& {
        if (from_q1) return k < c1.size() ? c1[k]->effect_location : q1.uc_effect;
        return k < c2.size() ? c2[k]->effect_location : q2.uc_effect;
    };
    auto cau = [&](bool from_q1, std::size_t k) -> const std::vector<double>& {
        if (from_q1) return k < c1.size() ? c1[k]->cause_location : q1.uc_cause;
        return k < c2.size() ? c2[k]->cause_location : q2.uc_cause;
    };

    const std::size_t ns = sup.size(), nd = dem.size();
    std::vector<double> cost_matrix(ns * nd);
    for (std::size_t i = 0; i < ns; ++i)
        for (std::size_t j = 0; j < nd; ++j)
            cost_matrix[i * nd + j] =
                emd(eff(true, i), eff(false, j)) + emd(cau(true, i), cau(false, j));

    auto cost = [&](std::size_t i, std::size_t j) { return cost_matrix[i * nd + j]; };
    const double d =
        detail::solve_transport(ns, nd, cost, std::move(sup), std::move(dem)).cost;
    return d < kZeroTol ? 0.0 : d;
}

} // namespace qsc::transport

namespace qsc::iit3 {

inline double shape_distance(const QShape& q1, const QShape& q2, ShapeMetric metric) {
    return metric == ShapeMetric::Literal ? transport::emd_star(q1, q2)
                                          : transport::emd_star_xemd(q1, q2);
}

} // namespace qsc::iit3

#endif
