#ifndef QSC_QCORE_HPP
#define QSC_QCORE_HPP

#include <Eigen/Dense>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

// Dense state-vector linear algebra for desk-scale Hilbert spaces (<= 4096).
// hbar = 1 throughout.
namespace qsc::qcore {

using cx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

inline constexpr double kHermTol = 1e-12;
inline constexpr double kNormTol = 1e-9;
inline constexpr double kDegenTol = 1e-9; // eigenvalue grouping for spectral projectors

struct QuantumState {
    Vec amplitudes;

    QuantumState() = default;
    explicit QuantumState(Vec a) : amplitudes(std::move(a)) {}

    static QuantumState basis_state(Eigen::Index dim, Eigen::Index k) {
        Vec v = Vec::Zero(dim);
        v[k] = 1.0;
        return QuantumState(std::move(v));
    }

    Eigen::Index dim() const { return amplitudes.size(); }
    double norm() const { return amplitudes.norm(); }
    void normalize() {
        const double n = norm();
        if (n <= 0.0) throw std::runtime_error("cannot normalize a zero state");
        amplitudes /= n;
    }
    bool normalized(double tol = kNormTol) const { return std::abs(norm() - 1.0) < tol; }
    // squared overlap with computational basis state k
    double weight(Eigen::Index k) const { return std::norm(amplitudes[k]); }
};

inline bool is_hermitian(const Mat& m, double tol = kHermTol) {
    return m.rows() == m.cols() && (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

struct HermitianOperator {
    Mat matrix;

    HermitianOperator() = default;
    explicit HermitianOperator(Mat m) : matrix(std::move(m)) {
        if (!is_hermitian(matrix))
            throw std::invalid_argument("operator is not Hermitian");
    }
    static HermitianOperator diagonal(const Eigen::VectorXd& d) {
        Mat m = Mat::Zero(d.size(), d.size());
        for (Eigen::Index i = 0; i < d.size(); ++i) m(i, i) = d[i];
        HermitianOperator h;
        h.matrix = std::move(m);
        return h;
    }
    Eigen::Index dim() const { return matrix.rows(); }
};

struct DensityOperator {
    Mat matrix;

    DensityOperator() = default;
    explicit DensityOperator(Mat m) : matrix(std::move(m)) { validate(); }

    void validate() const {
        if (!is_hermitian(matrix, 1e-10))
            throw std::invalid_argument("density operator is not Hermitian");
        if (std::abs(matrix.trace().real() - 1.0) > 1e-10 ||
            std::abs(matrix.trace().imag()) > 1e-10)
            throw std::invalid_argument("density operator trace is not 1");
        Eigen::SelfAdjointEigenSolver<Mat> es(matrix, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10)
            throw std::invalid_argument("density operator is not positive semidefinite");
    }
};

// exp(-i H dt) |psi> by exact eigendecomposition
inline QuantumState unitary_step(const QuantumState& psi, const HermitianOperator& H,
                                 double dt) {
    if (dt <= 0.0) throw std::invalid_argument("unitary_step: dt must be positive");
    if (H.dim() != psi.dim()) throw std::invalid_argument("unitary_step: dimension mismatch");
    Eigen::SelfAdjointEigenSolver<Mat> es(H.matrix);
    Vec phases(H.dim());
    for (Eigen::Index k = 0; k < H.dim(); ++k)
        phases[k] = std::exp(cx(0.0, -es.eigenvalues()[k] * dt));
    Vec out = es.eigenvectors() *
              (phases.array() * (es.eigenvectors().adjoint() * psi.amplitudes).array()).matrix();
    return QuantumState(std::move(out));
}

// Precomputed exp(-i H dt) for loops that reuse the same (H, dt)
class Propagator {
public:
    Propagator(const HermitianOperator& H, double dt) {
        if (dt <= 0.0) throw std::invalid_argument("Propagator: dt must be positive");
        Eigen::SelfAdjointEigenSolver<Mat> es(H.matrix);
        Vec phases(H.dim());
        for (Eigen::Index k = 0; k < H.dim(); ++k)
            phases[k] = std::exp(cx(0.0, -es.eigenvalues()[k] * dt));
        u_ = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    }
    QuantumState apply(const QuantumState& psi) const {
        return QuantumState(u_ * psi.amplitudes);
    }
    const Mat& matrix() const { return u_; }

private:
    Mat u_;
};

inline double expectation(const QuantumState& psi, const HermitianOperator& A) {
    if (A.dim() != psi.dim()) throw std::invalid_argument("expectation: dimension mismatch");
    const cx v = psi.amplitudes.dot(A.matrix * psi.amplitudes); // <psi|A|psi>
    return v.real();
}

struct MeasurementOutcome {
    double eigenvalue = 0.0;
    QuantumState state;
};

// Born-rule projective measurement of A. Degenerate eigenvalues (within
// kDegenTol) share one spectral projector, so the post-state keeps any
// in-eigenspace structure.
inline MeasurementOutcome projective_measure(const QuantumState& psi,
                                             const HermitianOperator& A,
                                             std::mt19937_64& rng) {
    if (A.dim() != psi.dim())
        throw std::invalid_argument("projective_measure: dimension mismatch");
    Eigen::SelfAdjointEigenSolver<Mat> es(A.matrix);
    const auto& evals = es.eigenvalues();
    const auto& evecs = es.eigenvectors();

    // group eigenvalues into eigenspaces
    std::vector<std::pair<double, std::vector<Eigen::Index>>> groups;
    for (Eigen::Index k = 0; k < A.dim(); ++k) {
        if (!groups.empty() && std::abs(evals[k] - groups.back().first) <= kDegenTol)
            groups.back().second.push_back(k);
        else
            groups.push_back({evals[k], {k}});
    }

    std::vector<double> w;
    std::vector<Vec> projected;
    for (const auto& [val, cols] : groups) {
        Vec p = Vec::Zero(A.dim());
        for (Eigen::Index c : cols) {
            const cx a = evecs.col(c).dot(psi.amplitudes);
            p += a * evecs.col(c);
        }
        projected.push_back(std::move(p));
        w.push_back(projected.back().squaredNorm());
    }
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    const std::size_t g = pick(rng);
    QuantumState out(projected[g] / std::sqrt(w[g]));
    return {groups[g].first, std::move(out)};
}

} // namespace qsc::qcore

#endif
