#include "mortv/numerics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace mortv::numerics {

namespace {

// one modified Gram-Schmidt sweep of v against the columns of Q
void mgs_sweep(const Matrix& q, Index ncols, Vector& v) {
    for (Index j = 0; j < ncols; ++j) {
        const double h = q.col(j).dot(v);
        v.noalias() -= h * q.col(j);
    }
}

} // namespace

Matrix orthonormalize(const Matrix& m, double drop_tol) {
    if (m.cols() == 0) throw EmptyMatrixError("orthonormalize: matrix has zero columns");
    const double ref = m.colwise().norm().maxCoeff();
    if (!(ref > 0.0))
        throw AllColumnsDegenerateError("orthonormalize: all columns are zero");

    Matrix q(m.rows(), m.cols());
    Index kept = 0;
    for (Index c = 0; c < m.cols(); ++c) {
        Vector v = m.col(c);
        mgs_sweep(q, kept, v);
        mgs_sweep(q, kept, v); // twice is enough
        const double nv = v.norm();
        if (nv <= drop_tol * ref) continue; // rank-deficient column
        q.col(kept++) = v / nv;
    }
    if (kept == 0)
        throw AllColumnsDegenerateError("orthonormalize: numerical rank is zero");
    return q.leftCols(kept);
}

Matrix principal_directions(const Matrix& m, Index r) {
    if (r < 1 || r > std::min(m.rows(), m.cols()))
        throw DimensionMismatchError("principal_directions: r out of range");
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    if (sv(r - 1) < 1e-12 * sv(0))
        throw RankTooLowError("principal_directions: sigma_r below 1e-12 * sigma_1, reference subspace ill-posed");
    return svd.matrixU().leftCols(r);
}

ShiftedSolver::ShiftedSolver(const SystemMatrix& a, const SystemMatrix& e, double s0)
    : lu_(a.axpby(1.0, -s0, e)) {
    if (lu_.singular())
        throw SingularShiftError("ShiftedSolver: A - s0*E singular (s0 hits a generalized eigenvalue)");
}

Matrix ShiftedSolver::solve(const Matrix& rhs, bool transposed) const {
    return transposed ? lu_.solve_transpose(rhs) : lu_.solve(rhs);
}

Matrix solve_shifted(const SystemMatrix& a, const SystemMatrix& e, double s0,
                     const Matrix& rhs, bool transposed) {
    ShiftedSolver solver(a, e, s0);
    return solver.solve(rhs, transposed);
}

// ---------------------------------------------------------------------------
// Shift-invert Arnoldi for the pencil (A, E)

namespace {

struct RitzCandidate {
    Complex value;
    ComplexVector vector; // normalized
    double residual;      // ||A v - lambda E v||
};

double criterion_key(const Complex& lambda, EigCriterion c) {
    return c == EigCriterion::SmallestMagnitude ? std::abs(lambda) : std::abs(lambda.real());
}

// deterministic start vector that is not aligned with mesh symmetries
Vector arnoldi_start(Index n) {
    std::mt19937 gen(0x5eed);
    std::normal_distribution<double> dist(0.0, 1.0);
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = dist(gen);
    return v / v.norm();
}

// fix the phase so the largest-magnitude entry is real positive
void normalize_phase(ComplexVector& v) {
    Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    const Complex pivot = v(imax);
    if (std::abs(pivot) > 0) v *= std::conj(pivot) / std::abs(pivot);
    v /= v.norm();
}

std::vector<RitzCandidate> arnoldi_ritz_pairs(const SystemMatrix& a, const SystemMatrix& e,
                                              double sigma, int m) {
    const Index n = a.rows();
    ShiftedSolver op(a, e, sigma);
    std::mt19937 gen(0xa11d);
    std::normal_distribution<double> dist(0.0, 1.0);

    Matrix v(n, m + 1);
    Matrix h = Matrix::Zero(m + 1, m);
    v.col(0) = arnoldi_start(n);

    int built = 0;
    for (int j = 0; j < m; ++j) {
        Vector w = op.solve(e.apply(Matrix(v.col(j))));
        for (int pass = 0; pass < 2; ++pass) {
            for (int i = 0; i <= j; ++i) {
                const double c = v.col(i).dot(w);
                h(i, j) += c;
                w.noalias() -= c * v.col(i);
            }
        }
        const double nw = w.norm();
        built = j + 1;
        if (nw <= 1e-14) {
            // invariant subspace found; continue with a fresh direction
            Vector f(n);
            for (Index i = 0; i < n; ++i) f(i) = dist(gen);
            for (int pass = 0; pass < 2; ++pass) mgs_sweep(v, j + 1, f);
            const double nf = f.norm();
            if (nf <= 1e-14) break;
            h(j + 1, j) = 0.0;
            v.col(j + 1) = f / nf;
        } else {
            h(j + 1, j) = nw;
            v.col(j + 1) = w / nw;
        }
    }

    Eigen::EigenSolver<Matrix> es(h.topLeftCorner(built, built));
    if (es.info() != Eigen::Success)
        throw ConvergenceFailureError("generalized_eigs: dense Ritz eigensolver failed");

    const double norm_a = a.frobenius_norm();
    std::vector<RitzCandidate> out;
    out.reserve(built);
    for (int i = 0; i < built; ++i) {
        const Complex theta = es.eigenvalues()(i);
        if (std::abs(theta) <= 1e-14) continue; // maps to infinity
        const Complex lambda = sigma + 1.0 / theta;
        ComplexVector y = es.eigenvectors().col(i);
        ComplexVector vec = v.leftCols(built).cast<Complex>() * y;
        normalize_phase(vec);
        const double res = (a.apply(ComplexMatrix(vec)) - lambda * e.apply(ComplexMatrix(vec))).norm();
        out.push_back({lambda, std::move(vec), res / std::max(norm_a, 1e-300)});
    }
    return out;
}

} // namespace

std::vector<EigenPair> generalized_eigs(const SystemMatrix& a, const SystemMatrix& e, int k,
                                        EigCriterion criterion, const EigOptions& opts) {
    const Index n = a.rows();
    if (k < 1 || k > n) throw DimensionMismatchError("generalized_eigs: k out of range");

    const int m_cap = static_cast<int>(std::min<Index>(n, std::max(6 * k + 40, 200)));
    int m = static_cast<int>(std::min<Index>(n, std::max(2 * k + 10, 20)));

    std::string diag;
    for (;;) {
        std::vector<RitzCandidate> ritz;
        try {
            ritz = arnoldi_ritz_pairs(a, e, opts.shift, m);
        } catch (const SingularShiftError&) {
            // shift hits an eigenvalue; nudge it and retry once
            const double scale = a.frobenius_norm() / std::max(e.frobenius_norm(), 1e-300);
            ritz = arnoldi_ritz_pairs(a, e, opts.shift - 0.01 * (scale + 1.0), m);
        }

        std::stable_sort(ritz.begin(), ritz.end(), [&](const RitzCandidate& x, const RitzCandidate& y) {
            return criterion_key(x.value, criterion) < criterion_key(y.value, criterion);
        });

        std::vector<EigenPair> selected;
        bool all_converged = true;
        for (const auto& cand : ritz) {
            if (static_cast<int>(selected.size()) >= k) {
                // keep conjugate pairs together: extend if the cut split one
                const Complex last = selected.back().value;
                if (std::abs(last.imag()) > 1e-12 * std::abs(last) &&
                    std::abs(cand.value - std::conj(last)) <= 1e-8 * std::abs(last)) {
                    if (cand.residual > opts.residual_tol) { all_converged = false; break; }
                    selected.push_back({cand.value, cand.vector});
                }
                break;
            }
            if (cand.residual > opts.residual_tol) { all_converged = false; break; }
            selected.push_back({cand.value, cand.vector});
        }

        if (all_converged && static_cast<int>(selected.size()) >= k) return selected;

        std::ostringstream os;
        os << "subspace " << m << ": " << selected.size() << "/" << k << " converged";
        diag = os.str();
        if (m >= m_cap) break;
        m = static_cast<int>(std::min<Index>(m_cap, static_cast<Index>(m * 1.6) + 2));
    }
    throw ConvergenceFailureError("generalized_eigs: Arnoldi did not converge (" + diag + ")");
}

Matrix realify_eigenvectors(const std::vector<EigenPair>& pairs) {
    std::vector<Vector> cols;
    std::vector<bool> consumed(pairs.size(), false);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (consumed[i]) continue;
        const auto& p = pairs[i];
        const double scale = std::max(std::abs(p.value), 1e-300);
        if (std::abs(p.value.imag()) <= 1e-12 * scale) {
            cols.push_back(p.vector.real());
        } else {
            // find and consume the conjugate partner
            for (std::size_t j = i + 1; j < pairs.size(); ++j) {
                if (!consumed[j] && std::abs(pairs[j].value - std::conj(p.value)) <= 1e-8 * scale) {
                    consumed[j] = true;
                    break;
                }
            }
            cols.push_back(p.vector.real());
            cols.push_back(p.vector.imag());
        }
    }
    if (cols.empty()) throw EmptyMatrixError("realify_eigenvectors: no eigenpairs");
    Matrix out(cols.front().size(), static_cast<Index>(cols.size()));
    for (Index c = 0; c < out.cols(); ++c) out.col(c) = cols[static_cast<std::size_t>(c)];
    return out;
}

// ---------------------------------------------------------------------------
// Dense Lyapunov solve A P Eᵀ + E P Aᵀ + B Bᵀ = 0

namespace {

Matrix lyapunov_symmetric(const Matrix& a, const Matrix& e, const Matrix& b) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(a, e); // A x = lambda E x, Xᵀ E X = I
    if (es.info() != Eigen::Success)
        throw ConvergenceFailureError("solve_lyapunov: symmetric generalized eigensolver failed");
    const Vector& lam = es.eigenvalues();
    if (lam.maxCoeff() >= 0.0)
        throw UnstablePencilError("solve_lyapunov: pencil has eigenvalue with nonnegative real part");
    const Matrix& x = es.eigenvectors();
    Matrix g = x.transpose() * b;
    Matrix phat = -(g * g.transpose());
    for (Index i = 0; i < phat.rows(); ++i)
        for (Index j = 0; j < phat.cols(); ++j) phat(i, j) /= lam(i) + lam(j);
    Matrix p = x * phat * x.transpose();
    return 0.5 * (p + p.transpose());
}

Matrix lyapunov_general(const Matrix& a, const Matrix& e, const Matrix& b) {
    // reduce to standard form: (E⁻¹A) P + P (E⁻¹A)ᵀ = -(E⁻¹B)(E⁻¹B)ᵀ
    Eigen::FullPivLU<Matrix> elu(e);
    if (!elu.isInvertible())
        throw SingularShiftError("solve_lyapunov: E singular");
    Matrix atil = elu.solve(a);
    Matrix btil = elu.solve(b);

    Eigen::EigenSolver<Matrix> es(atil);
    if (es.info() != Eigen::Success)
        throw ConvergenceFailureError("solve_lyapunov: eigendecomposition failed");
    const ComplexVector lam = es.eigenvalues();
    if (lam.real().maxCoeff() >= 0.0)
        throw UnstablePencilError("solve_lyapunov: pencil has eigenvalue with nonnegative real part");

    const ComplexMatrix x = es.eigenvectors();
    Eigen::FullPivLU<ComplexMatrix> xlu(x);
    ComplexMatrix g = xlu.solve(btil.cast<Complex>());
    ComplexMatrix f = g * g.transpose(); // plain transpose keeps the realification exact
    for (Index i = 0; i < f.rows(); ++i)
        for (Index j = 0; j < f.cols(); ++j) f(i, j) /= -(lam(i) + lam(j));
    Matrix p = (x * f * x.transpose()).real();
    return 0.5 * (p + p.transpose());
}

} // namespace

Matrix solve_lyapunov(const SystemMatrix& a, const SystemMatrix& e, const Matrix& b,
                      Index dense_limit) {
    const Index n = a.rows();
    if (n > dense_limit)
        throw SizeGuardError("solve_lyapunov: n exceeds dense limit (" + std::to_string(n) + " > " +
                             std::to_string(dense_limit) + ")");
    if (e.rows() != n || b.rows() != n)
        throw DimensionMismatchError("solve_lyapunov: dimension mismatch");

    Matrix ad = a.to_dense();
    Matrix ed = e.to_dense();
    const double scale = std::max({ad.norm(), ed.norm(), 1e-300});
    const bool symmetric = (ad - ad.transpose()).norm() <= 1e-12 * scale &&
                           (ed - ed.transpose()).norm() <= 1e-12 * scale;
    if (symmetric) {
        Eigen::LLT<Matrix> llt(ed);
        if (llt.info() == Eigen::Success) return lyapunov_symmetric(ad, ed, b);
    }
    return lyapunov_general(ad, ed, b);
}

} // namespace mortv::numerics
