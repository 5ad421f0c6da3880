#include "mortv/lti_reduction.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <vector>

namespace mortv::lti {

StateSpaceSystem ReducedModel::to_system() const {
    return StateSpaceSystem(SystemMatrix(Er), SystemMatrix(Ar), Br, Cr);
}

ReducedModel project(const StateSpaceSystem& sys, const Matrix& v, const Matrix& w) {
    if (v.rows() != sys.n() || w.rows() != sys.n() || v.cols() != w.cols())
        throw DimensionMismatchError("project: basis dimensions inconsistent");
    ReducedModel rom;
    rom.Er = w.transpose() * sys.E.apply(v);
    rom.Ar = w.transpose() * sys.A.apply(v);
    rom.Br = w.transpose() * sys.B;
    rom.Cr = sys.C * v;
    rom.V = v;
    rom.W = w;
    Eigen::FullPivLU<Matrix> lu(rom.Er);
    if (!lu.isInvertible())
        throw SingularReducedEError("project: W'EV singular, re-orthogonalize or change s0");
    return rom;
}

// ---------------------------------------------------------------------------
// Block rational Krylov bases

namespace {

// orthogonalize the columns of block against q (twice) and internally,
// dropping columns whose norm collapses below drop_tol relative to their
// pre-orthogonalization norm
Matrix append_block(Matrix& q, Index& kept, const Matrix& block, Index budget,
                    double drop_tol = 1e-10) {
    Matrix added(q.rows(), block.cols());
    Index nadd = 0;
    for (Index c = 0; c < block.cols() && kept + nadd < budget; ++c) {
        Vector v = block.col(c);
        const double ref = v.norm();
        if (!(ref > 0)) continue;
        for (int pass = 0; pass < 2; ++pass) {
            for (Index j = 0; j < kept; ++j) v.noalias() -= q.col(j).dot(v) * q.col(j);
            for (Index j = 0; j < nadd; ++j) v.noalias() -= added.col(j).dot(v) * added.col(j);
        }
        const double nv = v.norm();
        if (nv <= drop_tol * ref) continue; // deflated
        added.col(nadd++) = v / nv;
    }
    for (Index c = 0; c < nadd; ++c) q.col(kept++) = added.col(c);
    return added.leftCols(nadd);
}

Matrix krylov_basis(const StateSpaceSystem& sys, const KrylovConfig& cfg, bool output_side) {
    const Index n = sys.n();
    const Index r = cfg.r;
    if (r < 1 || r > n) throw DimensionMismatchError("krylov basis: r out of range");

    numerics::ShiftedSolver solver(sys.A, sys.E, cfg.s0);
    Matrix start = output_side ? Matrix(sys.C.transpose()) : sys.B;

    Matrix q(n, r);
    Index kept = 0;
    Matrix block = solver.solve(start, output_side);
    while (kept < r) {
        Matrix added = append_block(q, kept, block, r);
        if (added.cols() == 0)
            throw BasisDegenerateError("krylov basis: rank collapsed before reaching r columns");
        if (kept >= r) break;
        const Matrix e_applied = output_side ? sys.E.apply_transpose(added) : sys.E.apply(added);
        block = solver.solve(e_applied, output_side);
    }
    return q;
}

} // namespace

Matrix input_krylov_basis(const StateSpaceSystem& sys, const KrylovConfig& cfg) {
    return krylov_basis(sys, cfg, false);
}

Matrix output_krylov_basis(const StateSpaceSystem& sys, const KrylovConfig& cfg) {
    return krylov_basis(sys, cfg, true);
}

ReducedModel two_sided_krylov(const StateSpaceSystem& sys, const KrylovConfig& cfg) {
    Matrix v = input_krylov_basis(sys, cfg);
    Matrix w = output_krylov_basis(sys, cfg);
    const Index rr = std::min(v.cols(), w.cols());
    return project(sys, v.leftCols(rr), w.leftCols(rr));
}

// ---------------------------------------------------------------------------
// IRKA

namespace {

struct ShiftSet {
    ComplexVector shifts;      // r entries
    ComplexMatrix right_dirs;  // m x r tangential directions
    ComplexMatrix left_dirs;   // q x r
};

// shifts and tangential directions from the eigenstructure of a reduced model
ShiftSet mirror_shifts(const ReducedModel& rom) {
    Eigen::FullPivLU<Matrix> elu(rom.Er);
    Matrix atil = elu.solve(rom.Ar);
    Matrix btil = elu.solve(rom.Br);
    Eigen::EigenSolver<Matrix> es(atil);
    if (es.info() != Eigen::Success)
        throw ConvergenceFailureError("irka: reduced eigendecomposition failed");
    ComplexMatrix s = es.eigenvectors();
    Eigen::FullPivLU<ComplexMatrix> slu(s);
    if (!slu.isInvertible())
        throw ConvergenceFailureError("irka: defective reduced model");
    ShiftSet out;
    out.shifts = -es.eigenvalues();
    out.right_dirs = (slu.solve(btil.cast<Complex>())).transpose(); // m x r (column i = row i of S^{-1} B)
    out.left_dirs = rom.Cr.cast<Complex>() * s;                     // q x r
    return out;
}

// realified tangential bases from shifted solves. Built jointly so that a
// shift whose right or left interpolation data degenerates (an unreachable
// or unobservable reduced eigenvector) drops out of BOTH sides; otherwise
// the V/W column pairing misaligns and W'EV turns singular.
struct TangentialBases {
    Matrix v, w;
};

TangentialBases tangential_bases(const StateSpaceSystem& sys, const ComplexVector& shifts,
                                 const ComplexMatrix& right_dirs, const ComplexMatrix& left_dirs) {
    const Index n = sys.n();
    const Index r = shifts.size();
    Matrix raw_v(n, r), raw_w(n, r);
    Index col = 0;
    for (Index i = 0; i < r && col < r; ++i) {
        const Complex sigma = shifts(i);
        if (sigma.imag() < -1e-14 * std::abs(sigma)) continue; // conjugate handled with its partner
        ComplexMatrix rhs_b = sys.B.cast<Complex>() * right_dirs.col(i);
        ComplexMatrix rhs_c = sys.C.transpose().cast<Complex>() * left_dirs.col(i);
        // (sigma E - A) x = rhs  <=>  (A - sigma E) x = -rhs
        ComplexLuSolver lu(sys.A, sys.E, sigma);
        if (lu.singular()) throw SingularShiftError("irka: shift hit a generalized eigenvalue");
        ComplexMatrix x = lu.solve(-rhs_b);
        ComplexMatrix y = lu.solve_transpose(-rhs_c);
        raw_v.col(col) = x.real();
        raw_w.col(col) = y.real();
        ++col;
        if (std::abs(sigma.imag()) > 1e-14 * std::abs(sigma) && col < r) {
            raw_v.col(col) = x.imag();
            raw_w.col(col) = y.imag();
            ++col;
        }
    }

    const double vscale = raw_v.leftCols(col).colwise().norm().maxCoeff();
    const double wscale = raw_w.leftCols(col).colwise().norm().maxCoeff();
    Index kept = 0;
    for (Index c = 0; c < col; ++c) {
        if (raw_v.col(c).norm() <= 1e-12 * vscale || raw_w.col(c).norm() <= 1e-12 * wscale)
            continue;
        raw_v.col(kept) = raw_v.col(c);
        raw_w.col(kept) = raw_w.col(c);
        ++kept;
    }
    if (kept == 0) throw ConvergenceFailureError("irka: all tangential directions degenerate");

    TangentialBases out;
    out.v = numerics::orthonormalize(raw_v.leftCols(kept));
    out.w = numerics::orthonormalize(raw_w.leftCols(kept));
    const Index rr = std::min(out.v.cols(), out.w.cols());
    out.v = out.v.leftCols(rr).eval();
    out.w = out.w.leftCols(rr).eval();
    return out;
}

double shift_change(ComplexVector a, ComplexVector b) {
    auto key = [](const Complex& x, const Complex& y) {
        if (x.real() != y.real()) return x.real() < y.real();
        return x.imag() < y.imag();
    };
    std::sort(a.data(), a.data() + a.size(), key);
    std::sort(b.data(), b.data() + b.size(), key);
    double worst = 0.0;
    for (Index i = 0; i < std::min(a.size(), b.size()); ++i)
        worst = std::max(worst, std::abs(a(i) - b(i)) / std::max(std::abs(b(i)), 1e-300));
    if (a.size() != b.size()) worst = 1.0;
    return worst;
}

} // namespace

ReducedModel irka(const StateSpaceSystem& sys, int r, const IrkaOptions& opts) {
    const Index n = sys.n();
    if (r < 1 || r > n) throw DimensionMismatchError("irka: r out of range");
    if (n <= opts.stability_check_limit) {
        Matrix atil = LuSolver(sys.E).solve(sys.A.to_dense());
        Eigen::EigenSolver<Matrix> es(atil, false);
        if (es.eigenvalues().real().maxCoeff() >= 0.0)
            throw UnstablePencilError("irka: system pencil is not stable");
    }

    ReducedModel rom = modal_truncation(sys, r, EigCriterion::SmallestMagnitude);
    if (static_cast<Index>(r) == n) {
        rom.converged = true;
        return rom;
    }
    ComplexVector prev_shifts;

    for (int iter = 0; iter < opts.max_iters; ++iter) {
        ShiftSet ss = mirror_shifts(rom);
        TangentialBases tb = tangential_bases(sys, ss.shifts, ss.right_dirs, ss.left_dirs);
        rom = project(sys, tb.v, tb.w);
        if (prev_shifts.size() > 0 && shift_change(ss.shifts, prev_shifts) < opts.tol) {
            rom.converged = true;
            return rom;
        }
        prev_shifts = ss.shifts;
    }
    rom.converged = false;
    return rom;
}

// ---------------------------------------------------------------------------
// Modal truncation

ReducedModel modal_truncation(const StateSpaceSystem& sys, int r, EigCriterion criterion,
                              ModalSide side) {
    if (r < 1 || r > sys.n()) throw DimensionMismatchError("modal_truncation: r out of range");
    auto right = numerics::generalized_eigs(sys.A, sys.E, r, criterion);
    Matrix v = numerics::orthonormalize(numerics::realify_eigenvectors(right));
    Matrix w;
    if (side == ModalSide::TwoSided) {
        auto left = numerics::generalized_eigs(sys.A.transposed(), sys.E.transposed(), r, criterion);
        w = numerics::orthonormalize(numerics::realify_eigenvectors(left));
        const Index rr = std::min(v.cols(), w.cols());
        v = v.leftCols(rr);
        w = w.leftCols(rr);
    } else {
        w = v;
    }
    return project(sys, v, w);
}

// ---------------------------------------------------------------------------
// Balanced truncation

namespace {

// symmetric factor S with P = S Sᵀ, small eigenvalues clipped
Matrix psd_factor(const Matrix& p) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(p);
    const Vector& lam = es.eigenvalues();
    const double lmax = std::max(lam.maxCoeff(), 0.0);
    std::vector<Index> keep;
    for (Index i = 0; i < lam.size(); ++i)
        if (lam(i) > 1e-14 * std::max(lmax, 1e-300)) keep.push_back(i);
    Matrix s(p.rows(), static_cast<Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k)
        s.col(static_cast<Index>(k)) = es.eigenvectors().col(keep[k]) * std::sqrt(lam(keep[k]));
    return s;
}

// both Gramians of a symmetric stable pencil from one eigendecomposition
void symmetric_gramians(const Matrix& a, const Matrix& e, const Matrix& b, const Matrix& c,
                        Matrix& p, Matrix& q) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(a, e);
    if (es.info() != Eigen::Success)
        throw ConvergenceFailureError("balanced_truncation: generalized eigensolver failed");
    const Vector& lam = es.eigenvalues();
    if (lam.maxCoeff() >= 0.0)
        throw UnstablePencilError("balanced_truncation: pencil has nonnegative eigenvalue");
    const Matrix& x = es.eigenvectors();
    auto gramian = [&](const Matrix& rhs) {
        Matrix g = x.transpose() * rhs;
        Matrix hat = -(g * g.transpose());
        for (Index i = 0; i < hat.rows(); ++i)
            for (Index j = 0; j < hat.cols(); ++j) hat(i, j) /= lam(i) + lam(j);
        Matrix full = x * hat * x.transpose();
        return Matrix(0.5 * (full + full.transpose()));
    };
    p = gramian(b);
    q = gramian(c.transpose());
}

} // namespace

BalancedTruncationResult balanced_truncation(const StateSpaceSystem& sys, int r,
                                             Index dense_limit) {
    const Index n = sys.n();
    if (n > dense_limit)
        throw SizeGuardError("balanced_truncation: n exceeds dense limit (" + std::to_string(n) +
                             " > " + std::to_string(dense_limit) + ")");
    if (r < 1 || r > n) throw DimensionMismatchError("balanced_truncation: r out of range");

    Matrix p, q;
    Matrix ad = sys.A.to_dense();
    Matrix ed = sys.E.to_dense();
    const double scale = std::max({ad.norm(), ed.norm(), 1e-300});
    const bool symmetric = (ad - ad.transpose()).norm() <= 1e-12 * scale &&
                           (ed - ed.transpose()).norm() <= 1e-12 * scale &&
                           Eigen::LLT<Matrix>(ed).info() == Eigen::Success;
    if (symmetric) {
        symmetric_gramians(ad, ed, sys.B, sys.C, p, q);
    } else {
        p = numerics::solve_lyapunov(sys.A, sys.E, sys.B, dense_limit);
        q = numerics::solve_lyapunov(sys.A.transposed(), sys.E.transposed(),
                                     Matrix(sys.C.transpose()), dense_limit);
    }

    Matrix sp = psd_factor(p);
    Matrix sq = psd_factor(q);
    Eigen::BDCSVD<Matrix> svd(sq.transpose() * sys.E.apply(sp),
                              Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& hsv = svd.singularValues();
    Index keep = std::min<Index>(r, hsv.size());
    while (keep > 1 && hsv(keep - 1) <= 1e-14 * hsv(0)) --keep;

    const Vector inv_sqrt = hsv.head(keep).cwiseSqrt().cwiseInverse();
    Matrix v = sp * svd.matrixV().leftCols(keep) * inv_sqrt.asDiagonal();
    Matrix w = sq * svd.matrixU().leftCols(keep) * inv_sqrt.asDiagonal();

    BalancedTruncationResult out{project(sys, v, w), hsv,
                                 Vector(hsv.tail(hsv.size() - keep))};
    return out;
}

} // namespace mortv::lti
