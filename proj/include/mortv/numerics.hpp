#pragma once

#include <complex>
#include <vector>

#include "mortv/matrix.hpp"

namespace mortv::numerics {

/// Orthonormal basis of span(M) via repeated modified Gram-Schmidt.
/// Columns whose residual norm falls below drop_tol times the largest
/// original column norm are dropped, so the result has numerical-rank
/// many columns.
Matrix orthonormalize(const Matrix& m, double drop_tol = 1e-10);

/// First r left singular vectors of M, ordered by descending singular value.
/// Throws RankTooLowError if sigma_r < 1e-12 * sigma_1.
Matrix principal_directions(const Matrix& m, Index r);

/// Reusable factorization of (A - s0 E) for real shifts.
class ShiftedSolver {
public:
    ShiftedSolver(const SystemMatrix& a, const SystemMatrix& e, double s0);

    Matrix solve(const Matrix& rhs, bool transposed = false) const;
    Index size() const { return lu_.size(); }

private:
    LuSolver lu_;
};

/// One-shot solve of (A - s0 E) X = RHS (or the transposed system).
Matrix solve_shifted(const SystemMatrix& a, const SystemMatrix& e, double s0,
                     const Matrix& rhs, bool transposed = false);

struct EigenPair {
    Complex value;
    ComplexVector vector;
};

enum class EigCriterion {
    SmallestMagnitude, // |lambda| ascending
    SmallestRealPart   // |Re(lambda)| ascending (dominance = slow decay)
};

struct EigOptions {
    double shift = 0.0;         // shift-invert target
    int max_subspace = 0;       // 0 = automatic
    double residual_tol = 1e-8; // ||A v - lambda E v|| <= tol * ||A|| * ||v||
};

/// k dominant eigenpairs of the pencil (A, E), sorted by criterion.
/// Complex conjugate pairs are kept together; when the cut would split a
/// pair the selection is extended by one. Shift-invert Arnoldi with full
/// re-orthogonalization; ConvergenceFailureError carries diagnostics.
std::vector<EigenPair> generalized_eigs(const SystemMatrix& a, const SystemMatrix& e, int k,
                                        EigCriterion criterion, const EigOptions& opts = {});

/// Real n x c basis from a list of eigenpairs: one column Re(v) per real
/// eigenvalue, two columns [Re(v), Im(v)] per complex conjugate pair
/// (the pair contributes once).
Matrix realify_eigenvectors(const std::vector<EigenPair>& pairs);

/// Solve A P Eᵀ + E P Aᵀ + B Bᵀ = 0 for symmetric positive semidefinite P.
/// Dense eigendecomposition-based; symmetric pencils take a real
/// generalized-eigenvalue fast path. Throws UnstablePencilError if the
/// pencil has an eigenvalue with nonnegative real part and SizeGuardError
/// when n exceeds dense_limit.
Matrix solve_lyapunov(const SystemMatrix& a, const SystemMatrix& e, const Matrix& b,
                      Index dense_limit = 2000);

} // namespace mortv::numerics
