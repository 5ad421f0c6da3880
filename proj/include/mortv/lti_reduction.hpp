#pragma once

#include <functional>

#include "mortv/numerics.hpp"
#include "mortv/systems.hpp"

namespace mortv::lti {

using numerics::EigCriterion;

enum class KrylovSide { Input, Output, TwoSided };

struct KrylovConfig {
    double s0 = 0.0;
    int r = 10;
    KrylovSide side = KrylovSide::Input;
};

/// Projected model W'EV, W'AV, W'B, CV. Time-varying input/output maps and
/// the derivative-correction term are optional; when absent the model is a
/// plain LTI system.
struct ReducedModel {
    Matrix Er, Ar;
    Matrix Br, Cr;
    std::function<Matrix(double)> Br_of; // position -> r x m, overrides Br when set
    std::function<Matrix(double)> Cr_of; // position -> q x r
    std::function<Matrix(double)> correction; // time -> r x r term subtracted from Ar
    Matrix V, W; // lifting bases, n x r
    bool converged = true; // iterative engines flag non-convergence here

    Index order() const { return Ar.rows(); }
    Matrix input_at(double p) const { return Br_of ? Br_of(p) : Br; }
    Matrix output_at(double p) const { return Cr_of ? Cr_of(p) : Cr; }

    /// Constant-matrix view for transfer/moment evaluation.
    StateSpaceSystem to_system() const;
};

/// Petrov-Galerkin projection. Throws SingularReducedEError when W'EV is
/// singular (bad basis pairing).
ReducedModel project(const StateSpaceSystem& sys, const Matrix& v, const Matrix& w);

/// Orthonormal basis of the block input Krylov space
/// span{A_s0^{-1}B, (A_s0^{-1}E) A_s0^{-1}B, ...} with cfg.r columns.
Matrix input_krylov_basis(const StateSpaceSystem& sys, const KrylovConfig& cfg);

/// Dual basis from transposed solves against Cᵀ.
Matrix output_krylov_basis(const StateSpaceSystem& sys, const KrylovConfig& cfg);

/// Two-sided rational Krylov: V input-side, W output-side.
ReducedModel two_sided_krylov(const StateSpaceSystem& sys, const KrylovConfig& cfg);

struct IrkaOptions {
    int max_iters = 60;
    double tol = 1e-6;
    Index stability_check_limit = 600; // dense stability pre-check up to this n
};

/// Iterative rational Krylov. Deterministic initialization from the
/// modal-truncation model of the same order; stops when the maximum
/// relative shift change drops below tol (non-convergence is flagged on
/// the result, not an error).
ReducedModel irka(const StateSpaceSystem& sys, int r, const IrkaOptions& opts = {});

enum class ModalSide { OneSided, TwoSided };

/// Projection onto realified dominant eigenvectors of the pencil (A, E).
/// If the cut would split a complex conjugate pair the order is extended
/// by one.
ReducedModel modal_truncation(const StateSpaceSystem& sys, int r, EigCriterion criterion,
                              ModalSide side = ModalSide::OneSided);

struct BalancedTruncationResult {
    ReducedModel rom;
    Vector hankel_singular_values; // all, descending
    Vector discarded;              // tail beyond the kept order
};

/// Square-root balanced truncation from the two descriptor Gramians.
/// Symmetric pencils share one generalized eigendecomposition for both.
BalancedTruncationResult balanced_truncation(const StateSpaceSystem& sys, int r,
                                             Index dense_limit = 2000);

} // namespace mortv::lti
