#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <complex>
#include <memory>
#include <variant>

#include "mortv/errors.hpp"

namespace mortv {

using Matrix        = Eigen::MatrixXd;
using Vector        = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using SparseMatrix  = Eigen::SparseMatrix<double>;
using Index         = Eigen::Index;
using Complex       = std::complex<double>;

/// Square real matrix stored dense or sparse. Both storages behave
/// identically through this interface; large FEM operators use the sparse
/// path, everything reduced-order stays dense.
class SystemMatrix {
public:
    SystemMatrix() = default;
    SystemMatrix(Matrix m) : storage_(std::move(m)) { check_finite(); }
    SystemMatrix(SparseMatrix m) : storage_(std::move(m)) {
        std::get<SparseMatrix>(storage_).makeCompressed();
        check_finite();
    }

    Index rows() const;
    Index cols() const;
    bool is_sparse() const { return std::holds_alternative<SparseMatrix>(storage_); }

    const Matrix& dense() const { return std::get<Matrix>(storage_); }
    const SparseMatrix& sparse() const { return std::get<SparseMatrix>(storage_); }
    Matrix to_dense() const;

    Matrix apply(const Matrix& x) const;           // M * x
    Matrix apply_transpose(const Matrix& x) const; // Mᵀ * x
    ComplexMatrix apply(const ComplexMatrix& x) const;

    double frobenius_norm() const;
    bool is_symmetric(double rel_tol = 1e-12) const;

    /// a*this + b*other; sparse iff both operands are sparse.
    SystemMatrix axpby(double a, double b, const SystemMatrix& other) const;

    SystemMatrix transposed() const;

private:
    void check_finite() const;
    std::variant<Matrix, SparseMatrix> storage_;
};

/// LU factorization of a SystemMatrix with singularity detection
/// (rank-revealing for dense, zero-pivot plus probe residual for sparse).
class LuSolver {
public:
    explicit LuSolver(const SystemMatrix& m);

    bool singular() const { return singular_; }
    Index size() const { return n_; }

    /// Solve M X = rhs. Throws SingularShiftError if the factorization
    /// flagged the matrix singular.
    Matrix solve(const Matrix& rhs) const;
    /// Solve Mᵀ X = rhs.
    Matrix solve_transpose(const Matrix& rhs) const;

private:
    void require_nonsingular() const;

    Index n_ = 0;
    bool singular_ = false;
    // dense path
    std::unique_ptr<Eigen::FullPivLU<Matrix>> dense_lu_;
    // sparse path (transpose factorized lazily on first use)
    std::unique_ptr<Eigen::SparseLU<SparseMatrix>> sparse_lu_;
    mutable std::unique_ptr<Eigen::SparseLU<SparseMatrix>> sparse_lu_t_;
    SparseMatrix sparse_copy_; // kept for the lazy transpose factorization
};

/// LU factorization of (A - s0 E) for complex shifts s0.
class ComplexLuSolver {
public:
    ComplexLuSolver(const SystemMatrix& a, const SystemMatrix& e, Complex shift);

    bool singular() const { return singular_; }
    ComplexMatrix solve(const ComplexMatrix& rhs) const;
    ComplexMatrix solve_transpose(const ComplexMatrix& rhs) const;

private:
    using SparseComplex = Eigen::SparseMatrix<Complex>;
    void require_nonsingular() const;

    Index n_ = 0;
    bool singular_ = false;
    std::unique_ptr<Eigen::FullPivLU<ComplexMatrix>> dense_lu_;
    std::unique_ptr<Eigen::SparseLU<SparseComplex>> sparse_lu_;
    mutable std::unique_ptr<Eigen::SparseLU<SparseComplex>> sparse_lu_t_;
    SparseComplex sparse_copy_;
};

} // namespace mortv
