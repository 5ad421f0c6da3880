#include "mortv/matrix.hpp"

#include <Eigen/SparseCore>

namespace mortv {

namespace {

bool all_finite_dense(const Matrix& m) { return m.allFinite(); }

bool all_finite_sparse(const SparseMatrix& m) {
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
            if (!std::isfinite(it.value())) return false;
        }
    }
    return true;
}

} // namespace

void SystemMatrix::check_finite() const {
    const bool ok = is_sparse() ? all_finite_sparse(sparse()) : all_finite_dense(dense());
    if (!ok) throw Error("SystemMatrix: non-finite entry on construction");
}

Index SystemMatrix::rows() const {
    return is_sparse() ? sparse().rows() : dense().rows();
}

Index SystemMatrix::cols() const {
    return is_sparse() ? sparse().cols() : dense().cols();
}

Matrix SystemMatrix::to_dense() const {
    return is_sparse() ? Matrix(sparse()) : dense();
}

Matrix SystemMatrix::apply(const Matrix& x) const {
    return is_sparse() ? Matrix(sparse() * x) : Matrix(dense() * x);
}

Matrix SystemMatrix::apply_transpose(const Matrix& x) const {
    return is_sparse() ? Matrix(sparse().transpose() * x) : Matrix(dense().transpose() * x);
}

ComplexMatrix SystemMatrix::apply(const ComplexMatrix& x) const {
    if (is_sparse()) return sparse().cast<Complex>() * x;
    return dense().cast<Complex>() * x;
}

double SystemMatrix::frobenius_norm() const {
    return is_sparse() ? sparse().norm() : dense().norm();
}

bool SystemMatrix::is_symmetric(double rel_tol) const {
    const double scale = std::max(frobenius_norm(), 1e-300);
    if (is_sparse()) {
        SparseMatrix d = SparseMatrix(sparse().transpose()) - sparse();
        return d.norm() <= rel_tol * scale;
    }
    return (dense() - dense().transpose()).norm() <= rel_tol * scale;
}

SystemMatrix SystemMatrix::axpby(double a, double b, const SystemMatrix& other) const {
    if (rows() != other.rows() || cols() != other.cols())
        throw DimensionMismatchError("SystemMatrix::axpby: shape mismatch");
    if (is_sparse() && other.is_sparse()) {
        SparseMatrix r = a * sparse() + b * other.sparse();
        return SystemMatrix(std::move(r));
    }
    return SystemMatrix(Matrix(a * to_dense() + b * other.to_dense()));
}

SystemMatrix SystemMatrix::transposed() const {
    if (is_sparse()) return SystemMatrix(SparseMatrix(sparse().transpose()));
    return SystemMatrix(Matrix(dense().transpose()));
}

// ---------------------------------------------------------------------------
// LuSolver

LuSolver::LuSolver(const SystemMatrix& m) : n_(m.rows()) {
    if (m.rows() != m.cols()) throw DimensionMismatchError("LuSolver: matrix not square");
    if (m.is_sparse()) {
        sparse_copy_ = m.sparse();
        sparse_lu_ = std::make_unique<Eigen::SparseLU<SparseMatrix>>();
        sparse_lu_->compute(sparse_copy_);
        if (sparse_lu_->info() != Eigen::Success) {
            singular_ = true;
            return;
        }
        // zero pivots can slip through on numerically singular input;
        // a probe solve catches those
        Vector probe = Vector::LinSpaced(n_, 1.0, 2.0);
        Vector x = sparse_lu_->solve(probe);
        const double res = (sparse_copy_ * x - probe).norm();
        const double scale = sparse_copy_.norm() * x.norm() + probe.norm();
        singular_ = !x.allFinite() || res > 1e-8 * scale;
    } else {
        dense_lu_ = std::make_unique<Eigen::FullPivLU<Matrix>>(m.dense());
        singular_ = !dense_lu_->isInvertible();
    }
}

void LuSolver::require_nonsingular() const {
    if (singular_) throw SingularShiftError("LuSolver: matrix is singular to working precision");
}

Matrix LuSolver::solve(const Matrix& rhs) const {
    require_nonsingular();
    if (sparse_lu_) return sparse_lu_->solve(rhs);
    return dense_lu_->solve(rhs);
}

Matrix LuSolver::solve_transpose(const Matrix& rhs) const {
    require_nonsingular();
    if (sparse_lu_) {
        if (!sparse_lu_t_) {
            sparse_lu_t_ = std::make_unique<Eigen::SparseLU<SparseMatrix>>();
            sparse_lu_t_->compute(SparseMatrix(sparse_copy_.transpose()));
            if (sparse_lu_t_->info() != Eigen::Success)
                throw SingularShiftError("LuSolver: transpose factorization failed");
        }
        return sparse_lu_t_->solve(rhs);
    }
    return dense_lu_->transpose().solve(rhs);
}

// ---------------------------------------------------------------------------
// ComplexLuSolver

ComplexLuSolver::ComplexLuSolver(const SystemMatrix& a, const SystemMatrix& e, Complex shift)
    : n_(a.rows()) {
    if (a.rows() != a.cols() || e.rows() != e.cols() || a.rows() != e.rows())
        throw DimensionMismatchError("ComplexLuSolver: dimension mismatch");
    if (a.is_sparse() && e.is_sparse()) {
        sparse_copy_ = a.sparse().cast<Complex>() - shift * e.sparse().cast<Complex>();
        sparse_copy_.makeCompressed();
        sparse_lu_ = std::make_unique<Eigen::SparseLU<SparseComplex>>();
        sparse_lu_->compute(sparse_copy_);
        if (sparse_lu_->info() != Eigen::Success) {
            singular_ = true;
            return;
        }
        ComplexVector probe = ComplexVector::Constant(n_, Complex(1.0, 0.5));
        ComplexVector x = sparse_lu_->solve(probe);
        const double res = (sparse_copy_ * x - probe).norm();
        const double scale = sparse_copy_.norm() * x.norm() + probe.norm();
        singular_ = !x.allFinite() || res > 1e-8 * scale;
    } else {
        ComplexMatrix shifted = a.to_dense().cast<Complex>() - shift * e.to_dense().cast<Complex>();
        dense_lu_ = std::make_unique<Eigen::FullPivLU<ComplexMatrix>>(shifted);
        singular_ = !dense_lu_->isInvertible();
    }
}

void ComplexLuSolver::require_nonsingular() const {
    if (singular_) throw SingularShiftError("ComplexLuSolver: shifted matrix singular");
}

ComplexMatrix ComplexLuSolver::solve(const ComplexMatrix& rhs) const {
    require_nonsingular();
    if (sparse_lu_) return sparse_lu_->solve(rhs);
    return dense_lu_->solve(rhs);
}

ComplexMatrix ComplexLuSolver::solve_transpose(const ComplexMatrix& rhs) const {
    require_nonsingular();
    if (sparse_lu_) {
        if (!sparse_lu_t_) {
            sparse_lu_t_ = std::make_unique<Eigen::SparseLU<SparseComplex>>();
            sparse_lu_t_->compute(SparseComplex(sparse_copy_.transpose()));
            if (sparse_lu_t_->info() != Eigen::Success)
                throw SingularShiftError("ComplexLuSolver: transpose factorization failed");
        }
        return sparse_lu_t_->solve(rhs);
    }
    return dense_lu_->transpose().solve(rhs);
}

} // namespace mortv
