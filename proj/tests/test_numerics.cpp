#include "doctest.h"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <complex>
#include <random>

#include "mortv/numerics.hpp"

using namespace mortv;
using namespace mortv::numerics;

namespace {

Matrix random_matrix(Index rows, Index cols, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = dist(gen);
    return m;
}

SparseMatrix tridiag(Index n, double lo, double mid, double hi) {
    std::vector<Eigen::Triplet<double>> t;
    for (Index i = 0; i < n; ++i) {
        t.emplace_back(i, i, mid);
        if (i + 1 < n) {
            t.emplace_back(i, i + 1, hi);
            t.emplace_back(i + 1, i, lo);
        }
    }
    SparseMatrix m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

double projection_objective(const Matrix& r, const Matrix& all) {
    return (all - r * (r.transpose() * all)).squaredNorm();
}

} // namespace

TEST_CASE("orthonormalize: identity passes through") {
    Matrix q = orthonormalize(Matrix::Identity(2, 2));
    CHECK((q - Matrix::Identity(2, 2)).norm() == doctest::Approx(0.0));
}

TEST_CASE("orthonormalize: parallel columns collapse to rank one") {
    Matrix m(2, 2);
    m << 1, 2, 0, 0;
    Matrix q = orthonormalize(m);
    REQUIRE(q.cols() == 1);
    CHECK(q(0, 0) == doctest::Approx(1.0));
    CHECK(q(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("orthonormalize: random 50x6 satisfies the definition") {
    Matrix m = random_matrix(50, 6, 1);
    Matrix q = orthonormalize(m);
    REQUIRE(q.cols() == 6);
    CHECK((q.transpose() * q - Matrix::Identity(6, 6)).norm() < 1e-12);
    CHECK((m - q * (q.transpose() * m)).norm() < 1e-10);
}

TEST_CASE("orthonormalize: errors") {
    CHECK_THROWS_AS(orthonormalize(Matrix(3, 0)), EmptyMatrixError);
    CHECK_THROWS_AS(orthonormalize(Matrix::Zero(3, 2)), AllColumnsDegenerateError);
}

TEST_CASE("orthonormalize is idempotent up to column sign") {
    Matrix m = random_matrix(30, 5, 2);
    Matrix q1 = orthonormalize(m);
    Matrix q2 = orthonormalize(q1);
    REQUIRE(q1.cols() == q2.cols());
    for (Index j = 0; j < q1.cols(); ++j) {
        const double same = (q2.col(j) - q1.col(j)).norm();
        const double flip = (q2.col(j) + q1.col(j)).norm();
        CHECK(std::min(same, flip) < 1e-13);
    }
}

TEST_CASE("principal_directions: diagonal case picks the leading axes") {
    Matrix m = Matrix::Zero(3, 3);
    m(0, 0) = 3;
    m(1, 1) = 2;
    m(2, 2) = 1;
    Matrix r = principal_directions(m, 2);
    REQUIRE(r.cols() == 2);
    CHECK(std::abs(r(0, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(r(1, 1)) == doctest::Approx(1.0));
    CHECK(std::abs(r(2, 0)) < 1e-14);
    CHECK(std::abs(r(2, 1)) < 1e-14);
}

TEST_CASE("principal_directions: duplicated basis adds no directions") {
    Matrix v = orthonormalize(random_matrix(20, 4, 3));
    Matrix m(20, 8);
    m << v, v;
    Matrix r = principal_directions(m, 4);
    // span(R) = span(V): projecting V onto R loses nothing
    CHECK((v - r * (r.transpose() * v)).norm() < 1e-12);
}

TEST_CASE("principal_directions: SVD optimality for stacked bases") {
    Matrix all(40, 12);
    for (int i = 0; i < 3; ++i)
        all.middleCols(4 * i, 4) = orthonormalize(random_matrix(40, 4, 10 + i));
    Matrix r = principal_directions(all, 4);

    // independent oracle: eigenvectors of all*all' give the same minimizer
    Eigen::SelfAdjointEigenSolver<Matrix> es(all * all.transpose());
    Matrix r_oracle = es.eigenvectors().rightCols(4);
    const double obj = projection_objective(r, all);
    CHECK(obj == doctest::Approx(projection_objective(r_oracle, all)).epsilon(1e-9));
    for (unsigned s = 0; s < 5; ++s) {
        Matrix rnd = orthonormalize(random_matrix(40, 4, 100 + s));
        CHECK(obj <= projection_objective(rnd, all) + 1e-12);
    }
}

TEST_CASE("principal_directions: rank-deficient reference flagged") {
    Matrix v = orthonormalize(random_matrix(10, 2, 4));
    Matrix m(10, 4);
    m << v, v; // rank 2
    CHECK_THROWS_AS(principal_directions(m, 3), RankTooLowError);
}

TEST_CASE("principal_directions spans the column space at full rank") {
    Matrix m = random_matrix(25, 6, 5);
    Matrix r = principal_directions(m, 6);
    CHECK((m - r * (r.transpose() * m)).norm() < 1e-10);
}

TEST_CASE("solve_shifted: diagonal solve") {
    SystemMatrix a(Matrix(-Matrix::Identity(2, 2)));
    SystemMatrix e(Matrix(Matrix::Identity(2, 2)));
    Matrix rhs = Matrix::Zero(2, 1);
    rhs(0, 0) = 1.0;
    Matrix x = solve_shifted(a, e, 0.0, rhs);
    CHECK(x(0, 0) == doctest::Approx(-1.0));
    CHECK(x(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("solve_shifted: shift hitting an eigenvalue raises SingularShift") {
    Matrix ad = Matrix::Zero(2, 2);
    ad(0, 0) = -1;
    ad(1, 1) = -2;
    SystemMatrix a(ad), e(Matrix(Matrix::Identity(2, 2)));
    CHECK_THROWS_AS(solve_shifted(a, e, -1.0, Matrix::Identity(2, 2)), SingularShiftError);
}

TEST_CASE("solve_shifted: sparse residual and transposed solve") {
    const Index n = 100;
    SparseMatrix ad = tridiag(n, 1.0, -4.0, 1.5);
    SystemMatrix a(ad), e(Matrix(Matrix::Identity(n, n)));
    Matrix rhs = random_matrix(n, 1, 6);
    Matrix x = solve_shifted(a, e, 0.0, rhs);
    CHECK((Matrix(ad) * x - rhs).norm() / rhs.norm() < 1e-10);
    Matrix xt = solve_shifted(a, e, 0.0, rhs, true);
    CHECK((Matrix(ad).transpose() * xt - rhs).norm() / rhs.norm() < 1e-10);
}

TEST_CASE("solve_shifted composed twice reproduces the Krylov recurrence") {
    const Index n = 40;
    Matrix ad = random_matrix(n, n, 7) - 5.0 * Matrix::Identity(n, n);
    Matrix ed = random_matrix(n, n, 8) + 5.0 * Matrix::Identity(n, n);
    SystemMatrix a(ad), e(ed);
    const double s0 = 0.3;
    Matrix x1 = solve_shifted(a, e, s0, random_matrix(n, 2, 9));
    Matrix x2 = solve_shifted(a, e, s0, Matrix(ed * x1));
    CHECK(((ad - s0 * ed) * x2 - ed * x1).norm() < 1e-10 * (ed * x1).norm());
}

TEST_CASE("generalized_eigs: diagonal pencil, smallest magnitude") {
    Matrix ad = Matrix::Zero(3, 3);
    ad(0, 0) = -1;
    ad(1, 1) = -5;
    ad(2, 2) = -10;
    auto pairs = generalized_eigs(SystemMatrix(ad), SystemMatrix(Matrix(Matrix::Identity(3, 3))), 2,
                                  EigCriterion::SmallestMagnitude);
    REQUIRE(pairs.size() == 2);
    std::vector<double> vals = {pairs[0].value.real(), pairs[1].value.real()};
    std::sort(vals.begin(), vals.end());
    CHECK(vals[0] == doctest::Approx(-5.0));
    CHECK(vals[1] == doctest::Approx(-1.0));
}

TEST_CASE("generalized_eigs: diagonal generalized problem") {
    Matrix ad = Matrix::Zero(2, 2), ed = Matrix::Zero(2, 2);
    ad(0, 0) = -1;
    ad(1, 1) = -5;
    ed(0, 0) = 2;
    ed(1, 1) = 1;
    auto pairs = generalized_eigs(SystemMatrix(ad), SystemMatrix(ed), 1,
                                  EigCriterion::SmallestMagnitude);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].value.real() == doctest::Approx(-0.5));
    CHECK(std::abs(pairs[0].value.imag()) < 1e-12);
}

TEST_CASE("generalized_eigs: 200x200 diffusion pencil matches dense oracle") {
    const Index n = 200;
    SparseMatrix k = tridiag(n, -1.0, 2.0, -1.0);
    SparseMatrix mass = tridiag(n, 1.0 / 6, 4.0 / 6, 1.0 / 6);
    SystemMatrix a(SparseMatrix(-k)), e(mass);

    auto pairs = generalized_eigs(a, e, 5, EigCriterion::SmallestMagnitude);
    REQUIRE(pairs.size() == 5);

    Eigen::GeneralizedEigenSolver<Matrix> oracle(Matrix(-Matrix(k)), Matrix(mass));
    std::vector<double> all(n);
    for (Index i = 0; i < n; ++i)
        all[static_cast<std::size_t>(i)] =
            oracle.alphas()(i).real() / oracle.betas()(i); // real symmetric pencil
    std::sort(all.begin(), all.end(), [](double x, double y) { return std::abs(x) < std::abs(y); });

    std::vector<double> got;
    for (const auto& p : pairs) got.push_back(p.value.real());
    std::sort(got.begin(), got.end(), [](double x, double y) { return std::abs(x) < std::abs(y); });
    for (int i = 0; i < 5; ++i)
        CHECK(got[static_cast<std::size_t>(i)] ==
              doctest::Approx(all[static_cast<std::size_t>(i)]).epsilon(1e-8));

    // residual invariant of every returned pair
    const double na = a.frobenius_norm();
    for (const auto& p : pairs) {
        ComplexMatrix av = a.apply(ComplexMatrix(p.vector));
        ComplexMatrix ev = e.apply(ComplexMatrix(p.vector));
        CHECK((av - p.value * ev).norm() <= 1e-8 * na * p.vector.norm());
    }
}

TEST_CASE("generalized_eigs: invariant under joint row scaling") {
    const Index n = 30;
    Matrix ad = random_matrix(n, n, 11) - 6.0 * Matrix::Identity(n, n);
    Matrix ed = Matrix::Identity(n, n) + 0.1 * random_matrix(n, n, 12);
    Vector scale(n);
    std::mt19937 gen(13);
    std::uniform_real_distribution<double> dist(0.5, 2.0);
    for (Index i = 0; i < n; ++i) scale(i) = dist(gen);

    auto base = generalized_eigs(SystemMatrix(ad), SystemMatrix(ed), 4,
                                 EigCriterion::SmallestMagnitude);
    auto scaled = generalized_eigs(SystemMatrix(Matrix(scale.asDiagonal() * ad)),
                                   SystemMatrix(Matrix(scale.asDiagonal() * ed)), 4,
                                   EigCriterion::SmallestMagnitude);
    REQUIRE(base.size() == scaled.size());
    auto key = [](const EigenPair& p) {
        return std::make_pair(p.value.real(), p.value.imag());
    };
    std::vector<std::pair<double, double>> b1, b2;
    for (const auto& p : base) b1.push_back(key(p));
    for (const auto& p : scaled) b2.push_back(key(p));
    std::sort(b1.begin(), b1.end());
    std::sort(b2.begin(), b2.end());
    for (std::size_t i = 0; i < b1.size(); ++i) {
        CHECK(b1[i].first == doctest::Approx(b2[i].first).epsilon(1e-8));
        CHECK(b1[i].second == doctest::Approx(b2[i].second).epsilon(1e-8));
    }
}

TEST_CASE("solve_lyapunov: scalar structure") {
    Matrix p = solve_lyapunov(SystemMatrix(Matrix(-Matrix::Identity(2, 2))),
                              SystemMatrix(Matrix(Matrix::Identity(2, 2))),
                              Matrix::Identity(2, 2));
    CHECK((p - 0.5 * Matrix::Identity(2, 2)).norm() < 1e-12);
}

TEST_CASE("solve_lyapunov: hand oracle p_ij = -b_i b_j / (lambda_i + lambda_j)") {
    Matrix ad = Matrix::Zero(2, 2);
    ad(0, 0) = -1;
    ad(1, 1) = -2;
    Matrix b(2, 1);
    b << 1, 1;
    Matrix p = solve_lyapunov(SystemMatrix(ad), SystemMatrix(Matrix(Matrix::Identity(2, 2))), b);
    CHECK(p(0, 0) == doctest::Approx(0.5));
    CHECK(p(0, 1) == doctest::Approx(1.0 / 3));
    CHECK(p(1, 0) == doctest::Approx(1.0 / 3));
    CHECK(p(1, 1) == doctest::Approx(0.25));
}

TEST_CASE("solve_lyapunov: purely imaginary spectrum rejected") {
    Matrix ad(2, 2);
    ad << 0, 1, -1, 0;
    CHECK_THROWS_AS(solve_lyapunov(SystemMatrix(ad), SystemMatrix(Matrix(Matrix::Identity(2, 2))),
                                   Matrix::Identity(2, 2)),
                    UnstablePencilError);
}

TEST_CASE("solve_lyapunov: size guard") {
    Matrix ad = -Matrix::Identity(8, 8);
    CHECK_THROWS_AS(solve_lyapunov(SystemMatrix(ad), SystemMatrix(Matrix(Matrix::Identity(8, 8))),
                                   Matrix::Identity(8, 8), 4),
                    SizeGuardError);
}

TEST_CASE("solve_lyapunov: residual and symmetry on a generalized pencil") {
    const Index n = 24;
    Matrix ad = random_matrix(n, n, 14) - 6.0 * Matrix::Identity(n, n);
    Matrix ed = Matrix::Identity(n, n) + 0.2 * random_matrix(n, n, 15);
    Matrix b = random_matrix(n, 2, 16);
    Matrix p = solve_lyapunov(SystemMatrix(ad), SystemMatrix(ed), b);
    CHECK((p - p.transpose()).norm() < 1e-12);
    Matrix res = ad * p * ed.transpose() + ed * p * ad.transpose() + b * b.transpose();
    CHECK(res.norm() <= 1e-8 * (b * b.transpose()).norm());
}

TEST_CASE("solve_lyapunov: symmetric pencil fast path") {
    const Index n = 50;
    Matrix k = Matrix(tridiag(n, -1.0, 2.0, -1.0));
    Matrix mass = Matrix(tridiag(n, 1.0 / 6, 4.0 / 6, 1.0 / 6));
    Matrix b = random_matrix(n, 1, 17);
    Matrix p = solve_lyapunov(SystemMatrix(Matrix(-k)), SystemMatrix(mass), b);
    Matrix res = (-k) * p * mass.transpose() + mass * p * (-k).transpose() + b * b.transpose();
    CHECK(res.norm() <= 1e-8 * (b * b.transpose()).norm());
    CHECK((p - p.transpose()).norm() < 1e-12);
}
