#include "doctest.h"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

#include "mortv/lti_reduction.hpp"
#include "mortv/models.hpp"
#include "mortv/numerics.hpp"

using namespace mortv;
using namespace mortv::lti;

namespace {

Matrix random_matrix(Index rows, Index cols, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = dist(gen);
    return m;
}

StateSpaceSystem random_stable(Index n, Index m, Index q, unsigned seed) {
    Matrix a = random_matrix(n, n, seed);
    Eigen::EigenSolver<Matrix> es(a, false);
    a -= (es.eigenvalues().real().maxCoeff() + 0.5) * Matrix::Identity(n, n);
    return StateSpaceSystem(SystemMatrix(Matrix(Matrix::Identity(n, n))), SystemMatrix(a),
                            random_matrix(n, m, seed + 1), random_matrix(q, n, seed + 2));
}

double moment_mismatch(const StateSpaceSystem& full, const ReducedModel& rom, int count,
                       double s0 = 0.0) {
    auto mf = moments(full, s0, count);
    auto mr = moments(rom.to_system(), s0, count);
    double worst = 0.0;
    for (int j = 0; j < count; ++j) {
        const auto& a = mf[static_cast<std::size_t>(j)];
        const auto& b = mr[static_cast<std::size_t>(j)];
        worst = std::max(worst, (a - b).norm() / std::max(a.norm(), 1e-300));
    }
    return worst;
}

// H2 norm of the error system (full minus reduced) via the controllability
// Gramian; independent of any reduction internals
double h2_error(const StateSpaceSystem& full, const ReducedModel& rom) {
    const Index n = full.n(), r = rom.order();
    Matrix ee = Matrix::Zero(n + r, n + r), ae = Matrix::Zero(n + r, n + r);
    ee.topLeftCorner(n, n) = full.E.to_dense();
    ee.bottomRightCorner(r, r) = rom.Er;
    ae.topLeftCorner(n, n) = full.A.to_dense();
    ae.bottomRightCorner(r, r) = rom.Ar;
    Matrix be(n + r, full.m());
    be.topRows(n) = full.B;
    be.bottomRows(r) = rom.Br;
    Matrix ce(full.q(), n + r);
    ce.leftCols(n) = full.C;
    ce.rightCols(r) = -rom.Cr;
    Matrix p = numerics::solve_lyapunov(SystemMatrix(ae), SystemMatrix(ee), be);
    return std::sqrt((ce * p * ce.transpose()).trace());
}

double transfer_gap(const StateSpaceSystem& a, const StateSpaceSystem& b, Complex s) {
    ComplexMatrix ga = transfer_eval(a, s);
    ComplexMatrix gb = transfer_eval(b, s);
    return (ga - gb).norm() / std::max(ga.norm(), 1e-300);
}

} // namespace

TEST_CASE("project: identity bases reproduce the system") {
    StateSpaceSystem sys = random_stable(8, 1, 1, 1);
    ReducedModel rom = project(sys, Matrix::Identity(8, 8), Matrix::Identity(8, 8));
    CHECK((rom.Er - sys.E.to_dense()).norm() == 0.0);
    CHECK((rom.Ar - sys.A.to_dense()).norm() == 0.0);
    CHECK((rom.Br - sys.B).norm() == 0.0);
    CHECK((rom.Cr - sys.C).norm() == 0.0);
}

TEST_CASE("project: coordinate selection on a diagonal system") {
    Matrix e = Matrix::Identity(3, 3) * 2.0;
    Matrix a = Matrix::Zero(3, 3);
    a.diagonal() << -1, -5, -9;
    Matrix b = Matrix::Ones(3, 1), c = Matrix::Ones(1, 3);
    StateSpaceSystem sys(SystemMatrix(e), SystemMatrix(a), b, c);
    Matrix e1 = Matrix::Zero(3, 1);
    e1(0, 0) = 1.0;
    ReducedModel rom = project(sys, e1, e1);
    CHECK(rom.Er(0, 0) == doctest::Approx(2.0));
    CHECK(rom.Ar(0, 0) == doctest::Approx(-1.0));
    CHECK(rom.Br(0, 0) == doctest::Approx(1.0));
    CHECK(rom.Cr(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("project preserves symmetry with a Galerkin basis") {
    Matrix g = random_matrix(10, 10, 2);
    Matrix e = g * g.transpose() + 10.0 * Matrix::Identity(10, 10);
    Matrix a = -e;
    StateSpaceSystem sys(SystemMatrix(e), SystemMatrix(a), Matrix::Ones(10, 1),
                         Matrix::Ones(1, 10));
    Matrix v = numerics::orthonormalize(random_matrix(10, 4, 3));
    ReducedModel rom = project(sys, v, v);
    CHECK((rom.Er - rom.Er.transpose()).norm() < 1e-12);
    CHECK((rom.Ar - rom.Ar.transpose()).norm() < 1e-12);
}

TEST_CASE("input_krylov_basis: scalar system gives the whole space") {
    StateSpaceSystem sys(SystemMatrix(Matrix(Matrix::Ones(1, 1))),
                         SystemMatrix(Matrix(-2.0 * Matrix::Ones(1, 1))), Matrix::Ones(1, 1),
                         Matrix::Ones(1, 1));
    Matrix v = input_krylov_basis(sys, KrylovConfig{0.0, 1});
    REQUIRE(v.cols() == 1);
    CHECK(std::abs(std::abs(v(0, 0)) - 1.0) < 1e-14);
}

TEST_CASE("input_krylov_basis: hand-computed 2x2 span reproduces the transfer") {
    Matrix a = Matrix::Zero(2, 2);
    a.diagonal() << -1, -2;
    Matrix b(2, 1);
    b << 1, 1;
    StateSpaceSystem sys(SystemMatrix(Matrix(Matrix::Identity(2, 2))), SystemMatrix(a), b,
                         Matrix::Ones(1, 2));
    Matrix v = input_krylov_basis(sys, KrylovConfig{0.0, 2});
    // span{A^{-1}b, A^{-2}b} = span{[-1,-0.5], [1,0.25]} = R^2
    Matrix k1(2, 1), k2(2, 1);
    k1 << -1.0, -0.5;
    k2 << 1.0, 0.25;
    CHECK((k1 - v * (v.transpose() * k1)).norm() < 1e-12);
    CHECK((k2 - v * (v.transpose() * k2)).norm() < 1e-12);

    ReducedModel rom = project(sys, v, v); // r = n: exact
    for (Complex s : {Complex(0, 1), Complex(1, 2)})
        CHECK(transfer_gap(sys, rom.to_system(), s) < 1e-12);
}

TEST_CASE("one-sided input Krylov matches r moments at s0 = 0") {
    StateSpaceSystem sys = random_stable(60, 1, 1, 11);
    Matrix v = input_krylov_basis(sys, KrylovConfig{0.0, 6});
    ReducedModel rom = project(sys, v, v);
    CHECK(moment_mismatch(sys, rom, 6) < 1e-7);
}

TEST_CASE("output_krylov_basis: duality with the transposed system") {
    StateSpaceSystem sys = random_stable(25, 2, 3, 21);
    StateSpaceSystem dual(sys.E.transposed(), sys.A.transposed(), Matrix(sys.C.transpose()),
                          Matrix(sys.B.transpose()));
    Matrix w = output_krylov_basis(sys, KrylovConfig{0.0, 6, KrylovSide::Output});
    Matrix v = input_krylov_basis(dual, KrylovConfig{0.0, 6});
    CHECK((w - v).norm() < 1e-12);
}

TEST_CASE("one-sided output Krylov matches r moments") {
    StateSpaceSystem sys = random_stable(60, 1, 1, 31);
    Matrix w = output_krylov_basis(sys, KrylovConfig{0.0, 6, KrylovSide::Output});
    ReducedModel rom = project(sys, w, w);
    CHECK(moment_mismatch(sys, rom, 6) < 1e-7);
}

TEST_CASE("block Krylov matches floor(r/m) moments for MIMO") {
    StateSpaceSystem sys = random_stable(40, 2, 2, 41);
    Matrix v = input_krylov_basis(sys, KrylovConfig{0.0, 6});
    REQUIRE(v.cols() == 6);
    ReducedModel rom = project(sys, v, v);
    CHECK(moment_mismatch(sys, rom, 3) < 1e-7);
}

TEST_CASE("two_sided_krylov: full order is exact, r=5 matches 10 moments") {
    StateSpaceSystem small = random_stable(6, 1, 1, 51);
    ReducedModel exact = two_sided_krylov(small, KrylovConfig{0.0, 6, KrylovSide::TwoSided});
    for (Complex s : {Complex(0, 1), Complex(0.5, 3)})
        CHECK(transfer_gap(small, exact.to_system(), s) < 1e-9);

    StateSpaceSystem sys = random_stable(60, 1, 1, 52);
    ReducedModel rom = two_sided_krylov(sys, KrylovConfig{0.0, 5, KrylovSide::TwoSided});
    CHECK(moment_mismatch(sys, rom, 10) < 1e-6);
}

TEST_CASE("two_sided_krylov: disjoint invariant subspaces raise SingularReducedE") {
    Matrix a = Matrix::Zero(2, 2);
    a.diagonal() << -1, -2;
    Matrix b(2, 1), c(1, 2);
    b << 1, 0; // input reaches only state 1
    c << 0, 1; // output sees only state 2
    StateSpaceSystem sys(SystemMatrix(Matrix(Matrix::Identity(2, 2))), SystemMatrix(a), b, c);
    CHECK_THROWS_AS(two_sided_krylov(sys, KrylovConfig{0.0, 1, KrylovSide::TwoSided}),
                    SingularReducedEError);
}

TEST_CASE("reductions are invariant under orthonormal re-basing") {
    StateSpaceSystem sys = random_stable(30, 1, 1, 61);
    Matrix v = input_krylov_basis(sys, KrylovConfig{0.0, 5});
    Matrix w = output_krylov_basis(sys, KrylovConfig{0.0, 5, KrylovSide::Output});
    ReducedModel rom = project(sys, v, w);

    Matrix g = random_matrix(5, 5, 62) + 3.0 * Matrix::Identity(5, 5);
    Matrix v2 = numerics::orthonormalize(v * g); // same span, different basis
    Matrix w2 = numerics::orthonormalize(w * g.transpose());
    ReducedModel rom2 = project(sys, v2, w2);
    std::mt19937 gen(63);
    std::uniform_real_distribution<double> dist(0.5, 2.0);
    for (int i = 0; i < 5; ++i) {
        const Complex s(0.0, dist(gen));
        CHECK(transfer_gap(rom.to_system(), rom2.to_system(), s) < 1e-8);
    }
}

TEST_CASE("irka: r = n converges immediately to the exact model") {
    StateSpaceSystem sys = random_stable(5, 1, 1, 71);
    ReducedModel rom = irka(sys, 5);
    CHECK(rom.converged);
    for (Complex s : {Complex(0, 0.5), Complex(0, 2)})
        CHECK(transfer_gap(sys, rom.to_system(), s) < 1e-8);
}

TEST_CASE("irka: unstable system rejected") {
    Matrix a = Matrix::Zero(2, 2);
    a.diagonal() << 1, -2;
    StateSpaceSystem sys(SystemMatrix(Matrix(Matrix::Identity(2, 2))), SystemMatrix(a),
                         Matrix::Ones(2, 1), Matrix::Ones(1, 2));
    CHECK_THROWS_AS(irka(sys, 1), UnstablePencilError);
}

TEST_CASE("irka: r=1 shift converges to the mirrored dominant pole") {
    Matrix a = Matrix::Zero(2, 2);
    a.diagonal() << -1, -100;
    Matrix b(2, 1);
    b << 1, 1e-6;
    StateSpaceSystem sys(SystemMatrix(Matrix(Matrix::Identity(2, 2))), SystemMatrix(a), b,
                         Matrix(b.transpose()));
    ReducedModel rom = irka(sys, 1);
    CHECK(rom.converged);
    const double pole = rom.Ar(0, 0) / rom.Er(0, 0);
    CHECK(pole == doctest::Approx(-1.0).epsilon(0.05)); // shift = -pole near 1
}

TEST_CASE("irka: r=1 matches the exhaustive H2 shift scan") {
    // with eps = 1e-6 the error landscape bottoms out at rounding level, so
    // the scan oracle runs on a variant whose minimum is well resolved
    Matrix a = Matrix::Zero(2, 2);
    a.diagonal() << -1, -100;
    Matrix b(2, 1);
    b << 1, 1e-2;
    StateSpaceSystem sys(SystemMatrix(Matrix(Matrix::Identity(2, 2))), SystemMatrix(a), b,
                         Matrix(b.transpose()));
    ReducedModel rom = irka(sys, 1);
    CHECK(rom.converged);

    double best_sigma = 0.0, best_err = 1e300;
    for (double sigma = 0.2; sigma <= 150.0; sigma *= 1.02) {
        Matrix v = (sigma * Matrix::Identity(2, 2) - a).lu().solve(b);
        Matrix w = (sigma * Matrix::Identity(2, 2) - a).transpose().lu().solve(b);
        try {
            ReducedModel cand = project(sys, v / v.norm(), w / w.norm());
            if (cand.Ar(0, 0) / cand.Er(0, 0) >= 0) continue;
            const double err = h2_error(sys, cand);
            if (err < best_err) {
                best_err = err;
                best_sigma = sigma;
            }
        } catch (const SingularReducedEError&) {
        }
    }
    CHECK(best_sigma == doctest::Approx(1.0).epsilon(0.1));
    CHECK(h2_error(sys, rom) <= best_err * 1.01); // scan grid is 2% coarse
}

TEST_CASE("irka beats one-sided Krylov in H2 on the 60x60 test system") {
    StateSpaceSystem sys = random_stable(60, 1, 1, 81);
    const int r = 6;
    Matrix v = input_krylov_basis(sys, KrylovConfig{0.0, r});
    ReducedModel one_sided = project(sys, v, v);
    ReducedModel opt = irka(sys, r);
    CHECK(h2_error(sys, opt) <= h2_error(sys, one_sided));
}

TEST_CASE("modal_truncation: diagonal pencil keeps the dominant eigenvalues") {
    Matrix a = Matrix::Zero(3, 3);
    a.diagonal() << -1, -2, -3;
    StateSpaceSystem sys(SystemMatrix(Matrix(Matrix::Identity(3, 3))), SystemMatrix(a),
                         Matrix::Ones(3, 1), Matrix::Ones(1, 3));
    ReducedModel rom = modal_truncation(sys, 2, EigCriterion::SmallestMagnitude);
    Eigen::GeneralizedEigenSolver<Matrix> es(rom.Ar, rom.Er);
    std::vector<double> lam;
    for (Index i = 0; i < 2; ++i) lam.push_back((es.alphas()(i) / es.betas()(i)).real());
    std::sort(lam.begin(), lam.end());
    CHECK(lam[0] == doctest::Approx(-2.0));
    CHECK(lam[1] == doctest::Approx(-1.0));
}

TEST_CASE("modal_truncation: heat rod spectrum containment to 1e-8") {
    models::HeatRodParams hp;
    hp.num_nodes = 100;
    hp.length = 1.0;
    hp.source_width = 0.05;
    MovingBoundarySystem rod = models::build_heat_rod(hp, Trajectory::constant(0.5, 1.0));
    StateSpaceSystem frozen = rod.frozen(0.5);
    ReducedModel rom = modal_truncation(frozen, 10, EigCriterion::SmallestMagnitude);

    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> oracle(rod.A.to_dense(), rod.E.to_dense());
    Vector all = oracle.eigenvalues(); // ascending, all negative
    std::vector<double> dominant(all.data() + 90, all.data() + 100); // 10 smallest magnitude

    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> red(rom.Ar, rom.Er);
    for (int i = 0; i < 10; ++i)
        CHECK(red.eigenvalues()(i) ==
              doctest::Approx(dominant[static_cast<std::size_t>(i)]).epsilon(1e-8));

    // symmetric pencil: one-sided and two-sided coincide
    ReducedModel two = modal_truncation(frozen, 10, EigCriterion::SmallestMagnitude,
                                        ModalSide::TwoSided);
    for (Complex s : {Complex(0, 1e-4), Complex(0, 1e-3)})
        CHECK(transfer_gap(rom.to_system(), two.to_system(), s) < 1e-10);
}

TEST_CASE("balanced_truncation: ordered truncation keeps the large HSV state") {
    // balanced realization with P = Q = diag(2, 0.01): diagonal Gramian
    // equations force A_ii = -b_i^2 / (2 sigma_i) and
    // A_12 = A_21 = -b_1 b_2 / (sigma_1 + sigma_2)
    Matrix a(2, 2);
    const double off = -2.0 * 0.2 / (2.0 + 0.01);
    a << -1.0, off, off, -2.0;
    Matrix b(2, 1);
    b << 2.0, 0.2;
    StateSpaceSystem sys(SystemMatrix(Matrix(Matrix::Identity(2, 2))), SystemMatrix(a), b,
                         Matrix(b.transpose()));
    BalancedTruncationResult bt = balanced_truncation(sys, 1);
    REQUIRE(bt.hankel_singular_values.size() == 2);
    CHECK(bt.hankel_singular_values(0) == doctest::Approx(2.0));
    CHECK(bt.hankel_singular_values(1) == doctest::Approx(0.01));
    CHECK(bt.discarded.size() == 1);
    // kept state is the sigma = 2 one: G_r(s) = 4 / (s + 1)
    const Complex g = transfer_eval(bt.rom.to_system(), Complex(0, 0))(0, 0);
    CHECK(std::abs(g - 4.0) < 1e-6);
}

TEST_CASE("balanced_truncation: sampled H-infinity error bound") {
    StateSpaceSystem sys = random_stable(40, 1, 1, 91);
    BalancedTruncationResult bt = balanced_truncation(sys, 12);
    const double bound = 2.0 * bt.discarded.sum();
    for (int i = 0; i < 100; ++i) {
        const double w = std::pow(10.0, -2.0 + 4.0 * i / 99.0);
        ComplexMatrix gf = transfer_eval(sys, Complex(0, w));
        ComplexMatrix gr = transfer_eval(bt.rom.to_system(), Complex(0, w));
        CHECK((gf - gr).norm() <= bound * (1.0 + 1e-8));
    }
}

TEST_CASE("balanced_truncation: r = n reproduces the system") {
    StateSpaceSystem sys = random_stable(12, 1, 1, 95);
    BalancedTruncationResult bt = balanced_truncation(sys, 12);
    for (Complex s : {Complex(0, 0.3), Complex(0, 3)})
        CHECK(transfer_gap(sys, bt.rom.to_system(), s) < 1e-8);
}
