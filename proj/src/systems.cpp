#include "mortv/systems.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>

#include "mortv/numerics.hpp"

namespace mortv {

// ---------------------------------------------------------------------------
// Trajectory

Trajectory Trajectory::constant_velocity(double from, double to, double duration) {
    if (!(duration > 0)) throw ConfigError("Trajectory: duration must be positive");
    Trajectory t;
    t.kind_ = Kind::ConstantVelocity;
    t.times_ = {0.0, duration};
    t.positions_ = {from, to};
    return t;
}

Trajectory Trajectory::constant(double position, double duration) {
    return constant_velocity(position, position, duration);
}

Trajectory Trajectory::piecewise_linear(std::vector<double> times, std::vector<double> positions) {
    if (times.size() != positions.size() || times.size() < 2)
        throw ConfigError("Trajectory: need matching time/position lists of length >= 2");
    if (times.front() != 0.0) throw ConfigError("Trajectory: first breakpoint must be t = 0");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw ConfigError("Trajectory: times must be strictly increasing");
    Trajectory t;
    t.kind_ = Kind::PiecewiseLinear;
    t.times_ = std::move(times);
    t.positions_ = std::move(positions);
    return t;
}

Trajectory Trajectory::from_samples(std::vector<double> times, std::vector<double> positions) {
    Trajectory t = piecewise_linear(std::move(times), std::move(positions));
    t.analytic_velocity_ = false;
    return t;
}

namespace {

std::size_t interval_of(const std::vector<double>& times, double t) {
    if (t < times.front() - 1e-12 || t > times.back() + 1e-12)
        throw PositionOutOfRangeError("Trajectory: t outside [0, duration]");
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t i = static_cast<std::size_t>(std::distance(times.begin(), it));
    if (i == 0) return 0;
    if (i >= times.size()) return times.size() - 2;
    return i - 1;
}

} // namespace

double Trajectory::position(double t) const {
    const std::size_t i = interval_of(times_, t);
    const double w = (t - times_[i]) / (times_[i + 1] - times_[i]);
    return positions_[i] + w * (positions_[i + 1] - positions_[i]);
}

double Trajectory::velocity(double t) const {
    const std::size_t i = interval_of(times_, t);
    return (positions_[i + 1] - positions_[i]) / (times_[i + 1] - times_[i]);
}

double Trajectory::min_position() const {
    return *std::min_element(positions_.begin(), positions_.end());
}

double Trajectory::max_position() const {
    return *std::max_element(positions_.begin(), positions_.end());
}

// ---------------------------------------------------------------------------
// System types

StateSpaceSystem::StateSpaceSystem(SystemMatrix e, SystemMatrix a, Matrix b, Matrix c)
    : E(std::move(e)), A(std::move(a)), B(std::move(b)), C(std::move(c)) {
    const Index nn = A.rows();
    if (A.cols() != nn || E.rows() != nn || E.cols() != nn)
        throw DimensionMismatchError("StateSpaceSystem: E, A must be square of equal size");
    if (B.rows() != nn || C.cols() != nn)
        throw DimensionMismatchError("StateSpaceSystem: B, C dimensions inconsistent with n");
    if (LuSolver(E).singular())
        throw SingularShiftError("StateSpaceSystem: E is singular");
}

MovingBoundarySystem::MovingBoundarySystem(SystemMatrix e, SystemMatrix a,
                                           std::function<Matrix(double)> b_map,
                                           std::function<Matrix(double)> c_map, Trajectory traj,
                                           Coupling cpl)
    : E(std::move(e)), A(std::move(a)), b(std::move(b_map)), c(std::move(c_map)),
      trajectory(std::move(traj)), coupling(cpl) {
    const Index nn = A.rows();
    if (A.cols() != nn || E.rows() != nn || E.cols() != nn)
        throw DimensionMismatchError("MovingBoundarySystem: E, A must be square of equal size");
    if (LuSolver(E).singular())
        throw SingularShiftError("MovingBoundarySystem: E is singular");

    const double p0 = trajectory.position(0.0);
    Matrix b0 = b(p0);
    Matrix c0 = c(p0);
    if (b0.rows() != nn || c0.cols() != nn)
        throw DimensionMismatchError("MovingBoundarySystem: map dimensions inconsistent with n");
    m_ = b0.cols();
    q_ = c0.rows();

    if (coupling == Coupling::Collocated) {
        // spot-check c(p) = b(p)ᵀ on a handful of positions
        const double lo = trajectory.min_position();
        const double hi = trajectory.max_position();
        for (int i = 0; i <= 4; ++i) {
            const double p = lo + (hi - lo) * i / 4.0;
            Matrix bp = b(p);
            Matrix cp = c(p);
            if ((cp - bp.transpose()).norm() > 1e-12 * std::max(1.0, bp.norm()))
                throw ConfigError("MovingBoundarySystem: collocated coupling requires c(p) = b(p)ᵀ");
        }
    }
}

StateSpaceSystem MovingBoundarySystem::frozen(double p) const {
    return StateSpaceSystem(E, A, b(p), c(p));
}

SecondOrderSystem::SecondOrderSystem(SystemMatrix mass, SystemMatrix damping,
                                     SystemMatrix stiffness, std::function<Vector(double)> load,
                                     std::function<Vector(double)> output)
    : M(std::move(mass)), D(std::move(damping)), K(std::move(stiffness)), load_map(std::move(load)),
      output_map(std::move(output)) {
    const Index nn = M.rows();
    if (M.cols() != nn || D.rows() != nn || D.cols() != nn || K.rows() != nn || K.cols() != nn)
        throw DimensionMismatchError("SecondOrderSystem: M, D, K must be square of equal size");
    auto check_spd = [nn](const SystemMatrix& s, const char* name) {
        if (!s.is_symmetric(1e-10))
            throw SingularStiffnessError(std::string("SecondOrderSystem: ") + name + " not symmetric");
        if (s.is_sparse()) {
            Eigen::SimplicialLDLT<SparseMatrix> ldlt(s.sparse());
            if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0)
                throw SingularStiffnessError(std::string("SecondOrderSystem: ") + name +
                                             " not positive definite");
        } else {
            Eigen::LDLT<Matrix> ldlt(s.dense());
            if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
                ldlt.vectorD().minCoeff() <= 0.0)
                throw SingularStiffnessError(std::string("SecondOrderSystem: ") + name +
                                             " not positive definite");
        }
        (void)nn;
    };
    check_spd(M, "M");
    check_spd(K, "K");
}

// ---------------------------------------------------------------------------
// First-order reformulation

namespace {

SparseMatrix sparse_block_2x2(const SystemMatrix& m11, const SystemMatrix& m12,
                              const SystemMatrix& m21, const SystemMatrix& m22, double s11,
                              double s12, double s21, double s22) {
    const Index n = m11.rows();
    std::vector<Eigen::Triplet<double>> trips;
    auto add_block = [&](const SystemMatrix& m, double s, Index ro, Index co) {
        if (s == 0.0) return;
        if (m.is_sparse()) {
            const SparseMatrix& sp = m.sparse();
            for (int k = 0; k < sp.outerSize(); ++k)
                for (SparseMatrix::InnerIterator it(sp, k); it; ++it)
                    trips.emplace_back(ro + it.row(), co + it.col(), s * it.value());
        } else {
            const Matrix& d = m.dense();
            for (Index i = 0; i < d.rows(); ++i)
                for (Index j = 0; j < d.cols(); ++j)
                    if (d(i, j) != 0.0) trips.emplace_back(ro + i, co + j, s * d(i, j));
        }
    };
    add_block(m11, s11, 0, 0);
    add_block(m12, s12, 0, n);
    add_block(m21, s21, n, 0);
    add_block(m22, s22, n, n);
    SparseMatrix out(2 * n, 2 * n);
    out.setFromTriplets(trips.begin(), trips.end());
    out.makeCompressed();
    return out;
}

} // namespace

MovingBoundarySystem to_first_order(const SecondOrderSystem& sys, FirstOrderF f_choice,
                                    Trajectory trajectory, Coupling coupling,
                                    std::optional<double> fixed_sensor_position,
                                    std::optional<double> fixed_load_position) {
    const Index nn = sys.dofs();
    SystemMatrix f = f_choice == FirstOrderF::Stiffness
                         ? sys.K
                         : SystemMatrix(SparseMatrix(Matrix::Identity(nn, nn).sparseView()));
    SystemMatrix zero(SparseMatrix(nn, nn));

    SparseMatrix e = sparse_block_2x2(f, zero, zero, sys.M, 1, 0, 0, 1);
    SparseMatrix a = sparse_block_2x2(zero, f, sys.K, sys.D, 0, 1, -1, -1);

    auto load = sys.load_map;
    auto output = sys.output_map;

    std::function<Matrix(double)> b_map;
    if (coupling == Coupling::SensorOnly) {
        if (!fixed_load_position)
            throw ConfigError("to_first_order: SensorOnly coupling needs fixed_load_position");
        Vector bhat = load(*fixed_load_position);
        Matrix bfull = Matrix::Zero(2 * nn, 1);
        bfull.block(nn, 0, nn, 1) = bhat;
        b_map = [bfull](double) { return bfull; };
    } else {
        b_map = [load, nn](double p) {
            Matrix bfull = Matrix::Zero(2 * nn, 1);
            bfull.block(nn, 0, nn, 1) = load(p);
            return bfull;
        };
    }

    std::function<Matrix(double)> c_map;
    if (coupling == Coupling::LoadOnly) {
        if (!fixed_sensor_position)
            throw ConfigError("to_first_order: LoadOnly coupling needs fixed_sensor_position");
        Vector chat = output(*fixed_sensor_position);
        Matrix cfull = Matrix::Zero(1, 2 * nn);
        cfull.block(0, 0, 1, nn) = chat.transpose();
        c_map = [cfull](double) { return cfull; };
    } else {
        c_map = [output, nn](double p) {
            Matrix cfull = Matrix::Zero(1, 2 * nn);
            cfull.block(0, 0, 1, nn) = output(p).transpose();
            return cfull;
        };
    }

    return MovingBoundarySystem(SystemMatrix(std::move(e)), SystemMatrix(std::move(a)),
                                std::move(b_map), std::move(c_map), std::move(trajectory), coupling);
}

// ---------------------------------------------------------------------------
// Transfer function and moments

ComplexMatrix transfer_eval(const StateSpaceSystem& sys, Complex s) {
    // C (sE - A)^{-1} B = -C (A - sE)^{-1} B
    ComplexLuSolver lu(sys.A, sys.E, s);
    if (lu.singular()) throw SingularShiftError("transfer_eval: sE - A singular");
    ComplexMatrix x = lu.solve(sys.B.cast<Complex>());
    return -(sys.C.cast<Complex>() * x);
}

std::vector<Matrix> moments(const StateSpaceSystem& sys, double s0, int count) {
    if (count < 1) throw ConfigError("moments: count must be >= 1");
    numerics::ShiftedSolver solver(sys.A, sys.E, s0);
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(count));
    Matrix x = solver.solve(sys.B);
    out.push_back(sys.C * x);
    for (int j = 1; j < count; ++j) {
        x = solver.solve(sys.E.apply(x));
        out.push_back(sys.C * x);
    }
    return out;
}

} // namespace mortv
