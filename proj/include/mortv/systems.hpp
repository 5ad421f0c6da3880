#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "mortv/matrix.hpp"

namespace mortv {

/// Load/sensor position over time on [0, duration].
class Trajectory {
public:
    enum class Kind { ConstantVelocity, PiecewiseLinear };

    static Trajectory constant_velocity(double from, double to, double duration);
    static Trajectory constant(double position, double duration);
    static Trajectory piecewise_linear(std::vector<double> times, std::vector<double> positions);
    /// Positions sampled without an analytic velocity; consumers fall back
    /// to the backward-difference stencil (p_t - p_{t-1}) / dt.
    static Trajectory from_samples(std::vector<double> times, std::vector<double> positions);

    double position(double t) const;
    /// Exact derivative of position except at breakpoints, where the
    /// right-hand slope is used (left-hand at t = duration).
    double velocity(double t) const;
    double duration() const { return times_.back(); }
    bool has_analytic_velocity() const { return analytic_velocity_; }
    Kind kind() const { return kind_; }
    double min_position() const;
    double max_position() const;

private:
    Trajectory() = default;
    Kind kind_ = Kind::ConstantVelocity;
    bool analytic_velocity_ = true;
    std::vector<double> times_;     // strictly increasing, starts at 0
    std::vector<double> positions_; // same length
};

/// Constant-matrix descriptor system E x' = A x + B u, y = C x.
struct StateSpaceSystem {
    SystemMatrix E, A;
    Matrix B, C;

    StateSpaceSystem(SystemMatrix e, SystemMatrix a, Matrix b, Matrix c);

    Index n() const { return A.rows(); }
    Index m() const { return B.cols(); }
    Index q() const { return C.rows(); }
};

enum class Coupling { LoadOnly, SensorOnly, Collocated, Independent };

/// LTV/LPV system with constant E, A and position-parametrized input and
/// output maps driven by a load trajectory.
struct MovingBoundarySystem {
    SystemMatrix E, A;
    std::function<Matrix(double)> b; // position -> n x m
    std::function<Matrix(double)> c; // position -> q x n
    Trajectory trajectory;
    Coupling coupling = Coupling::LoadOnly;

    MovingBoundarySystem(SystemMatrix e, SystemMatrix a, std::function<Matrix(double)> b_map,
                         std::function<Matrix(double)> c_map, Trajectory traj, Coupling cpl);

    Index n() const { return A.rows(); }
    Index m() const { return m_; }
    Index q() const { return q_; }

    /// LTI system with the maps evaluated at a fixed position.
    StateSpaceSystem frozen(double p) const;

private:
    Index m_ = 0, q_ = 0;
};

/// Second-order model M z'' + D z' + K z = b(p) u, y = c(p)ᵀ z.
struct SecondOrderSystem {
    SystemMatrix M, D, K;
    std::function<Vector(double)> load_map;   // position -> column of length N'
    std::function<Vector(double)> output_map; // position -> row (as vector) of length N'

    SecondOrderSystem(SystemMatrix mass, SystemMatrix damping, SystemMatrix stiffness,
                      std::function<Vector(double)> load, std::function<Vector(double)> output);

    Index dofs() const { return M.rows(); }
};

enum class FirstOrderF { Stiffness, Identity };

/// First-order reformulation with E = [[F,0],[0,M]], A = [[0,F],[-K,-D]].
/// For LoadOnly coupling the output map is pinned at fixed_sensor_position;
/// for SensorOnly the load is pinned at fixed_load_position.
MovingBoundarySystem to_first_order(const SecondOrderSystem& sys, FirstOrderF f_choice,
                                    Trajectory trajectory, Coupling coupling,
                                    std::optional<double> fixed_sensor_position = std::nullopt,
                                    std::optional<double> fixed_load_position = std::nullopt);

/// Transfer function value C (sE - A)^{-1} B.
ComplexMatrix transfer_eval(const StateSpaceSystem& sys, Complex s);

/// Moments m_j = C (A_s0^{-1} E)^j A_s0^{-1} B for j = 0..count-1.
/// These equal the negated Taylor coefficients of C (sE - A)^{-1} B about
/// s0; every comparison in this library uses this same convention.
std::vector<Matrix> moments(const StateSpaceSystem& sys, double s0, int count);

} // namespace mortv
