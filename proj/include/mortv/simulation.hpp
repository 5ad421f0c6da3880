#pragma once

#include <filesystem>
#include <functional>

#include "mortv/lti_reduction.hpp"
#include "mortv/systems.hpp"

namespace mortv::sim {

enum class Quadrature { LeftEndpoint, Trapezoid };

struct SimConfig {
    double t_end = 1.0;
    double dt = 1e-3;
    std::function<Vector(double)> input; // u(t), m-vector; empty = zero input
    Vector initial_state;                // empty = zero
    Quadrature quadrature = Quadrature::LeftEndpoint;
    double blowup_factor = 1e8;    // abort threshold on the state norm
    int pencil_check_max_order = 50; // per-step stability monitor cutoff (online models)
};

struct SimResult {
    Vector times;   // steps+1 grid points including t = 0 and t_end
    Matrix outputs; // q x (steps+1)
    double wall_time = 0.0;
    bool stable = true;           // false after blow-up or non-finite state
    Index first_unstable_step = -1;
    Index unstable_pencil_steps = 0; // interpolated pencils with Re(lambda) >= 0
};

SimResult simulate_full(const MovingBoundarySystem& sys, const SimConfig& cfg);
SimResult simulate_full(const StateSpaceSystem& sys, const SimConfig& cfg);

/// Per-step source of interpolated reduced matrices (matrix interpolation
/// online phase).
using OnlineBinding = std::function<lti::ReducedModel(double p, double pdot)>;

/// Implicit Euler on the reduced model. Time-varying input/output maps are
/// evaluated along the trajectory; with an online binding all reduced
/// matrices are refreshed once per step. A blow-up is recorded on the
/// result, not thrown.
SimResult simulate_reduced(const lti::ReducedModel& rom, const Trajectory& traj,
                           const SimConfig& cfg, const OnlineBinding& online = nullptr);

struct L2Error {
    double absolute = 0.0;
    double relative = 0.0;
};

/// Discrete L2 norms of y - y_r over the shared grid. Left-endpoint
/// rectangle rule including both endpoints by default (sum over
/// k = 0..steps of dt |y_k - y_rk|^2).
L2Error l2_error(const SimResult& ref, const SimResult& test,
                 Quadrature quadrature = Quadrature::LeftEndpoint);

/// CSV export: header t,y1..yq, 17 significant digits.
void write_csv(const std::filesystem::path& file, const SimResult& result);
SimResult read_csv(const std::filesystem::path& file);

} // namespace mortv::sim
