#include "mortv/simulation.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mortv::sim {

namespace {

using Clock = std::chrono::steady_clock;

Index step_count(const SimConfig& cfg) {
    if (!(cfg.dt > 0) || cfg.t_end < cfg.dt)
        throw ConfigError("SimConfig: need dt > 0 and t_end >= dt");
    return static_cast<Index>(std::llround(cfg.t_end / cfg.dt));
}

Vector input_at(const SimConfig& cfg, double t, Index m) {
    if (!cfg.input) return Vector::Zero(m);
    Vector u = cfg.input(t);
    if (u.size() != m) throw DimensionMismatchError("SimConfig: input dimension != m");
    return u;
}

template <typename BofT, typename CofT>
SimResult run_implicit_euler(const SystemMatrix& e, const SystemMatrix& a, BofT&& b_of,
                             CofT&& c_of, Index m, Index q, const SimConfig& cfg) {
    const auto t0 = Clock::now();
    const Index steps = step_count(cfg);
    const Index n = a.rows();

    SimResult res;
    res.times = Vector::LinSpaced(steps + 1, 0.0, steps * cfg.dt);
    for (Index k = 0; k <= steps; ++k) res.times(k) = k * cfg.dt;
    res.outputs = Matrix::Zero(q, steps + 1);

    LuSolver lu(e.axpby(1.0, -cfg.dt, a));
    if (lu.singular())
        throw SingularStepError("simulate_full: E - dt*A singular (dt = " + std::to_string(cfg.dt) + ")");

    Vector x = cfg.initial_state.size() ? cfg.initial_state : Vector::Zero(n);
    if (x.size() != n) throw DimensionMismatchError("SimConfig: initial state dimension != n");
    const double bound = cfg.blowup_factor * std::max(1.0, x.norm());

    res.outputs.col(0) = c_of(0.0) * x;
    for (Index k = 0; k < steps; ++k) {
        const double t1 = (k + 1) * cfg.dt;
        Vector rhs = e.apply(Matrix(x)) + cfg.dt * (b_of(t1) * input_at(cfg, t1, m));
        x = lu.solve(rhs);
        if (!x.allFinite() || x.norm() > bound) {
            res.stable = false;
            res.first_unstable_step = k + 1;
            break;
        }
        res.outputs.col(k + 1) = c_of(t1) * x;
    }
    res.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
    return res;
}

} // namespace

SimResult simulate_full(const MovingBoundarySystem& sys, const SimConfig& cfg) {
    auto b_of = [&sys](double t) { return sys.b(sys.trajectory.position(t)); };
    auto c_of = [&sys](double t) { return sys.c(sys.trajectory.position(t)); };
    return run_implicit_euler(sys.E, sys.A, b_of, c_of, sys.m(), sys.q(), cfg);
}

SimResult simulate_full(const StateSpaceSystem& sys, const SimConfig& cfg) {
    auto b_of = [&sys](double) { return sys.B; };
    auto c_of = [&sys](double) { return sys.C; };
    return run_implicit_euler(sys.E, sys.A, b_of, c_of, sys.m(), sys.q(), cfg);
}

SimResult simulate_reduced(const lti::ReducedModel& rom, const Trajectory& traj,
                           const SimConfig& cfg, const OnlineBinding& online) {
    const auto t0 = Clock::now();
    const Index steps = step_count(cfg);

    auto pdot_at = [&](double t) {
        if (traj.has_analytic_velocity()) return traj.velocity(t);
        const double prev = std::max(0.0, t - cfg.dt);
        return (traj.position(t) - traj.position(prev)) / cfg.dt; // backward difference
    };

    lti::ReducedModel current = online ? online(traj.position(0.0), pdot_at(0.0)) : rom;
    const Index r = current.order();
    const Index m = current.input_at(traj.position(0.0)).cols();
    const Index q = current.output_at(traj.position(0.0)).rows();

    SimResult res;
    res.times = Vector(steps + 1);
    for (Index k = 0; k <= steps; ++k) res.times(k) = k * cfg.dt;
    res.outputs = Matrix::Zero(q, steps + 1);

    Vector x = cfg.initial_state.size() ? cfg.initial_state : Vector::Zero(r);
    if (x.size() != r) throw DimensionMismatchError("SimConfig: initial state dimension != r");
    const double bound = cfg.blowup_factor * std::max(1.0, x.norm());

    res.outputs.col(0) = current.output_at(traj.position(0.0)) * x;

    const bool monitor_pencil = online && r <= cfg.pencil_check_max_order;
    for (Index k = 0; k < steps; ++k) {
        const double t1 = (k + 1) * cfg.dt;
        const double p1 = traj.position(t1);
        if (online) current = online(p1, pdot_at(t1));

        Matrix a_eff = current.Ar;
        if (current.correction) a_eff -= current.correction(t1);

        if (monitor_pencil) {
            Eigen::PartialPivLU<Matrix> elu(current.Er);
            Eigen::EigenSolver<Matrix> es(Matrix(elu.solve(a_eff)), false);
            if (es.info() == Eigen::Success && es.eigenvalues().real().maxCoeff() >= 0.0)
                ++res.unstable_pencil_steps;
        }

        Eigen::FullPivLU<Matrix> lu(Matrix(current.Er - cfg.dt * a_eff));
        if (!lu.isInvertible())
            throw SingularStepError("simulate_reduced: E_r - dt*A singular at step " +
                                    std::to_string(k + 1) + " (t = " + std::to_string(t1) + ")");
        Vector rhs = current.Er * x + cfg.dt * (current.input_at(p1) * input_at(cfg, t1, m));
        x = lu.solve(rhs);
        if (!x.allFinite() || x.norm() > bound) {
            res.stable = false;
            res.first_unstable_step = k + 1;
            break;
        }
        res.outputs.col(k + 1) = current.output_at(p1) * x;
    }
    res.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
    return res;
}

L2Error l2_error(const SimResult& ref, const SimResult& test, Quadrature quadrature) {
    if (ref.times.size() != test.times.size() || ref.outputs.cols() != test.outputs.cols() ||
        ref.outputs.rows() != test.outputs.rows() || (ref.times - test.times).norm() != 0.0)
        throw GridMismatchError("l2_error: time grids differ");
    const Index samples = ref.times.size();
    const double dt = samples > 1 ? ref.times(1) - ref.times(0) : 0.0;

    auto weight = [&](Index k) {
        if (quadrature == Quadrature::Trapezoid && (k == 0 || k == samples - 1)) return 0.5 * dt;
        return dt;
    };
    double err2 = 0.0, ref2 = 0.0;
    for (Index k = 0; k < samples; ++k) {
        const double w = weight(k);
        err2 += w * (ref.outputs.col(k) - test.outputs.col(k)).squaredNorm();
        ref2 += w * ref.outputs.col(k).squaredNorm();
    }
    L2Error out;
    out.absolute = std::sqrt(err2);
    out.relative = ref2 > 0 ? out.absolute / std::sqrt(ref2) : 0.0;
    return out;
}

void write_csv(const std::filesystem::path& file, const SimResult& result) {
    std::ofstream os(file);
    if (!os) throw IoError("cannot open for writing: " + file.string());
    os << "t";
    for (Index i = 0; i < result.outputs.rows(); ++i) os << ",y" << (i + 1);
    os << "\n";
    char buf[40];
    for (Index k = 0; k < result.times.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g", result.times(k));
        os << buf;
        for (Index i = 0; i < result.outputs.rows(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", result.outputs(i, k));
            os << "," << buf;
        }
        os << "\n";
    }
    if (!os) throw IoError("write failed: " + file.string());
}

SimResult read_csv(const std::filesystem::path& file) {
    std::ifstream is(file);
    if (!is) throw IoError("cannot open for reading: " + file.string());
    std::string line;
    if (!std::getline(is, line)) throw IoError("empty CSV: " + file.string());
    Index q = 0;
    for (char ch : line)
        if (ch == ',') ++q;
    std::vector<double> times;
    std::vector<double> values;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        if (!std::getline(ls, cell, ',')) throw IoError("bad CSV row in " + file.string());
        times.push_back(std::stod(cell));
        for (Index i = 0; i < q; ++i) {
            if (!std::getline(ls, cell, ',')) throw IoError("short CSV row in " + file.string());
            values.push_back(std::stod(cell));
        }
    }
    SimResult res;
    res.times = Eigen::Map<Vector>(times.data(), static_cast<Index>(times.size()));
    res.outputs = Matrix(q, static_cast<Index>(times.size()));
    for (Index k = 0; k < res.times.size(); ++k)
        for (Index i = 0; i < q; ++i) res.outputs(i, k) = values[static_cast<std::size_t>(k * q + i)];
    return res;
}

} // namespace mortv::sim
